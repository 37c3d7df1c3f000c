#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace s2v {

// Error taxonomy, mirrored by the CLI exit codes.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Seeded RNG wrapper. All sampling goes through hand-rolled transforms so
// results do not depend on the standard library's distribution internals.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t next_u64() { return eng_(); }

    // uniform in [0, 1)
    double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // uniform integer in [0, n)
    std::size_t index(std::size_t n) {
        return static_cast<std::size_t>(uniform() * static_cast<double>(n));
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = index(i);
            std::swap(v[i - 1], v[j]);
        }
    }

  private:
    std::mt19937_64 eng_;
};

// SHA-256 of a byte string, lowercase hex.
std::string sha256_hex(const std::string& bytes);
// SHA-256 of a file's contents. Throws DataError if the file cannot be read.
std::string sha256_file(const std::string& path);

// Splits an identifier into lowercase sub-tokens on underscores and
// lower-to-upper camel-case boundaries. "computeResult" -> {compute, result},
// "result_compute" -> {result, compute}. Digits stay attached to their run.
std::vector<std::string> subtokens(const std::string& name);

std::string lowercase(std::string s);

// Reads a whole file into a string. Throws DataError on failure.
std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& contents);

// Shortest-round-trip-ish formatting used by TSV emitters.
std::string format_double(double v);

}  // namespace s2v
