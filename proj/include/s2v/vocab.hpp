#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "s2v/ast.hpp"

namespace s2v {

// Bidirectional mapping between canonical entry strings and dense 0-based
// indices, with corpus occurrence counts. Indices are assigned by descending
// count, ties broken lexicographically, so builds are deterministic under
// any corpus file order.
struct Vocab {
    std::string kind;  // "subtree" | "token" | "type" | "name"
    std::uint64_t min_count = 1;
    std::vector<std::string> entries;       // index -> string
    std::vector<std::uint64_t> counts;      // index -> count
    std::unordered_map<std::string, int> index_of;

    int size() const { return int(entries.size()); }
    // -1 when absent
    int index(const std::string& s) const {
        auto it = index_of.find(s);
        return it == index_of.end() ? -1 : it->second;
    }
    const std::string& entry(int idx) const { return entries.at(idx); }
};

enum class LabelMode { subtree, token, method_name };

LabelMode parse_label_mode(const std::string& s);
std::string to_string(LabelMode m);

// Builds a vocabulary from raw occurrence strings (duplicates counted).
// Entries with count < min_count are dropped; an empty result is an error
// for label vocabularies (kind "subtree"/"token"/"name").
Vocab build_vocab(std::span<const std::string> occurrences,
                  std::uint64_t min_count, const std::string& kind);

// Corpus-level builders. Counting is parallel over corpus shards with a
// commutative merge; index assignment is a single deterministic pass.
Vocab build_subtree_vocab(std::span<const Ast> corpus, std::uint64_t min_count,
                          bool with_operator_tokens = false);
Vocab build_token_vocab(std::span<const Ast> corpus, std::uint64_t min_count);
Vocab build_type_vocab(std::span<const Ast> corpus);
Vocab build_name_vocab(std::span<const Ast> corpus, std::uint64_t min_count);

// TSV persistence: header "#<kind>-vocab v1 min_count=<n>", then one line
// per entry: index \t count \t entry.
std::string vocab_to_tsv(const Vocab& v);
Vocab vocab_from_tsv(const std::string& tsv);
void save_vocab(const Vocab& v, const std::string& path);
Vocab load_vocab(const std::string& path);

// First function node of the AST in pre-order, or -1.
NodeId find_function_node(const Ast& ast);

// Training labels for one AST under the given mode, duplicates preserved,
// out-of-vocabulary occurrences skipped.
//   subtree     — indices of identified subtrees
//   token       — indices of node tokens
//   method_name — indices of the enclosing function name's sub-tokens
// Errors: method_name mode on an AST with no function node.
std::vector<int> label_set(const Ast& ast, const Vocab& vocab, LabelMode mode,
                           bool with_operator_tokens = false);

}  // namespace s2v
