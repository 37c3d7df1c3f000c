#include "s2v/vocab.hpp"

#include <omp.h>

#include <algorithm>
#include <map>
#include <sstream>

#include "s2v/parallel.hpp"
#include "s2v/subtrees.hpp"

namespace s2v {

LabelMode parse_label_mode(const std::string& s) {
    if (s == "subtree") return LabelMode::subtree;
    if (s == "token") return LabelMode::token;
    if (s == "method_name") return LabelMode::method_name;
    throw UsageError("unknown label mode: " + s);
}

std::string to_string(LabelMode m) {
    switch (m) {
        case LabelMode::subtree: return "subtree";
        case LabelMode::token: return "token";
        case LabelMode::method_name: return "method_name";
    }
    return "?";
}

static Vocab vocab_from_counts(std::map<std::string, std::uint64_t> counts,
                               std::uint64_t min_count,
                               const std::string& kind) {
    std::vector<std::pair<std::string, std::uint64_t>> kept;
    for (auto& [s, c] : counts)
        if (c >= min_count) kept.emplace_back(s, c);
    std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    if (kept.empty() && kind != "type")
        throw DataError(kind + " vocabulary empty after min_count=" +
                        std::to_string(min_count) + " thresholding");
    Vocab v;
    v.kind = kind;
    v.min_count = min_count;
    for (auto& [s, c] : kept) {
        v.index_of.emplace(s, v.size());
        v.entries.push_back(s);
        v.counts.push_back(c);
    }
    return v;
}

Vocab build_vocab(std::span<const std::string> occurrences,
                  std::uint64_t min_count, const std::string& kind) {
    std::map<std::string, std::uint64_t> counts;
    for (const auto& s : occurrences) counts[s] += 1;
    return vocab_from_counts(std::move(counts), min_count, kind);
}

// Shard-parallel counting with a commutative merge.
template <typename ExtractFn>
static Vocab build_corpus_vocab(std::span<const Ast> corpus,
                                std::uint64_t min_count,
                                const std::string& kind, ExtractFn extract) {
    if (corpus.empty()) throw DataError("empty corpus");
    int nthreads = par::threads();
    std::vector<std::map<std::string, std::uint64_t>> shards(nthreads);
#pragma omp parallel for schedule(dynamic) num_threads(nthreads)
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        auto& local = shards[omp_get_thread_num()];
        for (std::string& s : extract(corpus[i])) local[std::move(s)] += 1;
    }
    std::map<std::string, std::uint64_t> counts;
    for (auto& shard : shards)
        for (auto& [s, c] : shard) counts[s] += c;
    return vocab_from_counts(std::move(counts), min_count, kind);
}

Vocab build_subtree_vocab(std::span<const Ast> corpus, std::uint64_t min_count,
                          bool with_operator_tokens) {
    return build_corpus_vocab(
        corpus, min_count, "subtree", [&](const Ast& ast) {
            std::vector<std::string> out;
            for (auto& ref : identify_subtrees(ast, with_operator_tokens))
                out.push_back(std::move(ref.canonical));
            return out;
        });
}

Vocab build_token_vocab(std::span<const Ast> corpus, std::uint64_t min_count) {
    return build_corpus_vocab(corpus, min_count, "token", [](const Ast& ast) {
        std::vector<std::string> out;
        for (NodeId id : preorder(ast)) {
            const auto& tok = ast.node(id).token;
            if (tok) out.push_back(*tok);
        }
        return out;
    });
}

Vocab build_type_vocab(std::span<const Ast> corpus) {
    return build_corpus_vocab(corpus, 1, "type", [](const Ast& ast) {
        std::vector<std::string> out;
        for (NodeId id : preorder(ast)) out.push_back(ast.node(id).type);
        return out;
    });
}

Vocab build_name_vocab(std::span<const Ast> corpus, std::uint64_t min_count) {
    return build_corpus_vocab(corpus, min_count, "name", [](const Ast& ast) {
        std::vector<std::string> out;
        for (NodeId id : preorder(ast)) {
            const AstNode& n = ast.node(id);
            if (n.type == "function" && n.token)
                for (auto& st : subtokens(*n.token)) out.push_back(std::move(st));
        }
        return out;
    });
}

std::string vocab_to_tsv(const Vocab& v) {
    std::ostringstream out;
    out << "#" << v.kind << "-vocab v1 min_count=" << v.min_count << "\n";
    for (int i = 0; i < v.size(); ++i)
        out << i << "\t" << v.counts[i] << "\t" << v.entries[i] << "\n";
    return out.str();
}

Vocab vocab_from_tsv(const std::string& tsv) {
    std::istringstream in(tsv);
    std::string header;
    if (!std::getline(in, header))
        throw DataError("vocab file: empty");
    Vocab v;
    {
        std::size_t dash = header.find("-vocab v1 min_count=");
        if (header.empty() || header[0] != '#' || dash == std::string::npos)
            throw DataError("vocab file: bad header: " + header);
        v.kind = header.substr(1, dash - 1);
        v.min_count = std::stoull(header.substr(dash + 20));
    }
    std::string line;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::size_t t1 = line.find('\t');
        std::size_t t2 = t1 == std::string::npos ? t1 : line.find('\t', t1 + 1);
        if (t2 == std::string::npos)
            throw DataError("vocab file: bad line " + std::to_string(lineno));
        int idx = 0;
        std::uint64_t count = 0;
        try {
            idx = std::stoi(line.substr(0, t1));
            count = std::stoull(line.substr(t1 + 1, t2 - t1 - 1));
        } catch (const std::exception&) {
            throw DataError("vocab file: bad numbers at line " +
                            std::to_string(lineno));
        }
        std::string entry = line.substr(t2 + 1);
        if (idx != v.size())
            throw DataError("vocab file: indices not dense at line " +
                            std::to_string(lineno));
        if (v.index_of.count(entry))
            throw DataError("vocab file: duplicate entry at line " +
                            std::to_string(lineno));
        v.index_of.emplace(entry, idx);
        v.entries.push_back(std::move(entry));
        v.counts.push_back(count);
    }
    return v;
}

void save_vocab(const Vocab& v, const std::string& path) {
    write_file(path, vocab_to_tsv(v));
}

Vocab load_vocab(const std::string& path) {
    return vocab_from_tsv(read_file(path));
}

NodeId find_function_node(const Ast& ast) {
    for (NodeId id : preorder(ast))
        if (ast.node(id).type == "function") return id;
    return -1;
}

std::vector<int> label_set(const Ast& ast, const Vocab& vocab, LabelMode mode,
                           bool with_operator_tokens) {
    std::vector<int> labels;
    switch (mode) {
        case LabelMode::subtree:
            for (const auto& ref : identify_subtrees(ast, with_operator_tokens)) {
                int idx = vocab.index(ref.canonical);
                if (idx >= 0) labels.push_back(idx);
            }
            break;
        case LabelMode::token:
            for (NodeId id : preorder(ast)) {
                const auto& tok = ast.node(id).token;
                if (!tok) continue;
                int idx = vocab.index(*tok);
                if (idx >= 0) labels.push_back(idx);
            }
            break;
        case LabelMode::method_name: {
            NodeId fn = find_function_node(ast);
            if (fn < 0)
                throw DataError("label_set: method_name mode on ast " +
                                ast.source_id + " with no function node");
            const auto& name = ast.node(fn).token;
            if (!name)
                throw DataError("label_set: function node without a name in " +
                                ast.source_id);
            for (const auto& st : subtokens(*name)) {
                int idx = vocab.index(st);
                if (idx >= 0) labels.push_back(idx);
            }
            break;
        }
    }
    return labels;
}

}  // namespace s2v
