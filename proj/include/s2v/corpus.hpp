#pragma once

#include <map>
#include <string>
#include <vector>

#include "s2v/ast.hpp"
#include "s2v/downstream.hpp"

namespace s2v {

// Loads every *.json (interchange) and *.mini (parsed MiniLang) file in a
// directory, sorted by filename. Errors: unreadable dir, empty corpus.
std::vector<Ast> load_corpus_dir(const std::string& dir);

// labels.tsv: source_id \t class label
std::map<std::string, std::string> load_labels_tsv(const std::string& path);

LabeledCorpus labeled_corpus(std::vector<Ast> asts,
                             const std::map<std::string, std::string>& labels);

// Labels every AST with its first function's name. Errors: function-less AST.
LabeledCorpus name_corpus(std::vector<Ast> asts);

// --- synthetic MiniLang generator ---

struct SyntheticProgram {
    std::string source_id;
    std::string label;
    std::string source;
};

// Three structurally distinct program classes (array loops, branch ladders,
// call chains), per_class programs each, fully determined by the seed.
std::vector<SyntheticProgram> synthetic_corpus(std::uint64_t seed,
                                               int per_class = 50);

// Two classes that differ by exactly one statement kind: "looped" programs
// contain a while statement over shared filler, "straight" ones do not.
std::vector<SyntheticProgram> discriminative_corpus(std::uint64_t seed,
                                                    int per_class);

std::vector<Ast> parse_synthetic(const std::vector<SyntheticProgram>& programs);
LabeledCorpus labeled_synthetic(const std::vector<SyntheticProgram>& programs);

// Renames every identifier through a seeded permutation of the generator's
// identifier pool (fresh names map to themselves).
Ast permute_identifiers(const Ast& ast, std::uint64_t seed);

}  // namespace s2v
