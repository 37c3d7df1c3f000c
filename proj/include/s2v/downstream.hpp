#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "s2v/trainer.hpp"

namespace s2v {

// --- embedding index ---

struct IndexEntry {
    std::string source_id;
    std::string language;
    std::string task_id;  // empty when absent
    std::vector<double> vec;
};

struct EmbeddingIndex {
    std::size_t dim = 0;
    std::vector<IndexEntry> entries;

    void add(IndexEntry e);
    const IndexEntry* find(const std::string& source_id) const;
};

// TSV: source_id \t language \t task_id \t D space-separated floats
std::string index_to_tsv(const EmbeddingIndex& index);
EmbeddingIndex index_from_tsv(const std::string& tsv);

// --- unsupervised metrics and queries ---

// Lloyd's algorithm under squared Euclidean distance with seeded k-means++
// initialization. Stops on convergence (no reassignment) or max_iters.
// Errors: k < 1 or k > n.
std::vector<int> kmeans(const EmbeddingIndex& index, int k, std::uint64_t seed,
                        int max_iters = 100);
std::vector<int> kmeans_points(const std::vector<double>& points,
                               std::size_t n, std::size_t d, int k,
                               std::uint64_t seed, int max_iters = 100);

// Chance-corrected partition agreement via the contingency-table closed
// form. Errors: length mismatch, fewer than 2 elements.
double adjusted_rand_index(std::span<const int> assignment,
                           std::span<const int> ground_truth);

// Errors: zero vector.
double cosine_similarity(std::span<const double> a, std::span<const double> b);

bool detect_clone(std::span<const double> a, std::span<const double> b,
                  double threshold = 0.8);

struct Prf {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

// (predicted, actual) pairs. Degenerate precision/recall are defined as 0.
Prf clone_metrics(std::span<const std::pair<bool, bool>> pairs);

struct SearchHit {
    std::string source_id;
    double score;
};

// Top-K index entries by cosine similarity, descending, ties broken by
// source_id; entries whose language equals exclude_language are filtered
// out first. Errors: empty index (after filtering), K < 1.
std::vector<SearchHit> search(std::span<const double> query,
                              const EmbeddingIndex& index, int k,
                              const std::string& exclude_language = "");

// Mean of 1/rank of the relevant id per query; absent ids contribute 0.
double mean_reciprocal_rank(
    std::span<const std::pair<std::vector<std::string>, std::string>> queries);

// Sub-token multiset precision/recall/F1, case-insensitive.
// Errors: a name empty after sub-tokenization.
Prf subword_f1(const std::string& predicted, const std::string& truth);

// Names ranked by softmax over v . nameEmb, descending (stable).
std::vector<std::pair<std::string, double>> predict_method_name(
    std::span<const double> code_vector,
    const std::vector<std::pair<std::string, std::vector<double>>>& table);

// --- fine-tuning ---

struct LabeledCorpus {
    std::vector<Ast> asts;
    std::vector<std::string> labels;  // class name per ast
};

enum class TaskKind { classification, name_prediction };

struct FinetuneConfig {
    double fraction = 1.0;       // share of the training pool to use
    bool pretrained_init = true; // false: random re-initialization
    int epochs = 15;
    double learning_rate = 0.001;
    int batch_size = 16;
    std::uint64_t seed = 7;
    double test_fraction = 0.3;
    int jobs = 0;
};

struct Classifier {
    Model model;  // encoder weights + vocabularies; head below
    TaskKind task = TaskKind::classification;
    std::vector<std::string> classes;  // class names / method names
    Tensor cls_weight;                 // C x D
    Tensor cls_bias;                   // 1 x C (zero for name prediction)
};

struct FinetuneReport {
    double test_accuracy = 0.0;   // top-1 (exact match for names)
    Prf name_scores;              // mean sub-token P/R/F1 (name task)
    std::size_t train_count = 0;
    std::size_t test_count = 0;
    std::vector<double> epoch_mean_loss;
};

// Attaches a softmax head on the code vector and trains encoder and head
// jointly, starting from the base model's weights or from a seeded random
// re-initialization. The labeled corpus is split into train/test by a seeded
// stratified split and the train pool is subsampled to `fraction`
// (stratified, largest remainder). Errors: a class absent from the sampled
// fraction.
Classifier finetune(const Model& base, const LabeledCorpus& corpus,
                    const FinetuneConfig& config,
                    TaskKind task = TaskKind::classification,
                    FinetuneReport* report = nullptr);

// Softmax class probabilities for one AST.
std::vector<double> classifier_probs(const Classifier& cls, const Ast& ast);
int classify(const Classifier& cls, const Ast& ast);

// Classifier checkpoints reuse the pretext checkpoint schema plus the head
// tensors and the class-name list.
void save_classifier(const Classifier& cls, const std::string& path,
                     const std::map<std::string, std::string>& vocab_hashes);
Classifier load_classifier(const std::string& path, Vocab type_vocab,
                           Vocab token_vocab, Vocab label_vocab);

}  // namespace s2v
