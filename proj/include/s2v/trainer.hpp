#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "s2v/encoder.hpp"

namespace s2v {

struct CheckpointError : DataError {
    using DataError::DataError;
};

struct TrainConfig {
    double learning_rate = 0.001;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    int epochs = 20;
    int batch_size = 32;
    std::uint64_t seed = 1;
    std::size_t dim = 100;
    int num_conv_layers = 2;
    InitMode init_mode = InitMode::combine;
    LabelMode label_mode = LabelMode::subtree;
    AggregateMode aggregate_mode = AggregateMode::attention;
    std::uint64_t min_count = 2;
    bool deterministic = true;
    int jobs = 0;  // worker cap; 0 = all hardware threads
    bool include_operator_tokens = false;
    double init_scale = 0.05;

    void validate() const;
};

// Label-embedding matrix of the prediction head, one row per vocabulary
// entry.
struct PredictionHead {
    Tensor label_embed;  // |L| x D
};

// Softmax-normalized dot products between the code vector and every label
// embedding row. Errors: empty vocabulary.
std::vector<double> predict_subtree_distribution(const Tensor& code_vector,
                                                 const PredictionHead& head);

// Everything needed to encode and predict: configuration, vocabularies and
// weights travel together.
struct Model {
    TrainConfig config;
    Vocab type_vocab;
    Vocab token_vocab;
    Vocab label_vocab;
    EncoderParams enc;
    PredictionHead head;

    std::vector<std::pair<std::string, Tensor*>> named_tensors();
    EncodeResult encode_ast(const Ast& ast) const;
};

// Mean over labels of -ln q(label) for one AST. Errors: empty labels.
double example_loss(const Ast& ast, std::span<const int> labels,
                    const Model& model);

// Loss plus reverse-mode gradients for every model tensor, flattened in
// named_tensors() order.
double example_gradients(const Ast& ast, std::span<const int> labels,
                         const Model& model, std::vector<double>& flat_grad);

struct TrainStats {
    std::vector<double> epoch_mean_loss;
    int steps = 0;
    std::size_t trained_asts = 0;
    std::size_t skipped_asts = 0;  // zero in-vocabulary labels
};

// Pretext training: epochs x seeded-shuffled batches, Adam on every encoder
// tensor plus the prediction head. Per-example gradients may be computed
// concurrently; with config.deterministic they are merged as an ordered sum,
// making runs bitwise reproducible for a fixed config.
// Errors: every AST label-free; non-finite loss.
Model train(std::span<const Ast> corpus, const Vocab& type_vocab,
            const Vocab& token_vocab, const Vocab& label_vocab,
            const TrainConfig& config, TrainStats* stats_out = nullptr);

// Adam with bias correction, shared by the pretext trainer and fine-tuning.
class AdamOptimizer {
  public:
    AdamOptimizer(double lr, double beta1, double beta2, double eps);
    void step(std::vector<Tensor*>& params, const std::vector<double>& grad);
    int steps_taken() const { return t_; }

  private:
    double lr_, b1_, b2_, eps_;
    int t_ = 0;
    std::vector<double> m_, v_;
};

struct Checkpoint {
    int version = 1;
    TrainConfig config;
    std::map<std::string, std::string> vocab_sha256;
    int step = 0;
    double final_loss = 0.0;
    std::map<std::string, Tensor> tensors;
};

Checkpoint checkpoint_from_model(const Model& model, int step,
                                 double final_loss,
                                 std::map<std::string, std::string> hashes);
// Rebuilds a model; validates tensor names/shapes against the vocabularies.
Model model_from_checkpoint(const Checkpoint& ckpt, Vocab type_vocab,
                            Vocab token_vocab, Vocab label_vocab);

std::string checkpoint_to_json(const Checkpoint& ckpt);
Checkpoint checkpoint_from_json(const std::string& bytes);
void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
// Errors: corrupt file, version mismatch. Fingerprints are verified against
// vocab files via verify_fingerprints.
Checkpoint load_checkpoint(const std::string& path);
void verify_fingerprints(const Checkpoint& ckpt,
                         const std::map<std::string, std::string>& file_hashes);

TrainConfig train_config_from_json_object(const std::string& json_text);

}  // namespace s2v
