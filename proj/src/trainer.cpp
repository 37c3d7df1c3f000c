#include "s2v/trainer.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "s2v/parallel.hpp"

namespace s2v {

void TrainConfig::validate() const {
    if (learning_rate <= 0) throw UsageError("learning_rate must be > 0");
    if (epochs < 1) throw UsageError("epochs must be >= 1");
    if (batch_size < 1) throw UsageError("batch_size must be >= 1");
    if (dim < 1) throw UsageError("dim must be >= 1");
    if (num_conv_layers < 0) throw UsageError("num_conv_layers must be >= 0");
}

std::vector<double> predict_subtree_distribution(const Tensor& code_vector,
                                                 const PredictionHead& head) {
    if (head.label_embed.numel() == 0)
        throw DataError("prediction head has an empty vocabulary");
    std::size_t labels = head.label_embed.rows();
    std::size_t d = head.label_embed.cols();
    if (code_vector.numel() != d)
        throw TensorError("code vector dimension mismatch");
    std::vector<double> logits(labels);
    for (std::size_t i = 0; i < labels; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < d; ++j)
            acc += code_vector.values[j] * head.label_embed.values[i * d + j];
        logits[i] = acc;
    }
    double mx = *std::max_element(logits.begin(), logits.end());
    double z = 0.0;
    for (double& v : logits) {
        v = std::exp(v - mx);
        z += v;
    }
    for (double& v : logits) v /= z;
    return logits;
}

std::vector<std::pair<std::string, Tensor*>> Model::named_tensors() {
    auto out = enc.named_tensors();
    out.emplace_back("label_embed", &head.label_embed);
    return out;
}

EncodeResult Model::encode_ast(const Ast& ast) const {
    return encode(ast, enc, type_vocab, token_vocab, config.init_mode,
                  config.aggregate_mode);
}

namespace {

struct PreparedExample {
    AstLayout layout;
    std::vector<int> labels;
};

Tape::Id loss_on_tape(Tape& tape, const AstLayout& layout,
                      const EncoderLeaves& leaves, Tape::Id label_embed,
                      std::span<const int> labels, const Model& model) {
    EncodedGraph g = encode_on_tape(tape, layout, leaves, model.enc.dim,
                                    model.enc.num_conv_layers,
                                    model.config.init_mode,
                                    model.config.aggregate_mode);
    Tape::Id logits = tape.matmul(g.code_vector, label_embed, true);  // 1 x L
    Tape::Id acc = -1;
    for (int label : labels) {
        Tape::Id ce = tape.cross_entropy(logits, label);
        acc = acc < 0 ? ce : tape.add(acc, ce);
    }
    return tape.scale(acc, 1.0 / double(labels.size()));
}

// Forward+backward for one example; appends flattened parameter gradients.
double example_backward(const Model& model, const PreparedExample& ex,
                        std::vector<double>& flat_grad) {
    Tape tape;
    EncoderLeaves leaves = push_encoder_leaves(tape, model.enc, true);
    Tensor lab = model.head.label_embed;
    lab.requires_grad = true;
    Tape::Id label_embed = tape.leaf(lab);
    Tape::Id loss =
        loss_on_tape(tape, ex.layout, leaves, label_embed, ex.labels, model);
    tape.backward(loss);
    const Tape::Id leaf_ids[] = {
        leaves.type_embed, leaves.token_embed, leaves.fuse_weight,
        leaves.fuse_bias,  leaves.conv_top,    leaves.conv_left,
        leaves.conv_right, leaves.conv_bias,   leaves.attention,
        label_embed};
    flat_grad.clear();
    for (Tape::Id id : leaf_ids) {
        const auto& g = tape.grad(id);
        flat_grad.insert(flat_grad.end(), g.begin(), g.end());
    }
    return tape.scalar_value(loss);
}

}  // namespace

double example_loss(const Ast& ast, std::span<const int> labels,
                    const Model& model) {
    if (labels.empty()) throw DataError("example_loss: empty label set");
    PreparedExample ex;
    ex.layout = build_layout(ast, model.type_vocab, model.token_vocab);
    ex.labels.assign(labels.begin(), labels.end());
    Tape tape;
    EncoderLeaves leaves = push_encoder_leaves(tape, model.enc, false);
    Tensor lab = model.head.label_embed;
    lab.requires_grad = false;
    Tape::Id label_embed = tape.leaf(lab);
    return tape.scalar_value(
        loss_on_tape(tape, ex.layout, leaves, label_embed, ex.labels, model));
}

double example_gradients(const Ast& ast, std::span<const int> labels,
                         const Model& model, std::vector<double>& flat_grad) {
    if (labels.empty()) throw DataError("example_gradients: empty label set");
    PreparedExample ex;
    ex.layout = build_layout(ast, model.type_vocab, model.token_vocab);
    ex.labels.assign(labels.begin(), labels.end());
    return example_backward(model, ex, flat_grad);
}

AdamOptimizer::AdamOptimizer(double lr, double beta1, double beta2, double eps)
    : lr_(lr), b1_(beta1), b2_(beta2), eps_(eps) {}

void AdamOptimizer::step(std::vector<Tensor*>& params,
                         const std::vector<double>& grad) {
    std::size_t total = 0;
    for (Tensor* p : params) total += p->numel();
    if (grad.size() != total)
        throw TensorError("adam: gradient length mismatch");
    if (m_.empty()) {
        m_.assign(total, 0.0);
        v_.assign(total, 0.0);
    }
    ++t_;
    double c1 = 1.0 - std::pow(b1_, t_);
    double c2 = 1.0 - std::pow(b2_, t_);
    std::size_t off = 0;
    for (Tensor* p : params) {
        for (std::size_t i = 0; i < p->numel(); ++i, ++off) {
            double g = grad[off];
            m_[off] = b1_ * m_[off] + (1.0 - b1_) * g;
            v_[off] = b2_ * v_[off] + (1.0 - b2_) * g * g;
            double mhat = m_[off] / c1;
            double vhat = v_[off] / c2;
            p->values[i] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
        }
    }
}

Model train(std::span<const Ast> corpus, const Vocab& type_vocab,
            const Vocab& token_vocab, const Vocab& label_vocab,
            const TrainConfig& config, TrainStats* stats_out) {
    config.validate();
    if (corpus.empty()) throw DataError("train: empty corpus");
    par::set_max_jobs(config.jobs);

    TrainStats stats;
    std::vector<PreparedExample> examples;
    for (const Ast& ast : corpus) {
        PreparedExample ex;
        ex.labels = label_set(ast, label_vocab, config.label_mode,
                              config.include_operator_tokens);
        if (ex.labels.empty()) {
            ++stats.skipped_asts;
            continue;
        }
        ex.layout = build_layout(ast, type_vocab, token_vocab);
        examples.push_back(std::move(ex));
    }
    if (examples.empty())
        throw DataError("train: every AST in the corpus is label-free");
    stats.trained_asts = examples.size();

    Model model;
    model.config = config;
    model.type_vocab = type_vocab;
    model.token_vocab = token_vocab;
    model.label_vocab = label_vocab;
    Rng rng(config.seed);
    model.enc = EncoderParams::init(config.dim, config.num_conv_layers,
                                    type_vocab.size(), token_vocab.size(), rng,
                                    config.init_scale);
    model.head.label_embed = Tensor::uniform(
        {std::size_t(label_vocab.size()), config.dim}, -config.init_scale,
        config.init_scale, rng);
    model.head.label_embed.requires_grad = true;

    std::vector<Tensor*> params;
    for (auto& [name, t] : model.named_tensors()) params.push_back(t);
    std::size_t total = 0;
    for (Tensor* p : params) total += p->numel();

    AdamOptimizer opt(config.learning_rate, config.adam_beta1,
                      config.adam_beta2, config.adam_eps);

    std::vector<std::size_t> order(examples.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    int nthreads = par::threads();
    double last_epoch_loss = 0.0;
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        rng.shuffle(order);
        double epoch_loss_sum = 0.0;
        for (std::size_t start = 0; start < order.size();
             start += std::size_t(config.batch_size)) {
            std::size_t stop = std::min(order.size(),
                                        start + std::size_t(config.batch_size));
            std::size_t bsz = stop - start;
            std::vector<double> batch_grad(total, 0.0);
            std::vector<double> losses(bsz, 0.0);
            std::exception_ptr failure;  // exceptions may not cross the join
            if (config.deterministic) {
                std::vector<std::vector<double>> grads(bsz);
#pragma omp parallel for schedule(dynamic) num_threads(nthreads)
                for (std::size_t b = 0; b < bsz; ++b) {
                    try {
                        losses[b] = example_backward(
                            model, examples[order[start + b]], grads[b]);
                    } catch (...) {
#pragma omp critical
                        if (!failure) failure = std::current_exception();
                    }
                }
                if (failure) std::rethrow_exception(failure);
                for (std::size_t b = 0; b < bsz; ++b)
                    for (std::size_t i = 0; i < total; ++i)
                        batch_grad[i] += grads[b][i];
            } else {
#pragma omp parallel num_threads(nthreads)
                {
                    std::vector<double> local;
#pragma omp for schedule(dynamic)
                    for (std::size_t b = 0; b < bsz; ++b) {
                        try {
                            losses[b] = example_backward(
                                model, examples[order[start + b]], local);
#pragma omp critical
                            for (std::size_t i = 0; i < total; ++i)
                                batch_grad[i] += local[i];
                        } catch (...) {
#pragma omp critical
                            if (!failure) failure = std::current_exception();
                        }
                    }
                }
                if (failure) std::rethrow_exception(failure);
            }
            double inv = 1.0 / double(bsz);
            for (double& g : batch_grad) g *= inv;
            double batch_loss = 0.0;
            for (double l : losses) batch_loss += l;
            epoch_loss_sum += batch_loss;
            if (!std::isfinite(batch_loss))
                throw NumericError(
                    "train: non-finite loss at step " +
                    std::to_string(opt.steps_taken() + 1) +
                    " (diverging learning rate or degenerate input?)");
            opt.step(params, batch_grad);
        }
        last_epoch_loss = epoch_loss_sum / double(order.size());
        stats.epoch_mean_loss.push_back(last_epoch_loss);
    }
    stats.steps = opt.steps_taken();
    if (stats_out) *stats_out = stats;
    return model;
}

// --- checkpoint persistence ---

namespace {

nlohmann::json config_to_json(const TrainConfig& c) {
    nlohmann::json j;
    j["learning_rate"] = c.learning_rate;
    j["adam_beta1"] = c.adam_beta1;
    j["adam_beta2"] = c.adam_beta2;
    j["adam_eps"] = c.adam_eps;
    j["epochs"] = c.epochs;
    j["batch_size"] = c.batch_size;
    j["seed"] = c.seed;
    j["dim"] = c.dim;
    j["num_conv_layers"] = c.num_conv_layers;
    j["init_mode"] = to_string(c.init_mode);
    j["label_mode"] = to_string(c.label_mode);
    j["aggregate_mode"] = to_string(c.aggregate_mode);
    j["min_count"] = c.min_count;
    j["deterministic"] = c.deterministic;
    j["jobs"] = c.jobs;
    j["include_operator_tokens"] = c.include_operator_tokens;
    j["init_scale"] = c.init_scale;
    return j;
}

TrainConfig config_from_json(const nlohmann::json& j) {
    TrainConfig c;
    c.learning_rate = j.at("learning_rate").get<double>();
    c.adam_beta1 = j.at("adam_beta1").get<double>();
    c.adam_beta2 = j.at("adam_beta2").get<double>();
    c.adam_eps = j.at("adam_eps").get<double>();
    c.epochs = j.at("epochs").get<int>();
    c.batch_size = j.at("batch_size").get<int>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.dim = j.at("dim").get<std::size_t>();
    c.num_conv_layers = j.at("num_conv_layers").get<int>();
    c.init_mode = parse_init_mode(j.at("init_mode").get<std::string>());
    c.label_mode = parse_label_mode(j.at("label_mode").get<std::string>());
    c.aggregate_mode =
        parse_aggregate_mode(j.at("aggregate_mode").get<std::string>());
    c.min_count = j.at("min_count").get<std::uint64_t>();
    c.deterministic = j.at("deterministic").get<bool>();
    c.jobs = j.at("jobs").get<int>();
    c.include_operator_tokens = j.at("include_operator_tokens").get<bool>();
    c.init_scale = j.at("init_scale").get<double>();
    return c;
}

const char* kExpectedTensors[] = {
    "type_embed", "token_embed", "fuse_weight", "fuse_bias", "conv_top",
    "conv_left",  "conv_right",  "conv_bias",   "attention", "label_embed"};

}  // namespace

Checkpoint checkpoint_from_model(const Model& model, int step,
                                 double final_loss,
                                 std::map<std::string, std::string> hashes) {
    Checkpoint ckpt;
    ckpt.version = 1;
    ckpt.config = model.config;
    ckpt.vocab_sha256 = std::move(hashes);
    ckpt.step = step;
    ckpt.final_loss = final_loss;
    for (auto& [name, t] :
         const_cast<Model&>(model).named_tensors())
        ckpt.tensors.emplace(name, *t);
    return ckpt;
}

Model model_from_checkpoint(const Checkpoint& ckpt, Vocab type_vocab,
                            Vocab token_vocab, Vocab label_vocab) {
    for (const char* name : kExpectedTensors)
        if (!ckpt.tensors.count(name))
            throw CheckpointError(std::string("checkpoint missing tensor ") +
                                  name);
    Model model;
    model.config = ckpt.config;
    model.type_vocab = std::move(type_vocab);
    model.token_vocab = std::move(token_vocab);
    model.label_vocab = std::move(label_vocab);
    model.enc.dim = ckpt.config.dim;
    model.enc.num_conv_layers = ckpt.config.num_conv_layers;
    auto expect = [&](const std::string& name, std::size_t rows,
                      std::size_t cols) {
        const Tensor& t = ckpt.tensors.at(name);
        if (t.rows() != rows || t.cols() != cols)
            throw CheckpointError("checkpoint tensor " + name +
                                  " has unexpected shape");
        return t;
    };
    std::size_t d = ckpt.config.dim;
    model.enc.type_embed =
        expect("type_embed", std::size_t(model.type_vocab.size()) + 1, d);
    model.enc.token_embed =
        expect("token_embed", std::size_t(model.token_vocab.size()) + 1, d);
    model.enc.fuse_weight = expect("fuse_weight", 2 * d, d);
    model.enc.fuse_bias = expect("fuse_bias", 1, d);
    model.enc.conv_top = expect("conv_top", d, d);
    model.enc.conv_left = expect("conv_left", d, d);
    model.enc.conv_right = expect("conv_right", d, d);
    model.enc.conv_bias = expect("conv_bias", 1, d);
    model.enc.attention = expect("attention", d, 1);
    model.head.label_embed =
        expect("label_embed", std::size_t(model.label_vocab.size()), d);
    for (auto& [name, t] : model.named_tensors()) t->requires_grad = true;
    return model;
}

std::string checkpoint_to_json(const Checkpoint& ckpt) {
    nlohmann::json j;
    j["version"] = ckpt.version;
    j["config"] = config_to_json(ckpt.config);
    j["vocab_sha256"] = ckpt.vocab_sha256;
    j["step"] = ckpt.step;
    j["final_loss"] = ckpt.final_loss;
    nlohmann::json tensors;
    for (const auto& [name, t] : ckpt.tensors) {
        nlohmann::json jt;
        jt["shape"] = t.shape;
        jt["data"] = t.values;
        tensors[name] = std::move(jt);
    }
    j["tensors"] = std::move(tensors);
    return j.dump() + "\n";
}

Checkpoint checkpoint_from_json(const std::string& bytes) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(bytes);
    } catch (const std::exception& e) {
        throw CheckpointError(std::string("corrupt checkpoint: ") + e.what());
    }
    Checkpoint ckpt;
    try {
        ckpt.version = j.at("version").get<int>();
        if (ckpt.version != 1)
            throw CheckpointError("unsupported checkpoint version " +
                                  std::to_string(ckpt.version));
        ckpt.config = config_from_json(j.at("config"));
        ckpt.vocab_sha256 =
            j.at("vocab_sha256").get<std::map<std::string, std::string>>();
        ckpt.step = j.at("step").get<int>();
        ckpt.final_loss = j.at("final_loss").get<double>();
        for (const auto& [name, jt] : j.at("tensors").items()) {
            Tensor t(jt.at("shape").get<std::vector<std::size_t>>());
            auto data = jt.at("data").get<std::vector<double>>();
            if (data.size() != t.numel())
                throw CheckpointError("tensor " + name +
                                      " data length mismatch");
            t.values = std::move(data);
            if (!t.finite())
                throw CheckpointError("tensor " + name +
                                      " has non-finite entries");
            ckpt.tensors.emplace(name, std::move(t));
        }
    } catch (const CheckpointError&) {
        throw;
    } catch (const std::exception& e) {
        throw CheckpointError(std::string("corrupt checkpoint: ") + e.what());
    }
    return ckpt;
}

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
    write_file(path, checkpoint_to_json(ckpt));
}

Checkpoint load_checkpoint(const std::string& path) {
    return checkpoint_from_json(read_file(path));
}

void verify_fingerprints(
    const Checkpoint& ckpt,
    const std::map<std::string, std::string>& file_hashes) {
    for (const auto& [kind, hash] : ckpt.vocab_sha256) {
        auto it = file_hashes.find(kind);
        if (it == file_hashes.end())
            throw CheckpointError("missing " + kind +
                                  " vocabulary for fingerprint check");
        if (it->second != hash)
            throw CheckpointError(kind +
                                  " vocabulary fingerprint mismatch: "
                                  "checkpoint was trained against a "
                                  "different vocabulary file");
    }
}

TrainConfig train_config_from_json_object(const std::string& json_text) {
    return config_from_json(nlohmann::json::parse(json_text));
}

}  // namespace s2v
