#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "s2v/corpus.hpp"
#include "s2v/minilang.hpp"
#include "s2v/trainer.hpp"
#include "support.hpp"

using namespace s2v;

namespace {

Model tiny_model(std::span<const Ast> corpus, TrainConfig cfg) {
    Vocab types = build_type_vocab(corpus);
    Vocab tokens = build_token_vocab(corpus, 1);
    Vocab labels = build_subtree_vocab(corpus, 1);
    Model m;
    m.config = cfg;
    m.type_vocab = types;
    m.token_vocab = tokens;
    m.label_vocab = labels;
    Rng rng(cfg.seed);
    m.enc = EncoderParams::init(cfg.dim, cfg.num_conv_layers, types.size(),
                                tokens.size(), rng, cfg.init_scale);
    m.head.label_embed =
        Tensor::uniform({std::size_t(labels.size()), cfg.dim},
                        -cfg.init_scale, cfg.init_scale, rng);
    m.head.label_embed.requires_grad = true;
    return m;
}

std::string temp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("predict_subtree_distribution") {
    SUBCASE("all-zero head gives the uniform distribution") {
        PredictionHead head;
        head.label_embed = Tensor::matrix(5, 3, 0.0);
        Tensor v = Tensor::row({0.4, -0.1, 0.9});
        auto q = predict_subtree_distribution(v, head);
        for (double p : q) CHECK(p == doctest::Approx(0.2).epsilon(1e-12));
    }
    SUBCASE("hand-computed two-label softmax") {
        // v . row0 = ln 3, v . row1 = 0  ->  q = [0.75, 0.25]
        PredictionHead head;
        head.label_embed = Tensor::matrix(2, 1, 0.0);
        head.label_embed.at(0, 0) = std::log(3.0);
        head.label_embed.at(1, 0) = 0.0;
        Tensor v = Tensor::row({1.0});
        auto q = predict_subtree_distribution(v, head);
        CHECK(q[0] == doctest::Approx(0.75).epsilon(1e-12));
        CHECK(q[1] == doctest::Approx(0.25).epsilon(1e-12));
    }
    SUBCASE("invariant to a constant logit shift") {
        PredictionHead head;
        head.label_embed = Tensor::matrix(3, 2, 0.0);
        Rng rng(8);
        for (double& v : head.label_embed.values) v = rng.uniform(-1, 1);
        Tensor v = Tensor::row({0.7, -0.4});
        auto q1 = predict_subtree_distribution(v, head);
        // shifting every row by the same vector shifts all logits equally
        // only when v is fixed; emulate by adding c directly to logits via
        // a row of the head aligned with v's direction
        PredictionHead shifted = head;
        double c = 1.7;
        double norm2 = 0.0;
        for (double x : v.values) norm2 += x * x;
        for (std::size_t i = 0; i < 3; ++i)
            for (std::size_t j = 0; j < 2; ++j)
                shifted.label_embed.at(i, j) += c * v.values[j] / norm2;
        auto q2 = predict_subtree_distribution(v, shifted);
        for (std::size_t i = 0; i < q1.size(); ++i)
            CHECK(q1[i] == doctest::Approx(q2[i]).epsilon(1e-9));
    }
    SUBCASE("empty vocabulary is an error") {
        PredictionHead head;  // no rows
        Tensor v = Tensor::row({1.0});
        CHECK_THROWS_AS(predict_subtree_distribution(v, head), DataError);
    }
    SUBCASE("q sums to one on random inputs") {
        Rng rng(21);
        for (int trial = 0; trial < 200; ++trial) {
            PredictionHead head;
            std::size_t L = 2 + rng.index(6), d = 1 + rng.index(5);
            head.label_embed = Tensor::uniform({L, d}, -3.0, 3.0, rng);
            Tensor v = Tensor::uniform({std::size_t(1), d}, -3.0, 3.0, rng);
            auto q = predict_subtree_distribution(v, head);
            double total = 0.0;
            for (double p : q) {
                CHECK(p > 0.0);
                total += p;
            }
            CHECK(std::abs(total - 1.0) <= 1e-9);
        }
    }
}

TEST_CASE("example_loss hand values") {
    Ast ast = parse_minilang("int a = 1;", "t");
    std::vector<Ast> corpus = {ast};
    TrainConfig cfg;
    cfg.dim = 4;
    cfg.seed = 5;
    Model m = tiny_model(corpus, cfg);

    SUBCASE("uniform q over 4 labels costs ln 4") {
        REQUIRE(m.label_vocab.size() >= 1);
        // zero head -> uniform q regardless of the code vector
        Model uniform = m;
        uniform.head.label_embed =
            Tensor::matrix(4, cfg.dim, 0.0);
        std::vector<int> labels = {2};
        CHECK(example_loss(ast, labels, uniform) ==
              doctest::Approx(std::log(4.0)).epsilon(1e-12));
    }
    SUBCASE("confident head drives the loss to zero") {
        Model confident = m;
        confident.enc.num_conv_layers = 0;
        confident.config.init_mode = InitMode::type;
        // one-hot style: make label 0's embedding hugely aligned with any v
        confident.head.label_embed = Tensor::matrix(2, cfg.dim, 0.0);
        EncodeResult enc = confident.encode_ast(ast);
        for (std::size_t j = 0; j < cfg.dim; ++j)
            confident.head.label_embed.at(0, j) =
                1e8 * enc.code_vector.values[j];
        std::vector<int> labels = {0};
        CHECK(example_loss(ast, labels, confident) <= 1e-9);
    }
    SUBCASE("two labels at q = [0.75, 0.25] average their surprisals") {
        Model two = m;
        two.enc.num_conv_layers = 0;
        two.config.init_mode = InitMode::type;
        EncodeResult enc = two.encode_ast(ast);
        // pick label embeddings so logits are (ln 3, 0): q = [0.75, 0.25]
        double norm2 = 0.0;
        for (double x : enc.code_vector.values) norm2 += x * x;
        two.head.label_embed = Tensor::matrix(2, cfg.dim, 0.0);
        for (std::size_t j = 0; j < cfg.dim; ++j)
            two.head.label_embed.at(0, j) =
                std::log(3.0) * enc.code_vector.values[j] / norm2;
        std::vector<int> labels = {0, 1};
        double expected = 0.5 * (-std::log(0.75) - std::log(0.25));
        CHECK(example_loss(ast, labels, two) ==
              doctest::Approx(expected).epsilon(1e-9));
        CHECK(expected == doctest::Approx(0.8369).epsilon(1e-4));
    }
    SUBCASE("empty labels are an error") {
        std::vector<int> labels;
        CHECK_THROWS_AS(example_loss(ast, labels, m), DataError);
    }
}

TEST_CASE("full-pipeline gradients match finite differences") {
    Rng rng(2024);
    TrainConfig cfg;
    cfg.dim = 6;
    cfg.num_conv_layers = 2;
    cfg.seed = 31;
    cfg.init_scale = 0.2;
    for (int trial = 0; trial < 3; ++trial) {
        Ast ast = testing::random_tree(rng, 8);
        std::vector<Ast> corpus = {ast};
        Vocab types = build_type_vocab(corpus);
        Vocab tokens = build_token_vocab(corpus, 1);
        std::vector<std::string> names = {"l0", "l1", "l2", "l3", "l4"};
        Vocab labels_vocab = build_vocab(names, 1, "subtree");
        Model m;
        m.config = cfg;
        m.type_vocab = types;
        m.token_vocab = tokens;
        m.label_vocab = labels_vocab;
        Rng init_rng(cfg.seed + std::uint64_t(trial));
        m.enc = EncoderParams::init(cfg.dim, cfg.num_conv_layers,
                                    types.size(), tokens.size(), init_rng,
                                    cfg.init_scale);
        m.head.label_embed = Tensor::uniform({std::size_t(5), cfg.dim},
                                             -0.2, 0.2, rng);
        m.head.label_embed.requires_grad = true;
        std::vector<int> labels = {0, 4};

        std::vector<double> analytic;
        example_gradients(ast, labels, m, analytic);

        double h = 1e-5;
        double max_rel = 0.0;
        std::size_t off = 0;
        for (auto& [name, tensor] : m.named_tensors()) {
            for (std::size_t i = 0; i < tensor->numel(); ++i, ++off) {
                double keep = tensor->values[i];
                tensor->values[i] = keep + h;
                double up = example_loss(ast, labels, m);
                tensor->values[i] = keep - h;
                double down = example_loss(ast, labels, m);
                tensor->values[i] = keep;
                double numeric = (up - down) / (2.0 * h);
                double denom = std::max(
                    {std::abs(analytic[off]), std::abs(numeric), 1.0});
                max_rel =
                    std::max(max_rel, std::abs(analytic[off] - numeric) / denom);
            }
        }
        INFO("trial " << trial << " max rel err " << max_rel);
        CHECK(max_rel <= 1e-3);
    }
}

TEST_CASE("training memorizes a single example") {
    // the training AST carries exactly one pseudo-label occurrence; the
    // vocabulary holds competing entries from a sibling snippet
    testing::TreeBuilder b("solo");
    NodeId leaf = b.node("ident", "x");
    NodeId ex = b.node("expr", std::nullopt, {leaf});
    NodeId prog = b.node("program", std::nullopt, {ex});
    Ast solo = b.done(prog);
    Ast other = parse_minilang("int a = b + 1; if (a > 0) { a = 0; }", "o");
    std::vector<Ast> vocab_corpus = {solo, other};
    std::vector<Ast> corpus = {solo};
    Vocab types = build_type_vocab(vocab_corpus);
    Vocab tokens = build_token_vocab(vocab_corpus, 1);
    Vocab labels = build_subtree_vocab(vocab_corpus, 1);
    REQUIRE(labels.size() >= 2);
    REQUIRE(label_set(solo, labels, LabelMode::subtree).size() == 1);
    TrainConfig cfg;
    cfg.dim = 8;
    cfg.epochs = 200;  // batch of one -> 200 steps
    cfg.batch_size = 1;
    cfg.learning_rate = 0.05;
    cfg.seed = 9;
    TrainStats stats;
    Model m = train(corpus, types, tokens, labels, cfg, &stats);
    CHECK(stats.steps == 200);
    CHECK(stats.epoch_mean_loss.back() < 0.01);
}

TEST_CASE("near-zero initialization starts at ln |L|") {
    auto programs = synthetic_corpus(61, 8);
    std::vector<Ast> corpus = parse_synthetic(programs);
    TrainConfig cfg;
    cfg.dim = 16;
    cfg.epochs = 1;
    cfg.seed = 3;
    cfg.init_scale = 1e-4;
    Vocab types = build_type_vocab(corpus);
    Vocab tokens = build_token_vocab(corpus, 2);
    Vocab labels = build_subtree_vocab(corpus, 2);
    TrainStats stats;
    train(corpus, types, tokens, labels, cfg, &stats);
    double expected = std::log(double(labels.size()));
    CHECK(stats.epoch_mean_loss[0] ==
          doctest::Approx(expected).epsilon(0.10));
}

TEST_CASE("epoch losses do not increase by more than 5% early on") {
    auto programs = synthetic_corpus(67, 10);
    std::vector<Ast> corpus = parse_synthetic(programs);
    TrainConfig cfg;
    cfg.dim = 16;
    cfg.epochs = 5;
    cfg.seed = 13;
    Vocab types = build_type_vocab(corpus);
    Vocab tokens = build_token_vocab(corpus, 2);
    Vocab labels = build_subtree_vocab(corpus, 2);
    TrainStats stats;
    train(corpus, types, tokens, labels, cfg, &stats);
    for (std::size_t e = 1; e < stats.epoch_mean_loss.size(); ++e)
        CHECK(stats.epoch_mean_loss[e] <=
              1.05 * stats.epoch_mean_loss[e - 1]);
}

TEST_CASE("label-free corpora are rejected") {
    Ast ast = parse_minilang("int lone_decl = 12345;", "t");
    std::vector<Ast> corpus = {ast};
    Vocab types = build_type_vocab(corpus);
    Vocab tokens = build_token_vocab(corpus, 1);
    // a vocabulary from a different corpus: nothing here is in it
    Vocab labels;
    labels.kind = "subtree";
    labels.min_count = 2;
    TrainConfig cfg;
    cfg.dim = 4;
    cfg.epochs = 1;
    CHECK_THROWS_WITH_AS(train(corpus, types, tokens, labels, cfg),
                         doctest::Contains("label-free"), DataError);
}

TEST_CASE("deterministic training reproduces checkpoints bitwise") {
    auto programs = synthetic_corpus(71, 6);
    std::vector<Ast> corpus = parse_synthetic(programs);
    TrainConfig cfg;
    cfg.dim = 8;
    cfg.epochs = 2;
    cfg.seed = 15;
    cfg.deterministic = true;
    Vocab types = build_type_vocab(corpus);
    Vocab tokens = build_token_vocab(corpus, 2);
    Vocab labels = build_subtree_vocab(corpus, 2);
    TrainStats s1, s2;
    Model m1 = train(corpus, types, tokens, labels, cfg, &s1);
    Model m2 = train(corpus, types, tokens, labels, cfg, &s2);
    std::map<std::string, std::string> hashes = {{"subtree", "h1"},
                                                 {"token", "h2"},
                                                 {"type", "h3"}};
    std::string j1 = checkpoint_to_json(
        checkpoint_from_model(m1, s1.steps, s1.epoch_mean_loss.back(), hashes));
    std::string j2 = checkpoint_to_json(
        checkpoint_from_model(m2, s2.steps, s2.epoch_mean_loss.back(), hashes));
    CHECK(j1 == j2);
}

TEST_CASE("checkpoint persistence") {
    auto programs = synthetic_corpus(73, 4);
    std::vector<Ast> corpus = parse_synthetic(programs);
    TrainConfig cfg;
    cfg.dim = 6;
    cfg.epochs = 1;
    cfg.seed = 17;
    Vocab types = build_type_vocab(corpus);
    Vocab tokens = build_token_vocab(corpus, 2);
    Vocab labels = build_subtree_vocab(corpus, 2);
    TrainStats stats;
    Model m = train(corpus, types, tokens, labels, cfg, &stats);

    std::string sub_tsv = vocab_to_tsv(labels);
    std::map<std::string, std::string> hashes = {
        {"subtree", sha256_hex(sub_tsv)},
        {"token", sha256_hex(vocab_to_tsv(tokens))},
        {"type", sha256_hex(vocab_to_tsv(types))}};
    Checkpoint ckpt = checkpoint_from_model(m, stats.steps, 0.5, hashes);
    std::string path = temp_path("s2v_test_ckpt.json");
    save_checkpoint(ckpt, path);

    SUBCASE("save -> load -> save is byte-identical") {
        Checkpoint back = load_checkpoint(path);
        CHECK(checkpoint_to_json(back) == checkpoint_to_json(ckpt));
        std::string path2 = temp_path("s2v_test_ckpt2.json");
        save_checkpoint(back, path2);
        CHECK(read_file(path) == read_file(path2));
    }
    SUBCASE("round-trip preserves encode outputs bit-exactly") {
        Checkpoint back = load_checkpoint(path);
        Model m2 = model_from_checkpoint(back, types, tokens, labels);
        EncodeResult a = m.encode_ast(corpus[0]);
        EncodeResult b = m2.encode_ast(corpus[0]);
        CHECK(a.code_vector.values == b.code_vector.values);
    }
    SUBCASE("edited vocabulary fails the fingerprint check") {
        Checkpoint back = load_checkpoint(path);
        std::map<std::string, std::string> tampered = hashes;
        tampered["subtree"] = sha256_hex(sub_tsv + "tail");
        CHECK_THROWS_WITH_AS(verify_fingerprints(back, tampered),
                             doctest::Contains("fingerprint"),
                             CheckpointError);
        verify_fingerprints(back, hashes);  // the real ones stay valid
    }
    SUBCASE("truncated files are corrupt") {
        std::string bytes = read_file(path);
        std::string half = bytes.substr(0, bytes.size() / 2);
        CHECK_THROWS_WITH_AS(checkpoint_from_json(half),
                             doctest::Contains("corrupt"), CheckpointError);
    }
    SUBCASE("version mismatch is rejected") {
        std::string bytes = read_file(path);
        std::string bumped = bytes;
        auto pos = bumped.find("\"version\":1");
        REQUIRE(pos != std::string::npos);
        bumped.replace(pos, 11, "\"version\":9");
        CHECK_THROWS_AS(checkpoint_from_json(bumped), CheckpointError);
    }
}
