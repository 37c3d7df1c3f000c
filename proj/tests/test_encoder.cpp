#include <doctest.h>

#include <cmath>

#include "s2v/ast_json.hpp"
#include "s2v/corpus.hpp"
#include "s2v/encoder.hpp"
#include "s2v/minilang.hpp"
#include "support.hpp"

using namespace s2v;
using testing::TreeBuilder;

namespace {

Vocab tiny_vocab(const std::string& kind,
                 const std::vector<std::string>& entries) {
    std::vector<std::string> occ = entries;
    return build_vocab(occ, 1, kind);
}

EncoderParams tiny_params(std::size_t dim, int layers, int types, int tokens,
                          std::uint64_t seed = 3, double scale = 0.05) {
    Rng rng(seed);
    return EncoderParams::init(dim, layers, types, tokens, rng, scale);
}

Ast five_node_tree() {
    TreeBuilder b("five");
    NodeId l1 = b.node("ident", "a");
    NodeId l2 = b.node("literal", "1");
    NodeId op = b.node("binop", "+", {l1, l2});
    NodeId ex = b.node("expr", std::nullopt, {op});
    NodeId st = b.node("expr_stmt", std::nullopt, {ex});
    return b.done(st);
}

}  // namespace

TEST_CASE("init_node_embeddings modes") {
    Vocab types = tiny_vocab("type", {"expr", "ident", "literal", "binop",
                                      "expr_stmt"});
    Vocab tokens = tiny_vocab("token", {"a", "1", "+"});
    EncoderParams p = tiny_params(6, 1, types.size(), tokens.size());
    Ast ast = five_node_tree();

    SUBCASE("combine mode with a token-less node stays finite") {
        NodeStates ns = init_node_embeddings(ast, p, types, tokens,
                                             InitMode::combine);
        CHECK(ns.states.rows() == 5);
        CHECK(ns.states.finite());
    }
    SUBCASE("type mode: equal types get equal rows regardless of tokens") {
        TreeBuilder b;
        NodeId i1 = b.node("ident", "left");
        NodeId i2 = b.node("ident", "right");
        NodeId op = b.node("binop", "+", {i1, i2});
        Ast two = b.done(op);
        NodeStates ns =
            init_node_embeddings(two, p, types, tokens, InitMode::type);
        // rows for the two idents (positions 1 and 2 in pre-order)
        for (std::size_t j = 0; j < ns.states.cols(); ++j)
            CHECK(ns.states.at(1, j) == ns.states.at(2, j));
    }
    SUBCASE("combine mode with zero fusion weights is all zero") {
        EncoderParams zero = p;
        for (double& v : zero.fuse_weight.values) v = 0.0;
        for (double& v : zero.fuse_bias.values) v = 0.0;
        NodeStates ns =
            init_node_embeddings(ast, zero, types, tokens, InitMode::combine);
        for (double v : ns.states.values) CHECK(v == 0.0);
    }
    SUBCASE("token mode: absent token hits the UNK row") {
        NodeStates ns =
            init_node_embeddings(ast, p, types, tokens, InitMode::token);
        // expr_stmt (pos 0) and expr (pos 1) both lack tokens -> same UNK row
        for (std::size_t j = 0; j < ns.states.cols(); ++j) {
            CHECK(ns.states.at(0, j) == ns.states.at(1, j));
            CHECK(ns.states.at(0, j) == p.token_embed.at(0, j));
        }
    }
}

TEST_CASE("tbcnn_conv_layer") {
    Vocab tokens = tiny_vocab("token", {"x"});

    SUBCASE("single node with zero weights gives tanh(bias)") {
        TreeBuilder b;
        Ast ast = b.done(b.node("ident", "x"));
        EncoderParams p = tiny_params(4, 1, 1, tokens.size());
        for (double& v : p.conv_top.values) v = 0.0;
        for (double& v : p.conv_left.values) v = 0.0;
        for (double& v : p.conv_right.values) v = 0.0;
        NodeStates in{{ast.root}, Tensor::matrix(1, 4, 0.7)};
        NodeStates out = tbcnn_conv_layer(ast, in, p);
        for (std::size_t j = 0; j < 4; ++j)
            CHECK(out.states.at(0, j) ==
                  doctest::Approx(std::tanh(p.conv_bias.values[j]))
                      .epsilon(1e-15));
    }
    SUBCASE("single child gets eta_l = eta_r = 1/2") {
        TreeBuilder b;
        NodeId leaf = b.node("ident", "x");
        NodeId root = b.node("expr", std::nullopt, {leaf});
        Ast ast = b.done(root);
        Vocab t2 = tiny_vocab("type", {"ident", "expr"});
        AstLayout layout = build_layout(ast, t2, tokens);
        REQUIRE(layout.windows->children[0].size() == 1);
        CHECK(layout.windows->children[0][0].eta_l == 0.5);
        CHECK(layout.windows->children[0][0].eta_r == 0.5);
        // and for m = 3 children: eta_r = 0, 1/2, 1
        TreeBuilder b3;
        NodeId c1 = b3.node("ident", "a");
        NodeId c2 = b3.node("ident", "b");
        NodeId c3 = b3.node("ident", "c");
        NodeId r3 = b3.node("call", "f", {c1, c2, c3});
        Ast ast3 = b3.done(r3);
        Vocab t3 = tiny_vocab("type", {"ident", "call"});
        AstLayout l3 = build_layout(ast3, t3, tokens);
        REQUIRE(l3.windows->children[0].size() == 3);
        CHECK(l3.windows->children[0][0].eta_r == 0.0);
        CHECK(l3.windows->children[0][0].eta_l == 1.0);
        CHECK(l3.windows->children[0][1].eta_r == 0.5);
        CHECK(l3.windows->children[0][2].eta_r == 1.0);
        CHECK(l3.windows->children[0][2].eta_l == 0.0);
    }
    SUBCASE("two children route through the left and right matrices") {
        // m = 2: first child eta_l = 1, eta_r = 0; second child mirrored,
        // so y_root = tanh(b + h_root Wt + h_c1 Wl + h_c2 Wr)
        TreeBuilder b;
        NodeId c1 = b.node("ident", "a");
        NodeId c2 = b.node("ident", "b");
        NodeId root = b.node("binop", "+", {c1, c2});
        Ast ast = b.done(root);
        Vocab t2 = tiny_vocab("type", {"ident", "binop"});
        EncoderParams p = tiny_params(3, 1, t2.size(), tokens.size(), 15, 0.4);
        Tensor h = Tensor::matrix(3, 3, 0.0);
        Rng rng(9);
        for (double& v : h.values) v = rng.uniform(-1, 1);
        NodeStates out =
            tbcnn_conv_layer(ast, NodeStates{{root, c1, c2}, h}, p);
        for (std::size_t j = 0; j < 3; ++j) {
            double pre = p.conv_bias.values[j];
            for (std::size_t u = 0; u < 3; ++u) {
                pre += h.at(0, u) * p.conv_top.at(u, j);
                pre += h.at(1, u) * p.conv_left.at(u, j);
                pre += h.at(2, u) * p.conv_right.at(u, j);
            }
            CHECK(out.states.at(0, j) == doctest::Approx(std::tanh(pre))
                                             .epsilon(1e-14));
        }
        // leaves see only themselves through the top matrix
        for (std::size_t j = 0; j < 3; ++j) {
            double pre = p.conv_bias.values[j];
            for (std::size_t u = 0; u < 3; ++u)
                pre += h.at(1, u) * p.conv_top.at(u, j);
            CHECK(out.states.at(1, j) == doctest::Approx(std::tanh(pre))
                                             .epsilon(1e-14));
        }
    }
    SUBCASE("layer gradient wrt conv weights matches finite differences") {
        Ast ast = five_node_tree();
        Vocab t5 = tiny_vocab("type", {"expr", "ident", "literal", "binop",
                                       "expr_stmt"});
        EncoderParams p = tiny_params(4, 1, t5.size(), tokens.size());
        AstLayout layout = build_layout(ast, t5, tokens);
        Rng rng(77);
        Tensor states0 = Tensor::uniform({5, 4}, -1.0, 1.0, rng);

        GradCheckReport rep = gradient_check(
            [&](Tape& tape, Tape::Id wt) {
                Tensor s = states0;
                s.requires_grad = false;
                Tape::Id states = tape.leaf(s);
                Tensor wl = p.conv_left, wr = p.conv_right, bb = p.conv_bias;
                wl.requires_grad = wr.requires_grad = bb.requires_grad = false;
                Tape::Id y =
                    tape.tree_conv(states, wt, tape.leaf(wl), tape.leaf(wr),
                                   tape.leaf(bb), layout.windows);
                return tape.sum(tape.tanh(y), -1);
            },
            p.conv_top, 1e-5, 1e-4);
        INFO("max rel err " << rep.max_rel_err);
        CHECK(rep.pass);
    }
    SUBCASE("gradient wrt incoming states matches finite differences") {
        Ast ast = five_node_tree();
        Vocab t5 = tiny_vocab("type", {"expr", "ident", "literal", "binop",
                                       "expr_stmt"});
        EncoderParams p = tiny_params(4, 1, t5.size(), tokens.size());
        AstLayout layout = build_layout(ast, t5, tokens);
        Rng rng(78);
        Tensor states0 = Tensor::uniform({5, 4}, -1.0, 1.0, rng);
        GradCheckReport rep = gradient_check(
            [&](Tape& tape, Tape::Id states) {
                auto put = [&](Tensor t) {
                    t.requires_grad = false;
                    return tape.leaf(t);
                };
                Tape::Id y = tape.tree_conv(states, put(p.conv_top),
                                            put(p.conv_left),
                                            put(p.conv_right),
                                            put(p.conv_bias), layout.windows);
                return tape.sum(tape.tanh(y), -1);
            },
            states0, 1e-5, 1e-4);
        INFO("max rel err " << rep.max_rel_err);
        CHECK(rep.pass);
    }
}

TEST_CASE("attention_aggregate") {
    EncoderParams p = tiny_params(3, 1, 1, 1);

    SUBCASE("single node: alpha = [1], v = h1") {
        NodeStates ns{{0}, Tensor::row({0.4, -0.2, 0.9})};
        AttentionResult r = attention_aggregate(ns, p);
        REQUIRE(r.alpha.size() == 1);
        CHECK(r.alpha[0] == 1.0);
        CHECK(r.code_vector.values == ns.states.values);
    }
    SUBCASE("identical states split attention evenly") {
        Tensor h = Tensor::matrix(2, 3, 0.0);
        for (std::size_t j = 0; j < 3; ++j) {
            h.at(0, j) = 0.3 * double(j + 1);
            h.at(1, j) = 0.3 * double(j + 1);
        }
        AttentionResult r = attention_aggregate(NodeStates{{0, 1}, h}, p);
        CHECK(r.alpha[0] == doctest::Approx(0.5).epsilon(1e-12));
        CHECK(r.alpha[1] == doctest::Approx(0.5).epsilon(1e-12));
    }
    SUBCASE("zero attention vector gives uniform weights") {
        EncoderParams zero = p;
        for (double& v : zero.attention.values) v = 0.0;
        Rng rng(5);
        Tensor h = Tensor::uniform({4, 3}, -1.0, 1.0, rng);
        AttentionResult r = attention_aggregate(NodeStates{{0, 1, 2, 3}, h},
                                                zero);
        for (double a : r.alpha)
            CHECK(a == doctest::Approx(0.25).epsilon(1e-12));
    }
}

TEST_CASE("encode properties") {
    auto programs = synthetic_corpus(53, 3);
    std::vector<Ast> corpus = parse_synthetic(programs);
    Vocab types = build_type_vocab(corpus);
    Vocab tokens = build_token_vocab(corpus, 1);
    EncoderParams p = tiny_params(8, 2, types.size(), tokens.size());

    SUBCASE("deterministic") {
        EncodeResult a = encode(corpus[0], p, types, tokens,
                                InitMode::combine, AggregateMode::attention);
        EncodeResult b = encode(corpus[0], p, types, tokens,
                                InitMode::combine, AggregateMode::attention);
        CHECK(a.code_vector.values == b.code_vector.values);
        CHECK(*a.alpha == *b.alpha);
    }
    SUBCASE("alpha is a probability vector") {
        for (const Ast& ast : corpus) {
            EncodeResult r = encode(ast, p, types, tokens, InitMode::combine,
                                    AggregateMode::attention);
            double total = 0.0;
            for (double a : *r.alpha) {
                CHECK(a > 0.0);
                total += a;
            }
            CHECK(std::abs(total - 1.0) <= 1e-9);
        }
    }
    SUBCASE("code vector stays in the per-dimension hull of node states") {
        const Ast& ast = corpus[0];
        NodeStates ns =
            init_node_embeddings(ast, p, types, tokens, InitMode::combine);
        for (int l = 0; l < p.num_conv_layers; ++l)
            ns = tbcnn_conv_layer(ast, ns, p);
        AttentionResult r = attention_aggregate(ns, p);
        for (std::size_t j = 0; j < r.code_vector.numel(); ++j) {
            double lo = 1e18, hi = -1e18;
            for (std::size_t i = 0; i < ns.states.rows(); ++i) {
                lo = std::min(lo, ns.states.at(i, j));
                hi = std::max(hi, ns.states.at(i, j));
            }
            CHECK(r.code_vector.values[j] >= lo - 1e-12);
            CHECK(r.code_vector.values[j] <= hi + 1e-12);
        }
    }
    SUBCASE("type-mode vectors are invariant under identifier renaming") {
        const Ast& ast = corpus[0];
        Ast renamed = permute_identifiers(ast, 4242);
        EncodeResult a = encode(ast, p, types, tokens, InitMode::type,
                                AggregateMode::attention);
        EncodeResult b = encode(renamed, p, types, tokens, InitMode::type,
                                AggregateMode::attention);
        CHECK(a.code_vector.values == b.code_vector.values);
    }
    SUBCASE("internal id numbering does not matter") {
        const Ast& ast = corpus[0];
        Ast shifted = ast;
        shifted.nodes.clear();
        shifted.spans.clear();
        for (const auto& [id, n] : ast.nodes) {
            AstNode copy = n;
            copy.id = id + 1000;
            for (NodeId& c : copy.children) c += 1000;
            shifted.nodes.emplace(copy.id, copy);
        }
        shifted.root = ast.root + 1000;
        validate_ast(shifted);
        EncodeResult a = encode(ast, p, types, tokens, InitMode::combine,
                                AggregateMode::attention);
        EncodeResult b = encode(shifted, p, types, tokens, InitMode::combine,
                                AggregateMode::attention);
        CHECK(a.code_vector.values == b.code_vector.values);
    }
    SUBCASE("max aggregation returns no alpha") {
        EncodeResult r = encode(corpus[0], p, types, tokens, InitMode::combine,
                                AggregateMode::max);
        CHECK_FALSE(r.alpha.has_value());
        CHECK(r.code_vector.finite());
    }
    SUBCASE("ingested trees with alien type labels encode through UNK") {
        std::string doc =
            R"({"source_id":"alien","root":0,"nodes":[
                {"id":0,"type":"translation_unit","token":null,"children":[1,2]},
                {"id":1,"type":"lambda","token":"λ","children":[]},
                {"id":2,"type":"pattern_match","token":null,"children":[]}]})";
        Ast alien = load_ast_json(doc);
        EncodeResult r = encode(alien, p, types, tokens, InitMode::combine,
                                AggregateMode::attention);
        CHECK(r.code_vector.finite());
        CHECK(r.alpha->size() == 3);
    }
}
