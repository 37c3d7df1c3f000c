#include <doctest.h>

#include <cmath>

#include "s2v/corpus.hpp"
#include "s2v/interpret.hpp"
#include "s2v/minilang.hpp"
#include "support.hpp"

using namespace s2v;

namespace {

// a tiny trained classifier over the two-class discriminative corpus
Classifier make_classifier() {
    auto programs = discriminative_corpus(301, 12);
    LabeledCorpus corpus = labeled_synthetic(programs);
    Vocab types = build_type_vocab(corpus.asts);
    Vocab tokens = build_token_vocab(corpus.asts, 2);
    Vocab labels = build_subtree_vocab(corpus.asts, 2);
    TrainConfig cfg;
    cfg.dim = 12;
    cfg.epochs = 3;
    cfg.seed = 4;
    Model base = train(corpus.asts, types, tokens, labels, cfg);
    FinetuneConfig fcfg;
    fcfg.epochs = 6;
    fcfg.seed = 5;
    return finetune(base, corpus, fcfg);
}

}  // namespace

TEST_CASE("display scores are max-normalized") {
    SUBCASE("single node") {
        auto scores = node_attention_scores(std::vector<double>{1.0});
        CHECK(scores == std::vector<double>{1.0});
    }
    SUBCASE("uniform alpha maps to all ones") {
        auto scores =
            node_attention_scores(std::vector<double>{0.25, 0.25, 0.25, 0.25});
        for (double s : scores) CHECK(s == 1.0);
    }
    SUBCASE("a 2:1 ratio keeps the ratio") {
        auto scores = node_attention_scores(std::vector<double>{0.5, 0.25,
                                                                0.25});
        CHECK(scores[0] == 1.0);
        CHECK(scores[1] == doctest::Approx(0.5));
        CHECK(scores[2] == doctest::Approx(0.5));
    }
}

TEST_CASE("perturb_all enumerates deletable components") {
    SUBCASE("counts match qualifying non-root nodes") {
        Ast ast = parse_minilang(
            "int a = 1; if (a > 0) { a = 2; } while (a > 0) { a = a - 1; }",
            "t");
        std::size_t expect = 0;
        for (const auto& [id, n] : ast.nodes)
            if (id != ast.root && is_deletable_component(n.type)) ++expect;
        auto perturbed = perturb_all(ast);
        CHECK(perturbed.size() == expect);
        for (const auto& [id, cut] : perturbed) {
            CHECK(cut.size() < ast.size());
            validate_ast(cut);
        }
    }
    SUBCASE("no qualifying components yields an empty list") {
        testing::TreeBuilder b;
        NodeId leaf = b.node("ident", "x");
        NodeId root = b.node("binop", "+", {leaf, b.node("literal", "1")});
        Ast ast = b.done(root);
        CHECK(perturb_all(ast).empty());
    }
}

TEST_CASE("spearman correlation") {
    auto rec = [](double delta, double mass) {
        PerturbationRecord r;
        r.delta = delta;
        r.attention_mass = mass;
        return r;
    };
    SUBCASE("monotone agreement") {
        std::vector<PerturbationRecord> rs = {rec(1, 10), rec(2, 20),
                                              rec(3, 30)};
        Correlation c = delta_attention_correlation(rs);
        CHECK(c.defined);
        CHECK(c.value == doctest::Approx(1.0));
    }
    SUBCASE("monotone disagreement") {
        std::vector<PerturbationRecord> rs = {rec(1, 3), rec(2, 2), rec(3, 1)};
        Correlation c = delta_attention_correlation(rs);
        CHECK(c.value == doctest::Approx(-1.0));
    }
    SUBCASE("hand-computed 0.6") {
        std::vector<PerturbationRecord> rs = {rec(1, 2), rec(2, 1), rec(3, 4),
                                              rec(4, 3)};
        Correlation c = delta_attention_correlation(rs);
        CHECK(c.value == doctest::Approx(0.6));
    }
    SUBCASE("fewer than 3 records is an error") {
        std::vector<PerturbationRecord> rs = {rec(1, 2), rec(2, 1)};
        CHECK_THROWS_AS(delta_attention_correlation(rs), DataError);
    }
    SUBCASE("constant side is undefined, not zero") {
        std::vector<PerturbationRecord> rs = {rec(1, 5), rec(2, 5), rec(3, 5)};
        Correlation c = delta_attention_correlation(rs);
        CHECK_FALSE(c.defined);
    }
}

TEST_CASE("confidence deltas and explanation reports") {
    Classifier cls = make_classifier();
    auto programs = discriminative_corpus(999, 2);
    Ast ast = parse_minilang(programs[2].source, programs[2].source_id);
    int looped_class = 0;
    for (std::size_t i = 0; i < cls.classes.size(); ++i)
        if (cls.classes[i] == "looped") looped_class = int(i);

    SUBCASE("identical programs have delta exactly 0") {
        CHECK(confidence_delta(cls, ast, ast, 0) == 0.0);
    }
    SUBCASE("deltas stay within [-1, 1]") {
        for (const auto& [id, cut] : perturb_all(ast)) {
            double d = confidence_delta(cls, ast, cut, looped_class);
            CHECK(d >= -1.0);
            CHECK(d <= 1.0);
        }
    }
    SUBCASE("class index out of range") {
        CHECK_THROWS_AS(confidence_delta(cls, ast, ast, 17), DataError);
    }
    SUBCASE("deleting the class-discriminative statement drops confidence") {
        // the while statement is the only thing separating the two classes
        REQUIRE(programs[2].label == "looped");
        NodeId while_node = -1;
        for (const auto& [id, n] : ast.nodes)
            if (n.type == "while") while_node = id;
        REQUIRE(while_node >= 0);
        Ast cut = delete_component(ast, while_node);
        CHECK(confidence_delta(cls, ast, cut, looped_class) > 0.0);
    }
    SUBCASE("explanation report structure") {
        ExplanationReport rep = explain(cls, ast, looped_class);
        CHECK(rep.source_id == ast.source_id);
        CHECK_FALSE(rep.records.empty());
        // one record per deletable component
        CHECK(rep.records.size() == perturb_all(ast).size());
        // display scores are max-normalized: at least one exact 1.0
        bool has_one = false;
        for (const auto& [id, s] : rep.display_scores) {
            CHECK(s >= 0.0);
            CHECK(s <= 1.0);
            if (s == 1.0) has_one = true;
        }
        CHECK(has_one);
        // records sorted by node id
        for (std::size_t i = 1; i < rep.records.size(); ++i)
            CHECK(rep.records[i - 1].node_id < rep.records[i].node_id);
        // attention masses lie in [0, 1]
        for (const auto& r : rep.records) {
            CHECK(r.attention_mass >= 0.0);
            CHECK(r.attention_mass <= 1.0 + 1e-12);
        }
        std::string json = report_to_json(rep);
        CHECK(json.find("\"spearman\"") != std::string::npos);
        CHECK(json.find(ast.source_id) != std::string::npos);
    }
    SUBCASE("raw alpha sums to one") {
        auto scores = node_attention_scores(ast, cls.model);
        CHECK(scores.size() == ast.size());
        EncodeResult enc = cls.model.encode_ast(ast);
        double total = 0.0;
        for (double a : *enc.alpha) total += a;
        CHECK(std::abs(total - 1.0) <= 1e-9);
    }
}

TEST_CASE("heat rendering") {
    Ast ast = parse_minilang("int a = 1;\nif (a > 0) { a = 2; }\n", "t");
    std::map<NodeId, double> scores;
    for (const auto& [id, n] : ast.nodes) scores[id] = 0.0;

    SUBCASE("equal scores render one shade") {
        for (auto& [id, s] : scores) s = 0.9;
        std::string src = "int a = 1;\nif (a > 0) { a = 2; }\n";
        std::string text = render_heat_text(ast, scores, &src);
        CHECK(text.find("█") != std::string::npos);  // darkest bucket
        CHECK(text.find("░") == std::string::npos);
    }
    SUBCASE("bucket boundaries") {
        // 1.0 -> darkest, 0.0 -> blank
        for (auto& [id, s] : scores) s = 0.0;
        scores[ast.root] = 0.0;
        std::string tree = render_heat_text(ast, scores, nullptr);
        CHECK(tree.find("█") == std::string::npos);
        for (auto& [id, s] : scores) s = 1.0;
        std::string dark = render_heat_text(ast, scores, nullptr);
        CHECK(dark.find("█") != std::string::npos);
    }
    SUBCASE("deterministic output") {
        for (auto& [id, s] : scores) s = 0.5;
        CHECK(render_heat_text(ast, scores, nullptr) ==
              render_heat_text(ast, scores, nullptr));
        CHECK(render_heat_svg(ast, scores) == render_heat_svg(ast, scores));
    }
    SUBCASE("misaligned scores are rejected") {
        std::map<NodeId, double> bad = {{999, 1.0}};
        CHECK_THROWS_AS(render_heat_text(ast, bad, nullptr), DataError);
    }
    SUBCASE("svg carries grayscale fills") {
        for (auto& [id, s] : scores) s = 1.0;
        std::string svg = render_heat_svg(ast, scores);
        CHECK(svg.find("<svg") != std::string::npos);
        CHECK(svg.find("rgb(0,0,0)") != std::string::npos);
    }
}
