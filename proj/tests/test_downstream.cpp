#include <doctest.h>

#include <cmath>
#include <set>

#include "s2v/corpus.hpp"
#include "s2v/downstream.hpp"
#include "support.hpp"

using namespace s2v;

TEST_CASE("kmeans") {
    SUBCASE("two far-apart pairs separate at k = 2") {
        std::vector<double> pts = {0.0, 0.1, 0.1, 0.0,
                                   10.0, 10.1, 10.1, 10.0};
        auto a = kmeans_points(pts, 4, 2, 2, 42);
        CHECK(a[0] == a[1]);
        CHECK(a[2] == a[3]);
        CHECK(a[0] != a[2]);
    }
    SUBCASE("k = n puts every point in its own cluster") {
        std::vector<double> pts = {0.0, 1.0, 2.0, 5.0};
        auto a = kmeans_points(pts, 4, 1, 4, 7);
        std::set<int> distinct(a.begin(), a.end());
        CHECK(distinct.size() == 4);
    }
    SUBCASE("duplicate points land together") {
        std::vector<double> pts = {1.0, 1.0, 1.0, 9.0, 9.0, 9.0};
        auto a = kmeans_points(pts, 6, 1, 2, 3);
        CHECK(a[0] == a[1]);
        CHECK(a[1] == a[2]);
        CHECK(a[3] == a[4]);
        CHECK(a[4] == a[5]);
    }
    SUBCASE("k out of range") {
        std::vector<double> pts = {0.0, 1.0};
        CHECK_THROWS_AS(kmeans_points(pts, 2, 1, 3, 1), DataError);
        CHECK_THROWS_AS(kmeans_points(pts, 2, 1, 0, 1), UsageError);
    }
    SUBCASE("seeded runs are reproducible") {
        Rng rng(5);
        std::vector<double> pts;
        for (int i = 0; i < 60; ++i) pts.push_back(rng.uniform(-5, 5));
        auto a = kmeans_points(pts, 30, 2, 4, 11);
        auto b = kmeans_points(pts, 30, 2, 4, 11);
        CHECK(a == b);
    }
}

TEST_CASE("adjusted rand index") {
    SUBCASE("identical partitions score exactly 1") {
        std::vector<int> a = {0, 0, 1, 1, 2};
        CHECK(adjusted_rand_index(a, a) == 1.0);
    }
    SUBCASE("renaming cluster labels does not matter") {
        std::vector<int> a = {0, 0, 1, 1, 2, 2};
        std::vector<int> b = {5, 5, 9, 9, 1, 1};
        CHECK(adjusted_rand_index(a, b) == 1.0);
    }
    SUBCASE("the 4-element counterexample scores -0.5") {
        std::vector<int> truth = {1, 1, 2, 2};
        std::vector<int> pred = {1, 2, 1, 2};
        CHECK(adjusted_rand_index(pred, truth) == doctest::Approx(-0.5));
    }
    SUBCASE("errors") {
        std::vector<int> a = {0, 1};
        std::vector<int> b = {0};
        CHECK_THROWS_AS(adjusted_rand_index(a, b), DataError);
        std::vector<int> one = {0};
        CHECK_THROWS_AS(adjusted_rand_index(one, one), DataError);
    }
    SUBCASE("random labelings hover near zero") {
        Rng rng(123);
        std::vector<int> truth(40);
        for (std::size_t i = 0; i < truth.size(); ++i)
            truth[i] = int(i % 4);
        double mean = 0.0;
        int trials = 300;
        for (int t = 0; t < trials; ++t) {
            std::vector<int> pred(truth.size());
            for (auto& p : pred) p = int(rng.index(4));
            mean += adjusted_rand_index(pred, truth);
        }
        mean /= trials;
        CHECK(std::abs(mean) < 0.05);
    }
}

TEST_CASE("cosine similarity and clone detection") {
    std::vector<double> v = {0.3, -0.8, 0.5};
    SUBCASE("self-similarity is exactly 1") {
        CHECK(cosine_similarity(v, v) == 1.0);
    }
    SUBCASE("negation flips the sign") {
        std::vector<double> neg = {-0.3, 0.8, -0.5};
        CHECK(cosine_similarity(v, neg) == doctest::Approx(-1.0));
    }
    SUBCASE("scaling is invisible") {
        std::vector<double> scaled = {0.9, -2.4, 1.5};
        CHECK(cosine_similarity(v, scaled) ==
              doctest::Approx(1.0).epsilon(1e-12));
    }
    SUBCASE("zero vectors are an error") {
        std::vector<double> zero = {0.0, 0.0, 0.0};
        CHECK_THROWS_AS(cosine_similarity(v, zero), DataError);
        CHECK_THROWS_AS(detect_clone(zero, v), DataError);
    }
    SUBCASE("clone threshold semantics") {
        std::vector<double> x = {1.0, 0.0};
        std::vector<double> y = {0.0, 1.0};
        CHECK(detect_clone(x, x, 0.8));
        CHECK_FALSE(detect_clone(x, y, 0.8));
        CHECK(detect_clone(x, y, -1.0));  // everything is a clone at -1
    }
    SUBCASE("symmetry and per-argument scale invariance") {
        Rng rng(17);
        for (int t = 0; t < 50; ++t) {
            std::vector<double> a(4), b(4);
            for (auto& x : a) x = rng.uniform(-2, 2);
            for (auto& x : b) x = rng.uniform(-2, 2);
            double ab = cosine_similarity(a, b);
            double ba = cosine_similarity(b, a);
            CHECK(ab == doctest::Approx(ba).epsilon(1e-12));
            std::vector<double> a3 = a;
            for (auto& x : a3) x *= 3.0;
            CHECK(detect_clone(a, b, 0.2) == detect_clone(a3, b, 0.2));
        }
    }
}

TEST_CASE("clone metrics") {
    using P = std::pair<bool, bool>;
    SUBCASE("all correct") {
        std::vector<P> pairs = {{true, true}, {false, false}, {true, true}};
        Prf m = clone_metrics(pairs);
        CHECK(m.precision == 1.0);
        CHECK(m.recall == 1.0);
        CHECK(m.f1 == 1.0);
    }
    SUBCASE("no predicted positives") {
        std::vector<P> pairs = {{false, true}, {false, false}};
        Prf m = clone_metrics(pairs);
        CHECK(m.precision == 0.0);
        CHECK(m.recall == 0.0);
        CHECK(m.f1 == 0.0);
    }
    SUBCASE("one of each") {
        std::vector<P> pairs = {{true, true}, {true, false}, {false, true}};
        Prf m = clone_metrics(pairs);
        CHECK(m.precision == doctest::Approx(0.5));
        CHECK(m.recall == doctest::Approx(0.5));
        CHECK(m.f1 == doctest::Approx(0.5));
    }
    SUBCASE("harmonic mean never exceeds the arithmetic mean") {
        Rng rng(31);
        for (int t = 0; t < 100; ++t) {
            std::vector<P> pairs;
            for (int i = 0; i < 12; ++i)
                pairs.emplace_back(rng.index(2) == 0, rng.index(2) == 0);
            Prf m = clone_metrics(pairs);
            CHECK(m.f1 <= (m.precision + m.recall) / 2.0 + 1e-12);
            CHECK(m.f1 >= 0.0);
            CHECK(m.precision <= 1.0);
            CHECK(m.recall <= 1.0);
        }
    }
}

TEST_CASE("search and MRR") {
    EmbeddingIndex index;
    index.add({"java_sort", "java", "sort", {1.0, 0.0, 0.0}});
    index.add({"cpp_sort", "cpp", "sort", {0.9, 0.1, 0.0}});
    index.add({"cpp_tree", "cpp", "tree", {0.0, 1.0, 0.0}});
    index.add({"c_hash", "c", "hash", {0.0, 0.0, 1.0}});

    SUBCASE("an exact match ranks first") {
        auto hits = search(std::vector<double>{1.0, 0.0, 0.0}, index, 2);
        REQUIRE(hits.size() == 2);
        CHECK(hits[0].source_id == "java_sort");
        CHECK(hits[0].score == 1.0);
        CHECK(hits[1].source_id == "cpp_sort");
    }
    SUBCASE("K beyond the index returns everything ordered") {
        auto hits = search(std::vector<double>{1.0, 0.0, 0.0}, index, 10);
        CHECK(hits.size() == 4);
        for (std::size_t i = 1; i < hits.size(); ++i)
            CHECK(hits[i - 1].score >= hits[i].score);
    }
    SUBCASE("language exclusion removes all candidates of that tag") {
        auto hits =
            search(std::vector<double>{1.0, 0.0, 0.0}, index, 10, "cpp");
        CHECK(hits.size() == 2);
        for (const auto& h : hits) CHECK(h.source_id.substr(0, 3) != "cpp");
    }
    SUBCASE("empty index after filtering") {
        EmbeddingIndex solo;
        solo.add({"only", "cpp", "", {1.0}});
        CHECK_THROWS_AS(
            search(std::vector<double>{1.0}, solo, 3, "cpp"), DataError);
    }
    SUBCASE("ties break by source_id and runs are stable") {
        EmbeddingIndex tied;
        tied.add({"bbb", "x", "", {1.0, 0.0}});
        tied.add({"aaa", "x", "", {1.0, 0.0}});
        auto hits = search(std::vector<double>{1.0, 0.0}, tied, 2);
        CHECK(hits[0].source_id == "aaa");
        auto again = search(std::vector<double>{1.0, 0.0}, tied, 2);
        CHECK(again[0].source_id == "aaa");
    }
    SUBCASE("mean reciprocal rank") {
        using Q = std::pair<std::vector<std::string>, std::string>;
        std::vector<Q> perfect = {{{"a", "b"}, "a"}, {{"c", "d"}, "c"}};
        CHECK(mean_reciprocal_rank(perfect) == 1.0);
        std::vector<Q> mixed = {{{"a", "b"}, "a"}, {{"c", "d"}, "d"}};
        CHECK(mean_reciprocal_rank(mixed) == doctest::Approx(0.75));
        std::vector<Q> absent = {{{"a"}, "z"}, {{"b"}, "q"}};
        CHECK(mean_reciprocal_rank(absent) == 0.0);
    }
}

TEST_CASE("embedding index TSV round-trips") {
    EmbeddingIndex index;
    Rng rng(3);
    for (int i = 0; i < 8; ++i) {
        IndexEntry e;
        e.source_id = "snip_" + std::to_string(i);
        e.language = i % 2 ? "java" : "cpp";
        e.task_id = i % 3 ? "" : "task" + std::to_string(i);
        for (int j = 0; j < 5; ++j) e.vec.push_back(rng.uniform(-2, 2));
        index.add(e);
    }
    std::string tsv = index_to_tsv(index);
    EmbeddingIndex back = index_from_tsv(tsv);
    REQUIRE(back.entries.size() == index.entries.size());
    for (std::size_t i = 0; i < back.entries.size(); ++i) {
        CHECK(back.entries[i].source_id == index.entries[i].source_id);
        CHECK(back.entries[i].language == index.entries[i].language);
        CHECK(back.entries[i].task_id == index.entries[i].task_id);
        CHECK(back.entries[i].vec == index.entries[i].vec);  // bit-exact
    }
    CHECK_THROWS_AS(index_from_tsv("one\tcolumn"), DataError);
    EmbeddingIndex dup;
    dup.add({"same", "x", "", {1.0}});
    CHECK_THROWS_AS(dup.add({"same", "x", "", {2.0}}), DataError);
}

TEST_CASE("subword scores reproduce the worked examples") {
    SUBCASE("word-order variation is an exact match") {
        Prf m = subword_f1("result_compute", "computeResult");
        CHECK(m.precision == 1.0);
        CHECK(m.recall == 1.0);
        CHECK(m.f1 == 1.0);
    }
    SUBCASE("missing half the name keeps precision, halves recall") {
        Prf m = subword_f1("compute", "computeResult");
        CHECK(m.precision == 1.0);
        CHECK(m.recall == doctest::Approx(0.5));
    }
    SUBCASE("an extra sub-token keeps recall, costs precision") {
        Prf m = subword_f1("compute_model_result", "computeResult");
        CHECK(m.recall == 1.0);
        CHECK(m.precision == doctest::Approx(2.0 / 3.0));
    }
    SUBCASE("empty names are errors") {
        CHECK_THROWS_AS(subword_f1("", "name"), DataError);
        CHECK_THROWS_AS(subword_f1("name", "___"), DataError);
    }
}

TEST_CASE("method-name lookup") {
    SUBCASE("single-entry table predicts that name") {
        std::vector<std::pair<std::string, std::vector<double>>> table = {
            {"onlyName", {0.5, 0.5}}};
        auto ranked = predict_method_name(std::vector<double>{1.0, 0.0}, table);
        REQUIRE(ranked.size() == 1);
        CHECK(ranked[0].first == "onlyName");
        CHECK(ranked[0].second == 1.0);
    }
    SUBCASE("aligned embedding wins") {
        std::vector<std::pair<std::string, std::vector<double>>> table = {
            {"matchMe", {2.0, 0.0}},
            {"ortho", {0.0, 0.5}},
            {"anti", {-1.0, 0.0}}};
        auto ranked = predict_method_name(std::vector<double>{1.0, 0.0}, table);
        CHECK(ranked[0].first == "matchMe");
        auto again = predict_method_name(std::vector<double>{1.0, 0.0}, table);
        CHECK(again[0].first == ranked[0].first);
    }
    SUBCASE("empty table is an error") {
        std::vector<std::pair<std::string, std::vector<double>>> table;
        CHECK_THROWS_AS(predict_method_name(std::vector<double>{1.0}, table),
                        DataError);
    }
}

TEST_CASE("finetune samples stratified fractions") {
    // 100 labeled examples, 2 classes: fraction 0.01 targets a single
    // example, which cannot cover both classes
    auto programs = discriminative_corpus(101, 50);
    LabeledCorpus corpus = labeled_synthetic(programs);
    std::vector<Ast> asts = corpus.asts;
    Vocab types = build_type_vocab(asts);
    Vocab tokens = build_token_vocab(asts, 2);
    Vocab labels = build_subtree_vocab(asts, 2);
    TrainConfig cfg;
    cfg.dim = 8;
    cfg.epochs = 1;
    cfg.seed = 2;
    Model base = train(asts, types, tokens, labels, cfg);

    FinetuneConfig fcfg;
    fcfg.fraction = 0.01;
    fcfg.test_fraction = 0.0;
    fcfg.epochs = 1;
    CHECK_THROWS_WITH_AS(finetune(base, corpus, fcfg),
                         doctest::Contains("absent"), DataError);

    fcfg.fraction = 1.0;
    fcfg.test_fraction = 0.3;
    fcfg.epochs = 2;
    FinetuneReport rep;
    Classifier cls = finetune(base, corpus, fcfg, TaskKind::classification,
                              &rep);
    CHECK(rep.train_count + rep.test_count == corpus.asts.size());
    CHECK(rep.test_count > 0);
    auto probs = classifier_probs(cls, corpus.asts[0]);
    CHECK(probs.size() == 2);
    double total = 0.0;
    for (double p : probs) total += p;
    CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("full-fraction finetuning separates two separable classes") {
    auto programs = discriminative_corpus(606, 20);
    LabeledCorpus corpus = labeled_synthetic(programs);
    Vocab types = build_type_vocab(corpus.asts);
    Vocab tokens = build_token_vocab(corpus.asts, 2);
    Vocab labels = build_subtree_vocab(corpus.asts, 2);
    TrainConfig cfg;
    cfg.dim = 16;
    cfg.epochs = 5;
    cfg.seed = 3;
    Model base = train(corpus.asts, types, tokens, labels, cfg);
    FinetuneConfig fcfg;
    fcfg.fraction = 1.0;
    fcfg.epochs = 30;
    fcfg.learning_rate = 0.01;
    fcfg.seed = 4;
    FinetuneReport rep;
    finetune(base, corpus, fcfg, TaskKind::classification, &rep);
    CHECK(rep.test_accuracy == 1.0);
}
