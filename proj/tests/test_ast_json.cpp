#include <doctest.h>

#include "s2v/ast_json.hpp"
#include "s2v/minilang.hpp"
#include "support.hpp"

using namespace s2v;

TEST_CASE("single-node document") {
    std::string doc =
        R"({"source_id":"s","root":0,"nodes":[{"id":0,"type":"ident","token":"x","children":[]}]})";
    Ast ast = load_ast_json(doc);
    CHECK(ast.size() == 1);
    CHECK(ast.node(0).token == "x");
}

TEST_CASE("malformed documents are rejected") {
    SUBCASE("dangling child reference") {
        std::string doc =
            R"({"source_id":"s","root":0,"nodes":[{"id":0,"type":"block","token":null,"children":[7]}]})";
        CHECK_THROWS_WITH_AS(load_ast_json(doc),
                             doctest::Contains("dangling"), DataError);
    }
    SUBCASE("duplicate ids") {
        std::string doc =
            R"({"source_id":"s","root":0,"nodes":[
                {"id":0,"type":"block","token":null,"children":[]},
                {"id":0,"type":"block","token":null,"children":[]}]})";
        CHECK_THROWS_WITH_AS(load_ast_json(doc),
                             doctest::Contains("duplicate"), DataError);
    }
    SUBCASE("multiple roots") {
        std::string doc =
            R"({"source_id":"s","root":0,"nodes":[
                {"id":0,"type":"block","token":null,"children":[]},
                {"id":1,"type":"block","token":null,"children":[]}]})";
        CHECK_THROWS_AS(load_ast_json(doc), DataError);
    }
    SUBCASE("not json at all") {
        CHECK_THROWS_AS(load_ast_json("not json"), DataError);
    }
    SUBCASE("missing fields") {
        CHECK_THROWS_AS(load_ast_json(R"({"root":0})"), DataError);
    }
}

TEST_CASE("unknown type labels are accepted verbatim") {
    std::string doc =
        R"({"source_id":"s","root":0,"nodes":[
            {"id":0,"type":"lambda_capture_group","token":null,"children":[1]},
            {"id":1,"type":"weird_leaf","token":"w","children":[]}]})";
    Ast ast = load_ast_json(doc);
    CHECK(ast.node(0).type == "lambda_capture_group");
}

TEST_CASE("round-trip and canonical form") {
    SUBCASE("load(save(a)) structurally equal, property over random trees") {
        Rng rng(5);
        for (int trial = 0; trial < 50; ++trial) {
            Ast ast = testing::random_tree(rng, 40);
            Ast back = load_ast_json(save_ast_json(ast));
            CHECK(structurally_equal(ast, back));
            CHECK(back.source_id == ast.source_id);
        }
    }
    SUBCASE("save(load(b)) is canonical re-serialization") {
        // keys out of order, extra whitespace
        std::string doc =
            R"({"nodes":[{"children":[],"token":"x","type":"ident","id":0}],
                "root":0, "source_id":"s"})";
        Ast ast = load_ast_json(doc);
        std::string canon = save_ast_json(ast);
        CHECK(save_ast_json(load_ast_json(canon)) == canon);
    }
    SUBCASE("construction order does not change the bytes") {
        testing::TreeBuilder b1;
        NodeId x1 = b1.node("ident", "x");
        NodeId r1 = b1.node("expr", std::nullopt, {x1});
        Ast t1 = b1.done(r1);

        Ast t2;  // same ids inserted in reverse
        t2.source_id = "test";
        AstNode root;
        root.id = 1;
        root.type = "expr";
        root.children = {0};
        AstNode leaf;
        leaf.id = 0;
        leaf.type = "ident";
        leaf.token = "x";
        t2.root = 1;
        t2.nodes.emplace(1, root);
        t2.nodes.emplace(0, leaf);
        validate_ast(t2);
        CHECK(save_ast_json(t1) == save_ast_json(t2));
    }
    SUBCASE("parsed programs survive the interchange format") {
        Ast ast = parse_minilang("int f(int a) { return a * 2; }", "prog");
        Ast back = load_ast_json(save_ast_json(ast));
        CHECK(structurally_equal(ast, back));
    }
}
