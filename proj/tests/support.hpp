#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "s2v/ast.hpp"
#include "s2v/util.hpp"

namespace s2v::testing {

// Compact AST builder: nodes are appended with explicit child lists.
struct TreeBuilder {
    Ast ast;
    NodeId next = 0;

    explicit TreeBuilder(const std::string& source_id = "test") {
        ast.source_id = source_id;
    }

    NodeId node(const std::string& type,
                std::optional<std::string> token = std::nullopt,
                std::vector<NodeId> children = {}) {
        AstNode n;
        n.id = next++;
        n.type = type;
        n.token = std::move(token);
        n.children = std::move(children);
        ast.nodes.emplace(n.id, n);
        return n.id;
    }

    Ast done(NodeId root) {
        ast.root = root;
        validate_ast(ast);
        return ast;
    }
};

// Random valid AST over the MiniLang label set; leaves are ident/literal
// with tokens, inner nodes draw from the container types.
inline Ast random_tree(Rng& rng, std::size_t max_nodes,
                       const std::string& source_id = "random") {
    static const std::vector<std::string> inner = {
        "program", "block",     "decl_stmt", "expr_stmt", "expr",
        "condition", "if",      "while",     "for",       "return",
        "binop",     "unaryop", "index",     "call"};
    static const std::vector<std::string> leaves = {"ident", "literal",
                                                    "type_name"};
    TreeBuilder b(source_id);
    std::size_t budget = 1 + rng.index(max_nodes);
    std::function<NodeId(std::size_t&)> grow =
        [&](std::size_t& left) -> NodeId {
        std::size_t kids =
            left == 0 ? 0 : rng.index(std::min<std::size_t>(left, 4) + 1);
        if (kids == 0) {
            const std::string& type = leaves[rng.index(leaves.size())];
            return b.node(type, "tok" + std::to_string(rng.index(5)));
        }
        std::vector<NodeId> children;
        for (std::size_t i = 0; i < kids; ++i) {
            left -= left > 0 ? 1 : 0;
            children.push_back(grow(left));
        }
        const std::string& type = inner[rng.index(inner.size())];
        return b.node(type, std::nullopt, std::move(children));
    };
    std::size_t left = budget;
    NodeId root = grow(left);
    return b.done(root);
}

}  // namespace s2v::testing
