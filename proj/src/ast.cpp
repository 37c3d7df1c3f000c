#include "s2v/ast.hpp"

#include <algorithm>

namespace s2v {

const std::vector<std::string>& minilang_type_labels() {
    static const std::vector<std::string> labels = {
        "program", "function", "block", "decl_stmt", "expr_stmt", "expr",
        "condition", "if", "while", "for", "return", "binop", "unaryop",
        "index", "call", "ident", "literal", "type_name"};
    return labels;
}

void validate_ast(const Ast& ast) {
    if (ast.nodes.empty())
        throw DataError("ast " + ast.source_id + ": empty node table");
    if (!ast.has(ast.root))
        throw DataError("ast " + ast.source_id + ": root id " +
                        std::to_string(ast.root) + " not in node table");
    std::map<NodeId, int> parent_count;
    for (const auto& [id, n] : ast.nodes) {
        if (id < 0)
            throw DataError("ast " + ast.source_id + ": negative node id");
        if (n.id != id)
            throw DataError("ast " + ast.source_id + ": node keyed as " +
                            std::to_string(id) + " but carries id " +
                            std::to_string(n.id));
        for (NodeId c : n.children) {
            if (!ast.has(c))
                throw DataError("ast " + ast.source_id +
                                ": dangling child reference " +
                                std::to_string(c) + " from node " +
                                std::to_string(id));
            parent_count[c] += 1;
        }
        if (n.type == "ident" || n.type == "literal") {
            if (!n.token)
                throw DataError("ast " + ast.source_id + ": " + n.type +
                                " node " + std::to_string(id) +
                                " has no token");
            if (!n.children.empty())
                throw DataError("ast " + ast.source_id + ": " + n.type +
                                " node " + std::to_string(id) +
                                " has children");
        }
    }
    if (parent_count.count(ast.root))
        throw DataError("ast " + ast.source_id +
                        ": root is referenced as a child");
    for (const auto& [id, n] : ast.nodes) {
        if (id == ast.root) continue;
        auto it = parent_count.find(id);
        if (it == parent_count.end())
            throw DataError("ast " + ast.source_id + ": node " +
                            std::to_string(id) +
                            " is unreachable (multiple roots?)");
        if (it->second > 1)
            throw DataError("ast " + ast.source_id + ": node " +
                            std::to_string(id) + " has multiple parents");
    }
    // Single-parent everywhere plus a reachable-from-somewhere check makes
    // the child relation a forest; one root means it is a tree, hence acyclic.
    if (preorder(ast).size() != ast.nodes.size())
        throw DataError("ast " + ast.source_id +
                        ": node table contains a cycle or detached nodes");
}

static void preorder_into(const Ast& ast, NodeId id, std::vector<NodeId>& out,
                          std::size_t guard) {
    if (out.size() > guard)
        throw DataError("ast " + ast.source_id + ": cycle detected");
    out.push_back(id);
    for (NodeId c : ast.node(id).children) preorder_into(ast, c, out, guard);
}

std::vector<NodeId> preorder(const Ast& ast) {
    std::vector<NodeId> out;
    out.reserve(ast.nodes.size());
    preorder_into(ast, ast.root, out, ast.nodes.size());
    return out;
}

std::vector<NodeId> subtree_ids(const Ast& ast, NodeId id) {
    std::vector<NodeId> out;
    preorder_into(ast, id, out, ast.nodes.size());
    return out;
}

std::size_t subtree_size(const Ast& ast, NodeId id) {
    return subtree_ids(ast, id).size();
}

std::map<NodeId, NodeId> parent_map(const Ast& ast) {
    std::map<NodeId, NodeId> parents;
    for (const auto& [id, n] : ast.nodes)
        for (NodeId c : n.children) parents[c] = id;
    return parents;
}

Ast delete_component(const Ast& ast, NodeId id) {
    if (!ast.has(id))
        throw DataError("delete_component: no node with id " +
                        std::to_string(id));
    if (id == ast.root)
        throw DataError("delete_component: cannot delete the root");
    auto doomed = subtree_ids(ast, id);
    Ast out;
    out.source_id = ast.source_id;
    out.root = ast.root;
    for (const auto& [nid, n] : ast.nodes) {
        if (std::find(doomed.begin(), doomed.end(), nid) != doomed.end())
            continue;
        AstNode copy = n;
        copy.children.erase(
            std::remove(copy.children.begin(), copy.children.end(), id),
            copy.children.end());
        out.nodes.emplace(nid, std::move(copy));
        auto sp = ast.spans.find(nid);
        if (sp != ast.spans.end()) out.spans.emplace(nid, sp->second);
    }
    return out;
}

static bool nodes_equal(const Ast& a, NodeId ia, const Ast& b, NodeId ib) {
    const AstNode& na = a.node(ia);
    const AstNode& nb = b.node(ib);
    if (na.type != nb.type || na.token != nb.token) return false;
    if (na.children.size() != nb.children.size()) return false;
    for (std::size_t i = 0; i < na.children.size(); ++i)
        if (!nodes_equal(a, na.children[i], b, nb.children[i])) return false;
    return true;
}

bool structurally_equal(const Ast& a, const Ast& b) {
    if (a.nodes.size() != b.nodes.size()) return false;
    return nodes_equal(a, a.root, b, b.root);
}

Ast rename_identifiers(
    const Ast& ast,
    const std::function<std::string(const std::string&)>& rename) {
    Ast out = ast;
    for (auto& [id, n] : out.nodes)
        if (n.type == "ident" && n.token) n.token = rename(*n.token);
    return out;
}

}  // namespace s2v
