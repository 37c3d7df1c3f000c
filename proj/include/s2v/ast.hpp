#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "s2v/util.hpp"

namespace s2v {

using NodeId = int;

// Byte range into the original source text. Only parsed ASTs carry spans;
// ingested ones do not.
struct SourceSpan {
    std::size_t begin = 0;
    std::size_t end = 0;
};

struct AstNode {
    NodeId id = 0;
    std::string type;                  // e.g. "decl_stmt", "binop", "ident"
    std::optional<std::string> token;  // identifier/literal/operator spelling
    std::vector<NodeId> children;
};

// Ordered rooted labeled tree. Immutable by convention once built: every
// mutation-shaped operation returns a fresh Ast.
struct Ast {
    std::string source_id;
    NodeId root = 0;
    std::map<NodeId, AstNode> nodes;
    std::map<NodeId, SourceSpan> spans;  // empty for ingested ASTs

    const AstNode& node(NodeId id) const {
        auto it = nodes.find(id);
        if (it == nodes.end())
            throw DataError("ast " + source_id + ": no node with id " +
                            std::to_string(id));
        return it->second;
    }
    bool has(NodeId id) const { return nodes.count(id) != 0; }
    std::size_t size() const { return nodes.size(); }
};

// Node types with a parser meaning. Open vocabulary for ingested trees; this
// is the fixed MiniLang set.
const std::vector<std::string>& minilang_type_labels();

// Checks every Ast invariant: node table non-empty, root present, children
// reference existing ids, acyclic, every non-root node has exactly one
// parent, ident/literal nodes carry a token and no children.
// Throws DataError with a description of the first violation.
void validate_ast(const Ast& ast);

// Node ids in pre-order (parent before children, children in stored order).
std::vector<NodeId> preorder(const Ast& ast);

// Ids of the subtree rooted at `id`, in pre-order.
std::vector<NodeId> subtree_ids(const Ast& ast, NodeId id);

std::size_t subtree_size(const Ast& ast, NodeId id);

// Parent of every non-root node.
std::map<NodeId, NodeId> parent_map(const Ast& ast);

// Returns a copy of `ast` with the subtree rooted at `id` removed from its
// parent's child list. Errors: `id` absent or `id` is the root.
Ast delete_component(const Ast& ast, NodeId id);

// Shape equality ignoring node ids: same types, tokens and child structure.
bool structurally_equal(const Ast& a, const Ast& b);

// Copy with every `ident` token rewritten through `rename`.
Ast rename_identifiers(const Ast& ast,
                       const std::function<std::string(const std::string&)>& rename);

}  // namespace s2v
