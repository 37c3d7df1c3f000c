#pragma once

#include <string>
#include <vector>

#include "s2v/ast.hpp"

namespace s2v {

// A pseudo-label occurrence: a subtree rooted at a selected node.
struct SubtreeRef {
    std::string source_id;
    NodeId root = 0;
    std::string canonical;  // type-only serialization (or bare keyword label)
    std::size_t size = 1;   // node count; keyword roots count as size 1
};

// Node types whose subtrees become pseudo-labels.
bool is_structural_label_type(const std::string& type);  // expr_stmt, decl_stmt, expr, condition
bool is_keyword_label_type(const std::string& type);     // if, while, for

// Deterministic pre-order serialization of the subtree rooted at `id` using
// type labels only, children bracketed in source order:
//   expr(binop(index(ident,expr(ident)),index(ident,expr(binop(ident,literal)))))
// Tokens are excluded so that structurally equal fragments with different
// identifiers collide. When `with_operator_tokens` is set, binop nodes carry
// their operator spelling as "binop:<op>" (config flag, default off).
std::string canonical_id(const Ast& ast, NodeId id,
                         bool with_operator_tokens = false);

// One SubtreeRef per structural-type node (full subtree) plus one size-1 ref
// per keyword-type node, in pre-order of the AST. Nested qualifying subtrees
// are all emitted.
std::vector<SubtreeRef> identify_subtrees(const Ast& ast,
                                          bool with_operator_tokens = false);

}  // namespace s2v
