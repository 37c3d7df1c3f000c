#include "s2v/subtrees.hpp"

namespace s2v {

bool is_structural_label_type(const std::string& type) {
    return type == "expr_stmt" || type == "decl_stmt" || type == "expr" ||
           type == "condition";
}

bool is_keyword_label_type(const std::string& type) {
    return type == "if" || type == "while" || type == "for";
}

static void serialize(const Ast& ast, NodeId id, bool op_tokens,
                      std::string& out) {
    const AstNode& n = ast.node(id);
    out += n.type;
    if (op_tokens && n.type == "binop" && n.token) {
        out += ':';
        out += *n.token;
    }
    if (n.children.empty()) return;
    out += '(';
    for (std::size_t i = 0; i < n.children.size(); ++i) {
        if (i) out += ',';
        serialize(ast, n.children[i], op_tokens, out);
    }
    out += ')';
}

std::string canonical_id(const Ast& ast, NodeId id, bool with_operator_tokens) {
    if (!ast.has(id))
        throw DataError("canonical_id: no node with id " + std::to_string(id));
    std::string out;
    serialize(ast, id, with_operator_tokens, out);
    return out;
}

std::vector<SubtreeRef> identify_subtrees(const Ast& ast,
                                          bool with_operator_tokens) {
    std::vector<SubtreeRef> refs;
    for (NodeId id : preorder(ast)) {
        const std::string& type = ast.node(id).type;
        if (is_structural_label_type(type)) {
            SubtreeRef r;
            r.source_id = ast.source_id;
            r.root = id;
            r.canonical = canonical_id(ast, id, with_operator_tokens);
            r.size = subtree_size(ast, id);
            refs.push_back(std::move(r));
        } else if (is_keyword_label_type(type)) {
            // keyword statements are treated as size-1 subtrees: the label is
            // the keyword itself, not the statement under it
            refs.push_back(SubtreeRef{ast.source_id, id, type, 1});
        }
    }
    return refs;
}

}  // namespace s2v
