#pragma once

#include <string>

#include "s2v/ast.hpp"

namespace s2v {

// AST interchange format, one JSON document per snippet:
//   {"source_id": text, "root": int,
//    "nodes": [{"id": int, "type": text, "token": text-or-null,
//               "children": [int, ...]}, ...]}
// Unknown type labels are accepted verbatim (open vocabulary).
// Errors: malformed document, duplicate ids, dangling child references,
// multiple roots.
Ast load_ast_json(const std::string& bytes);

// Canonical serialization: nodes sorted by id, fields in the documented
// order, compact UTF-8, trailing newline.
std::string save_ast_json(const Ast& ast);

Ast load_ast_file(const std::string& path);
void save_ast_file(const Ast& ast, const std::string& path);

}  // namespace s2v
