#include "s2v/ast_json.hpp"

#include <json.hpp>

namespace s2v {

using ordered_json = nlohmann::ordered_json;

Ast load_ast_json(const std::string& bytes) {
    ordered_json j;
    try {
        j = ordered_json::parse(bytes);
    } catch (const std::exception& e) {
        throw DataError(std::string("malformed AST document: ") + e.what());
    }
    if (!j.is_object() || !j.contains("source_id") || !j.contains("root") ||
        !j.contains("nodes") || !j["nodes"].is_array())
        throw DataError("malformed AST document: missing required fields");
    Ast ast;
    try {
        ast.source_id = j["source_id"].get<std::string>();
        ast.root = j["root"].get<NodeId>();
        for (const auto& jn : j["nodes"]) {
            AstNode n;
            n.id = jn.at("id").get<NodeId>();
            n.type = jn.at("type").get<std::string>();
            if (jn.contains("token") && !jn["token"].is_null())
                n.token = jn["token"].get<std::string>();
            if (jn.contains("children"))
                n.children = jn["children"].get<std::vector<NodeId>>();
            if (ast.nodes.count(n.id))
                throw DataError("duplicate node id " + std::to_string(n.id));
            NodeId id = n.id;
            ast.nodes.emplace(id, std::move(n));
        }
    } catch (const DataError&) {
        throw;
    } catch (const std::exception& e) {
        throw DataError(std::string("malformed AST document: ") + e.what());
    }
    validate_ast(ast);
    return ast;
}

std::string save_ast_json(const Ast& ast) {
    ordered_json j;
    j["source_id"] = ast.source_id;
    j["root"] = ast.root;
    ordered_json nodes = ordered_json::array();
    for (const auto& [id, n] : ast.nodes) {  // std::map iterates sorted by id
        ordered_json jn;
        jn["id"] = id;
        jn["type"] = n.type;
        jn["token"] = n.token ? ordered_json(*n.token) : ordered_json(nullptr);
        jn["children"] = n.children;
        nodes.push_back(std::move(jn));
    }
    j["nodes"] = std::move(nodes);
    return j.dump() + "\n";
}

Ast load_ast_file(const std::string& path) { return load_ast_json(read_file(path)); }

void save_ast_file(const Ast& ast, const std::string& path) {
    write_file(path, save_ast_json(ast));
}

}  // namespace s2v
