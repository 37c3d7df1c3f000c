#pragma once

#include <string>

#include "s2v/ast.hpp"

namespace s2v {

struct ParseError : DataError {
    int line;
    int col;
    ParseError(int line_, int col_, const std::string& what)
        : DataError("parse error at " + std::to_string(line_) + ":" +
                    std::to_string(col_) + ": " + what),
          line(line_),
          col(col_) {}
};

// Parses MiniLang source (grammar in docs/minilang.md) into an Ast whose
// nodes use the fixed type-label set and all carry source spans.
// Errors: ParseError with line/column; empty input is an error.
Ast parse_minilang(const std::string& source, const std::string& source_id);

}  // namespace s2v
