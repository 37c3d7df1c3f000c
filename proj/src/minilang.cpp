#include "s2v/minilang.hpp"

#include <algorithm>
#include <cctype>

namespace s2v {

namespace {

enum class Tok { Ident, Int, Keyword, Type, Punct, Eof };

struct Token {
    Tok kind = Tok::Eof;
    std::string text;
    std::size_t begin = 0, end = 0;
    int line = 1, col = 1;
};

bool is_type_keyword(const std::string& s) {
    return s == "int" || s == "float" || s == "bool" || s == "char" ||
           s == "void";
}

bool is_keyword(const std::string& s) {
    return s == "if" || s == "else" || s == "while" || s == "for" ||
           s == "return";
}

class Lexer {
  public:
    explicit Lexer(const std::string& src) : src_(&src) { advance(); }

    const Token& peek() const { return cur_; }

    Token take() {
        Token t = cur_;
        advance();
        return t;
    }

  private:
    void advance() {
        const std::string& src = *src_;
        while (pos_ < src.size() &&
               std::isspace(static_cast<unsigned char>(src[pos_]))) {
            bump();
        }
        cur_ = Token{};
        cur_.begin = pos_;
        cur_.line = line_;
        cur_.col = col_;
        if (pos_ >= src.size()) {
            cur_.kind = Tok::Eof;
            cur_.end = pos_;
            return;
        }
        char c = src[pos_];
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            while (pos_ < src.size() &&
                   (std::isalnum(static_cast<unsigned char>(src[pos_])) ||
                    src[pos_] == '_'))
                bump();
            cur_.text = src.substr(cur_.begin, pos_ - cur_.begin);
            cur_.kind = is_type_keyword(cur_.text) ? Tok::Type
                        : is_keyword(cur_.text)    ? Tok::Keyword
                                                   : Tok::Ident;
        } else if (std::isdigit(static_cast<unsigned char>(c))) {
            while (pos_ < src.size() &&
                   std::isdigit(static_cast<unsigned char>(src[pos_])))
                bump();
            cur_.text = src.substr(cur_.begin, pos_ - cur_.begin);
            cur_.kind = Tok::Int;
        } else {
            static const char* two[] = {"==", "!=", "<=", ">=", "&&", "||"};
            std::string pair = src.substr(pos_, 2);
            bool matched = false;
            for (const char* t : two) {
                if (pair == t) {
                    bump();
                    bump();
                    matched = true;
                    break;
                }
            }
            if (!matched) {
                if (std::string("+-*/%<>=!()[]{};,").find(c) ==
                    std::string::npos)
                    throw ParseError(line_, col_,
                                     std::string("unexpected character '") +
                                         c + "'");
                bump();
            }
            cur_.text = src.substr(cur_.begin, pos_ - cur_.begin);
            cur_.kind = Tok::Punct;
        }
        cur_.end = pos_;
    }

    void bump() {
        if ((*src_)[pos_] == '\n') {
            ++line_;
            col_ = 1;
        } else {
            ++col_;
        }
        ++pos_;
    }

    const std::string* src_;
    std::size_t pos_ = 0;
    int line_ = 1, col_ = 1;
    Token cur_;
};

class Parser {
  public:
    Parser(const std::string& src, const std::string& source_id) : lex_(src) {
        ast_.source_id = source_id;
    }

    Ast parse() {
        if (lex_.peek().kind == Tok::Eof)
            throw ParseError(1, 1, "empty input");
        std::vector<NodeId> items;
        std::size_t begin = lex_.peek().begin;
        std::size_t end = begin;
        while (lex_.peek().kind != Tok::Eof) {
            NodeId item = parse_item();
            end = ast_.spans.at(item).end;
            items.push_back(item);
        }
        ast_.root = make("program", std::nullopt, items, begin, end);
        return std::move(ast_);
    }

  private:
    NodeId make(const std::string& type, std::optional<std::string> token,
                std::vector<NodeId> children, std::size_t begin,
                std::size_t end) {
        NodeId id = next_id_++;
        AstNode n;
        n.id = id;
        n.type = type;
        n.token = std::move(token);
        n.children = std::move(children);
        ast_.nodes.emplace(id, std::move(n));
        ast_.spans.emplace(id, SourceSpan{begin, end});
        return id;
    }

    [[noreturn]] void fail(const std::string& msg) {
        const Token& t = lex_.peek();
        std::string got =
            t.kind == Tok::Eof ? "end of input" : "'" + t.text + "'";
        throw ParseError(t.line, t.col, msg + ", got " + got);
    }

    Token expect_punct(const std::string& text) {
        const Token& t = lex_.peek();
        if (t.kind != Tok::Punct || t.text != text)
            fail("expected '" + text + "'");
        return lex_.take();
    }

    bool at_punct(const std::string& text) const {
        return lex_.peek().kind == Tok::Punct && lex_.peek().text == text;
    }
    bool at_keyword(const std::string& text) const {
        return lex_.peek().kind == Tok::Keyword && lex_.peek().text == text;
    }

    // item := function | statement. A type keyword followed by an identifier
    // and '(' starts a function definition; otherwise it is a declaration.
    NodeId parse_item() {
        if (lex_.peek().kind == Tok::Type) {
            Lexer saved = lex_;
            Token ty = lex_.take();
            if (lex_.peek().kind == Tok::Ident) {
                Token name = lex_.take();
                if (at_punct("(")) return parse_function(ty, name);
            }
            lex_ = saved;
        }
        return parse_statement();
    }

    NodeId parse_function(const Token& ty, const Token& name) {
        std::vector<NodeId> children;
        children.push_back(
            make("type_name", ty.text, {}, ty.begin, ty.end));
        expect_punct("(");
        if (!at_punct(")")) {
            while (true) {
                if (lex_.peek().kind != Tok::Type)
                    fail("expected parameter type");
                Token pty = lex_.take();
                if (lex_.peek().kind != Tok::Ident)
                    fail("expected parameter name");
                Token pname = lex_.take();
                NodeId tyid =
                    make("type_name", pty.text, {}, pty.begin, pty.end);
                NodeId idid =
                    make("ident", pname.text, {}, pname.begin, pname.end);
                children.push_back(make("decl_stmt", std::nullopt,
                                        {tyid, idid}, pty.begin, pname.end));
                if (at_punct(",")) {
                    lex_.take();
                    continue;
                }
                break;
            }
        }
        expect_punct(")");
        if (!at_punct("{")) fail("expected function body");
        NodeId body = parse_block();
        std::size_t end = ast_.spans.at(body).end;
        children.push_back(body);
        return make("function", name.text, std::move(children), ty.begin, end);
    }

    NodeId parse_block() {
        Token open = expect_punct("{");
        std::vector<NodeId> stmts;
        while (!at_punct("}")) {
            if (lex_.peek().kind == Tok::Eof) fail("expected '}'");
            stmts.push_back(parse_statement());
        }
        Token close = lex_.take();
        return make("block", std::nullopt, std::move(stmts), open.begin,
                    close.end);
    }

    NodeId parse_statement() {
        const Token& t = lex_.peek();
        if (t.kind == Tok::Punct && t.text == "{") return parse_block();
        if (t.kind == Tok::Type) return parse_decl(true);
        if (t.kind == Tok::Keyword) {
            if (t.text == "if") return parse_if();
            if (t.text == "while") return parse_while();
            if (t.text == "for") return parse_for();
            if (t.text == "return") return parse_return();
            fail("unexpected keyword");
        }
        // expression statement
        std::size_t begin = t.begin;
        NodeId e = parse_expr_wrapped();
        Token semi = expect_punct(";");
        return make("expr_stmt", std::nullopt, {e}, begin, semi.end);
    }

    NodeId parse_decl(bool eat_semi) {
        Token ty = lex_.take();
        if (lex_.peek().kind != Tok::Ident) fail("expected declared name");
        Token name = lex_.take();
        std::vector<NodeId> children;
        children.push_back(make("type_name", ty.text, {}, ty.begin, ty.end));
        children.push_back(
            make("ident", name.text, {}, name.begin, name.end));
        std::size_t end = name.end;
        if (at_punct("=")) {
            lex_.take();
            NodeId init = parse_expr_wrapped();
            end = ast_.spans.at(init).end;
            children.push_back(init);
        }
        if (eat_semi) {
            Token semi = expect_punct(";");
            end = semi.end;
        }
        return make("decl_stmt", std::nullopt, std::move(children), ty.begin,
                    end);
    }

    NodeId parse_condition() {
        NodeId e = parse_expr_wrapped();
        SourceSpan sp = ast_.spans.at(e);
        return make("condition", std::nullopt, {e}, sp.begin, sp.end);
    }

    NodeId parse_if() {
        Token kw = lex_.take();
        expect_punct("(");
        NodeId cond = parse_condition();
        expect_punct(")");
        NodeId then = parse_statement();
        std::vector<NodeId> children = {cond, then};
        std::size_t end = ast_.spans.at(then).end;
        if (at_keyword("else")) {
            lex_.take();
            NodeId other = parse_statement();
            end = ast_.spans.at(other).end;
            children.push_back(other);
        }
        return make("if", std::nullopt, std::move(children), kw.begin, end);
    }

    NodeId parse_while() {
        Token kw = lex_.take();
        expect_punct("(");
        NodeId cond = parse_condition();
        expect_punct(")");
        NodeId body = parse_statement();
        return make("while", std::nullopt, {cond, body}, kw.begin,
                    ast_.spans.at(body).end);
    }

    // for '(' init? ';' condition? ';' update? ')' statement
    // init : declaration or expression (recorded as decl_stmt / expr_stmt)
    NodeId parse_for() {
        Token kw = lex_.take();
        expect_punct("(");
        std::vector<NodeId> children;
        if (!at_punct(";")) {
            if (lex_.peek().kind == Tok::Type) {
                children.push_back(parse_decl(false));
            } else {
                std::size_t begin = lex_.peek().begin;
                NodeId e = parse_expr_wrapped();
                children.push_back(make("expr_stmt", std::nullopt, {e}, begin,
                                        ast_.spans.at(e).end));
            }
        }
        expect_punct(";");
        if (!at_punct(";")) children.push_back(parse_condition());
        expect_punct(";");
        if (!at_punct(")")) children.push_back(parse_expr_wrapped());
        expect_punct(")");
        NodeId body = parse_statement();
        std::size_t end = ast_.spans.at(body).end;
        children.push_back(body);
        return make("for", std::nullopt, std::move(children), kw.begin, end);
    }

    NodeId parse_return() {
        Token kw = lex_.take();
        std::vector<NodeId> children;
        if (!at_punct(";")) children.push_back(parse_expr_wrapped());
        Token semi = expect_punct(";");
        return make("return", std::nullopt, std::move(children), kw.begin,
                    semi.end);
    }

    // Expression slots (initializers, statement expressions, conditions,
    // return values, call arguments, subscripts, for-updates) wrap the
    // expression tree in an `expr` node; operator operands do not.
    NodeId parse_expr_wrapped() {
        NodeId inner = parse_assign();
        SourceSpan sp = ast_.spans.at(inner);
        return make("expr", std::nullopt, {inner}, sp.begin, sp.end);
    }

    NodeId parse_assign() {
        NodeId lhs = parse_binary(0);
        if (at_punct("=")) {
            lex_.take();
            NodeId rhs = parse_assign();  // right-associative
            return make("binop", "=", {lhs, rhs}, ast_.spans.at(lhs).begin,
                        ast_.spans.at(rhs).end);
        }
        return lhs;
    }

    // Precedence-climbing over the left-associative binary levels.
    NodeId parse_binary(int level) {
        static const std::vector<std::vector<std::string>> levels = {
            {"||"}, {"&&"}, {"==", "!="}, {"<", ">", "<=", ">="},
            {"+", "-"}, {"*", "/", "%"}};
        if (level >= int(levels.size())) return parse_unary();
        NodeId lhs = parse_binary(level + 1);
        while (lex_.peek().kind == Tok::Punct) {
            const auto& ops = levels[level];
            if (std::find(ops.begin(), ops.end(), lex_.peek().text) ==
                ops.end())
                break;
            Token op = lex_.take();
            NodeId rhs = parse_binary(level + 1);
            lhs = make("binop", op.text, {lhs, rhs},
                       ast_.spans.at(lhs).begin, ast_.spans.at(rhs).end);
        }
        return lhs;
    }

    NodeId parse_unary() {
        if (at_punct("!") || at_punct("-")) {
            Token op = lex_.take();
            NodeId operand = parse_unary();
            return make("unaryop", op.text, {operand}, op.begin,
                        ast_.spans.at(operand).end);
        }
        return parse_postfix();
    }

    NodeId parse_postfix() {
        NodeId base = parse_primary();
        while (true) {
            if (at_punct("(")) {
                const AstNode& b = ast_.node(base);
                if (b.type != "ident")
                    fail("call target must be an identifier");
                std::string callee = *b.token;
                std::size_t begin = ast_.spans.at(base).begin;
                lex_.take();
                std::vector<NodeId> args;
                if (!at_punct(")")) {
                    args.push_back(parse_expr_wrapped());
                    while (at_punct(",")) {
                        lex_.take();
                        args.push_back(parse_expr_wrapped());
                    }
                }
                Token close = expect_punct(")");
                // the callee ident dissolves into the call node's token
                ast_.nodes.erase(base);
                ast_.spans.erase(base);
                base = make("call", callee, std::move(args), begin, close.end);
            } else if (at_punct("[")) {
                lex_.take();
                NodeId sub = parse_expr_wrapped();
                Token close = expect_punct("]");
                base = make("index", std::nullopt, {base, sub},
                            ast_.spans.at(base).begin, close.end);
            } else {
                break;
            }
        }
        return base;
    }

    NodeId parse_primary() {
        const Token& t = lex_.peek();
        if (t.kind == Tok::Ident) {
            Token tok = lex_.take();
            return make("ident", tok.text, {}, tok.begin, tok.end);
        }
        if (t.kind == Tok::Int) {
            Token tok = lex_.take();
            return make("literal", tok.text, {}, tok.begin, tok.end);
        }
        if (t.kind == Tok::Punct && t.text == "(") {
            lex_.take();
            NodeId inner = parse_assign();
            expect_punct(")");
            return inner;
        }
        fail("expected expression");
    }

    Lexer lex_;
    Ast ast_;
    NodeId next_id_ = 0;
};

}  // namespace

Ast parse_minilang(const std::string& source, const std::string& source_id) {
    Parser p(source, source_id);
    Ast ast = p.parse();
    validate_ast(ast);
    return ast;
}

}  // namespace s2v
