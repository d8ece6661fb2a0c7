#pragma once

// Surface syntax -> expression trees.
//
// Parsing runs twice over the token stream.  The first pass executes the
// full grammar but only records, per structure literal (keyed by the source
// position of its "{") and for the top level, which component names it
// declares and their fresh identifiers.  The second pass re-parses with
// those tables preloaded, so component references resolve even when they
// point forward (within a literal) or at mutually recursive siblings (at the
// top level).  Lambda/let binders are ordinary lexical scope and need no
// prescan.
//
// Identifier resolution order: lambda/let locals, enclosing literal
// components (innermost first), top-level bindings, builtin names.  Inside a
// freeze tying expression, any identifier not bound by a local lambda/let
// resolves to an external Name instead; the freeze operation later replaces
// it via the output assignment.

#include <cctype>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "lyre/ast.hpp"

namespace lyre {

// ------------------------------------------------------------------- tokens

enum class Tok {
    Int, Str, Ident,
    KwMixin, KwLet, KwVal, KwIn, KwFun, KwIf, KwThen, KwElse, KwTrue,
    KwFalse, KwClose, KwHide, KwFreeze, KwRename, KwConstraint, KwTrigger,
    LBrace, RBrace, LParen, RParen, LBracket, RBracket,
    Semi, Comma, Dot, Colon, Underscore,
    Arrow, LeftArrow, ColonEq, Bang,
    Eq, Ne, Lt, Gt, Le, Ge,
    Plus, Minus, Star, Slash, Caret, AndAnd, OrOr,
    Eof,
};

struct Token {
    Tok kind = Tok::Eof;
    std::string text;
    std::int64_t ival = 0;
    int line = 1;
    int col = 1;
};

namespace detail {

[[noreturn]] inline void parse_fail(int line, int col, const std::string& msg) {
    fail(ErrKind::Parse,
         msg + " (line " + std::to_string(line) + ", column " +
             std::to_string(col) + ")");
}

inline std::vector<Token> lex(const std::string& src) {
    std::vector<Token> out;
    std::size_t i = 0;
    int line = 1, col = 1;
    auto peek = [&](std::size_t k = 0) -> char {
        return i + k < src.size() ? src[i + k] : '\0';
    };
    auto advance = [&]() {
        char c = src[i++];
        if (c == '\n') { ++line; col = 1; } else { ++col; }
        return c;
    };
    auto push = [&](Tok k, std::string text, int l, int c) {
        Token t;
        t.kind = k;
        t.text = std::move(text);
        t.line = l;
        t.col = c;
        out.push_back(t);
    };
    static const std::map<std::string, Tok> keywords = {
        {"mixin", Tok::KwMixin},   {"let", Tok::KwLet},
        {"val", Tok::KwVal},       {"in", Tok::KwIn},
        {"fun", Tok::KwFun},       {"if", Tok::KwIf},
        {"then", Tok::KwThen},     {"else", Tok::KwElse},
        {"true", Tok::KwTrue},     {"false", Tok::KwFalse},
        {"close", Tok::KwClose},   {"hide", Tok::KwHide},
        {"freeze", Tok::KwFreeze}, {"rename", Tok::KwRename},
        {"constraint", Tok::KwConstraint}, {"trigger", Tok::KwTrigger},
    };
    while (i < src.size()) {
        char c = peek();
        if (c == ' ' || c == '\t' || c == '\r' || c == '\n') { advance(); continue; }
        int l = line, co = col;
        if (c == '(' && peek(1) == '*') { // nested comments
            advance(); advance();
            int depth = 1;
            while (i < src.size() && depth > 0) {
                if (peek() == '(' && peek(1) == '*') { advance(); advance(); ++depth; }
                else if (peek() == '*' && peek(1) == ')') { advance(); advance(); --depth; }
                else advance();
            }
            if (depth > 0) parse_fail(l, co, "unterminated comment");
            continue;
        }
        if (std::isdigit(static_cast<unsigned char>(c))) {
            std::string digits;
            while (std::isdigit(static_cast<unsigned char>(peek())))
                digits += advance();
            Token t;
            t.kind = Tok::Int;
            t.text = digits;
            t.ival = std::stoll(digits);
            t.line = l;
            t.col = co;
            out.push_back(t);
            continue;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::string word;
            while (std::isalnum(static_cast<unsigned char>(peek())) ||
                   peek() == '_' || peek() == '\'')
                word += advance();
            if (word == "_") { push(Tok::Underscore, word, l, co); continue; }
            auto it = keywords.find(word);
            if (it != keywords.end()) push(it->second, word, l, co);
            else push(Tok::Ident, word, l, co);
            continue;
        }
        if (c == '"') {
            advance();
            std::string s;
            while (true) {
                if (i >= src.size()) parse_fail(l, co, "unterminated string");
                char d = advance();
                if (d == '"') break;
                if (d == '\\') {
                    if (i >= src.size()) parse_fail(l, co, "unterminated string");
                    char e = advance();
                    switch (e) {
                    case 'n': s += '\n'; break;
                    case 't': s += '\t'; break;
                    case '"': s += '"'; break;
                    case '\\': s += '\\'; break;
                    default:
                        parse_fail(line, col, std::string("bad escape \\") + e);
                    }
                } else {
                    s += d;
                }
            }
            push(Tok::Str, s, l, co);
            continue;
        }
        auto two = [&](char a, char b) { return c == a && peek(1) == b; };
        if (two('-', '>')) { advance(); advance(); push(Tok::Arrow, "->", l, co); continue; }
        if (two('<', '-')) { advance(); advance(); push(Tok::LeftArrow, "<-", l, co); continue; }
        if (two(':', '=')) { advance(); advance(); push(Tok::ColonEq, ":=", l, co); continue; }
        if (two('<', '>')) { advance(); advance(); push(Tok::Ne, "<>", l, co); continue; }
        if (two('<', '=')) { advance(); advance(); push(Tok::Le, "<=", l, co); continue; }
        if (two('>', '=')) { advance(); advance(); push(Tok::Ge, ">=", l, co); continue; }
        if (two('&', '&')) { advance(); advance(); push(Tok::AndAnd, "&&", l, co); continue; }
        if (two('|', '|')) { advance(); advance(); push(Tok::OrOr, "||", l, co); continue; }
        advance();
        switch (c) {
        case '{': push(Tok::LBrace, "{", l, co); break;
        case '}': push(Tok::RBrace, "}", l, co); break;
        case '(': push(Tok::LParen, "(", l, co); break;
        case ')': push(Tok::RParen, ")", l, co); break;
        case '[': push(Tok::LBracket, "[", l, co); break;
        case ']': push(Tok::RBracket, "]", l, co); break;
        case ';': push(Tok::Semi, ";", l, co); break;
        case ',': push(Tok::Comma, ",", l, co); break;
        case '.': push(Tok::Dot, ".", l, co); break;
        case ':': push(Tok::Colon, ":", l, co); break;
        case '!': push(Tok::Bang, "!", l, co); break;
        case '=': push(Tok::Eq, "=", l, co); break;
        case '<': push(Tok::Lt, "<", l, co); break;
        case '>': push(Tok::Gt, ">", l, co); break;
        case '+': push(Tok::Plus, "+", l, co); break;
        case '-': push(Tok::Minus, "-", l, co); break;
        case '*': push(Tok::Star, "*", l, co); break;
        case '/': push(Tok::Slash, "/", l, co); break;
        case '^': push(Tok::Caret, "^", l, co); break;
        default:
            parse_fail(l, co, std::string("unexpected character '") + c + "'");
        }
    }
    Token eof;
    eof.kind = Tok::Eof;
    eof.line = line;
    eof.col = col;
    out.push_back(eof);
    return out;
}

} // namespace detail

// ------------------------------------------------------------ program shape

struct TopBinding {
    std::string name;
    bool mixin_kw = false;
    Ident id;
    ExprPtr body;
};

struct Program {
    std::vector<TopBinding> bindings; // `main` is always last
};

inline const std::set<std::string>& builtin_names() {
    static const std::set<std::string> names = {
        "print", "ref", "incr",
        "createForm", "createMenu", "createMenuItem",
        "setMenus", "setMenuItems", "setAction", "toggle",
    };
    return names;
}

namespace detail {

// Binder table of one literal (or the top level): for each surface name, the
// defined and/or deferred identifier declared under it.
struct BinderTable {
    std::map<std::string, Ident> defined;
    std::map<std::string, Ident> deferred;

    const Ident* resolve(const std::string& name) const {
        // a defined component shadows a deferred one of the same name
        auto it = defined.find(name);
        if (it != defined.end()) return &it->second;
        auto jt = deferred.find(name);
        if (jt != deferred.end()) return &jt->second;
        return nullptr;
    }
};

struct PrescanTables {
    std::map<std::pair<int, int>, BinderTable> literals; // keyed by '{' pos
    BinderTable toplevel;
    // anonymous components, keyed by the '_' token position
    std::map<std::pair<int, int>, std::string> anon_names;
    std::map<std::pair<int, int>, Ident> anon_idents;
};

struct ScopeFrame {
    const BinderTable* table = nullptr; // literal or toplevel components
    std::map<std::string, Ident> locals; // lambda/let binders
    bool psi_boundary = false; // set on the frame opened by a freeze tying
};

inline std::uint64_t anon_counter_next() {
    static std::atomic<std::uint64_t> n{0};
    return ++n;
}

class Parser {
public:
    Parser(const std::vector<Token>& toks, PrescanTables& tables, bool prescan)
        : toks_(toks), tables_(tables), prescan_(prescan) {}

    Program run() {
        Program prog;
        scopes_.push_back(ScopeFrame{&tables_.toplevel, {}});
        while (!at(Tok::Eof)) {
            TopBinding b = parse_top_binding();
            prog.bindings.push_back(std::move(b));
        }
        if (!prescan_) {
            if (prog.bindings.empty() ||
                prog.bindings.back().name != "main")
                fail(ErrKind::Parse,
                     "program must end with a binding named main");
            for (std::size_t i = 0; i + 1 < prog.bindings.size(); ++i)
                if (prog.bindings[i].name == "main")
                    fail(ErrKind::Parse, "main must be the last binding");
        }
        return prog;
    }

private:
    // ---- token helpers ----------------------------------------------------
    const Token& cur() const { return toks_[pos_]; }
    const Token& ahead(std::size_t k = 1) const {
        return toks_[std::min(pos_ + k, toks_.size() - 1)];
    }
    bool at(Tok k) const { return cur().kind == k; }
    Token eat() { return toks_[pos_++]; }
    Token expect(Tok k, const char* what) {
        if (!at(k))
            parse_fail(cur().line, cur().col,
                       std::string("expected ") + what + " but found '" +
                           (cur().kind == Tok::Eof ? "end of input" : cur().text) + "'");
        return eat();
    }

    // ---- scope ------------------------------------------------------------
    const Ident* resolve_component(const std::string& name) const {
        for (auto it = scopes_.rbegin(); it != scopes_.rend(); ++it) {
            auto loc = it->locals.find(name);
            if (loc != it->locals.end()) return &loc->second;
            if (it->table) {
                if (const Ident* id = it->table->resolve(name)) return id;
            }
        }
        return nullptr;
    }
    const Ident* resolve_local_only(const std::string& name) const {
        for (auto it = scopes_.rbegin(); it != scopes_.rend(); ++it) {
            auto loc = it->locals.find(name);
            if (loc != it->locals.end()) return &loc->second;
            if (it->psi_boundary) break; // names beyond the tying are opaque
        }
        return nullptr;
    }

    ExprPtr ident_expr(const Token& t) {
        if (in_psi_) {
            if (const Ident* id = resolve_local_only(t.text))
                return mk_expr(IdentRef{*id}, t.line, t.col);
            return mk_expr(NameRef{Name{t.text}}, t.line, t.col);
        }
        if (const Ident* id = resolve_component(t.text))
            return mk_expr(IdentRef{*id}, t.line, t.col);
        if (builtin_names().count(t.text))
            return mk_expr(BuiltinRef{t.text}, t.line, t.col);
        if (prescan_) // unresolved forward reference; pass 2 will see tables
            return mk_expr(IdentRef{Ident{t.text, 0, Sort::Core}}, t.line, t.col);
        parse_fail(t.line, t.col, "unbound identifier '" + t.text + "'");
    }

    // ---- program level ----------------------------------------------------
    TopBinding parse_top_binding() {
        TopBinding b;
        if (at(Tok::KwMixin)) {
            eat();
            b.mixin_kw = true;
        } else {
            expect(Tok::KwLet, "'let' or 'mixin'");
        }
        Token name = expect(Tok::Ident, "binding name");
        b.name = name.text;
        std::vector<Token> params = parse_param_tokens();
        expect(Tok::Eq, "'='");
        if (prescan_) {
            auto& tbl = tables_.toplevel;
            if (tbl.defined.count(b.name))
                fail(ErrKind::DuplicateBinder,
                     "top-level binding '" + b.name + "' declared twice");
            // sort is fixed up after the body is known
            tbl.defined.emplace(b.name, fresh_ident(b.name, Sort::Core));
        }
        b.body = parse_binding_body(params);
        if (prescan_) // record the rhs-derived sort so pass 2 resolves with it
            tables_.toplevel.defined[b.name].sort = sort_of_body(b.body);
        const Ident* id = tables_.toplevel.resolve(b.name);
        if (!id) fail(ErrKind::Internal, "missing top-level table entry");
        b.id = *id;
        return b;
    }

    std::vector<Token> parse_param_tokens() {
        std::vector<Token> params;
        while (at(Tok::Ident) ||
               (at(Tok::LParen) && ahead().kind == Tok::RParen)) {
            if (at(Tok::Ident)) {
                params.push_back(eat());
            } else {
                Token t = eat(); // '('
                eat();           // ')'
                t.kind = Tok::LParen;
                params.push_back(t);
            }
        }
        return params;
    }

    // Wrap a body in lambdas for `let f x () y = ...` sugar.
    ExprPtr parse_binding_body(const std::vector<Token>& params) {
        if (params.empty()) return parse_expr();
        // bind parameters front to back; the body sees all of them
        std::vector<std::pair<Ident, bool>> binders;
        scopes_.push_back(ScopeFrame{});
        for (const auto& p : params) {
            if (p.kind == Tok::LParen) {
                binders.emplace_back(fresh_ident("_unit", Sort::Core), true);
            } else {
                Ident id = fresh_ident(p.text, Sort::Core);
                scopes_.back().locals[p.text] = id;
                binders.emplace_back(id, false);
            }
        }
        ExprPtr body = parse_expr();
        scopes_.pop_back();
        for (auto it = binders.rbegin(); it != binders.rend(); ++it)
            body = mk_expr(Lambda{it->first, it->second, body});
        return body;
    }

    // ---- expressions -------------------------------------------------------
    ExprPtr parse_expr() { return parse_seq(); }

    ExprPtr parse_seq() {
        ExprPtr e = parse_sum();
        if (at(Tok::Semi)) {
            Token t = eat();
            ExprPtr rest = parse_seq();
            // e1; e2  ==  let _ = e1 in e2
            e = mk_expr(Let{fresh_ident("_seq", Sort::Core), e, rest},
                        t.line, t.col);
        }
        return e;
    }

    ExprPtr parse_sum() {
        ExprPtr e = parse_assign();
        if (at(Tok::LeftArrow)) {
            Token t = eat();
            ExprPtr rhs = parse_sum();
            e = mk_expr(SumE{e, rhs}, t.line, t.col);
        }
        return e;
    }

    ExprPtr parse_assign() {
        ExprPtr e = parse_or();
        if (at(Tok::ColonEq)) {
            Token t = eat();
            ExprPtr rhs = parse_assign();
            e = mk_expr(Assign{e, rhs}, t.line, t.col);
        }
        return e;
    }

    ExprPtr parse_or() {
        ExprPtr e = parse_and();
        if (at(Tok::OrOr)) {
            Token t = eat();
            e = mk_expr(Binary{BinOp::Or, e, parse_or()}, t.line, t.col);
        }
        return e;
    }

    ExprPtr parse_and() {
        ExprPtr e = parse_cmp();
        if (at(Tok::AndAnd)) {
            Token t = eat();
            e = mk_expr(Binary{BinOp::And, e, parse_and()}, t.line, t.col);
        }
        return e;
    }

    ExprPtr parse_cmp() {
        ExprPtr e = parse_concat();
        auto op = [&]() -> std::optional<BinOp> {
            switch (cur().kind) {
            case Tok::Eq: return BinOp::Eq;
            case Tok::Ne: return BinOp::Ne;
            case Tok::Lt: return BinOp::Lt;
            case Tok::Gt: return BinOp::Gt;
            case Tok::Le: return BinOp::Le;
            case Tok::Ge: return BinOp::Ge;
            default: return std::nullopt;
            }
        }();
        if (op) {
            Token t = eat();
            e = mk_expr(Binary{*op, e, parse_concat()}, t.line, t.col);
        }
        return e;
    }

    ExprPtr parse_concat() {
        ExprPtr e = parse_add();
        if (at(Tok::Caret)) {
            Token t = eat();
            e = mk_expr(Binary{BinOp::Concat, e, parse_concat()}, t.line, t.col);
        }
        return e;
    }

    ExprPtr parse_add() {
        ExprPtr e = parse_mul();
        while (at(Tok::Plus) || at(Tok::Minus)) {
            Token t = eat();
            BinOp op = t.kind == Tok::Plus ? BinOp::Add : BinOp::Sub;
            e = mk_expr(Binary{op, e, parse_mul()}, t.line, t.col);
        }
        return e;
    }

    ExprPtr parse_mul() {
        ExprPtr e = parse_unary();
        while (at(Tok::Star) || at(Tok::Slash)) {
            Token t = eat();
            BinOp op = t.kind == Tok::Star ? BinOp::Mul : BinOp::Div;
            e = mk_expr(Binary{op, e, parse_unary()}, t.line, t.col);
        }
        return e;
    }

    ExprPtr parse_unary() {
        if (at(Tok::Minus)) {
            Token t = eat();
            ExprPtr e = parse_unary();
            return mk_expr(Binary{BinOp::Sub, mk_expr(IntLit{0}), e},
                           t.line, t.col);
        }
        if (at(Tok::Bang)) {
            Token t = eat();
            return mk_expr(Deref{parse_unary()}, t.line, t.col);
        }
        return parse_app();
    }

    bool starts_argument() const {
        switch (cur().kind) {
        case Tok::Int: case Tok::Str: case Tok::Ident: case Tok::KwTrue:
        case Tok::KwFalse: case Tok::LParen: case Tok::LBracket:
            return true;
        default:
            return false;
        }
    }

    ExprPtr parse_app() {
        ExprPtr e = parse_postfix();
        while (starts_argument()) {
            // parenthesized arguments were already folded by parse_postfix
            if (at(Tok::LParen)) break;
            ExprPtr arg = parse_postfix();
            e = fold_apply(e, {arg});
        }
        return e;
    }

    ExprPtr fold_apply(const ExprPtr& fn, std::vector<ExprPtr> args) {
        if (const auto* b = expr_as<BuiltinRef>(fn)) {
            if (b->name == "ref") {
                if (args.size() != 1)
                    parse_fail(fn->line, fn->col, "ref takes one argument");
                return mk_expr(RefNew{args[0]}, fn->line, fn->col);
            }
            return mk_expr(BuiltinCall{b->name, std::move(args)},
                           fn->line, fn->col);
        }
        if (args.size() != 1)
            parse_fail(fn->line, fn->col,
                       "tuple arguments are only valid for builtin calls");
        return mk_expr(App{fn, args[0]}, fn->line, fn->col);
    }

    ExprPtr parse_postfix() {
        ExprPtr e = parse_primary();
        while (true) {
            if (at(Tok::Dot)) {
                Token t = eat();
                Token field = expect(Tok::Ident, "component name after '.'");
                e = mk_expr(Project{e, Name{field.text}}, t.line, t.col);
                continue;
            }
            if (at(Tok::LParen)) {
                Token t = eat();
                std::vector<ExprPtr> args;
                if (at(Tok::RParen)) {
                    eat();
                    args.push_back(mk_expr(UnitLit{}, t.line, t.col));
                } else {
                    args.push_back(parse_expr());
                    while (at(Tok::Comma)) {
                        eat();
                        args.push_back(parse_expr());
                    }
                    expect(Tok::RParen, "')'");
                }
                e = fold_apply(e, std::move(args));
                continue;
            }
            break;
        }
        return e;
    }

    ExprPtr parse_primary() {
        Token t = cur();
        switch (t.kind) {
        case Tok::Int:
            eat();
            return mk_expr(IntLit{t.ival}, t.line, t.col);
        case Tok::Str:
            eat();
            return mk_expr(StrLit{t.text}, t.line, t.col);
        case Tok::KwTrue:
            eat();
            return mk_expr(BoolLit{true}, t.line, t.col);
        case Tok::KwFalse:
            eat();
            return mk_expr(BoolLit{false}, t.line, t.col);
        case Tok::Ident:
            eat();
            return ident_expr(t);
        case Tok::LParen: {
            eat();
            if (at(Tok::RParen)) {
                eat();
                return mk_expr(UnitLit{}, t.line, t.col);
            }
            ExprPtr e = parse_expr();
            expect(Tok::RParen, "')'");
            return e;
        }
        case Tok::LBracket: {
            eat();
            ListLit list;
            if (!at(Tok::RBracket)) {
                list.items.push_back(parse_sum());
                while (at(Tok::Semi)) {
                    eat();
                    list.items.push_back(parse_sum());
                }
            }
            expect(Tok::RBracket, "']'");
            return mk_expr(std::move(list), t.line, t.col);
        }
        case Tok::KwFun: {
            eat();
            std::vector<Token> params = parse_param_tokens();
            if (params.empty())
                parse_fail(t.line, t.col, "fun needs at least one parameter");
            expect(Tok::Arrow, "'->'");
            ExprPtr body = parse_binding_body_from(params);
            return body;
        }
        case Tok::KwLet: {
            eat();
            Token name = expect(Tok::Ident, "binder after 'let'");
            std::vector<Token> params = parse_param_tokens();
            expect(Tok::Eq, "'='");
            ExprPtr bound;
            {
                // parameters are in scope for the bound expression only
                bound = params.empty() ? parse_expr()
                                       : parse_binding_body(params);
            }
            expect(Tok::KwIn, "'in'");
            Ident binder = fresh_ident(name.text, Sort::Core);
            scopes_.push_back(ScopeFrame{});
            scopes_.back().locals[name.text] = binder;
            ExprPtr body = parse_expr();
            scopes_.pop_back();
            return mk_expr(Let{binder, bound, body}, t.line, t.col);
        }
        case Tok::KwIf: {
            eat();
            ExprPtr c = parse_expr();
            expect(Tok::KwThen, "'then'");
            ExprPtr a = parse_expr();
            expect(Tok::KwElse, "'else'");
            ExprPtr b = parse_expr();
            return mk_expr(If{c, a, b}, t.line, t.col);
        }
        case Tok::LBrace:
            return parse_struct_literal();
        case Tok::KwClose: {
            eat();
            expect(Tok::LParen, "'('");
            ExprPtr e = parse_expr();
            expect(Tok::RParen, "')'");
            return mk_expr(CloseE{e}, t.line, t.col);
        }
        case Tok::KwHide: {
            eat();
            expect(Tok::LBracket, "'['");
            Token nm = expect(Tok::Ident, "name to hide");
            expect(Tok::RBracket, "']'");
            expect(Tok::LParen, "'('");
            ExprPtr e = parse_expr();
            expect(Tok::RParen, "')'");
            return mk_expr(HideE{Name{nm.text}, e}, t.line, t.col);
        }
        case Tok::KwFreeze: {
            eat();
            expect(Tok::LBracket, "'['");
            FreezeE fr;
            if (!at(Tok::RBracket)) {
                fr.psi.push_back(parse_tying());
                while (at(Tok::Semi)) {
                    eat();
                    fr.psi.push_back(parse_tying());
                }
            }
            expect(Tok::RBracket, "']'");
            expect(Tok::LParen, "'('");
            fr.body = parse_expr();
            expect(Tok::RParen, "')'");
            return mk_expr(std::move(fr), t.line, t.col);
        }
        case Tok::KwRename: {
            eat();
            expect(Tok::LBracket, "'['");
            Renaming phi1 = parse_renaming();
            expect(Tok::Comma, "','");
            Renaming phi2 = parse_renaming();
            expect(Tok::RBracket, "']'");
            expect(Tok::LParen, "'('");
            ExprPtr e = parse_expr();
            expect(Tok::RParen, "')'");
            return mk_expr(RenameE{std::move(phi1), e, std::move(phi2)},
                           t.line, t.col);
        }
        default:
            parse_fail(t.line, t.col,
                       "unexpected '" +
                           (t.kind == Tok::Eof ? "end of input" : t.text) +
                           "'");
        }
    }

    ExprPtr parse_binding_body_from(const std::vector<Token>& params) {
        return parse_binding_body(params);
    }

    std::pair<Name, ExprPtr> parse_tying() {
        Token nm = expect(Tok::Ident, "deferred name in freeze tying");
        expect(Tok::Arrow, "'->'");
        bool saved = in_psi_;
        in_psi_ = true;
        scopes_.push_back(ScopeFrame{});
        scopes_.back().psi_boundary = true;
        ExprPtr e = parse_sum(); // stop short of ';' (the tying separator)
        scopes_.pop_back();
        in_psi_ = saved;
        return {Name{nm.text}, e};
    }

    Renaming parse_renaming() {
        expect(Tok::LParen, "'('");
        Renaming map;
        if (!at(Tok::RParen)) {
            auto entry = [&]() {
                Token from = expect(Tok::Ident, "name");
                expect(Tok::Arrow, "'->'");
                Token to = expect(Tok::Ident, "name");
                if (!map.emplace(Name{from.text}, Name{to.text}).second)
                    parse_fail(from.line, from.col,
                               "duplicate rename source '" + from.text + "'");
            };
            entry();
            while (at(Tok::Semi)) {
                eat();
                entry();
            }
        }
        expect(Tok::RParen, "')'");
        return map;
    }

    // ---- structure literals ------------------------------------------------
    std::string parse_type_text() {
        // captured verbatim (normalized spacing) for printing; types have no
        // runtime meaning
        std::string out;
        int depth = 0;
        while (true) {
            switch (cur().kind) {
            case Tok::KwVal: case Tok::KwLet: case Tok::KwMixin:
            case Tok::KwConstraint: case Tok::KwTrigger: case Tok::RBrace:
            case Tok::Eof:
                if (depth == 0) {
                    if (out.empty())
                        parse_fail(cur().line, cur().col, "missing type");
                    return out;
                }
                parse_fail(cur().line, cur().col, "unbalanced type");
            case Tok::LParen: ++depth; break;
            case Tok::RParen:
                if (--depth < 0)
                    parse_fail(cur().line, cur().col, "unbalanced type");
                break;
            default: break;
            }
            if (!out.empty()) out += " ";
            out += eat().text;
        }
    }

    ExprPtr parse_struct_literal() {
        Token open = expect(Tok::LBrace, "'{'");
        std::pair<int, int> key{open.line, open.col};
        if (prescan_) tables_.literals[key]; // ensure entry
        auto tbl_it = tables_.literals.find(key);
        if (tbl_it == tables_.literals.end())
            fail(ErrKind::Internal, "missing literal table");
        BinderTable& tbl = tbl_it->second;

        scopes_.push_back(ScopeFrame{&tbl, {}});
        StructLit lit;
        while (at(Tok::KwVal) || at(Tok::KwLet) || at(Tok::KwMixin)) {
            StructComponent comp;
            if (at(Tok::KwVal)) {
                eat();
                Token nm = expect(Tok::Ident, "deferred component name");
                expect(Tok::Colon, "':'");
                comp.type_text = parse_type_text();
                comp.deferred = true;
                comp.name = Name{nm.text};
                if (prescan_) {
                    if (tbl.deferred.count(nm.text))
                        fail(ErrKind::DuplicateBinder,
                             "deferred component '" + nm.text +
                                 "' declared twice");
                    tbl.deferred.emplace(nm.text,
                                         fresh_ident(nm.text, Sort::Core));
                }
                auto it = tbl.deferred.find(nm.text);
                if (it == tbl.deferred.end())
                    fail(ErrKind::Internal, "missing deferred table entry");
                comp.id = it->second;
            } else {
                bool mixin_kw = at(Tok::KwMixin);
                eat();
                comp.mixin_kw = mixin_kw;
                if (at(Tok::Underscore)) {
                    Token us = eat();
                    expect(Tok::Eq, "'='");
                    comp.anonymous = true;
                    comp.body = parse_expr();
                    // reserved unparseable name; hidden by the desugarer
                    if (prescan_) {
                        tables_.anon_names.emplace(
                            std::make_pair(us.line, us.col),
                            "#anon" + std::to_string(anon_counter_next()));
                        tables_.anon_idents.emplace(
                            std::make_pair(us.line, us.col),
                            fresh_ident("_anon", sort_of_body(comp.body)));
                    }
                    auto an = tables_.anon_names.find({us.line, us.col});
                    auto ai = tables_.anon_idents.find({us.line, us.col});
                    if (an == tables_.anon_names.end() ||
                        ai == tables_.anon_idents.end())
                        fail(ErrKind::Internal, "missing anonymous entry");
                    comp.name = Name{an->second};
                    comp.id = ai->second;
                } else {
                    Token nm = expect(Tok::Ident, "component name");
                    std::vector<Token> params = parse_param_tokens();
                    expect(Tok::Eq, "'='");
                    comp.name = Name{nm.text};
                    if (prescan_) {
                        if (tbl.defined.count(nm.text))
                            fail(ErrKind::DuplicateBinder,
                                 "defined component '" + nm.text +
                                     "' declared twice");
                        tbl.defined.emplace(nm.text,
                                            fresh_ident(nm.text, Sort::Core));
                    }
                    comp.body = parse_binding_body(params);
                    auto it = tbl.defined.find(nm.text);
                    if (it == tbl.defined.end())
                        fail(ErrKind::Internal, "missing defined table entry");
                    if (prescan_)
                        it->second.sort = sort_of_body(comp.body);
                    comp.id = it->second;
                }
            }
            lit.comps.push_back(std::move(comp));
        }
        if (at(Tok::KwConstraint)) {
            eat();
            parse_constraint_pairs(tbl, lit.annot);
        }
        if (at(Tok::KwTrigger)) {
            eat();
            parse_trigger_sets(tbl, lit.annot);
        }
        expect(Tok::RBrace, "'}'");
        scopes_.pop_back();
        return mk_expr(std::move(lit), open.line, open.col);
    }

    ConstraintAtom parse_atom(const BinderTable& tbl) {
        Mode mode = Mode::Ordinary;
        if (at(Tok::Ident) && cur().text == "int" &&
            ahead().kind == Tok::Ident) {
            eat();
            mode = Mode::Internal;
        } else if (at(Tok::Ident) && cur().text == "ext" &&
                   ahead().kind == Tok::Ident) {
            eat();
            mode = Mode::External;
        }
        Token nm = expect(Tok::Ident, "component name in constraint");
        const Ident* id = tbl.resolve(nm.text);
        if (!id)
            fail(ErrKind::UnknownConstraintTarget,
                 "constraint names '" + nm.text +
                     "', which is not a component of this structure");
        return ConstraintAtom{*id, mode};
    }

    void parse_constraint_pairs(const BinderTable& tbl, LocalConstraint& out) {
        auto pair = [&]() {
            expect(Tok::LParen, "'('");
            ConstraintAtom a = parse_atom(tbl);
            expect(Tok::Comma, "','");
            ConstraintAtom b = parse_atom(tbl);
            expect(Tok::RParen, "')'");
            out.theta.insert({a, b});
        };
        pair();
        while (at(Tok::Comma)) {
            eat();
            pair();
        }
    }

    void parse_trigger_sets(const BinderTable& tbl, LocalConstraint& out) {
        auto one = [&]() {
            expect(Tok::LBrace, "'{'");
            std::set<ConstraintAtom> s;
            s.insert(parse_atom(tbl));
            while (at(Tok::Comma)) {
                eat();
                s.insert(parse_atom(tbl));
            }
            expect(Tok::RBrace, "'}'");
            out.add_trigger_set(s);
        };
        one();
        while (at(Tok::Comma)) {
            eat();
            one();
        }
    }

    const std::vector<Token>& toks_;
    PrescanTables& tables_;
    bool prescan_;
    std::size_t pos_ = 0;
    bool in_psi_ = false;
    std::vector<ScopeFrame> scopes_;
};

} // namespace detail

// --------------------------------------------------------------- public API

inline Program parse_program(const std::string& source) {
    std::vector<Token> toks = detail::lex(source);
    detail::PrescanTables tables;
    detail::Parser pass1(toks, tables, /*prescan=*/true);
    pass1.run(); // builds binder tables; output discarded
    detail::Parser pass2(toks, tables, /*prescan=*/false);
    return pass2.run();
}

// Wrap every literal containing anonymous components in hide operators for
// their reserved names.
inline ExprPtr desugar_expr(const ExprPtr& e);

namespace detail {

inline std::vector<ExprPtr> desugar_list(const std::vector<ExprPtr>& xs) {
    std::vector<ExprPtr> out;
    out.reserve(xs.size());
    for (const auto& x : xs) out.push_back(desugar_expr(x));
    return out;
}

} // namespace detail

inline ExprPtr desugar_expr(const ExprPtr& e) {
    if (!e) return e;
    const int ln = e->line, co = e->col;
    return std::visit(
        [&](const auto& n) -> ExprPtr {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, StructLit>) {
                StructLit out = n;
                std::vector<Name> anon;
                for (auto& c : out.comps) {
                    if (c.body) c.body = desugar_expr(c.body);
                    if (c.anonymous) anon.push_back(c.name);
                }
                ExprPtr lit = mk_expr(std::move(out), ln, co);
                for (const auto& nm : anon)
                    lit = mk_expr(HideE{nm, lit}, ln, co);
                return lit;
            } else if constexpr (std::is_same_v<T, ListLit>) {
                return mk_expr(ListLit{detail::desugar_list(n.items)}, ln, co);
            } else if constexpr (std::is_same_v<T, Binary>) {
                return mk_expr(Binary{n.op, desugar_expr(n.lhs),
                                      desugar_expr(n.rhs)}, ln, co);
            } else if constexpr (std::is_same_v<T, If>) {
                return mk_expr(If{desugar_expr(n.cond),
                                  desugar_expr(n.then_branch),
                                  desugar_expr(n.else_branch)}, ln, co);
            } else if constexpr (std::is_same_v<T, Lambda>) {
                return mk_expr(Lambda{n.param, n.unit_param,
                                      desugar_expr(n.body)}, ln, co);
            } else if constexpr (std::is_same_v<T, App>) {
                return mk_expr(App{desugar_expr(n.fn), desugar_expr(n.arg)},
                               ln, co);
            } else if constexpr (std::is_same_v<T, Let>) {
                return mk_expr(Let{n.binder, desugar_expr(n.bound),
                                   desugar_expr(n.body)}, ln, co);
            } else if constexpr (std::is_same_v<T, RefNew>) {
                return mk_expr(RefNew{desugar_expr(n.init)}, ln, co);
            } else if constexpr (std::is_same_v<T, Deref>) {
                return mk_expr(Deref{desugar_expr(n.target)}, ln, co);
            } else if constexpr (std::is_same_v<T, Assign>) {
                return mk_expr(Assign{desugar_expr(n.target),
                                      desugar_expr(n.value)}, ln, co);
            } else if constexpr (std::is_same_v<T, BuiltinCall>) {
                return mk_expr(BuiltinCall{n.name,
                                           detail::desugar_list(n.args)},
                               ln, co);
            } else if constexpr (std::is_same_v<T, SumE>) {
                return mk_expr(SumE{desugar_expr(n.lhs), desugar_expr(n.rhs)},
                               ln, co);
            } else if constexpr (std::is_same_v<T, RenameE>) {
                return mk_expr(RenameE{n.phi1, desugar_expr(n.body), n.phi2},
                               ln, co);
            } else if constexpr (std::is_same_v<T, HideE>) {
                return mk_expr(HideE{n.name, desugar_expr(n.body)}, ln, co);
            } else if constexpr (std::is_same_v<T, FreezeE>) {
                FreezeE out;
                for (const auto& [nm, ex] : n.psi)
                    out.psi.emplace_back(nm, desugar_expr(ex));
                out.body = desugar_expr(n.body);
                return mk_expr(std::move(out), ln, co);
            } else if constexpr (std::is_same_v<T, CloseE>) {
                return mk_expr(CloseE{desugar_expr(n.body)}, ln, co);
            } else if constexpr (std::is_same_v<T, Project>) {
                return mk_expr(Project{desugar_expr(n.body), n.name}, ln, co);
            } else {
                return e;
            }
        },
        e->node);
}

// Assemble the whole program: an implicit top-level structure holding every
// binding as a defined component (its local constraint is always empty, so
// mutually recursive top-level mixins stay demand-driven under every
// strategy), closed, with `main` projected out.
inline ExprPtr desugar(const Program& prog) {
    StructLit top;
    top.synthetic = true;
    for (const auto& b : prog.bindings) {
        StructComponent c;
        c.id = b.id;
        c.id.sort = sort_of_body(b.body);
        c.name = Name{b.name};
        c.mixin_kw = b.mixin_kw;
        c.body = desugar_expr(b.body);
        top.comps.push_back(std::move(c));
    }
    ExprPtr lit = mk_expr(std::move(top));
    return mk_expr(Project{mk_expr(CloseE{lit}), Name{"main"}});
}

} // namespace lyre
