#pragma once

// Surface printer for parsed (pre-desugar) programs.  The output is
// canonical: printing, reparsing, and printing again yields the same text,
// which the round-trip tests rely on.  Atoms and bracketed forms print bare;
// every other compound expression is parenthesized, so the printed text
// reparses to the same tree no matter where it is embedded.

#include <string>
#include <vector>

#include "lyre/ast.hpp"
#include "lyre/parser.hpp"
#include "lyre/value.hpp" // detail::quote_string

namespace lyre {

namespace detail {

inline bool refers_to(const ExprPtr& e, std::uint64_t uid) {
    for (const auto& f : free_idents(e))
        if (f.uid == uid) return true;
    return false;
}

inline std::string binop_text(BinOp op) {
    switch (op) {
    case BinOp::Add:    return "+";
    case BinOp::Sub:    return "-";
    case BinOp::Mul:    return "*";
    case BinOp::Div:    return "/";
    case BinOp::Concat: return "^";
    case BinOp::Eq:     return "=";
    case BinOp::Ne:     return "<>";
    case BinOp::Lt:     return "<";
    case BinOp::Gt:     return ">";
    case BinOp::Le:     return "<=";
    case BinOp::Ge:     return ">=";
    case BinOp::And:    return "&&";
    case BinOp::Or:     return "||";
    }
    return "?";
}

inline std::string print_expr(const ExprPtr& e);

inline std::string print_renaming(const Renaming& phi) {
    std::string out = "(";
    bool first = true;
    for (const auto& [from, to] : phi) {
        if (!first) out += "; ";
        first = false;
        out += from.text + " -> " + to.text;
    }
    return out + ")";
}

inline std::string atom_text(const ConstraintAtom& a,
                             const std::vector<StructComponent>& comps) {
    for (const auto& c : comps)
        if (c.id.uid == a.id.uid)
            return std::string(mode_prefix(a.mode)) + c.name.text;
    fail(ErrKind::Internal,
         "constraint atom does not name a component of its literal");
}

inline std::string print_struct_lit(const StructLit& lit) {
    std::string out = "{";
    for (const auto& c : lit.comps) {
        out += " ";
        if (c.deferred) {
            out += "val " + c.name.text + " : " + c.type_text;
            continue;
        }
        out += c.mixin_kw ? "mixin " : "let ";
        out += c.anonymous ? "_" : c.name.text;
        out += " = " + print_expr(c.body);
    }
    if (!lit.annot.theta.empty()) {
        out += " constraint ";
        bool first = true;
        for (const auto& [a, b] : lit.annot.theta) {
            if (!first) out += ", ";
            first = false;
            out += "(" + atom_text(a, lit.comps) + ", " +
                   atom_text(b, lit.comps) + ")";
        }
    }
    if (!lit.annot.delta.empty()) {
        out += " trigger ";
        bool first = true;
        for (const auto& set : lit.annot.delta) {
            if (!first) out += ", ";
            first = false;
            out += "{";
            bool f2 = true;
            for (const auto& a : set) {
                if (!f2) out += ", ";
                f2 = false;
                out += atom_text(a, lit.comps);
            }
            out += "}";
        }
    }
    return out + " }";
}

inline std::string print_expr(const ExprPtr& e) {
    if (!e) fail(ErrKind::Internal, "printing a missing expression");
    return std::visit(
        [&](const auto& n) -> std::string {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, IntLit>) {
                return std::to_string(n.value);
            } else if constexpr (std::is_same_v<T, StrLit>) {
                return quote_string(n.value);
            } else if constexpr (std::is_same_v<T, BoolLit>) {
                return n.value ? "true" : "false";
            } else if constexpr (std::is_same_v<T, UnitLit>) {
                return "()";
            } else if constexpr (std::is_same_v<T, ListLit>) {
                std::string out = "[";
                for (std::size_t i = 0; i < n.items.size(); ++i) {
                    if (i) out += "; ";
                    out += print_expr(n.items[i]);
                }
                return out + "]";
            } else if constexpr (std::is_same_v<T, Binary>) {
                return "(" + print_expr(n.lhs) + " " + binop_text(n.op) +
                       " " + print_expr(n.rhs) + ")";
            } else if constexpr (std::is_same_v<T, If>) {
                return "(if " + print_expr(n.cond) + " then " +
                       print_expr(n.then_branch) + " else " +
                       print_expr(n.else_branch) + ")";
            } else if constexpr (std::is_same_v<T, Lambda>) {
                return "(fun " +
                       (n.unit_param ? std::string("()") : n.param.base) +
                       " -> " + print_expr(n.body) + ")";
            } else if constexpr (std::is_same_v<T, App>) {
                return "(" + print_expr(n.fn) + " " + print_expr(n.arg) +
                       ")";
            } else if constexpr (std::is_same_v<T, Let>) {
                // sequencing sugar prints back as sugar when the binder is
                // genuinely unused
                if (n.binder.base == "_seq" &&
                    !refers_to(n.body, n.binder.uid)) {
                    std::string out = "(" + print_expr(n.bound);
                    const Expr* rest = n.body.get();
                    while (true) {
                        const Let* l = std::get_if<Let>(&rest->node);
                        if (!l || l->binder.base != "_seq" ||
                            refers_to(l->body, l->binder.uid))
                            break;
                        out += "; " + print_expr(l->bound);
                        rest = l->body.get();
                    }
                    // print the tail; `rest` aliases a node we do not own
                    ExprPtr tail = std::make_shared<Expr>(*rest);
                    return out + "; " + print_expr(tail) + ")";
                }
                return "(let " + n.binder.base + " = " +
                       print_expr(n.bound) + " in " + print_expr(n.body) +
                       ")";
            } else if constexpr (std::is_same_v<T, RefNew>) {
                return "ref(" + print_expr(n.init) + ")";
            } else if constexpr (std::is_same_v<T, Deref>) {
                return "(!" + print_expr(n.target) + ")";
            } else if constexpr (std::is_same_v<T, Assign>) {
                return "(" + print_expr(n.target) + " := " +
                       print_expr(n.value) + ")";
            } else if constexpr (std::is_same_v<T, BuiltinCall>) {
                std::string out = n.name + "(";
                for (std::size_t i = 0; i < n.args.size(); ++i) {
                    if (i) out += ", ";
                    out += print_expr(n.args[i]);
                }
                return out + ")";
            } else if constexpr (std::is_same_v<T, BuiltinRef>) {
                return n.name;
            } else if constexpr (std::is_same_v<T, IdentRef>) {
                return n.id.base;
            } else if constexpr (std::is_same_v<T, NameRef>) {
                return n.name.text;
            } else if constexpr (std::is_same_v<T, LocRef>) {
                fail(ErrKind::Internal,
                     "heap reference in a printed program");
            } else if constexpr (std::is_same_v<T, StructLit>) {
                return print_struct_lit(n);
            } else if constexpr (std::is_same_v<T, SumE>) {
                return "(" + print_expr(n.lhs) + " <- " +
                       print_expr(n.rhs) + ")";
            } else if constexpr (std::is_same_v<T, RenameE>) {
                return "rename[" + print_renaming(n.phi1) + ", " +
                       print_renaming(n.phi2) + "](" + print_expr(n.body) +
                       ")";
            } else if constexpr (std::is_same_v<T, HideE>) {
                return "hide[" + n.name.text + "](" + print_expr(n.body) +
                       ")";
            } else if constexpr (std::is_same_v<T, FreezeE>) {
                std::string out = "freeze[";
                for (std::size_t i = 0; i < n.psi.size(); ++i) {
                    if (i) out += "; ";
                    out += n.psi[i].first.text + " -> " +
                           print_expr(n.psi[i].second);
                }
                return out + "](" + print_expr(n.body) + ")";
            } else if constexpr (std::is_same_v<T, CloseE>) {
                return "close(" + print_expr(n.body) + ")";
            } else {
                static_assert(std::is_same_v<T, Project>, "unhandled node");
                return print_expr(n.body) + "." + n.name.text;
            }
        },
        e->node);
}

} // namespace detail

inline std::string print_program(const Program& prog) {
    std::string out;
    for (const auto& b : prog.bindings) {
        out += b.mixin_kw ? "mixin " : "let ";
        out += b.name + " = " + detail::print_expr(b.body) + "\n";
    }
    return out;
}

} // namespace lyre
