#pragma once

// Syntax layer: identifiers, external names, heap locations, the expression
// tree, structure values, local constraints, and the total-map utilities the
// structure operators are built from.
//
// Identifiers carry a globally unique uid, so renaming a structure's
// components (alpha_refresh) or substituting locations for identifiers at
// close never needs scope tracking: a uid can only ever be bound once.

#include <atomic>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <variant>
#include <vector>

#include "lyre/errors.hpp"

namespace lyre {

// ---------------------------------------------------------------- identity

// Identifier sorts: a defined component is mixin-sorted when its body is
// headed by a structure literal or a structure operator, core-sorted
// otherwise (projections and references included).  Deferred components are
// core-sorted until a freeze replaces them.
enum class Sort { Core, Mixin };

struct Ident {
    std::string base; // the surface spelling, kept for messages and printing
    std::uint64_t uid = 0;
    Sort sort = Sort::Core;

    bool operator==(const Ident& o) const { return uid == o.uid; }
    bool operator!=(const Ident& o) const { return uid != o.uid; }
    bool operator<(const Ident& o) const { return uid < o.uid; }
};

inline Ident fresh_ident(const std::string& base, Sort sort) {
    static std::atomic<std::uint64_t> counter{0};
    return Ident{base, ++counter, sort};
}

inline std::string describe(const Ident& id) {
    return id.base + "#" + std::to_string(id.uid);
}

// External names are immutable text; two names are the same name iff their
// text is equal.
struct Name {
    std::string text;

    bool operator==(const Name& o) const { return text == o.text; }
    bool operator!=(const Name& o) const { return text != o.text; }
    bool operator<(const Name& o) const { return text < o.text; }
};

inline std::string describe(const Name& n) { return n.text; }

// Heap locations; allocation order is the numeric order of indices.
struct Loc {
    std::uint64_t index = 0;

    bool operator==(const Loc& o) const { return index == o.index; }
    bool operator!=(const Loc& o) const { return index != o.index; }
    bool operator<(const Loc& o) const { return index < o.index; }
};

inline std::string describe(const Loc& l) {
    return "l" + std::to_string(l.index);
}

// ------------------------------------------------------------- finite maps

using InputAssignment = std::map<Ident, Name>;  // iota: deferred ident -> name
using OutputAssignment = std::map<Name, Ident>; // o: exported name -> ident
using Renaming = std::map<Name, Name>;          // phi1 / phi2 of rename

// Union of maps with disjoint domains.
template <class M>
M map_union(const M& a, const M& b) {
    M out = a;
    for (const auto& [k, v] : b) {
        auto [it, inserted] = out.insert({k, v});
        if (!inserted)
            fail(ErrKind::DisjointnessViolation,
                 "domains overlap at " + describe(k));
        (void)it;
    }
    return out;
}

// Composition (outer . inner): defined on dom(inner), every inner value must
// be a key of outer.
template <class MOuter, class MInner>
auto map_compose(const MOuter& outer, const MInner& inner)
    -> std::map<typename MInner::key_type, typename MOuter::mapped_type> {
    std::map<typename MInner::key_type, typename MOuter::mapped_type> out;
    for (const auto& [k, mid] : inner) {
        auto it = outer.find(mid);
        if (it == outer.end())
            fail(ErrKind::CompositionUndefined,
                 "no mapping for " + describe(mid));
        out.insert({k, it->second});
    }
    return out;
}

// ------------------------------------------------------- local constraints

enum class Mode { Ordinary, Internal, External };

inline const char* mode_prefix(Mode m) {
    switch (m) {
    case Mode::Ordinary: return "";
    case Mode::Internal: return "int ";
    case Mode::External: return "ext ";
    }
    return "";
}

struct ConstraintAtom {
    Ident id;
    Mode mode = Mode::Ordinary;

    bool operator==(const ConstraintAtom& o) const {
        return id == o.id && mode == o.mode;
    }
    bool operator<(const ConstraintAtom& o) const {
        if (id.uid != o.id.uid) return id.uid < o.id.uid;
        return mode < o.mode;
    }
};

inline std::string describe(const ConstraintAtom& a) {
    return std::string(mode_prefix(a.mode)) + a.id.base;
}

// pi = (theta, delta).  theta is a set of ordered atom pairs ("evaluate the
// first before granting the second"); delta is a set of trigger sets whose
// members must be ordinary-mode atoms.
struct LocalConstraint {
    std::set<std::pair<ConstraintAtom, ConstraintAtom>> theta;
    std::set<std::set<ConstraintAtom>> delta;

    bool empty() const { return theta.empty() && delta.empty(); }

    void add_trigger_set(const std::set<ConstraintAtom>& s) {
        for (const auto& a : s)
            if (a.mode != Mode::Ordinary)
                fail(ErrKind::Internal,
                     "trigger set member must be an ordinary atom: " +
                         describe(a));
        delta.insert(s);
    }
};

inline LocalConstraint constraint_union(const LocalConstraint& a,
                                        const LocalConstraint& b) {
    LocalConstraint out = a;
    out.theta.insert(b.theta.begin(), b.theta.end());
    out.delta.insert(b.delta.begin(), b.delta.end());
    return out;
}

// ---------------------------------------------------------------- expr tree

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

struct IntLit { std::int64_t value = 0; };
struct StrLit { std::string value; };
struct BoolLit { bool value = false; };
struct UnitLit {};
struct ListLit { std::vector<ExprPtr> items; };

enum class BinOp {
    Add, Sub, Mul, Div,
    Concat,
    Eq, Ne, Lt, Gt, Le, Ge,
    And, Or,
};

struct Binary { BinOp op; ExprPtr lhs, rhs; };
struct If { ExprPtr cond, then_branch, else_branch; };

// fun x -> body; `fun () -> body` keeps a throwaway parameter and demands a
// unit argument at application time.
struct Lambda { Ident param; bool unit_param = false; ExprPtr body; };
struct App { ExprPtr fn, arg; };
struct Let { Ident binder; ExprPtr bound, body; };

struct RefNew { ExprPtr init; };
struct Deref { ExprPtr target; };
struct Assign { ExprPtr target, value; };

struct BuiltinCall { std::string name; std::vector<ExprPtr> args; };
struct BuiltinRef { std::string name; };

struct IdentRef { Ident id; };
struct NameRef { Name name; };   // appears only inside freeze tyings
struct LocRef { Loc loc; };

struct StructComponent {
    Ident id;
    Name name;               // external name; anonymous components get a
                             // reserved "#anon<n>" name and are hidden by
                             // the desugarer
    bool deferred = false;   // val (hole) vs let/mixin (definition)
    bool anonymous = false;
    bool mixin_kw = false;   // written with the `mixin` keyword
    std::string type_text;   // surface type annotation of a val, kept
                             // verbatim for printing only
    ExprPtr body;            // null for deferred components
};

struct StructLit {
    std::vector<StructComponent> comps; // textual order
    LocalConstraint annot;              // compiled user annotation
    bool synthetic = false;             // the implicit whole-program literal
};

struct SumE { ExprPtr lhs, rhs; };
struct RenameE { Renaming phi1; ExprPtr body; Renaming phi2; };
struct HideE { Name name; ExprPtr body; };
struct FreezeE { std::vector<std::pair<Name, ExprPtr>> psi; ExprPtr body; };
struct CloseE { ExprPtr body; };
struct Project { ExprPtr body; Name name; };

struct Expr {
    using Node = std::variant<IntLit, StrLit, BoolLit, UnitLit, ListLit,
                              Binary, If, Lambda, App, Let, RefNew, Deref,
                              Assign, BuiltinCall, BuiltinRef, IdentRef,
                              NameRef, LocRef, StructLit, SumE, RenameE,
                              HideE, FreezeE, CloseE, Project>;
    Node node;
    int line = 0;
    int col = 0;
};

template <class T>
ExprPtr mk_expr(T n, int line = 0, int col = 0) {
    auto e = std::make_shared<Expr>();
    e->node = std::move(n);
    e->line = line;
    e->col = col;
    return e;
}

template <class T>
const T* expr_as(const ExprPtr& e) {
    return e ? std::get_if<T>(&e->node) : nullptr;
}

// Sort of a defined component, decided by the head of its right-hand side.
inline Sort sort_of_body(const ExprPtr& e) {
    if (!e) return Sort::Core;
    if (std::holds_alternative<StructLit>(e->node) ||
        std::holds_alternative<SumE>(e->node) ||
        std::holds_alternative<RenameE>(e->node) ||
        std::holds_alternative<HideE>(e->node) ||
        std::holds_alternative<FreezeE>(e->node) ||
        std::holds_alternative<CloseE>(e->node))
        return Sort::Mixin;
    return Sort::Core;
}

// ------------------------------------------------------- ordered bindings

// rho: identifier -> definition, totally ordered by definition position.
// Union concatenates (left operand first), preserving both textual orders.
struct Binding {
    std::vector<std::pair<Ident, ExprPtr>> entries;

    bool contains(const Ident& id) const {
        for (const auto& [k, v] : entries)
            if (k == id) return true;
        return false;
    }
    const ExprPtr* find(const Ident& id) const {
        for (const auto& [k, v] : entries)
            if (k == id) return &v;
        return nullptr;
    }
    // position in the definition order, used by i<j constraint comprehensions
    std::optional<std::size_t> index_of(const Ident& id) const {
        for (std::size_t i = 0; i < entries.size(); ++i)
            if (entries[i].first == id) return i;
        return std::nullopt;
    }
    void add(const Ident& id, ExprPtr e) {
        if (contains(id))
            fail(ErrKind::DisjointnessViolation,
                 "binding already holds " + describe(id));
        entries.emplace_back(id, std::move(e));
    }
    std::size_t size() const { return entries.size(); }
};

inline Binding binding_union(const Binding& a, const Binding& b) {
    Binding out = a;
    for (const auto& [k, v] : b.entries) out.add(k, v);
    return out;
}

// ---------------------------------------------------------- structure value

// A mixin structure <iota; o; rho; pi>.  Closed structures additionally set
// `closed`; their rho maps every component to a location reference.
struct StructValue {
    InputAssignment input;
    OutputAssignment output;
    Binding binding;
    LocalConstraint constraint;
    bool closed = false;
};

using StructPtr = std::shared_ptr<const StructValue>;

// -------------------------------------------------- substitution / walking

using IdentSubst = std::unordered_map<std::uint64_t, ExprPtr>;

// Replace identifier references found in `subst` throughout an expression,
// descending into nested structure literals (their binders have distinct
// uids, so no capture is possible).  Shared subtrees without a hit are
// reused as-is.
inline ExprPtr subst_idents(const ExprPtr& e, const IdentSubst& subst);

namespace detail {

inline std::vector<ExprPtr> subst_list(const std::vector<ExprPtr>& xs,
                                       const IdentSubst& s) {
    std::vector<ExprPtr> out;
    out.reserve(xs.size());
    for (const auto& x : xs) out.push_back(subst_idents(x, s));
    return out;
}

} // namespace detail

inline ExprPtr subst_idents(const ExprPtr& e, const IdentSubst& subst) {
    if (!e || subst.empty()) return e;
    const int ln = e->line, co = e->col;
    return std::visit(
        [&](const auto& n) -> ExprPtr {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, IdentRef>) {
                auto it = subst.find(n.id.uid);
                if (it == subst.end()) return e;
                return it->second;
            } else if constexpr (std::is_same_v<T, IntLit> ||
                                 std::is_same_v<T, StrLit> ||
                                 std::is_same_v<T, BoolLit> ||
                                 std::is_same_v<T, UnitLit> ||
                                 std::is_same_v<T, BuiltinRef> ||
                                 std::is_same_v<T, NameRef> ||
                                 std::is_same_v<T, LocRef>) {
                return e;
            } else if constexpr (std::is_same_v<T, ListLit>) {
                return mk_expr(ListLit{detail::subst_list(n.items, subst)}, ln, co);
            } else if constexpr (std::is_same_v<T, Binary>) {
                return mk_expr(Binary{n.op, subst_idents(n.lhs, subst),
                                      subst_idents(n.rhs, subst)}, ln, co);
            } else if constexpr (std::is_same_v<T, If>) {
                return mk_expr(If{subst_idents(n.cond, subst),
                                  subst_idents(n.then_branch, subst),
                                  subst_idents(n.else_branch, subst)}, ln, co);
            } else if constexpr (std::is_same_v<T, Lambda>) {
                return mk_expr(Lambda{n.param, n.unit_param,
                                      subst_idents(n.body, subst)}, ln, co);
            } else if constexpr (std::is_same_v<T, App>) {
                return mk_expr(App{subst_idents(n.fn, subst),
                                   subst_idents(n.arg, subst)}, ln, co);
            } else if constexpr (std::is_same_v<T, Let>) {
                return mk_expr(Let{n.binder, subst_idents(n.bound, subst),
                                   subst_idents(n.body, subst)}, ln, co);
            } else if constexpr (std::is_same_v<T, RefNew>) {
                return mk_expr(RefNew{subst_idents(n.init, subst)}, ln, co);
            } else if constexpr (std::is_same_v<T, Deref>) {
                return mk_expr(Deref{subst_idents(n.target, subst)}, ln, co);
            } else if constexpr (std::is_same_v<T, Assign>) {
                return mk_expr(Assign{subst_idents(n.target, subst),
                                      subst_idents(n.value, subst)}, ln, co);
            } else if constexpr (std::is_same_v<T, BuiltinCall>) {
                return mk_expr(BuiltinCall{n.name,
                                           detail::subst_list(n.args, subst)},
                               ln, co);
            } else if constexpr (std::is_same_v<T, StructLit>) {
                StructLit out = n;
                for (auto& c : out.comps)
                    if (c.body) c.body = subst_idents(c.body, subst);
                return mk_expr(std::move(out), ln, co);
            } else if constexpr (std::is_same_v<T, SumE>) {
                return mk_expr(SumE{subst_idents(n.lhs, subst),
                                    subst_idents(n.rhs, subst)}, ln, co);
            } else if constexpr (std::is_same_v<T, RenameE>) {
                return mk_expr(RenameE{n.phi1, subst_idents(n.body, subst),
                                       n.phi2}, ln, co);
            } else if constexpr (std::is_same_v<T, HideE>) {
                return mk_expr(HideE{n.name, subst_idents(n.body, subst)},
                               ln, co);
            } else if constexpr (std::is_same_v<T, FreezeE>) {
                FreezeE out;
                out.psi.reserve(n.psi.size());
                for (const auto& [nm, ex] : n.psi)
                    out.psi.emplace_back(nm, subst_idents(ex, subst));
                out.body = subst_idents(n.body, subst);
                return mk_expr(std::move(out), ln, co);
            } else if constexpr (std::is_same_v<T, CloseE>) {
                return mk_expr(CloseE{subst_idents(n.body, subst)}, ln, co);
            } else if constexpr (std::is_same_v<T, Project>) {
                return mk_expr(Project{subst_idents(n.body, subst), n.name},
                               ln, co);
            } else {
                static_assert(std::is_same_v<T, IdentRef>, "unhandled node");
                return e;
            }
        },
        e->node);
}

// Replace external-name references throughout an expression.  Used by freeze
// to turn the names of a tying into the identifiers the output assignment
// designates.  Tyings of nested freezes are left alone: their names resolve
// against the nested operand's own outputs.
using NameSubst = std::map<Name, ExprPtr>;

inline ExprPtr subst_names(const ExprPtr& e, const NameSubst& subst);

namespace detail {

inline std::vector<ExprPtr> subst_names_list(const std::vector<ExprPtr>& xs,
                                             const NameSubst& s) {
    std::vector<ExprPtr> out;
    out.reserve(xs.size());
    for (const auto& x : xs) out.push_back(subst_names(x, s));
    return out;
}

} // namespace detail

inline ExprPtr subst_names(const ExprPtr& e, const NameSubst& subst) {
    if (!e || subst.empty()) return e;
    const int ln = e->line, co = e->col;
    return std::visit(
        [&](const auto& n) -> ExprPtr {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, NameRef>) {
                auto it = subst.find(n.name);
                if (it == subst.end()) return e;
                return it->second;
            } else if constexpr (std::is_same_v<T, IntLit> ||
                                 std::is_same_v<T, StrLit> ||
                                 std::is_same_v<T, BoolLit> ||
                                 std::is_same_v<T, UnitLit> ||
                                 std::is_same_v<T, BuiltinRef> ||
                                 std::is_same_v<T, IdentRef> ||
                                 std::is_same_v<T, LocRef>) {
                return e;
            } else if constexpr (std::is_same_v<T, ListLit>) {
                return mk_expr(ListLit{detail::subst_names_list(n.items, subst)},
                               ln, co);
            } else if constexpr (std::is_same_v<T, Binary>) {
                return mk_expr(Binary{n.op, subst_names(n.lhs, subst),
                                      subst_names(n.rhs, subst)}, ln, co);
            } else if constexpr (std::is_same_v<T, If>) {
                return mk_expr(If{subst_names(n.cond, subst),
                                  subst_names(n.then_branch, subst),
                                  subst_names(n.else_branch, subst)}, ln, co);
            } else if constexpr (std::is_same_v<T, Lambda>) {
                return mk_expr(Lambda{n.param, n.unit_param,
                                      subst_names(n.body, subst)}, ln, co);
            } else if constexpr (std::is_same_v<T, App>) {
                return mk_expr(App{subst_names(n.fn, subst),
                                   subst_names(n.arg, subst)}, ln, co);
            } else if constexpr (std::is_same_v<T, Let>) {
                return mk_expr(Let{n.binder, subst_names(n.bound, subst),
                                   subst_names(n.body, subst)}, ln, co);
            } else if constexpr (std::is_same_v<T, RefNew>) {
                return mk_expr(RefNew{subst_names(n.init, subst)}, ln, co);
            } else if constexpr (std::is_same_v<T, Deref>) {
                return mk_expr(Deref{subst_names(n.target, subst)}, ln, co);
            } else if constexpr (std::is_same_v<T, Assign>) {
                return mk_expr(Assign{subst_names(n.target, subst),
                                      subst_names(n.value, subst)}, ln, co);
            } else if constexpr (std::is_same_v<T, BuiltinCall>) {
                return mk_expr(
                    BuiltinCall{n.name, detail::subst_names_list(n.args, subst)},
                    ln, co);
            } else if constexpr (std::is_same_v<T, StructLit>) {
                StructLit out = n;
                for (auto& c : out.comps)
                    if (c.body) c.body = subst_names(c.body, subst);
                return mk_expr(std::move(out), ln, co);
            } else if constexpr (std::is_same_v<T, SumE>) {
                return mk_expr(SumE{subst_names(n.lhs, subst),
                                    subst_names(n.rhs, subst)}, ln, co);
            } else if constexpr (std::is_same_v<T, RenameE>) {
                return mk_expr(RenameE{n.phi1, subst_names(n.body, subst),
                                       n.phi2}, ln, co);
            } else if constexpr (std::is_same_v<T, HideE>) {
                return mk_expr(HideE{n.name, subst_names(n.body, subst)},
                               ln, co);
            } else if constexpr (std::is_same_v<T, FreezeE>) {
                // tyings untouched: they are the nested freeze's business
                return mk_expr(FreezeE{n.psi, subst_names(n.body, subst)},
                               ln, co);
            } else if constexpr (std::is_same_v<T, CloseE>) {
                return mk_expr(CloseE{subst_names(n.body, subst)}, ln, co);
            } else {
                static_assert(std::is_same_v<T, Project>, "unhandled node");
                return mk_expr(Project{subst_names(n.body, subst), n.name},
                               ln, co);
            }
        },
        e->node);
}

// Free identifier references: every IdentRef uid minus every binder uid in
// the tree.  Exact because uids are globally unique.
inline void collect_ident_refs(const ExprPtr& e,
                               std::set<std::uint64_t>& refs,
                               std::set<std::uint64_t>& binders,
                               std::map<std::uint64_t, Ident>* spelling = nullptr) {
    if (!e) return;
    std::visit(
        [&](const auto& n) {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, IdentRef>) {
                refs.insert(n.id.uid);
                if (spelling) spelling->emplace(n.id.uid, n.id);
            } else if constexpr (std::is_same_v<T, ListLit>) {
                for (const auto& x : n.items)
                    collect_ident_refs(x, refs, binders, spelling);
            } else if constexpr (std::is_same_v<T, Binary>) {
                collect_ident_refs(n.lhs, refs, binders, spelling);
                collect_ident_refs(n.rhs, refs, binders, spelling);
            } else if constexpr (std::is_same_v<T, If>) {
                collect_ident_refs(n.cond, refs, binders, spelling);
                collect_ident_refs(n.then_branch, refs, binders, spelling);
                collect_ident_refs(n.else_branch, refs, binders, spelling);
            } else if constexpr (std::is_same_v<T, Lambda>) {
                binders.insert(n.param.uid);
                collect_ident_refs(n.body, refs, binders, spelling);
            } else if constexpr (std::is_same_v<T, App>) {
                collect_ident_refs(n.fn, refs, binders, spelling);
                collect_ident_refs(n.arg, refs, binders, spelling);
            } else if constexpr (std::is_same_v<T, Let>) {
                binders.insert(n.binder.uid);
                collect_ident_refs(n.bound, refs, binders, spelling);
                collect_ident_refs(n.body, refs, binders, spelling);
            } else if constexpr (std::is_same_v<T, RefNew>) {
                collect_ident_refs(n.init, refs, binders, spelling);
            } else if constexpr (std::is_same_v<T, Deref>) {
                collect_ident_refs(n.target, refs, binders, spelling);
            } else if constexpr (std::is_same_v<T, Assign>) {
                collect_ident_refs(n.target, refs, binders, spelling);
                collect_ident_refs(n.value, refs, binders, spelling);
            } else if constexpr (std::is_same_v<T, BuiltinCall>) {
                for (const auto& x : n.args)
                    collect_ident_refs(x, refs, binders, spelling);
            } else if constexpr (std::is_same_v<T, StructLit>) {
                for (const auto& c : n.comps) {
                    binders.insert(c.id.uid);
                    if (c.body) collect_ident_refs(c.body, refs, binders, spelling);
                }
            } else if constexpr (std::is_same_v<T, SumE>) {
                collect_ident_refs(n.lhs, refs, binders, spelling);
                collect_ident_refs(n.rhs, refs, binders, spelling);
            } else if constexpr (std::is_same_v<T, RenameE>) {
                collect_ident_refs(n.body, refs, binders, spelling);
            } else if constexpr (std::is_same_v<T, HideE>) {
                collect_ident_refs(n.body, refs, binders, spelling);
            } else if constexpr (std::is_same_v<T, FreezeE>) {
                for (const auto& [nm, ex] : n.psi)
                    collect_ident_refs(ex, refs, binders, spelling);
                collect_ident_refs(n.body, refs, binders, spelling);
            } else if constexpr (std::is_same_v<T, CloseE>) {
                collect_ident_refs(n.body, refs, binders, spelling);
            } else if constexpr (std::is_same_v<T, Project>) {
                collect_ident_refs(n.body, refs, binders, spelling);
            }
        },
        e->node);
}

inline std::vector<Ident> free_idents(const ExprPtr& e) {
    std::set<std::uint64_t> refs, binders;
    std::map<std::uint64_t, Ident> spelling;
    collect_ident_refs(e, refs, binders, &spelling);
    std::vector<Ident> out;
    for (auto uid : refs)
        if (!binders.count(uid)) out.push_back(spelling.at(uid));
    return out;
}

// Free external names in rho bodies are forbidden; names inside freeze
// tyings are resolved by the freeze itself and do not count.
inline void collect_free_names(const ExprPtr& e, std::set<Name>& out) {
    if (!e) return;
    std::visit(
        [&](const auto& n) {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, NameRef>) {
                out.insert(n.name);
            } else if constexpr (std::is_same_v<T, ListLit>) {
                for (const auto& x : n.items) collect_free_names(x, out);
            } else if constexpr (std::is_same_v<T, Binary>) {
                collect_free_names(n.lhs, out);
                collect_free_names(n.rhs, out);
            } else if constexpr (std::is_same_v<T, If>) {
                collect_free_names(n.cond, out);
                collect_free_names(n.then_branch, out);
                collect_free_names(n.else_branch, out);
            } else if constexpr (std::is_same_v<T, Lambda>) {
                collect_free_names(n.body, out);
            } else if constexpr (std::is_same_v<T, App>) {
                collect_free_names(n.fn, out);
                collect_free_names(n.arg, out);
            } else if constexpr (std::is_same_v<T, Let>) {
                collect_free_names(n.bound, out);
                collect_free_names(n.body, out);
            } else if constexpr (std::is_same_v<T, RefNew>) {
                collect_free_names(n.init, out);
            } else if constexpr (std::is_same_v<T, Deref>) {
                collect_free_names(n.target, out);
            } else if constexpr (std::is_same_v<T, Assign>) {
                collect_free_names(n.target, out);
                collect_free_names(n.value, out);
            } else if constexpr (std::is_same_v<T, BuiltinCall>) {
                for (const auto& x : n.args) collect_free_names(x, out);
            } else if constexpr (std::is_same_v<T, StructLit>) {
                for (const auto& c : n.comps)
                    if (c.body) collect_free_names(c.body, out);
            } else if constexpr (std::is_same_v<T, SumE>) {
                collect_free_names(n.lhs, out);
                collect_free_names(n.rhs, out);
            } else if constexpr (std::is_same_v<T, RenameE>) {
                collect_free_names(n.body, out);
            } else if constexpr (std::is_same_v<T, HideE>) {
                collect_free_names(n.body, out);
            } else if constexpr (std::is_same_v<T, FreezeE>) {
                // tyings skipped: their names resolve against dom(o)
                collect_free_names(n.body, out);
            } else if constexpr (std::is_same_v<T, CloseE>) {
                collect_free_names(n.body, out);
            } else if constexpr (std::is_same_v<T, Project>) {
                collect_free_names(n.body, out);
            }
        },
        e->node);
}

// ------------------------------------------------------------ wellformedness

// dom(iota) and dom(rho) disjoint; range(o) within them; no free external
// name in any rho body; constraint atoms drawn from the component universe.
inline void check_wellformed(const StructValue& s) {
    std::set<std::uint64_t> universe;
    for (const auto& [id, nm] : s.input) universe.insert(id.uid);
    for (const auto& [id, body] : s.binding.entries) {
        if (universe.count(id.uid))
            fail(ErrKind::Internal,
                 "identifier both deferred and defined: " + describe(id));
        universe.insert(id.uid);
    }
    for (const auto& [nm, id] : s.output)
        if (!universe.count(id.uid))
            fail(ErrKind::Internal,
                 "output " + describe(nm) + " maps outside the structure");
    for (const auto& [id, body] : s.binding.entries) {
        std::set<Name> names;
        collect_free_names(body, names);
        if (!names.empty())
            fail(ErrKind::Internal, "free name " + describe(*names.begin()) +
                                        " in body of " + describe(id));
    }
    auto check_atom = [&](const ConstraintAtom& a) {
        if (!universe.count(a.id.uid))
            fail(ErrKind::Internal,
                 "constraint atom outside the structure: " + describe(a));
    };
    for (const auto& [a, b] : s.constraint.theta) {
        check_atom(a);
        check_atom(b);
    }
    for (const auto& ss : s.constraint.delta)
        for (const auto& a : ss) check_atom(a);
}

// ------------------------------------------------------------ alpha refresh

// Rename every component identifier of a structure to a fresh one (same
// spelling, same sort), consistently across iota, o, rho keys, bodies, and
// the local constraint.  Locations inside closed bodies are untouched, so a
// refreshed closed structure still shares its cells with the original.
inline StructValue alpha_refresh(const StructValue& s) {
    std::map<std::uint64_t, Ident> renames;
    IdentSubst subst;
    auto refresh = [&](const Ident& id) {
        Ident nu = fresh_ident(id.base, id.sort);
        renames.emplace(id.uid, nu);
        subst.emplace(id.uid, mk_expr(IdentRef{nu}));
        return nu;
    };
    StructValue out;
    out.closed = s.closed;
    for (const auto& [id, nm] : s.input) out.input.insert({refresh(id), nm});
    for (const auto& [id, body] : s.binding.entries)
        refresh(id);
    auto renamed = [&](const Ident& id) {
        auto it = renames.find(id.uid);
        return it == renames.end() ? id : it->second;
    };
    for (const auto& [id, body] : s.binding.entries)
        out.binding.add(renames.at(id.uid), subst_idents(body, subst));
    for (const auto& [nm, id] : s.output) out.output.insert({nm, renamed(id)});
    for (const auto& [a, b] : s.constraint.theta)
        out.constraint.theta.insert(
            {ConstraintAtom{renamed(a.id), a.mode},
             ConstraintAtom{renamed(b.id), b.mode}});
    for (const auto& ss : s.constraint.delta) {
        std::set<ConstraintAtom> ns;
        for (const auto& a : ss) ns.insert(ConstraintAtom{renamed(a.id), a.mode});
        out.constraint.delta.insert(ns);
    }
    return out;
}

} // namespace lyre
