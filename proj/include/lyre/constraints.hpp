#pragma once

// The pluggable constraint engine.
//
// A structure's local constraint speaks about its components (by identifier,
// in ordinary/internal/external mode); closing the structure instantiates
// those atoms over the three freshly allocated location families and merges
// them into the global constraint, which the location-forcing rules consult.
//
// A Strategy decides three things: the constraint attached to a structure
// literal (annotate), what remains of a structure's constraint when it is
// closed (mu), and how two constraints combine under sum (nu).

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include "lyre/ast.hpp"

namespace lyre {

// ------------------------------------------------------- global constraint

struct GlobalConstraint {
    std::set<std::pair<Loc, Loc>> theta; // (before, gated): consume to force
    std::vector<std::set<Loc>> delta;    // trigger sets, consumed whole

    // smallest-index predecessor edge into l, if any
    std::optional<Loc> first_pred(Loc l) const {
        for (const auto& [a, b] : theta)
            if (b == l) return a; // set order: sorted by (a, b)
        return std::nullopt;
    }
    std::vector<Loc> preds(Loc l) const {
        std::vector<Loc> out;
        for (const auto& [a, b] : theta)
            if (b == l) out.push_back(a);
        return out; // ascending by construction
    }
    bool has_pred(Loc l) const {
        for (const auto& [a, b] : theta)
            if (b == l) return true;
        return false;
    }
    void erase_edge(Loc a, Loc b) { theta.erase({a, b}); }

    bool in_any_trigger_set(Loc l) const {
        for (const auto& s : delta)
            if (s.count(l)) return true;
        return false;
    }
    // remove and return the first trigger set containing l
    std::optional<std::set<Loc>> take_trigger_set(Loc l) {
        for (std::size_t i = 0; i < delta.size(); ++i) {
            if (delta[i].count(l)) {
                std::set<Loc> s = std::move(delta[i]);
                delta.erase(delta.begin() + static_cast<std::ptrdiff_t>(i));
                return s;
            }
        }
        return std::nullopt;
    }

    void dump(std::ostream& os) const {
        for (const auto& [a, b] : theta)
            os << describe(a) << " -> " << describe(b) << "\n";
        for (const auto& s : delta) {
            os << "{";
            bool first = true;
            for (const auto& l : s) {
                if (!first) os << ", ";
                first = false;
                os << describe(l);
            }
            os << "}\n";
        }
    }
};

// --------------------------------------------------------- instantiation

// The three location families allocated by a constrained close, keyed by
// component identifier uid.
struct CloseMaps {
    std::map<std::uint64_t, Loc> ordinary; // l:   the evaluation cell
    std::map<std::uint64_t, Loc> internal; // l':  sibling access
    std::map<std::uint64_t, Loc> external; // l'': projection access
};

inline Loc atom_location(const ConstraintAtom& a, const CloseMaps& maps) {
    const std::map<std::uint64_t, Loc>* family = nullptr;
    switch (a.mode) {
    case Mode::Ordinary: family = &maps.ordinary; break;
    case Mode::Internal: family = &maps.internal; break;
    case Mode::External: family = &maps.external; break;
    }
    auto it = family->find(a.id.uid);
    if (it == family->end())
        fail(ErrKind::UnhousedAtom,
             "constraint atom " + describe(a) +
                 " names no component of the closed structure");
    return it->second;
}

struct InstantiatedConstraint {
    std::set<std::pair<Loc, Loc>> theta;
    std::vector<std::set<Loc>> delta;
};

inline InstantiatedConstraint instantiate(const LocalConstraint& pi,
                                          const CloseMaps& maps) {
    InstantiatedConstraint out;
    for (const auto& [a, b] : pi.theta)
        out.theta.insert({atom_location(a, maps), atom_location(b, maps)});
    for (const auto& s : pi.delta) {
        std::set<Loc> locs;
        for (const auto& a : s) locs.insert(atom_location(a, maps));
        out.delta.push_back(std::move(locs));
    }
    return out;
}

// ---------------------------------------------------------------- strategy

struct Strategy {
    virtual ~Strategy() = default;
    virtual std::string name() const = 0;

    // constraint carried by a (non-synthetic) structure literal
    virtual LocalConstraint annotate(const StructLit& lit) const = 0;

    // constraint remaining on the structure produced by close
    virtual LocalConstraint mu(const StructValue& s) const = 0;

    // combination at sum; rhs has already been alpha-refreshed
    virtual LocalConstraint nu(const StructValue& lhs,
                               const StructValue& rhs) const = 0;

    // extra operand preconditions at sum (objinit rejects closed operands)
    virtual void check_sum_operands(const StructValue&,
                                    const StructValue&) const {}
};

using StrategyPtr = std::shared_ptr<const Strategy>;

namespace detail {

inline bool is_core(const Ident& id) { return id.sort == Sort::Core; }

// every component identifier of a structure value: dom(iota) + dom(rho)
inline std::vector<Ident> all_components(const StructValue& s) {
    std::vector<Ident> out;
    for (const auto& [id, nm] : s.input) out.push_back(id);
    for (const auto& [id, body] : s.binding.entries) out.push_back(id);
    return out;
}

inline std::vector<Ident> all_components(const StructLit& lit) {
    std::vector<Ident> out;
    out.reserve(lit.comps.size());
    for (const auto& c : lit.comps) out.push_back(c.id);
    return out;
}

inline std::vector<Ident> defined_components(const StructLit& lit) {
    std::vector<Ident> out;
    for (const auto& c : lit.comps)
        if (!c.deferred) out.push_back(c.id);
    return out;
}

} // namespace detail

// ---- pure lazy: user annotations pass through untouched -------------------

struct PureLazyStrategy final : Strategy {
    std::string name() const override { return "pure-lazy"; }
    LocalConstraint annotate(const StructLit& lit) const override {
        return lit.annot;
    }
    LocalConstraint mu(const StructValue&) const override { return {}; }
    LocalConstraint nu(const StructValue& a,
                       const StructValue& b) const override {
        return constraint_union(a.constraint, b.constraint);
    }
};

// ---- recursive-module initialization: internally lazy-field, externally ---
// lazy-record, core components initialized top-down

struct RecmodStrategy final : Strategy {
    std::string name() const override { return "recmod"; }

    LocalConstraint annotate(const StructLit& lit) const override {
        LocalConstraint out;
        std::vector<Ident> defined = detail::defined_components(lit);
        std::vector<Ident> everyone = detail::all_components(lit);
        // core definitions run before any later definition
        for (std::size_t i = 0; i < defined.size(); ++i) {
            if (!detail::is_core(defined[i])) continue;
            for (std::size_t j = i + 1; j < defined.size(); ++j)
                out.theta.insert({ConstraintAtom{defined[i], Mode::Ordinary},
                                  ConstraintAtom{defined[j], Mode::Ordinary}});
        }
        // external access waits for every core component
        for (const auto& x : everyone) {
            if (!detail::is_core(x)) continue;
            for (const auto& y : everyone)
                out.theta.insert({ConstraintAtom{x, Mode::Ordinary},
                                  ConstraintAtom{y, Mode::External}});
        }
        return out;
    }

    LocalConstraint mu(const StructValue&) const override { return {}; }

    LocalConstraint nu(const StructValue& a,
                       const StructValue& b) const override {
        LocalConstraint out =
            constraint_union(a.constraint, b.constraint);
        std::vector<Ident> xs = detail::all_components(a);
        std::vector<Ident> ys = detail::all_components(b);
        std::vector<Ident> all = xs;
        all.insert(all.end(), ys.begin(), ys.end());
        for (const auto& x : all) {
            if (!detail::is_core(x)) continue;
            for (const auto& y : all)
                out.theta.insert({ConstraintAtom{x, Mode::Ordinary},
                                  ConstraintAtom{y, Mode::External}});
        }
        return out;
    }
};

// ---- object initialization: a close runs every field of the object (the ---
// whole trigger set) before any internal or external field access succeeds

struct ObjInitStrategy final : Strategy {
    std::string name() const override { return "objinit"; }

    LocalConstraint annotate(const StructLit& lit) const override {
        for (const auto& c : lit.comps)
            if (c.id.sort == Sort::Mixin)
                fail(ErrKind::StrategyRestriction,
                     "objinit forbids mixin-valued components (component '" +
                         c.name.text + "')");
        LocalConstraint out;
        std::vector<Ident> everyone = detail::all_components(lit);
        std::set<ConstraintAtom> whole;
        for (const auto& x : everyone) {
            whole.insert(ConstraintAtom{x, Mode::Ordinary});
            for (const auto& y : everyone) {
                out.theta.insert({ConstraintAtom{x, Mode::Ordinary},
                                  ConstraintAtom{y, Mode::External}});
                out.theta.insert({ConstraintAtom{x, Mode::Ordinary},
                                  ConstraintAtom{y, Mode::Internal}});
            }
        }
        if (!whole.empty()) out.add_trigger_set(whole);
        return out;
    }

    LocalConstraint mu(const StructValue&) const override { return {}; }

    LocalConstraint nu(const StructValue& a,
                       const StructValue& b) const override {
        LocalConstraint out;
        out.theta = a.constraint.theta;
        out.theta.insert(b.constraint.theta.begin(),
                         b.constraint.theta.end());
        std::vector<Ident> xs = detail::all_components(a);
        std::vector<Ident> ys = detail::all_components(b);
        // superclass layer initializes before subclass layer
        for (const auto& x : xs)
            for (const auto& y : ys)
                out.theta.insert({ConstraintAtom{x, Mode::Ordinary},
                                  ConstraintAtom{y, Mode::Ordinary}});
        std::set<ConstraintAtom> whole;
        for (const auto& x : xs) whole.insert(ConstraintAtom{x, Mode::Ordinary});
        for (const auto& y : ys) whole.insert(ConstraintAtom{y, Mode::Ordinary});
        if (!whole.empty()) out.add_trigger_set(whole);
        return out;
    }

    void check_sum_operands(const StructValue& a,
                            const StructValue& b) const override {
        if (a.closed || b.closed)
            fail(ErrKind::StrategyRestriction,
                 "objinit only sums open mixins");
    }
};

// ---- triggered top-down: core definitions keep their textual order and ----
// the first field access runs the whole structure

struct TriggerTopDownStrategy final : Strategy {
    std::string name() const override { return "trigger-topdown"; }

    LocalConstraint annotate(const StructLit& lit) const override {
        LocalConstraint out;
        std::vector<Ident> defined = detail::defined_components(lit);
        for (std::size_t i = 0; i < defined.size(); ++i) {
            if (!detail::is_core(defined[i])) continue;
            for (std::size_t j = i + 1; j < defined.size(); ++j) {
                if (!detail::is_core(defined[j])) continue;
                out.theta.insert({ConstraintAtom{defined[i], Mode::Ordinary},
                                  ConstraintAtom{defined[j], Mode::Ordinary}});
            }
        }
        std::set<ConstraintAtom> whole;
        for (const auto& x : defined)
            whole.insert(ConstraintAtom{x, Mode::Ordinary});
        if (!whole.empty()) out.add_trigger_set(whole);
        return out;
    }

    LocalConstraint mu(const StructValue&) const override { return {}; }

    LocalConstraint nu(const StructValue& a,
                       const StructValue& b) const override {
        return constraint_union(a.constraint, b.constraint);
    }
};

inline StrategyPtr make_strategy(const std::string& name) {
    if (name == "pure-lazy") return std::make_shared<PureLazyStrategy>();
    if (name == "recmod") return std::make_shared<RecmodStrategy>();
    if (name == "objinit") return std::make_shared<ObjInitStrategy>();
    if (name == "trigger-topdown")
        return std::make_shared<TriggerTopDownStrategy>();
    fail(ErrKind::Parse, "unknown strategy '" + name + "'");
}

} // namespace lyre
