#pragma once

// Constraint-aware lazy evaluation.  Close allocates three cells per
// component (the body, an internal alias, an external alias), instantiates
// the structure's local constraint over those cells, and folds it into one
// global constraint.  Forcing a cell then honours that constraint:
//
//   * a pending trigger set containing the cell fires as a unit — the
//     demanded member first, then the rest in ascending location order;
//   * a memoized cell answers immediately (and may not be edge-gated);
//   * a cell with incoming ordering edges first detours through each
//     predecessor, consuming the edge, before its own body runs;
//   * only then does the body evaluate and memoize.
//
// While a detour is on the activation stack, re-reading a cell that is
// already under evaluation is an ordering violation rather than an ordinary
// cycle: the declared order demands a value the current computation is in
// the middle of producing.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "lyre/constraints.hpp"
#include "lyre/eval_base.hpp"

namespace lyre {

// Picks which predecessor edge to honour first when several gate the same
// location; returns an index into `candidates` (always non-empty, ascending).
// The default takes the smallest location; the enumeration driver installs a
// scripted chooser to explore the alternatives.
using EdgeChooser =
    std::function<std::size_t(Loc target, const std::vector<Loc>& candidates)>;

class ConstrainedInterp : public Interp {
public:
    ConstrainedInterp(StrategyPtr strategy, Effects& effects,
                      std::uint64_t step_budget)
        : Interp(std::move(strategy), Variant::Lazy, effects, step_budget) {}

    // observation hooks
    std::function<void(const std::string&)> on_constraint_event;
    std::function<void(const GlobalConstraint&)> on_close;
    EdgeChooser chooser;

    GlobalConstraint& global() { return global_; }
    const GlobalConstraint& global() const { return global_; }

    Value force_loc(Loc l) override {
        tick();
        if (const ErrorSentinel* s = heap().sentinel_at(l))
            sentinel_error(l, s->tag);

        // trigger rule: a pending set containing l fires as a unit
        if (auto set = global_.take_trigger_set(l)) {
            if (heap().holds_value(l))
                fail(ErrKind::Internal,
                     "trigger set member " + describe(l) +
                         " is already memoized");
            trace_trigger(*set);
            Value head = force_loc(l); // the set is gone; ordinary rules apply
            for (Loc m : *set) {
                if (m == l) continue;
                frames_.push_back({FrameKind::Detour, m});
                force_loc(m);
                frames_.pop_back();
            }
            return head;
        }

        if (const Value* v = heap().value_at(l)) {
            if (global_.has_pred(l))
                fail(ErrKind::Internal,
                     "memoized location " + describe(l) +
                         " is still gated by an ordering edge");
            return *v;
        }

        // edge rule: detour through each predecessor, consuming its edge
        while (true) {
            std::vector<Loc> cands = global_.preds(l);
            if (cands.empty()) break;
            std::size_t pick = chooser ? chooser(l, cands) : 0;
            if (pick >= cands.size())
                fail(ErrKind::Internal, "edge chooser index out of range");
            Loc p = cands[pick];
            HeapObject displaced = heap().blackhole(l, SentinelTag::Constraint);
            frames_.push_back({FrameKind::Plant, l});
            frames_.push_back({FrameKind::Detour, p});
            force_loc(p); // value discarded: only the ordering matters
            frames_.pop_back();
            frames_.pop_back();
            heap().restore(l, std::move(displaced));
            global_.erase_edge(p, l);
            trace_line("EDGE " + describe(p) + " -> " + describe(l) +
                       " consumed");
        }

        // plain demand
        ExprPtr body = *heap().expr_at(l);
        trace_line("FORCE " + describe(l));
        heap().blackhole(l, SentinelTag::Cycle);
        frames_.push_back({FrameKind::Plant, l});
        ++eval_counts_[l.index];
        Value v = eval(body, nullptr);
        frames_.pop_back();
        heap().write_value(l, v);
        trace_line("MEMO " + describe(l));
        return v;
    }

protected:
    // Three cells per component: l holds the body (sibling references point
    // here through the internal alias), l' the internal alias, l'' the
    // external alias the result binding exposes.  Constraint atoms name the
    // family their mode selects.
    StructPtr close_structure(const StructValue& s) override {
        CloseMaps maps;
        std::vector<Loc> bodies;
        bodies.reserve(s.binding.size());
        IdentSubst sibling;
        for (const auto& [id, body] : s.binding.entries) {
            Loc l = heap().alloc(body);
            Loc li = heap().alloc(mk_expr(LocRef{l}));
            Loc le = heap().alloc(mk_expr(LocRef{l}));
            maps.ordinary.emplace(id.uid, l);
            maps.internal.emplace(id.uid, li);
            maps.external.emplace(id.uid, le);
            bodies.push_back(l);
            sibling.emplace(id.uid, mk_expr(LocRef{li}));
        }
        StructValue out;
        out.output = s.output;
        out.closed = true;
        std::size_t i = 0;
        for (const auto& [id, body] : s.binding.entries) {
            heap().update_expr(bodies[i], subst_idents(body, sibling));
            out.binding.add(id, mk_expr(LocRef{maps.external.at(id.uid)}));
            ++i;
        }
        InstantiatedConstraint inst = instantiate(s.constraint, maps);
        global_.theta.insert(inst.theta.begin(), inst.theta.end());
        for (auto& ts : inst.delta) global_.delta.push_back(std::move(ts));
        out.constraint = strategy().mu(s);
        auto sp = std::make_shared<const StructValue>(std::move(out));
        if (on_close) on_close(global_);
        return sp;
    }

private:
    enum class FrameKind { Plant, Detour };
    struct Frame {
        FrameKind kind;
        Loc loc;
    };

    // Classify a read of an in-progress cell.  If the innermost activation
    // that planted m's sentinel has any detour frame above it, the read was
    // reached on behalf of the constraint, so the declared order is at
    // fault; otherwise the computation genuinely depends on itself.
    [[noreturn]] void sentinel_error(Loc m, SentinelTag tag) {
        bool detour_above = false;
        for (auto it = frames_.rbegin(); it != frames_.rend(); ++it) {
            if (it->kind == FrameKind::Plant && it->loc == m) {
                if (detour_above)
                    fail(ErrKind::ConstraintViolation,
                         "the declared order demands " + describe(m) +
                             " while it is already under evaluation");
                break;
            }
            if (it->kind == FrameKind::Detour) detour_above = true;
        }
        if (tag == SentinelTag::Constraint)
            fail(ErrKind::ConstraintViolation,
                 "the declared order demands " + describe(m) +
                     " while it is already under evaluation");
        fail(ErrKind::CyclicDependency,
             "evaluation of " + describe(m) + " depends on itself");
    }

    void trace_line(const std::string& line) {
        if (on_constraint_event) on_constraint_event(line);
    }

    void trace_trigger(const std::set<Loc>& set) {
        if (!on_constraint_event) return;
        std::string out = "TRIGGER {";
        bool first = true;
        for (Loc m : set) {
            if (!first) out += ", ";
            first = false;
            out += describe(m);
        }
        out += "} fired";
        on_constraint_event(out);
    }

    GlobalConstraint global_;
    std::vector<Frame> frames_;
};

} // namespace lyre
