#pragma once

// Program runner shared by the command line tool and the tests: parses,
// desugars, evaluates under the selected strategy and variant, and streams
// output.  Also hosts the trace-enumeration mode, which replays the program
// once per distinct edge-consumption schedule.

#include <cstdint>
#include <functional>
#include <memory>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include "lyre/eval_base.hpp"
#include "lyre/eval_constrained.hpp"
#include "lyre/parser.hpp"

namespace lyre {

struct RunOptions {
    std::string strategy = "pure-lazy";
    std::string variant = "lazy";
    bool trace = false;
    bool trace_constraints = false;
    bool dump_constraints = false;
    bool enumerate = false;
    std::uint64_t step_budget = 10'000'000;
};

namespace detail {

inline bool has_annotations(const ExprPtr& e) {
    if (!e) return false;
    bool found = false;
    std::function<void(const ExprPtr&)> walk = [&](const ExprPtr& x) {
        if (!x || found) return;
        std::visit(
            [&](const auto& n) {
                using T = std::decay_t<decltype(n)>;
                if constexpr (std::is_same_v<T, ListLit>) {
                    for (const auto& it : n.items) walk(it);
                } else if constexpr (std::is_same_v<T, Binary>) {
                    walk(n.lhs);
                    walk(n.rhs);
                } else if constexpr (std::is_same_v<T, If>) {
                    walk(n.cond);
                    walk(n.then_branch);
                    walk(n.else_branch);
                } else if constexpr (std::is_same_v<T, Lambda>) {
                    walk(n.body);
                } else if constexpr (std::is_same_v<T, App>) {
                    walk(n.fn);
                    walk(n.arg);
                } else if constexpr (std::is_same_v<T, Let>) {
                    walk(n.bound);
                    walk(n.body);
                } else if constexpr (std::is_same_v<T, RefNew>) {
                    walk(n.init);
                } else if constexpr (std::is_same_v<T, Deref>) {
                    walk(n.target);
                } else if constexpr (std::is_same_v<T, Assign>) {
                    walk(n.target);
                    walk(n.value);
                } else if constexpr (std::is_same_v<T, BuiltinCall>) {
                    for (const auto& a : n.args) walk(a);
                } else if constexpr (std::is_same_v<T, StructLit>) {
                    if (!n.annot.theta.empty() || !n.annot.delta.empty())
                        found = true;
                    for (const auto& c : n.comps) walk(c.body);
                } else if constexpr (std::is_same_v<T, SumE>) {
                    walk(n.lhs);
                    walk(n.rhs);
                } else if constexpr (std::is_same_v<T, RenameE>) {
                    walk(n.body);
                } else if constexpr (std::is_same_v<T, HideE>) {
                    walk(n.body);
                } else if constexpr (std::is_same_v<T, FreezeE>) {
                    for (const auto& [nm, ex] : n.psi) walk(ex);
                    walk(n.body);
                } else if constexpr (std::is_same_v<T, CloseE>) {
                    walk(n.body);
                } else if constexpr (std::is_same_v<T, Project>) {
                    walk(n.body);
                }
            },
            x->node);
    };
    walk(e);
    return found;
}

inline int run_once(const ExprPtr& program, const RunOptions& opts,
                    std::ostream& out) {
    Effects fx;
    fx.on_event = [&](const EffectEvent& ev) {
        if (opts.trace)
            out << serialize_event(ev) << "\n";
        else if (ev.kind == EffectKind::Print)
            out << ev.payload << "\n";
    };
    StrategyPtr strat = make_strategy(opts.strategy);
    std::unique_ptr<Interp> interp;
    if (opts.variant == "lazy") {
        auto ci = std::make_unique<ConstrainedInterp>(strat, fx,
                                                      opts.step_budget);
        if (opts.trace_constraints)
            ci->on_constraint_event = [&](const std::string& line) {
                out << line << "\n";
            };
        if (opts.dump_constraints)
            ci->on_close = [&](const GlobalConstraint& g) {
                out << "constraints after close:\n";
                g.dump(out);
            };
        interp = std::move(ci);
    } else {
        interp = std::make_unique<Interp>(strat,
                                          variant_from_name(opts.variant),
                                          fx, opts.step_budget);
    }
    Value v = interp->run(program);
    out << "result: " << render_value(v) << "\n";
    return 0;
}

// Depth-first exploration of every edge-consumption schedule: rerun the
// program, replaying a recorded prefix of decisions and extending it with
// first choices, until every branch of every decision point has been taken.
inline int run_enumerate(const ExprPtr& program, const RunOptions& opts,
                         std::ostream& out) {
    StrategyPtr strat = make_strategy(opts.strategy);
    std::vector<std::size_t> script; // decision prefix to replay
    std::vector<std::size_t> arity;  // candidate count seen at each decision
    std::vector<std::string> lines;  // first-seen order
    std::set<std::string> seen;
    while (true) {
        Effects fx;
        ConstrainedInterp ci(strat, fx, opts.step_budget);
        std::size_t decision = 0;
        ci.chooser = [&](Loc, const std::vector<Loc>& cands) -> std::size_t {
            if (cands.size() == 1) return 0; // not a decision point
            std::size_t idx = decision++;
            if (idx < script.size()) return script[idx];
            script.push_back(0);
            arity.push_back(cands.size());
            return 0;
        };
        std::string line = "trace:";
        try {
            Value v = ci.run(program);
            for (const auto& p : fx.print_payloads()) line += " " + p;
            line += " => result: " + render_value(v);
        } catch (const Error& e) {
            if (e.kind == ErrKind::StepBudgetExceeded) throw;
            for (const auto& p : fx.print_payloads()) line += " " + p;
            line += " => error: " + std::string(err_name(e.kind));
        }
        if (seen.insert(line).second) lines.push_back(line);
        // advance: bump the deepest decision that still has branches left
        while (!script.empty() && script.back() + 1 >= arity.back()) {
            script.pop_back();
            arity.pop_back();
        }
        if (script.empty()) break;
        ++script.back();
    }
    for (const auto& l : lines) out << l << "\n";
    out << "traces: " << std::to_string(lines.size()) << "\n";
    return 0;
}

} // namespace detail

// Parse and run `source`, streaming output to `out`.  Returns the process
// exit code: 0 on success, otherwise the code of the error reported on the
// final line.
inline int run_program(const std::string& source, const RunOptions& opts,
                       std::ostream& out) {
    try {
        if (opts.variant != "lazy" && opts.variant != "cbn" &&
            opts.variant != "eager")
            fail(ErrKind::Parse, "unknown variant '" + opts.variant + "'");
        make_strategy(opts.strategy); // rejects unknown names
        if (opts.variant != "lazy") {
            if (opts.enumerate)
                fail(ErrKind::Parse, "--enumerate requires the lazy variant");
            if (opts.trace_constraints || opts.dump_constraints)
                fail(ErrKind::Parse,
                     "constraint reporting requires the lazy variant");
        }
        Program prog = parse_program(source);
        ExprPtr program = desugar(prog);
        if (opts.variant != "lazy" && detail::has_annotations(program))
            fail(ErrKind::Parse,
                 "constraint annotations require the lazy variant");
        if (opts.enumerate) return detail::run_enumerate(program, opts, out);
        return detail::run_once(program, opts, out);
    } catch (const Error& e) {
        out << "error: " << e.what() << "\n";
        return err_exit_code(e.kind);
    }
}

} // namespace lyre
