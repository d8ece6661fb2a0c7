#pragma once

// The evaluation heap sigma: a monotonically growing store of cells, each
// holding an unevaluated expression, a memoized value, or an in-progress
// sentinel.  Sentinels tag why the cell is under evaluation (plain demand vs
// a constraint-ordered detour) so a re-entrant read can be classified as
// CyclicDependency or ConstraintViolation by the evaluator.

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <variant>
#include <vector>

#include "lyre/ast.hpp"
#include "lyre/value.hpp"

namespace lyre {

enum class SentinelTag { Cycle, Constraint };

struct ErrorSentinel {
    SentinelTag tag = SentinelTag::Cycle;
};

using HeapObject = std::variant<ExprPtr, Value, ErrorSentinel>;

class Heap {
public:
    Loc alloc(ExprPtr e) {
        cells_.emplace_back(std::move(e));
        ++writes_;
        return Loc{cells_.size() - 1};
    }

    Loc alloc_value(Value v) {
        cells_.emplace_back(std::move(v));
        ++writes_;
        return Loc{cells_.size() - 1};
    }

    std::size_t size() const { return cells_.size(); }
    std::uint64_t writes() const { return writes_; }

    const HeapObject& read(Loc l) const { return at(l); }

    bool holds_value(Loc l) const {
        return std::holds_alternative<Value>(at(l));
    }
    bool holds_expr(Loc l) const {
        return std::holds_alternative<ExprPtr>(at(l));
    }

    const Value* value_at(Loc l) const { return std::get_if<Value>(&at(l)); }
    const ExprPtr* expr_at(Loc l) const { return std::get_if<ExprPtr>(&at(l)); }
    const ErrorSentinel* sentinel_at(Loc l) const {
        return std::get_if<ErrorSentinel>(&at(l));
    }

    // Replace the cell with an in-progress sentinel, returning what it held
    // so the evaluator can restore it after a constraint detour.
    HeapObject blackhole(Loc l, SentinelTag tag) {
        HeapObject displaced = std::move(at(l));
        at(l) = ErrorSentinel{tag};
        ++writes_;
        return displaced;
    }

    void restore(Loc l, HeapObject obj) {
        if (!std::holds_alternative<ErrorSentinel>(at(l)))
            fail(ErrKind::Internal,
                 "restore over a non-sentinel cell " + describe(l));
        at(l) = std::move(obj);
        ++writes_;
    }

    // Close builds cells in two passes: allocate every component first (so
    // sibling locations exist), then swap each raw body for its substituted
    // form.  Only an expression cell may be rewritten this way.
    void update_expr(Loc l, ExprPtr e) {
        if (!std::holds_alternative<ExprPtr>(at(l)))
            fail(ErrKind::Internal,
                 "expression fixup over a non-expression cell " + describe(l));
        at(l) = std::move(e);
        ++writes_;
    }

    // Memoize: values are write-once, and only over a sentinel (the cell
    // must have been blackholed by the forcing that computed the value).
    void write_value(Loc l, Value v) {
        if (std::holds_alternative<Value>(at(l)))
            fail(ErrKind::Internal,
                 "value cell rewritten at " + describe(l));
        at(l) = std::move(v);
        ++writes_;
    }

    // Debug dump: one line per cell.
    void dump(std::ostream& os) const {
        for (std::size_t i = 0; i < cells_.size(); ++i) {
            os << "l" << i << ": ";
            std::visit(
                [&](const auto& x) {
                    using T = std::decay_t<decltype(x)>;
                    if constexpr (std::is_same_v<T, ExprPtr>) {
                        os << "EXPR";
                    } else if constexpr (std::is_same_v<T, Value>) {
                        os << "VALUE " << render_value(x);
                    } else {
                        os << "ERROR("
                           << (x.tag == SentinelTag::Cycle ? "cycle"
                                                           : "constraint")
                           << ")";
                    }
                },
                cells_[i]);
            os << "\n";
        }
    }

private:
    HeapObject& at(Loc l) {
        if (l.index >= cells_.size())
            fail(ErrKind::Internal, "dangling location " + describe(l));
        return cells_[l.index];
    }
    const HeapObject& at(Loc l) const {
        if (l.index >= cells_.size())
            fail(ErrKind::Internal, "dangling location " + describe(l));
        return cells_[l.index];
    }

    std::vector<HeapObject> cells_;
    std::uint64_t writes_ = 0;
};

} // namespace lyre
