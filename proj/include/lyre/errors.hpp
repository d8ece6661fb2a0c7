#pragma once

// Error taxonomy shared by every stage of the interpreter.  Each kind maps
// to a stable name (used in CLI "error:" lines and golden expectations) and
// to a process exit code: parse-time problems exit 2, the step budget exits
// 3, everything raised during evaluation exits 1.

#include <stdexcept>
#include <string>

namespace lyre {

enum class ErrKind {
    // parse / desugar (exit 2)
    Parse,
    DuplicateBinder,
    UnknownConstraintTarget,
    // evaluation (exit 1)
    CyclicDependency,
    ConstraintViolation,
    UnresolvedComponent,
    OpenMixinOperation,
    NameClash,
    CompositionUndefined,
    DisjointnessViolation,
    FreezeMismatch,
    UnknownProjection,
    CoreTypeError,
    UnhousedAtom,
    StrategyRestriction,
    // resource limit (exit 3)
    StepBudgetExceeded,
    // interpreter bug (an invariant assertion failed)
    Internal,
};

inline const char* err_name(ErrKind k) {
    switch (k) {
    case ErrKind::Parse:                   return "ParseError";
    case ErrKind::DuplicateBinder:         return "DuplicateBinder";
    case ErrKind::UnknownConstraintTarget: return "UnknownConstraintTarget";
    case ErrKind::CyclicDependency:        return "CyclicDependency";
    case ErrKind::ConstraintViolation:     return "ConstraintViolation";
    case ErrKind::UnresolvedComponent:     return "UnresolvedComponent";
    case ErrKind::OpenMixinOperation:      return "OpenMixinOperation";
    case ErrKind::NameClash:               return "NameClash";
    case ErrKind::CompositionUndefined:    return "CompositionUndefined";
    case ErrKind::DisjointnessViolation:   return "DisjointnessViolation";
    case ErrKind::FreezeMismatch:          return "FreezeMismatch";
    case ErrKind::UnknownProjection:       return "UnknownProjection";
    case ErrKind::CoreTypeError:           return "CoreTypeError";
    case ErrKind::UnhousedAtom:            return "UnhousedAtom";
    case ErrKind::StrategyRestriction:     return "StrategyRestriction";
    case ErrKind::StepBudgetExceeded:      return "StepBudgetExceeded";
    case ErrKind::Internal:                return "InternalError";
    }
    return "InternalError";
}

inline int err_exit_code(ErrKind k) {
    switch (k) {
    case ErrKind::Parse:
    case ErrKind::DuplicateBinder:
    case ErrKind::UnknownConstraintTarget:
        return 2;
    case ErrKind::StepBudgetExceeded:
        return 3;
    default:
        return 1;
    }
}

struct Error : std::runtime_error {
    ErrKind kind;
    Error(ErrKind k, const std::string& detail)
        : std::runtime_error(std::string(err_name(k)) + ": " + detail), kind(k) {}
};

[[noreturn]] inline void fail(ErrKind k, const std::string& detail) {
    throw Error(k, detail);
}

} // namespace lyre
