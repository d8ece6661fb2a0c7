#pragma once

// Shared fixtures for the unit suites: run a source program through the
// driver capturing output, or evaluate a single top binding's body and hand
// back the structure value for direct inspection.

#include <optional>
#include <sstream>
#include <string>

#include "lyre/driver.hpp"
#include "lyre/pretty.hpp"

namespace testing {

struct Outcome {
    int code = 0;
    std::string text;
};

inline Outcome run_text(const std::string& src,
                        lyre::RunOptions opts = {}) {
    std::ostringstream os;
    Outcome o;
    o.code = lyre::run_program(src, opts, os);
    o.text = os.str();
    return o;
}

// Evaluate the body of the named top-level binding in isolation (no other
// top bindings are in scope) and return the resulting structure.
inline lyre::StructPtr eval_struct(const std::string& program_text,
                                   const std::string& binding,
                                   const std::string& strategy = "pure-lazy") {
    lyre::Program prog = lyre::parse_program(program_text);
    for (const auto& tb : prog.bindings) {
        if (tb.name != binding) continue;
        lyre::Effects fx;
        lyre::ConstrainedInterp interp(lyre::make_strategy(strategy), fx,
                                       1'000'000);
        lyre::Value v = interp.eval(lyre::desugar_expr(tb.body), nullptr);
        const lyre::StructPtr* s = v.as<lyre::StructPtr>();
        if (!s) lyre::fail(lyre::ErrKind::Internal, "binding is not a mixin");
        return *s;
    }
    lyre::fail(lyre::ErrKind::Internal, "no binding named " + binding);
}

// Run `f`, returning the taxonomy kind of the error it throws (if any).
template <class F>
std::optional<lyre::ErrKind> kind_of(F&& f) {
    try {
        f();
    } catch (const lyre::Error& e) {
        return e.kind;
    }
    return std::nullopt;
}

// Detail text of the error `f` throws, or empty.
template <class F>
std::string error_text_of(F&& f) {
    try {
        f();
    } catch (const lyre::Error& e) {
        return e.what();
    }
    return "";
}

} // namespace testing
