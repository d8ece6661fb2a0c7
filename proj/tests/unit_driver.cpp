// Driver behaviour: exit-code mapping, flag validation, schedule
// enumeration, and the constraint observation hooks.

#include <catch2/catch_amalgamated.hpp>

#include "helpers.hpp"

using namespace lyre;
using testing::run_text;

TEST_CASE("exit codes by failure class") {
    CHECK(run_text("let main = 1").code == 0);
    CHECK(run_text("let main = (").code == 2);
    CHECK(run_text("mixin M = { let x = 1  let x = 2 }\nlet main = 0").code ==
          2);
    CHECK(run_text("mixin M = close({ let a = a })\nlet main = M.a").code ==
          1);
    RunOptions tiny;
    tiny.step_budget = 50;
    CHECK(run_text("let loop = fun f -> f f\nlet main = loop loop", tiny)
              .code == 3);
}

TEST_CASE("constraint tooling demands the lazy variant") {
    RunOptions cbn;
    cbn.variant = "cbn";

    RunOptions tracing = cbn;
    tracing.trace_constraints = true;
    auto o = run_text("let main = 1", tracing);
    CHECK(o.code == 2);
    CHECK_THAT(o.text, Catch::Matchers::StartsWith("error: ParseError:"));

    RunOptions dumping = cbn;
    dumping.dump_constraints = true;
    CHECK(run_text("let main = 1", dumping).code == 2);

    RunOptions enumerating;
    enumerating.variant = "eager";
    enumerating.enumerate = true;
    CHECK(run_text("let main = 1", enumerating).code == 2);
}

TEST_CASE("constraint annotations demand the lazy variant") {
    RunOptions cbn;
    cbn.variant = "cbn";
    auto top = run_text(
        "mixin M = { let a = 1  constraint (a, a) }\nlet main = 0", cbn);
    CHECK(top.code == 2);
    // annotations buried under binders are found too
    auto nested = run_text(
        "let f = fun x -> { let a = 1  constraint (a, a) }\nlet main = 0",
        cbn);
    CHECK(nested.code == 2);
    // the same programs run fine under the default variant
    CHECK(run_text("mixin M = { let a = 1  constraint (a, a) }\n"
                   "let main = 0")
              .code == 0);
}

TEST_CASE("unknown strategy or variant names fail before running") {
    RunOptions bad_variant;
    bad_variant.variant = "sideways";
    CHECK(run_text("let main = 1", bad_variant).code == 2);
    RunOptions bad_strategy;
    bad_strategy.strategy = "sideways";
    CHECK(run_text("let main = 1", bad_strategy).code == 2);
}

TEST_CASE("enumeration of a deterministic program yields one trace") {
    RunOptions opts;
    opts.enumerate = true;
    auto o = run_text("let main = print 5", opts);
    CHECK(o.code == 0);
    CHECK(o.text == "trace: 5 => result: 5\ntraces: 1\n");
}

TEST_CASE("enumeration reports per-schedule errors and keeps going") {
    RunOptions opts;
    opts.enumerate = true;
    auto o = run_text("mixin M = close({ let a = a })\nlet main = M.a", opts);
    CHECK(o.code == 0);
    CHECK(o.text == "trace: => error: CyclicDependency\ntraces: 1\n");
}

TEST_CASE("constraint dump fires after every close") {
    RunOptions opts;
    opts.dump_constraints = true;
    auto o = run_text("let main = 1", opts);
    // the whole-program close carries no constraints: header only
    CHECK(o.text == "constraints after close:\nresult: 1\n");
}

TEST_CASE("constraint trace logs forcing and memoization") {
    RunOptions opts;
    opts.trace_constraints = true;
    auto o = run_text("let main = 1", opts);
    CHECK(o.text == "FORCE l2\nFORCE l0\nMEMO l0\nMEMO l2\nresult: 1\n");
}

TEST_CASE("effect trace serializes sequence, kind, and payload") {
    RunOptions opts;
    opts.trace = true;
    auto o = run_text("let main = print \"a\"; print 2", opts);
    CHECK(o.text == "1\tprint\ta\n2\tprint\t2\nresult: 2\n");
}
