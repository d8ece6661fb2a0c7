// Structure operators: literal formation, sum, rename, hide, freeze, close,
// projection, alpha refresh, and the wellformedness checks they maintain.

#include <catch2/catch_amalgamated.hpp>

#include "helpers.hpp"

using namespace lyre;
using testing::eval_struct;
using testing::kind_of;
using testing::run_text;

TEST_CASE("literal exports defined components only") {
    StructPtr s = eval_struct(
        "mixin M = { val p : int  let a = 1  let b = p + a }\nlet main = 0",
        "M");
    CHECK(s->output.size() == 2);
    CHECK(s->output.count(Name{"a"}) == 1);
    CHECK(s->output.count(Name{"b"}) == 1);
    CHECK(s->output.count(Name{"p"}) == 0);
    REQUIRE(s->input.size() == 1);
    CHECK(s->input.begin()->second == Name{"p"});
    REQUIRE(s->binding.size() == 2);
    CHECK(s->binding.entries[0].first.base == "a");
    CHECK(s->binding.entries[1].first.base == "b");
    CHECK_FALSE(s->closed);
}

TEST_CASE("anonymous components stay in the binding but not the outputs") {
    StructPtr s = eval_struct(
        "mixin M = { let _ = 1  let a = 2 }\nlet main = 0", "M");
    CHECK(s->binding.size() == 2);
    CHECK(s->output.size() == 1);
    CHECK(s->output.count(Name{"a"}) == 1);
}

TEST_CASE("sum concatenates bindings left-first and unions exports") {
    StructPtr s = eval_struct(
        "mixin M = { val p : int  let a = 1 } <- { let b = 2 }\nlet main = 0",
        "M");
    CHECK(s->output.size() == 2);
    REQUIRE(s->binding.size() == 2);
    CHECK(s->binding.entries[0].first.base == "a");
    CHECK(s->binding.entries[1].first.base == "b");
    CHECK(s->input.size() == 1);
}

TEST_CASE("sum rejects a shared export name") {
    auto k = kind_of([] {
        eval_struct("mixin M = { let x = 1 } <- { let x = 2 }\nlet main = 0",
                    "M");
    });
    CHECK(k == ErrKind::NameClash);
    CHECK_THAT(testing::error_text_of([] {
                   eval_struct("mixin M = { let x = 1 } <- { let x = 2 }\n"
                               "let main = 0",
                               "M");
               }),
               Catch::Matchers::ContainsSubstring(
                   "both operands of a sum export 'x'"));
}

TEST_CASE("summing a structure with itself refreshes the right operand") {
    // same literal value on both sides: identifiers must not collide
    StructPtr s = eval_struct(
        "mixin M = let m = { let x = 1 } in rename[(), (y -> x)](m) <- m\n"
        "let main = 0",
        "M");
    REQUIRE(s->binding.size() == 2);
    CHECK(s->binding.entries[0].first.uid != s->binding.entries[1].first.uid);
    CHECK(s->output.count(Name{"x"}) == 1);
    CHECK(s->output.count(Name{"y"}) == 1);
}

TEST_CASE("rename maps inputs forward and exports backward") {
    StructPtr s = eval_struct(
        "mixin M = rename[(p -> q), (b -> a)]({ val p : int  let a = 1 })\n"
        "let main = 0",
        "M");
    REQUIRE(s->input.size() == 1);
    CHECK(s->input.begin()->second == Name{"q"});
    CHECK(s->output.size() == 1);
    CHECK(s->output.count(Name{"b"}) == 1);
}

TEST_CASE("rename must cover every input name") {
    auto k = kind_of([] {
        eval_struct("mixin M = rename[(), ()]({ val p : int  let a = 1 })\n"
                    "let main = 0",
                    "M");
    });
    CHECK(k == ErrKind::CompositionUndefined);
}

TEST_CASE("rename drops exports missing from the second map") {
    StructPtr s = eval_struct(
        "mixin M = rename[(), (y -> x)]({ let x = 1  let z = 2 })\n"
        "let main = 0",
        "M");
    CHECK(s->output.size() == 1);
    CHECK(s->output.count(Name{"y"}) == 1);
    CHECK(s->binding.size() == 2); // z's definition survives
}

TEST_CASE("rename of a non-export is undefined") {
    auto k = kind_of([] {
        eval_struct("mixin M = rename[(), (y -> nope)]({ let x = 1 })\n"
                    "let main = 0",
                    "M");
    });
    CHECK(k == ErrKind::CompositionUndefined);
}

TEST_CASE("hide removes one export and nothing else") {
    StructPtr s = eval_struct(
        "mixin M = hide[x]({ let x = 1  let y = 2 })\nlet main = 0", "M");
    CHECK(s->output.size() == 1);
    CHECK(s->output.count(Name{"y"}) == 1);
    CHECK(s->binding.size() == 2);
    // hiding an absent name is a no-op
    StructPtr t = eval_struct(
        "mixin M = hide[zap]({ let x = 1 })\nlet main = 0", "M");
    CHECK(t->output.size() == 1);
}

TEST_CASE("freeze moves a deferred component into the binding") {
    StructPtr s = eval_struct(
        "mixin M = freeze[p -> a + a]({ val p : int  let a = 2  let b = p })\n"
        "let main = 0",
        "M");
    CHECK(s->input.empty());
    REQUIRE(s->binding.size() == 3);
    CHECK(s->binding.entries[2].first.base == "p"); // appended after a, b
    // frozen components do not become exports
    CHECK(s->output.size() == 2);
    CHECK(s->output.count(Name{"p"}) == 0);
    // and the tied definition is usable after close
    auto o = run_text(
        "mixin M = freeze[p -> a + a]({ val p : int  let a = 2  let b = p })\n"
        "let main = close(M).b");
    CHECK(o.code == 0);
    CHECK(o.text == "result: 4\n");
}

TEST_CASE("freeze leaves untied holes deferred") {
    StructPtr s = eval_struct(
        "mixin M = freeze[p -> 1]({ val p : int  val q : int  let a = 2 })\n"
        "let main = 0",
        "M");
    REQUIRE(s->input.size() == 1);
    CHECK(s->input.begin()->second == Name{"q"});
}

TEST_CASE("freeze error taxonomy") {
    auto dup = kind_of([] {
        eval_struct("mixin M = freeze[p -> 1; p -> 2]({ val p : int  "
                    "let a = 2 })\nlet main = 0",
                    "M");
    });
    CHECK(dup == ErrKind::FreezeMismatch);
    auto unknown_mention = kind_of([] {
        eval_struct("mixin M = freeze[p -> zap]({ val p : int  let a = 2 })\n"
                    "let main = 0",
                    "M");
    });
    CHECK(unknown_mention == ErrKind::FreezeMismatch);
    auto not_deferred = kind_of([] {
        eval_struct("mixin M = freeze[zap -> 1]({ val p : int  let a = 2 })\n"
                    "let main = 0",
                    "M");
    });
    CHECK(not_deferred == ErrKind::FreezeMismatch);
}

TEST_CASE("close demands a hole-free structure") {
    auto o = run_text("mixin M = close({ val p : int  let a = 1 })\n"
                      "let main = M.a");
    CHECK(o.code == 1);
    CHECK_THAT(o.text, Catch::Matchers::StartsWith(
                           "error: OpenMixinOperation: close of an open "
                           "mixin (deferred 'p')"));
}

TEST_CASE("close produces location-valued bindings") {
    StructPtr s = eval_struct(
        "mixin M = close({ let a = 1  let b = a + 1 })\nlet main = 0", "M");
    CHECK(s->closed);
    CHECK(s->input.empty());
    for (const auto& [id, body] : s->binding.entries)
        CHECK(expr_as<LocRef>(body));
    CHECK(s->constraint.empty()); // every preset's residual is empty
}

TEST_CASE("projection follows the output assignment") {
    auto o = run_text("mixin M = close(rename[(), (out -> a)]"
                      "({ let a = 41  let b = 0 }))\n"
                      "let main = M.out + 1");
    CHECK(o.text == "result: 42\n");
    auto unknown = run_text("mixin M = close({ let a = 1 })\nlet main = M.zap");
    CHECK(unknown.code == 1);
    CHECK_THAT(unknown.text,
               Catch::Matchers::StartsWith(
                   "error: UnknownProjection: structure exports no component "
                   "named 'zap'"));
}

TEST_CASE("deferred names are not exported until defined") {
    // holes never enter the export map, so projecting one looks identical
    // to projecting a name the structure never mentioned
    auto o = run_text("mixin M = { val p : int  let a = 1 }\nlet main = M.p");
    CHECK(o.code == 1);
    CHECK_THAT(o.text,
               Catch::Matchers::StartsWith(
                   "error: UnknownProjection: structure exports no component "
                   "named 'p'"));
}

TEST_CASE("open-mixin projection cannot reach sibling components") {
    // an open structure is a template: its bodies only gain access to the
    // sibling cells once the structure is closed
    auto o = run_text("mixin M = { let a = 1  let b = a + 1 }\n"
                      "let main = M.b");
    CHECK(o.code == 1);
    CHECK_THAT(o.text,
               Catch::Matchers::StartsWith(
                   "error: UnresolvedComponent: reference to undefined "
                   "component 'a'"));
}

TEST_CASE("projection from an open mixin re-evaluates per reference") {
    // open structures are templates: each projection of a defined component
    // evaluates its body afresh, so the print fires twice
    auto o = run_text("mixin M = { let a = print 7 }\n"
                      "let main = M.a + M.a");
    CHECK(o.code == 0);
    CHECK(o.text == "7\n7\nresult: 14\n");
}

TEST_CASE("alpha refresh renames identifiers consistently") {
    StructPtr s = eval_struct(
        "mixin M = { val p : int  let a = 1  let b = a  constraint (a, b) }\n"
        "let main = 0",
        "M");
    StructValue r = alpha_refresh(*s);
    REQUIRE(r.binding.size() == 2);
    // fresh uids, same spellings
    CHECK(r.binding.entries[0].first.uid != s->binding.entries[0].first.uid);
    CHECK(r.binding.entries[0].first.base == "a");
    // output of `a` points at the refreshed ident
    CHECK(r.output.at(Name{"a"}) == r.binding.entries[0].first);
    // b's body reference followed the refresh
    const auto* ref = expr_as<IdentRef>(*r.binding.find(r.output.at(Name{"b"})));
    REQUIRE(ref);
    CHECK(ref->id == r.binding.entries[0].first);
    // the constraint followed too
    REQUIRE(r.constraint.theta.size() == 1);
    CHECK(r.constraint.theta.begin()->first.id ==
          r.binding.entries[0].first);
    // input refreshed as well
    REQUIRE(r.input.size() == 1);
    CHECK(r.input.begin()->first.uid != s->input.begin()->first.uid);
    check_wellformed(r);
}

TEST_CASE("wellformedness rejects malformed structures") {
    Ident a = fresh_ident("a", Sort::Core);
    SECTION("output pointing outside the structure") {
        StructValue s;
        s.output.insert({Name{"a"}, a});
        CHECK(kind_of([&] { check_wellformed(s); }) == ErrKind::Internal);
    }
    SECTION("identifier both deferred and defined") {
        StructValue s;
        s.input.insert({a, Name{"a"}});
        s.binding.add(a, mk_expr(IntLit{1}));
        CHECK(kind_of([&] { check_wellformed(s); }) == ErrKind::Internal);
    }
    SECTION("free external name in a body") {
        StructValue s;
        s.binding.add(a, mk_expr(NameRef{Name{"loose"}}));
        CHECK(kind_of([&] { check_wellformed(s); }) == ErrKind::Internal);
    }
    SECTION("constraint atom outside the structure") {
        StructValue s;
        s.binding.add(a, mk_expr(IntLit{1}));
        Ident ghost = fresh_ident("ghost", Sort::Core);
        s.constraint.theta.insert({ConstraintAtom{a, Mode::Ordinary},
                                   ConstraintAtom{ghost, Mode::Ordinary}});
        CHECK(kind_of([&] { check_wellformed(s); }) == ErrKind::Internal);
    }
}

TEST_CASE("map utilities enforce their contracts") {
    Renaming a{{Name{"x"}, Name{"y"}}};
    Renaming b{{Name{"x"}, Name{"z"}}};
    CHECK(kind_of([&] { map_union(a, b); }) == ErrKind::DisjointnessViolation);
    Renaming inner{{Name{"k"}, Name{"missing"}}};
    CHECK(kind_of([&] { map_compose(a, inner); }) ==
          ErrKind::CompositionUndefined);
    Renaming ok{{Name{"k"}, Name{"x"}}};
    Renaming composed = map_compose(a, ok);
    REQUIRE(composed.size() == 1);
    CHECK(composed.at(Name{"k"}) == Name{"y"});
}

TEST_CASE("binding rejects a duplicate identifier") {
    Binding b;
    Ident x = fresh_ident("x", Sort::Core);
    b.add(x, mk_expr(IntLit{1}));
    CHECK(kind_of([&] { b.add(x, mk_expr(IntLit{2})); }) ==
          ErrKind::DisjointnessViolation);
}

TEST_CASE("operations on closed structures preserve their cells") {
    // renaming/hiding a closed structure keeps closed-ness and the location
    // bodies, so projections still share memoized state
    auto o = run_text(
        "mixin K = close({ let c = ref 0  let n = incr c; !c })\n"
        "mixin A = rename[(), (m -> n)](K)\n"
        "let main = A.m + A.m + K.n");
    // one shared cell: n evaluates once, every read sees 1
    CHECK(o.text == "result: 3\n");
}
