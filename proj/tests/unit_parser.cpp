// Parser and pretty-printer: surface syntax, sugar, rejection cases, and the
// print-parse-print fixpoint that underwrites trace-stable reparsing.

#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "helpers.hpp"

using namespace lyre;
using testing::kind_of;

namespace {

const TopBinding& binding_named(const Program& p, const std::string& name) {
    for (const auto& b : p.bindings)
        if (b.name == name) return b;
    FAIL("no binding named " + name);
    throw std::logic_error("unreachable");
}

} // namespace

TEST_CASE("program shape: bindings in order, main last") {
    Program p = parse_program("mixin A = { let x = 1 }\n"
                              "let two = 2\n"
                              "let main = two");
    REQUIRE(p.bindings.size() == 3);
    CHECK(p.bindings[0].name == "A");
    CHECK(p.bindings[0].mixin_kw);
    CHECK(p.bindings[1].name == "two");
    CHECK_FALSE(p.bindings[1].mixin_kw);
    CHECK(p.bindings[2].name == "main");
}

TEST_CASE("parameter sugar builds nested lambdas") {
    Program p = parse_program("let f x y = x + y\nlet main = f 1 2");
    const auto* outer = expr_as<Lambda>(binding_named(p, "f").body);
    REQUIRE(outer);
    CHECK(outer->param.base == "x");
    CHECK_FALSE(outer->unit_param);
    const auto* inner = expr_as<Lambda>(outer->body);
    REQUIRE(inner);
    CHECK(inner->param.base == "y");
}

TEST_CASE("unit parameter sugar demands a unit argument") {
    Program p = parse_program("let f () = 3\nlet main = f ()");
    const auto* lam = expr_as<Lambda>(binding_named(p, "f").body);
    REQUIRE(lam);
    CHECK(lam->unit_param);
    // f() applies f to the unit literal
    const auto* app = expr_as<App>(binding_named(p, "main").body);
    REQUIRE(app);
    CHECK(expr_as<UnitLit>(app->arg));
}

TEST_CASE("builtin references become builtin calls when applied") {
    Program p = parse_program("let main = print 5");
    const auto* call = expr_as<BuiltinCall>(binding_named(p, "main").body);
    REQUIRE(call);
    CHECK(call->name == "print");
    REQUIRE(call->args.size() == 1);
}

TEST_CASE("ref takes exactly one argument") {
    CHECK(kind_of([] { parse_program("let main = ref (1, 2)"); }) ==
          ErrKind::Parse);
    Program p = parse_program("let main = ref 0");
    CHECK(expr_as<RefNew>(binding_named(p, "main").body));
}

TEST_CASE("tuple arguments are reserved for builtins") {
    CHECK(kind_of([] {
              parse_program("let f x = x\nlet main = f (1, 2)");
          }) == ErrKind::Parse);
    // builtins accept them
    Program p = parse_program(
        "let main = setAction(createMenuItem(\"m\"), fun () -> 0)");
    CHECK(expr_as<BuiltinCall>(binding_named(p, "main").body));
}

TEST_CASE("identifiers may carry primes") {
    Program p = parse_program("let x' = 1\nlet main = x'");
    CHECK(p.bindings[0].name == "x'");
}

TEST_CASE("duplicate defined component is rejected at parse time") {
    auto k = kind_of(
        [] { parse_program("mixin M = { let x = 1  let x = 2 }\n"
                           "let main = 0"); });
    CHECK(k == ErrKind::DuplicateBinder);
}

TEST_CASE("duplicate rename source is rejected") {
    auto k = kind_of([] {
        parse_program("mixin M = rename[(a -> b; a -> c), ()]({ let x = 1 })\n"
                      "let main = 0");
    });
    CHECK(k == ErrKind::Parse);
}

TEST_CASE("constraint naming an unknown component is rejected") {
    auto k = kind_of([] {
        parse_program("mixin M = { let x = 1  constraint (x, nope) }\n"
                      "let main = 0");
    });
    CHECK(k == ErrKind::UnknownConstraintTarget);
}

TEST_CASE("deferred component keeps its type text") {
    Program p = parse_program("mixin M = { val f : int -> int  let y = 2 }\n"
                              "let main = 0");
    const auto* lit = expr_as<StructLit>(binding_named(p, "M").body);
    REQUIRE(lit);
    REQUIRE(lit->comps.size() == 2);
    CHECK(lit->comps[0].deferred);
    CHECK(lit->comps[0].type_text == "int -> int");
    CHECK_FALSE(lit->comps[1].deferred);
}

TEST_CASE("sum is right-associative") {
    Program p = parse_program("mixin M = { let a = 1 } <- { let b = 2 } <- "
                              "{ let c = 3 }\nlet main = 0");
    const auto* top = expr_as<SumE>(binding_named(p, "M").body);
    REQUIRE(top);
    CHECK(expr_as<StructLit>(top->lhs));
    CHECK(expr_as<SumE>(top->rhs)); // b <- c grouped to the right
}

TEST_CASE("freeze tyings resolve names against the operand's outputs") {
    Program p = parse_program(
        "mixin M = freeze[p -> a + a]({ val p : int  let a = 2 })\n"
        "let main = 0");
    const auto* fr = expr_as<FreezeE>(binding_named(p, "M").body);
    REQUIRE(fr);
    REQUIRE(fr->psi.size() == 1);
    CHECK(fr->psi[0].first.text == "p");
    // `a` cannot resolve to any binder here, so it stays a name reference
    const auto* bin = expr_as<Binary>(fr->psi[0].second);
    REQUIRE(bin);
    CHECK(expr_as<NameRef>(bin->lhs));
}

TEST_CASE("print-parse-print is a fixpoint on handwritten programs") {
    const std::string sources[] = {
        "let main = if 1 < 2 then \"a\" ^ \"b\" else \"c\"",
        "let f x () y = x + y\nlet main = f 1 () 2",
        "mixin M = { val p : int  let a = [1; 2; [3]]  mixin N = { let q = "
        "true } }\nlet main = 0",
        "mixin M = rename[(a -> b), (y -> x)](hide[h](freeze[p -> q](\n"
        "  { val p : int  let q = 1  let x = 2  let h = 3 })))\nlet main = 0",
        "mixin M = { let a = 1  let b = 2  constraint (a, b), (a, ext b), "
        "(a, int b)  trigger { a, b } }\nlet main = 0",
        "let main = let r = ref 0 in incr r; !r + (if !r = 1 then 10 else 0)",
        "let main = (fun f -> f ()) (fun () -> 7)",
    };
    for (const std::string& src : sources) {
        INFO(src);
        std::string once = print_program(parse_program(src));
        std::string twice = print_program(parse_program(once));
        CHECK(once == twice);
    }
}

TEST_CASE("print-parse-print is a fixpoint on the corpus") {
    namespace fs = std::filesystem;
    fs::path dir = fs::path(CORPUS_DIR);
    REQUIRE(fs::exists(dir));
    std::size_t checked = 0;
    for (const auto& f : fs::directory_iterator(dir)) {
        if (f.path().extension() != ".lyre") continue;
        std::ifstream in(f.path());
        std::stringstream ss;
        ss << in.rdbuf();
        Program prog;
        try {
            prog = parse_program(ss.str());
        } catch (const Error&) {
            continue; // sources that deliberately fail to parse
        }
        INFO(f.path().string());
        std::string once = print_program(prog);
        std::string twice = print_program(parse_program(once));
        CHECK(once == twice);
        ++checked;
    }
    CHECK(checked >= 20);
}
