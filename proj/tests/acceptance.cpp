// Acceptance gate: exercises the ten headline behaviours end to end and
// prints exactly one PASS/FAIL line per criterion.  Exit status is the
// number of failed criteria.  Takes the corpus directory as argv[1].

#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "lyre/driver.hpp"
#include "lyre/pretty.hpp"

namespace fs = std::filesystem;
using namespace lyre;

namespace {

// ------------------------------------------------------------ corpus access

struct Entry {
    std::string name;
    std::string source;
    RunOptions opts;
    int expected_exit = 0;
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::string> split_ws(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream in(s);
    std::string tok;
    while (in >> tok) out.push_back(tok);
    return out;
}

RunOptions parse_flags(const std::string& raw) {
    RunOptions opts;
    std::vector<std::string> toks = split_ws(raw);
    for (std::size_t i = 0; i < toks.size(); ++i) {
        const std::string& t = toks[i];
        if (t == "--strategy")
            opts.strategy = toks.at(++i);
        else if (t == "--variant")
            opts.variant = toks.at(++i);
        else if (t == "--step-budget")
            opts.step_budget = std::stoull(toks.at(++i));
        else if (t == "--trace")
            opts.trace = true;
        else if (t == "--trace-constraints")
            opts.trace_constraints = true;
        else if (t == "--dump-constraints")
            opts.dump_constraints = true;
        else if (t == "--enumerate")
            opts.enumerate = true;
        else
            throw std::runtime_error("unknown corpus flag " + t);
    }
    return opts;
}

std::map<std::string, Entry> load_corpus(const fs::path& dir) {
    std::map<std::string, Entry> out;
    for (const auto& f : fs::directory_iterator(dir)) {
        if (f.path().extension() != ".lyre") continue;
        Entry e;
        e.name = f.path().stem().string();
        e.source = slurp(f.path());
        fs::path exp = f.path();
        exp.replace_extension(".expected");
        std::istringstream in(slurp(exp));
        std::string line;
        while (std::getline(in, line)) {
            if (line.rfind("flags:", 0) == 0)
                e.opts = parse_flags(line.substr(6));
            else if (line.rfind("exit: ", 0) == 0)
                e.expected_exit = std::stoi(line.substr(6));
        }
        out.emplace(e.name, std::move(e));
    }
    return out;
}

// --------------------------------------------------------------- run helpers

struct Outcome {
    int code = 0;
    std::string text;
};

Outcome run_opts(const std::string& src, const RunOptions& opts) {
    std::ostringstream os;
    Outcome o;
    o.code = run_program(src, opts, os);
    o.text = os.str();
    return o;
}

std::vector<std::string> lines_of(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) out.push_back(line);
    return out;
}

// index of the first line equal to `needle`, or npos
std::size_t line_pos(const std::vector<std::string>& ls,
                     const std::string& needle) {
    for (std::size_t i = 0; i < ls.size(); ++i)
        if (ls[i] == needle) return i;
    return std::string::npos;
}

std::string show(const Outcome& o) {
    return "exit " + std::to_string(o.code) + ", output:\n" + o.text;
}

// evaluation outcome reduced to what the semantics pins down: the ordered
// effect trace plus either the rendered result or the error taxonomy tag
struct SemOutcome {
    std::vector<std::string> events;
    std::string verdict;

    bool operator==(const SemOutcome& o) const {
        return events == o.events && verdict == o.verdict;
    }
};

SemOutcome run_semantic(const std::string& src, const std::string& strategy,
                        bool constrained, std::uint64_t budget) {
    SemOutcome out;
    Effects fx;
    try {
        ExprPtr prog = desugar(parse_program(src));
        std::unique_ptr<Interp> interp;
        if (constrained)
            interp = std::make_unique<ConstrainedInterp>(
                make_strategy(strategy), fx, budget);
        else
            interp = std::make_unique<Interp>(make_strategy(strategy),
                                              Variant::Lazy, fx, budget);
        Value v = interp->run(prog);
        out.verdict = "result: " + render_value(v);
    } catch (const Error& e) {
        out.verdict = std::string("error: ") + err_name(e.kind);
    }
    for (const auto& ev : fx.trace())
        out.events.push_back(std::string(effect_kind_name(ev.kind)) + "\t" +
                             ev.payload);
    return out;
}

using Detail = std::optional<std::string>; // failure detail, empty = pass

} // namespace

int main(int argc, char** argv) {
    fs::path corpus_dir = argc > 1 ? fs::path(argv[1]) : fs::path("corpus");
    std::map<std::string, Entry> corpus;
    try {
        corpus = load_corpus(corpus_dir);
    } catch (const std::exception& e) {
        std::cerr << "cannot load corpus: " << e.what() << "\n";
        return 10;
    }
    auto entry = [&](const std::string& name) -> const Entry& {
        auto it = corpus.find(name);
        if (it == corpus.end())
            throw std::runtime_error("corpus entry missing: " + name);
        return it->second;
    };

    std::vector<std::pair<std::string, std::function<Detail()>>> criteria;

    // 1. effect sharing vs duplication through closed and open key suppliers
    criteria.emplace_back(
        "effect sharing vs duplication (shared counter 0,1; fresh 0,0)",
        [&]() -> Detail {
            Outcome o = run_opts(entry("makeset").source, RunOptions{});
            std::string want = "[0]\n[[1]]\n[0]\n[[0]]\nresult: [[0]]\n";
            if (o.code != 0 || o.text != want) return show(o);
            return std::nullopt;
        });

    // 2. lazy memoization: one print under lazy, two under call-by-name
    criteria.emplace_back(
        "projection memoization: 1 print lazy, 2 prints cbn",
        [&]() -> Detail {
            Outcome lazy = run_opts(entry("memo_lazy").source, RunOptions{});
            RunOptions cbn;
            cbn.variant = "cbn";
            Outcome byname = run_opts(entry("memo_lazy").source, cbn);
            if (lazy.text != "1\nresult: 7\n")
                return "lazy: " + show(lazy);
            if (byname.text != "1\n1\nresult: 7\n")
                return "cbn: " + show(byname);
            return std::nullopt;
        });

    // 3. eager close runs every component at close time
    criteria.emplace_back(
        "eager close emits 1 2 3 4 before the program body runs",
        [&]() -> Detail {
            RunOptions opts;
            opts.variant = "eager";
            Outcome o = run_opts(entry("m1_eager").source, opts);
            if (o.code != 0 || o.text != "1\n2\n3\n4\n99\nresult: 2\n")
                return show(o);
            return std::nullopt;
        });

    // 4. ordering constraints: satisfiable order runs, antisymmetric pair fails
    criteria.emplace_back(
        "constraint pair: success with (c1,c2), violation with (c2, ext c1)",
        [&]() -> Detail {
            Outcome ok = run_opts(entry("m2m3_ok").source, RunOptions{});
            if (ok.code != 0 || ok.text != "result: 8\n")
                return "ok-case: " + show(ok);
            Outcome bad = run_opts(entry("m2m3_cycle").source, RunOptions{});
            if (bad.code != 1 ||
                bad.text.rfind("error: ConstraintViolation:", 0) != 0)
                return "violation-case: " + show(bad);
            return std::nullopt;
        });

    // 5. module strategy: effects of every field run before any external read
    criteria.emplace_back(
        "recmod prints ok before the projected value is delivered",
        [&]() -> Detail {
            RunOptions opts;
            opts.strategy = "recmod";
            Outcome o = run_opts(entry("m4_recmod").source, opts);
            if (o.code != 0 || o.text != "ok\nresult: 7\n") return show(o);
            return std::nullopt;
        });

    // 6. trigger sets force whole structures top-down
    criteria.emplace_back(
        "trigger strategy prints exactly 1 2 4 3 5 and returns 3",
        [&]() -> Detail {
            RunOptions opts;
            opts.strategy = "trigger-topdown";
            Outcome o = run_opts(entry("trigger").source, opts);
            if (o.code != 0 || o.text != "1\n2\n4\n3\n5\nresult: 3\n")
                return show(o);
            return std::nullopt;
        });

    // 7. enumeration covers the whole nondeterminism envelope
    criteria.emplace_back(
        "enumeration lists both 1 2 3 4 and 2 1 3 4, all order-respecting",
        [&]() -> Detail {
            RunOptions opts;
            opts.enumerate = true;
            Outcome o = run_opts(entry("m1_enum").source, opts);
            if (o.code != 0) return show(o);
            std::vector<std::string> ls = lines_of(o.text);
            std::vector<std::vector<std::string>> traces;
            for (const auto& l : ls) {
                if (l.rfind("trace:", 0) != 0) continue;
                std::size_t arrow = l.find(" => ");
                if (arrow == std::string::npos)
                    return "malformed trace line: " + l;
                traces.push_back(split_ws(l.substr(6, arrow - 6)));
            }
            auto pos = [](const std::vector<std::string>& t,
                          const std::string& x) {
                for (std::size_t i = 0; i < t.size(); ++i)
                    if (t[i] == x) return i;
                return std::size_t(1000);
            };
            for (const auto& t : traces) {
                if (!(pos(t, "1") < pos(t, "3") && pos(t, "2") < pos(t, "4")))
                    return "trace violates the declared order: " + show(o);
            }
            bool has1234 =
                line_pos(ls, "trace: 1 2 3 4 => result: 7") != std::string::npos;
            bool has2134 =
                line_pos(ls, "trace: 2 1 3 4 => result: 7") != std::string::npos;
            if (!has1234 || !has2134)
                return "missing a schedule: " + show(o);
            if (ls.empty() ||
                ls.back() != "traces: " + std::to_string(traces.size()))
                return "bad footer: " + show(o);
            return std::nullopt;
        });

    // 8. object initialization: superclass fields first, inherited reads work
    criteria.emplace_back(
        "objinit runs fields top-down and mid-init inherited reads succeed",
        [&]() -> Detail {
            RunOptions opts;
            opts.strategy = "objinit";
            Outcome o = run_opts(entry("objinit").source, opts);
            if (o.code != 0 || o.text != "0\n1\n20\n30\n150\nresult: 0\n")
                return show(o);
            std::vector<std::string> ls = lines_of(o.text);
            std::size_t a1 = line_pos(ls, "1"), b1 = line_pos(ls, "20"),
                        b2 = line_pos(ls, "30"), c1 = line_pos(ls, "150");
            if (!(a1 < b1 && a1 < b2 && b1 < c1 && b2 < c1))
                return "initialization order violated: " + show(o);
            return std::nullopt;
        });

    // 9. property battery over the full corpus
    criteria.emplace_back(
        "properties: alpha-refresh, single-force, heap invariants, differential",
        [&]() -> Detail {
            for (const auto& [name, e] : corpus) {
                // (a) run-to-run stability across independent parses (fresh
                // uids each time) and across a pretty-print round trip
                Outcome o1 = run_opts(e.source, e.opts);
                Outcome o2 = run_opts(e.source, e.opts);
                if (o1.code != o2.code || o1.text != o2.text)
                    return name + ": reparse changed behaviour";
                if (o1.code != e.expected_exit)
                    return name + ": exit " + std::to_string(o1.code) +
                           " but corpus expects " +
                           std::to_string(e.expected_exit);
                try {
                    std::string printed = print_program(parse_program(e.source));
                    Outcome o3 = run_opts(printed, e.opts);
                    if (o3.code != o1.code || o3.text != o1.text)
                        return name + ": pretty-print round trip changed "
                                      "behaviour";
                } catch (const Error&) {
                    // source that fails to parse has no printable form
                }
                // (c)/(d) the interpreter's internal invariants never trip
                if (o1.text.find("InternalError") != std::string::npos)
                    return name + ": internal invariant tripped:\n" + o1.text;
                // (b) under the memoizing variant no cell evaluates twice
                if (e.opts.variant == "lazy" && !e.opts.enumerate) {
                    Effects fx;
                    ConstrainedInterp ci(make_strategy(e.opts.strategy), fx,
                                         e.opts.step_budget);
                    try {
                        ci.run(desugar(parse_program(e.source)));
                    } catch (const Error&) {
                    }
                    for (const auto& [idx, cnt] : ci.eval_counts())
                        if (cnt > 1)
                            return name + ": location l" +
                                   std::to_string(idx) + " evaluated " +
                                   std::to_string(cnt) + " times under lazy";
                }
                // (e) with no annotations, the constraint machinery is inert
                if (e.opts.strategy == "pure-lazy" &&
                    e.opts.variant == "lazy" && !e.opts.enumerate) {
                    bool annotated = false;
                    try {
                        annotated = detail::has_annotations(
                            desugar(parse_program(e.source)));
                    } catch (const Error&) {
                        continue; // unparsable: nothing to compare
                    }
                    if (!annotated) {
                        SemOutcome wired = run_semantic(
                            e.source, "pure-lazy", true, e.opts.step_budget);
                        SemOutcome plain = run_semantic(
                            e.source, "pure-lazy", false, e.opts.step_budget);
                        if (!(wired == plain))
                            return name + ": constrained and plain lazy "
                                          "evaluation disagree (" +
                                   wired.verdict + " vs " + plain.verdict +
                                   ")";
                    }
                }
            }
            // (c) negative: a memoized location gated by a leftover edge is
            // rejected by the dispatch loop
            {
                Effects fx;
                ConstrainedInterp ci(make_strategy("pure-lazy"), fx, 1000);
                Loc p = ci.heap().alloc_value(Value{std::int64_t{1}});
                Loc v = ci.heap().alloc_value(Value{std::int64_t{2}});
                ci.global().theta.insert({p, v});
                try {
                    ci.force_loc(v);
                    return "gated-memoized-location check did not trip";
                } catch (const Error& err) {
                    if (err.kind != ErrKind::Internal ||
                        std::string(err.what()).find("still gated") ==
                            std::string::npos)
                        return std::string("unexpected gate error: ") +
                               err.what();
                }
            }
            // (d) negative: a trigger set naming a memoized location is
            // rejected by the exclusivity check
            {
                Effects fx;
                ConstrainedInterp ci(make_strategy("pure-lazy"), fx, 1000);
                Loc m = ci.heap().alloc_value(Value{std::int64_t{3}});
                ci.global().delta.push_back({m});
                try {
                    ci.force_loc(m);
                    return "trigger-exclusivity check did not trip";
                } catch (const Error& err) {
                    if (err.kind != ErrKind::Internal ||
                        std::string(err.what()).find("already memoized") ==
                            std::string::npos)
                        return std::string("unexpected exclusivity error: ") +
                               err.what();
                }
            }
            return std::nullopt;
        });

    // 10. error taxonomy, one dedicated program per tag
    criteria.emplace_back(
        "error taxonomy: each failure class reports its own tag",
        [&]() -> Detail {
            const std::vector<std::pair<std::string, std::string>> cases = {
                {"err_cycle", "CyclicDependency"},
                {"m2m3_cycle", "ConstraintViolation"},
                {"err_deferred", "UnresolvedComponent"},
                {"err_open", "OpenMixinOperation"},
                {"err_clash", "NameClash"},
                {"err_freeze", "FreezeMismatch"},
                {"err_unknown_proj", "UnknownProjection"},
            };
            for (const auto& [name, tag] : cases) {
                const Entry& e = entry(name);
                Outcome o = run_opts(e.source, e.opts);
                if (o.code != 1)
                    return name + ": exit " + std::to_string(o.code);
                if (o.text.rfind("error: " + tag + ":", 0) != 0)
                    return name + ": expected tag " + tag + ", got: " + o.text;
            }
            return std::nullopt;
        });

    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Detail detail;
        try {
            detail = criteria[i].second();
        } catch (const std::exception& e) {
            detail = std::string("exception: ") + e.what();
        }
        if (detail) {
            ++failures;
            std::cout << "FAIL criterion " << (i + 1) << ": "
                      << criteria[i].first << " -- " << *detail << "\n";
        } else {
            std::cout << "PASS criterion " << (i + 1) << ": "
                      << criteria[i].first << "\n";
        }
    }
    return failures;
}
