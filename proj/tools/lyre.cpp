// Command line front end: `lyre run <file> [flags]`.

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "lyre/driver.hpp"

namespace {

void print_usage(std::ostream& os) {
    os << "usage: lyre run <file> [options]\n"
          "\n"
          "options:\n"
          "  --strategy <name>     pure-lazy | recmod | objinit | trigger-topdown\n"
          "                        (default: pure-lazy)\n"
          "  --variant <name>      lazy | cbn | eager (default: lazy)\n"
          "  --step-budget <n>     abort after n evaluation steps\n"
          "                        (default: 10000000)\n"
          "  --trace               log every effect as seq<TAB>kind<TAB>payload\n"
          "  --trace-constraints   log constraint bookkeeping during forcing\n"
          "  --dump-constraints    dump the global constraint after each close\n"
          "  --enumerate           run every edge-consumption schedule and\n"
          "                        list the distinct outcomes\n";
}

int usage_error(const std::string& msg) {
    std::cerr << "error: " << msg << "\n";
    print_usage(std::cerr);
    return 2;
}

} // namespace

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    if (!args.empty() && (args[0] == "--help" || args[0] == "-h")) {
        print_usage(std::cout);
        return 0;
    }
    if (args.empty()) return usage_error("no command given");
    if (args[0] != "run")
        return usage_error("unknown command '" + args[0] + "'");

    lyre::RunOptions opts;
    std::string file;
    for (std::size_t i = 1; i < args.size(); ++i) {
        const std::string& a = args[i];
        auto value_of = [&](const char* flag) -> const std::string& {
            if (i + 1 >= args.size()) {
                std::cerr << "error: missing value for " << flag << "\n";
                std::exit(2);
            }
            return args[++i];
        };
        if (a == "--strategy") {
            opts.strategy = value_of("--strategy");
        } else if (a == "--variant") {
            opts.variant = value_of("--variant");
        } else if (a == "--step-budget") {
            const std::string& v = value_of("--step-budget");
            try {
                std::size_t used = 0;
                opts.step_budget = std::stoull(v, &used);
                if (used != v.size()) throw std::invalid_argument(v);
            } catch (const std::exception&) {
                return usage_error("--step-budget needs a number, got '" + v +
                                   "'");
            }
        } else if (a == "--trace") {
            opts.trace = true;
        } else if (a == "--trace-constraints") {
            opts.trace_constraints = true;
        } else if (a == "--dump-constraints") {
            opts.dump_constraints = true;
        } else if (a == "--enumerate") {
            opts.enumerate = true;
        } else if (a == "--help" || a == "-h") {
            print_usage(std::cout);
            return 0;
        } else if (!a.empty() && a[0] == '-') {
            return usage_error("unknown option '" + a + "'");
        } else if (file.empty()) {
            file = a;
        } else {
            return usage_error("more than one input file");
        }
    }
    if (file.empty()) return usage_error("no input file");
    if (opts.variant != "lazy" && opts.strategy != "pure-lazy")
        return usage_error("--variant " + opts.variant +
                           " evaluates without constraints; it conflicts "
                           "with --strategy " + opts.strategy);

    std::ifstream in(file, std::ios::binary);
    if (!in) {
        std::cerr << "error: cannot open '" << file << "'\n";
        return 2;
    }
    std::ostringstream src;
    src << in.rdbuf();
    return lyre::run_program(src.str(), opts, std::cout);
}
