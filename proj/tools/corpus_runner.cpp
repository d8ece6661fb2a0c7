// Golden-file runner: for every corpus/<name>.lyre with a matching
// corpus/<name>.expected, run the CLI with the flags named on the first
// line and compare captured stdout plus exit code against the rest.
//
// Expected-file format:
//   flags: <CLI flags, possibly empty>
//   ---
//   <expected stdout, verbatim>
//   exit: <code>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) {
        std::cerr << "cannot open " << p << "\n";
        std::exit(2);
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::string> split_lines(const std::string& text) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : text) {
        if (c == '\n') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

struct Expectation {
    std::string flags;
    std::string stdout_text; // expected stdout, trailing newline included
    int exit_code = 0;
};

Expectation parse_expected(const fs::path& p) {
    std::vector<std::string> lines = split_lines(read_file(p));
    if (lines.size() < 3 || lines[0].rfind("flags:", 0) != 0 ||
        lines[1] != "---" ||
        lines.back().rfind("exit: ", 0) != 0) {
        std::cerr << p << ": malformed expected file\n";
        std::exit(2);
    }
    Expectation e;
    e.flags = lines[0].substr(6);
    while (!e.flags.empty() && e.flags.front() == ' ') e.flags.erase(0, 1);
    e.exit_code = std::stoi(lines.back().substr(6));
    for (std::size_t i = 2; i + 1 < lines.size(); ++i)
        e.stdout_text += lines[i] + "\n";
    return e;
}

std::string shell_quote(const std::string& s) {
    std::string out = "'";
    for (char c : s) {
        if (c == '\'')
            out += "'\\''";
        else
            out += c;
    }
    out += "'";
    return out;
}

struct RunResult {
    std::string out;
    int exit_code = -1;
};

RunResult run_cli(const std::string& lyre_bin, const fs::path& program,
                  const std::string& flags) {
    std::string cmd = shell_quote(lyre_bin) + " run " +
                      shell_quote(program.string());
    if (!flags.empty()) cmd += " " + flags;
    cmd += " 2>/dev/null";
    RunResult r;
    FILE* pipe = popen(cmd.c_str(), "r");
    if (!pipe) {
        std::cerr << "popen failed for " << cmd << "\n";
        std::exit(2);
    }
    char buf[4096];
    std::size_t n;
    while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
    int status = pclose(pipe);
    if (WIFEXITED(status))
        r.exit_code = WEXITSTATUS(status);
    return r;
}

void show_diff(const std::string& expected, const std::string& got) {
    std::vector<std::string> e = split_lines(expected);
    std::vector<std::string> g = split_lines(got);
    std::size_t n = std::max(e.size(), g.size());
    for (std::size_t i = 0; i < n; ++i) {
        const std::string* le = i < e.size() ? &e[i] : nullptr;
        const std::string* lg = i < g.size() ? &g[i] : nullptr;
        if (le && lg && *le == *lg) continue;
        if (le) std::cout << "    - " << *le << "\n";
        if (lg) std::cout << "    + " << *lg << "\n";
    }
}

} // namespace

int main(int argc, char** argv) {
    if (argc != 3) {
        std::cerr << "usage: corpus_runner <lyre-binary> <corpus-dir>\n";
        return 2;
    }
    std::string lyre_bin = argv[1];
    fs::path dir = argv[2];

    std::vector<fs::path> programs;
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.path().extension() == ".lyre")
            programs.push_back(entry.path());
    std::sort(programs.begin(), programs.end());

    int failures = 0;
    for (const auto& prog : programs) {
        fs::path exp_path = prog;
        exp_path.replace_extension(".expected");
        if (!fs::exists(exp_path)) {
            std::cout << "FAIL " << prog.stem().string()
                      << " (missing .expected)\n";
            ++failures;
            continue;
        }
        Expectation want = parse_expected(exp_path);
        RunResult got = run_cli(lyre_bin, prog, want.flags);
        bool ok = got.out == want.stdout_text && got.exit_code == want.exit_code;
        if (ok) {
            std::cout << "PASS " << prog.stem().string() << "\n";
        } else {
            std::cout << "FAIL " << prog.stem().string() << "\n";
            if (got.exit_code != want.exit_code)
                std::cout << "    exit: expected " << want.exit_code
                          << ", got " << got.exit_code << "\n";
            if (got.out != want.stdout_text) show_diff(want.stdout_text, got.out);
            ++failures;
        }
    }
    std::cout << (failures == 0 ? "all corpus programs passed"
                                : std::to_string(failures) +
                                      " corpus program(s) failed")
              << "\n";
    return failures == 0 ? 0 : 1;
}
