#include "doctest.h"

#include "json.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <unistd.h>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::string kTiny = R"(
d_u = 0.2
d_v = 0.1
r_u = 1
r_v = 1
r_a = 1
r_b = 0.5
r_c = 1
r_d = 0.5
a = 2
b = 1
c = 1
d = 1
[phi]
kind = "linear"
slope = 1
[grid]
nx = 30
[time]
dt = 2e-3
t_end = 0.02
[u_in]
kind = "cosine"
mean = 1
amplitude = 0.5
mode = 2
[v_in]
kind = "cosine"
mean = 1
amplitude = 0.5
[fast]
epsilon = 0.05
eps_list = [0.2, 0.1, 0.05, 0.02]
[refine]
levels = 2
[stability]
delta_list = [1e-2, 1e-3]
snapshot_every = 2
[output]
snapshot_every = 4
)";

struct Sandbox {
    fs::path dir;
    Sandbox() {
        dir = fs::temp_directory_path() / ("xdl_cli_" + std::to_string(::getpid()) + "_" + std::to_string(counter()++));
        fs::remove_all(dir);
        fs::create_directories(dir);
    }
    ~Sandbox() { fs::remove_all(dir); }
    static int& counter() {
        static int c = 0;
        return c;
    }
    fs::path write(const std::string& name, const std::string& text) const {
        std::ofstream(dir / name) << text;
        return dir / name;
    }
};

int run(const std::string& args, const fs::path& err_file = "/dev/null") {
    const std::string cmd = std::string(XDIFF_LAB_BIN) + " " + args + " >/dev/null 2>" + err_file.string();
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

json load(const fs::path& p) {
    std::ifstream in(p);
    return json::parse(in);
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

TEST_CASE("run-cross writes report, diagnostics and snapshots") {
    Sandbox sb;
    const auto cfg = sb.write("c.toml", kTiny);
    REQUIRE(run("run-cross --config " + cfg.string() + " --out " + (sb.dir / "o").string()) == 0);
    const json r = load(sb.dir / "o/run_report.json");
    CHECK(r["schema"] == "xdiff-lab/1");
    CHECK(r["mode"] == "run-cross");
    CHECK(r.contains("metadata"));
    CHECK(r["config"].is_string());
    CHECK(fs::exists(sb.dir / "o/snapshots/u_000000.csv"));
    CHECK(fs::exists(sb.dir / "o/snapshots/u_000004.csv"));
    CHECK(fs::exists(sb.dir / "o/snapshots/v_000010.csv"));
    int lines = 0;
    for (char c : slurp(sb.dir / "o/diagnostics.ndjson")) lines += c == '\n';
    CHECK(lines == 11);
}

TEST_CASE("run-fast writes sub-population snapshots") {
    Sandbox sb;
    const auto cfg = sb.write("c.toml", kTiny);
    REQUIRE(run("run-fast --config " + cfg.string() + " --out " + (sb.dir / "o").string()) == 0);
    for (const char* f : {"uA_000010.csv", "uB_000010.csv", "u_000010.csv", "v_000000.csv"})
        CHECK(fs::exists(sb.dir / "o/snapshots" / f));
    CHECK(load(sb.dir / "o/run_report.json")["mode"] == "run-fast");
}

TEST_CASE("sweep, refine, stability and diagnose reports") {
    Sandbox sb;
    const auto cfg = sb.write("c.toml", kTiny);
    const std::string o = " --out " + (sb.dir / "o").string();
    REQUIRE(run("sweep-eps --config " + cfg.string() + o) == 0);
    CHECK(load(sb.dir / "o/sweep_report.json")["result"]["errors"].size() == 4);
    REQUIRE(run("refine --config " + cfg.string() + o) == 0);
    CHECK(load(sb.dir / "o/refine_report.json")["result"]["levels"].size() == 2);
    REQUIRE(run("stability --config " + cfg.string() + o) == 0);
    CHECK(load(sb.dir / "o/stability_report.json")["result"]["runs"].size() == 2);
    REQUIRE(run("diagnose --config " + cfg.string() + o) == 0);
    CHECK(load(sb.dir / "o/diagnose_report.json")["result"].contains("weak_residual"));
}

TEST_CASE("deterministic runs are byte identical apart from metadata") {
    Sandbox sb;
    const auto cfg = sb.write("c.toml", kTiny);
    REQUIRE(run("sweep-eps --threads 2 --config " + cfg.string() + " --out " + (sb.dir / "a").string()) == 0);
    REQUIRE(run("sweep-eps --threads 1 --config " + cfg.string() + " --out " + (sb.dir / "b").string()) == 0);
    json a = load(sb.dir / "a/sweep_report.json"), b = load(sb.dir / "b/sweep_report.json");
    a.erase("metadata");
    b.erase("metadata");
    CHECK(a.dump() == b.dump());
}

TEST_CASE("exit codes and error JSON") {
    Sandbox sb;
    CHECK(run("run-cross") == 1);
    CHECK(run("run-cross --config " + (sb.dir / "missing.toml").string(), sb.dir / "err.txt") == 1);
    const json e = json::parse(slurp(sb.dir / "err.txt"));
    CHECK(e["error"]["exit_code"] == 1);
    CHECK(e["error"]["kind"] == "config");

    const auto bad = sb.write("bad.toml", kTiny + "\n[grid]\nwhat = 1\n");
    CHECK(run("run-cross --config " + bad.string(), sb.dir / "err2.txt") == 1);
    CHECK(slurp(sb.dir / "err2.txt").find("grid.what") != std::string::npos);

    std::string unsupported = kTiny;
    unsupported.replace(unsupported.find("\na = 2"), 6, "\na = 0.5");
    unsupported.replace(unsupported.find("\nd = 1"), 6, "\nd = 3");
    const auto us = sb.write("us.toml", unsupported);
    CHECK(run("run-cross --config " + us.string() + " --out " + (sb.dir / "u").string()) == 1);
    CHECK(run("run-cross --allow-unsupported --config " + us.string() + " --out " + (sb.dir / "u").string()) == 0);

    std::string unstable = kTiny;
    unstable.replace(unstable.find("r_u = 1"), 7, "r_u = 5");
    unstable.replace(unstable.find("dt = 2e-3"), 9, "dt = 0.5");
    unstable.replace(unstable.find("t_end = 0.02"), 12, "t_end = 5");
    const auto un = sb.write("un.toml", unstable);
    CHECK(run("run-cross --config " + un.string() + " --out " + (sb.dir / "x").string(), sb.dir / "err3.txt") == 2);
    CHECK(json::parse(slurp(sb.dir / "err3.txt"))["error"]["exit_code"] == 2);
}
