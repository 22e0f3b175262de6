#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

std::string cli_binary() {
    if (const char* env = std::getenv("ROBUSTFORM_CLI")) return env;
    for (const char* candidate :
         {"./build/tools/robustform", "../tools/robustform", "tools/robustform"})
        if (fs::exists(candidate)) return candidate;
    return {};
}

struct RunResult {
    int exit_code = -1;
    std::string out;
    std::string err;
};

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

RunResult run_cli(const std::string& args, const fs::path& dir) {
    const std::string binary = cli_binary();
    REQUIRE(!binary.empty());
    const fs::path out = dir / "stdout.txt";
    const fs::path err = dir / "stderr.txt";
    const std::string command =
        binary + " " + args + " > " + out.string() + " 2> " + err.string();
    const int status = std::system(command.c_str());
    RunResult result;
    result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    result.out = slurp(out);
    result.err = slurp(err);
    return result;
}

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("robustform_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

void write(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
}

const char* kSinglePriorConfig = R"({
  "schema_version": 1,
  "tree": {"steps": 3, "dt": 1.0, "s0": 100.0, "branching": 2, "factors": [1.1, 0.9]},
  "intensity": {"kind": "constant", "value": 0.1},
  "ambiguity": {"kind": "kernels", "kernels": [[0.5, 0.5]]},
  "products": [{"name": "bond", "type": "survival", "payoff": {"kind": "const", "value": 1.0}}]
})";

const char* kAmbiguousConfig = R"({
  "schema_version": 1,
  "tree": {"steps": 3, "dt": 1.0, "s0": 100.0, "branching": 2, "factors": [1.1, 0.9]},
  "intensity": {"kind": "constant", "value": 0.1},
  "ambiguity": {"kind": "kernels", "kernels": [[0.6, 0.4], [0.4, 0.6]]},
  "products": [
    {"name": "bond", "type": "survival", "payoff": {"kind": "const", "value": 1.0}},
    {"name": "protection", "type": "recovery", "payoff": {"kind": "const", "value": 0.4}},
    {"name": "premium", "type": "annuity", "payoff": {"kind": "linear_in_time", "rate": 1.0}}
  ]
})";

const char* kSuperhedgeConfig = R"({
  "schema_version": 1,
  "tree": {"steps": 3, "dt": 1.0, "s0": 100.0, "branching": 3, "factors": [1.2, 1.0, 0.8]},
  "intensity": {"kind": "constant", "value": 0.1},
  "ambiguity": {"kind": "polytope"},
  "superhedge": {
    "market": "reference",
    "stream": {"kind": "terminal", "payoff": {"kind": "call", "strike": 100.0}},
    "barriers": [{"kind": "barrier_up", "level": 115.0}, {"kind": "barrier_down", "level": 85.0}]
  }
})";

}  // namespace

TEST_CASE("price writes the survival bond value exp(-mu T) at the root") {
    const fs::path dir = fresh_dir("price");
    write(dir / "config.json", kSinglePriorConfig);
    const RunResult r = run_cli("price --config " + (dir / "config.json").string() + " --out " +
                                    (dir / "out").string(),
                                dir);
    CHECK(r.exit_code == 0);
    const std::string csv = slurp(dir / "out" / "bond.csv");
    CHECK(csv.find("time,node,status,bucket,value") == 0);
    CHECK(csv.find("0,0,alive,-1,0.74081822068171788") != std::string::npos);
}

TEST_CASE("price warns and succeeds on an empty product list") {
    const fs::path dir = fresh_dir("price_empty");
    std::string config = kSinglePriorConfig;
    config.replace(config.find("\"products\": [{\"name\": \"bond\", \"type\": \"survival\", "
                               "\"payoff\": {\"kind\": \"const\", \"value\": 1.0}}]"),
                   std::string("\"products\": [{\"name\": \"bond\", \"type\": \"survival\", "
                               "\"payoff\": {\"kind\": \"const\", \"value\": 1.0}}]")
                       .size(),
                   "\"products\": []");
    write(dir / "config.json", config);
    const RunResult r = run_cli("price --config " + (dir / "config.json").string() + " --out " +
                                    (dir / "out").string(),
                                dir);
    CHECK(r.exit_code == 0);
    CHECK(r.out.find("warning") != std::string::npos);
    CHECK(!fs::exists(dir / "out" / "bond.csv"));
}

TEST_CASE("malformed configs exit with code 2 and a located message") {
    const fs::path dir = fresh_dir("badconfig");

    write(dir / "syntax.json", "{\n  \"schema_version\": 1,\n  \"oops\n}");
    RunResult r = run_cli("price --config " + (dir / "syntax.json").string(), dir);
    CHECK(r.exit_code == 2);
    CHECK(r.err.find("syntax.json:3") != std::string::npos);

    std::string bad_intensity = kSinglePriorConfig;
    const auto pos = bad_intensity.find("\"constant\"");
    bad_intensity.replace(pos, std::string("\"constant\"").size(), "\"sometimes\"");
    write(dir / "intensity.json", bad_intensity);
    r = run_cli("price --config " + (dir / "intensity.json").string(), dir);
    CHECK(r.exit_code == 2);
    CHECK(r.err.find("$.intensity.kind") != std::string::npos);

    write(dir / "unknown.json",
          R"({"schema_version": 1, "tre": {}, "intensity": {}, "ambiguity": {}})");
    r = run_cli("price --config " + (dir / "unknown.json").string(), dir);
    CHECK(r.exit_code == 2);
    CHECK(r.err.find("unknown key 'tre'") != std::string::npos);
}

TEST_CASE("superhedge reports the duality gap and verification lines") {
    const fs::path dir = fresh_dir("superhedge");
    write(dir / "config.json", kSuperhedgeConfig);
    const RunResult r = run_cli("superhedge --config " + (dir / "config.json").string() +
                                    " --out " + (dir / "out").string(),
                                dir);
    CHECK(r.exit_code == 0);
    const std::string report = slurp(dir / "out" / "superhedge_report.txt");
    CHECK(report.find("mode=saturated") != std::string::npos);
    CHECK(report.find("worst_violation=") != std::string::npos);
    CHECK(report.find("duality_gap=") != std::string::npos);
    CHECK(fs::exists(dir / "out" / "superhedge_price.csv"));
    CHECK(fs::exists(dir / "out" / "superhedge_strategy.csv"));

    // The reported duality gap is tiny in saturated mode.
    const auto pos = report.find("duality_gap=");
    const double gap = std::abs(std::stod(report.substr(pos + 12)));
    CHECK(gap <= 1e-9);
}

TEST_CASE("product-prior mode reports weak duality") {
    const fs::path dir = fresh_dir("superhedge_product");
    std::string config = kSuperhedgeConfig;
    config.replace(config.find("\"market\": \"reference\""),
                   std::string("\"market\": \"reference\"").size(),
                   "\"market\": \"enlarged\"");
    write(dir / "config.json", config);
    const RunResult r = run_cli("superhedge --config " + (dir / "config.json").string() +
                                    " --out " + (dir / "out").string() + " --mode product",
                                dir);
    CHECK(r.exit_code == 0);
    const std::string report = slurp(dir / "out" / "superhedge_report.txt");
    CHECK(report.find("mode=weak-duality") != std::string::npos);
    const auto pos = report.find("duality_gap_min=");
    CHECK(std::stod(report.substr(pos + 16)) >= -1e-12);
}

TEST_CASE("zero stream superhedges to a zero price and strategy") {
    const fs::path dir = fresh_dir("superhedge_zero");
    std::string config = kSuperhedgeConfig;
    config.replace(config.find("{\"kind\": \"call\", \"strike\": 100.0}"),
                   std::string("{\"kind\": \"call\", \"strike\": 100.0}").size(),
                   "{\"kind\": \"const\", \"value\": 0.0}");
    write(dir / "config.json", config);
    const RunResult r = run_cli("superhedge --config " + (dir / "config.json").string() +
                                    " --out " + (dir / "out").string(),
                                dir);
    CHECK(r.exit_code == 0);
    CHECK(r.out.find("price=0\n") != std::string::npos);
    const std::string strategy = slurp(dir / "out" / "superhedge_strategy.csv");
    std::istringstream lines(strategy);
    std::string line;
    std::getline(lines, line);  // header
    while (std::getline(lines, line))
        CHECK(line.substr(line.rfind(',') + 1) == "0");
}

TEST_CASE("verify passes the ambiguous corpus and skips where single-prior") {
    const fs::path dir = fresh_dir("verify");
    write(dir / "ambiguous.json", kAmbiguousConfig);
    RunResult r = run_cli("verify --config " + (dir / "ambiguous.json").string(), dir);
    CHECK(r.exit_code == 0);
    CHECK(r.out.find("weak_tower_strict_gap>0") != std::string::npos);
    CHECK(r.out.find("FAIL") == std::string::npos);

    write(dir / "single.json", kSinglePriorConfig);
    r = run_cli("verify --config " + (dir / "single.json").string(), dir);
    CHECK(r.exit_code == 0);
    CHECK(r.out.find("skipped: no sublinearity") != std::string::npos);
}

TEST_CASE("simulate is deterministic and respects the hazard") {
    const fs::path dir = fresh_dir("simulate");
    write(dir / "config.json", kAmbiguousConfig);

    // Ambiguous config without a chosen kernel: config error.
    RunResult r = run_cli("simulate --config " + (dir / "config.json").string() + " --out " +
                              (dir / "a").string() + " --seed 7",
                          dir);
    CHECK(r.exit_code == 2);

    std::string chosen = kAmbiguousConfig;
    chosen.insert(chosen.rfind('}'), R"(, "simulate": {"samples": 400, "kernel_index": 1})");
    write(dir / "chosen.json", chosen);

    r = run_cli("simulate --config " + (dir / "chosen.json").string() + " --out " +
                    (dir / "a").string() + " --seed 7",
                dir);
    CHECK(r.exit_code == 0);
    r = run_cli("simulate --config " + (dir / "chosen.json").string() + " --out " +
                    (dir / "b").string() + " --seed 7",
                dir);
    CHECK(r.exit_code == 0);
    CHECK(slurp(dir / "a" / "simulation.csv") == slurp(dir / "b" / "simulation.csv"));

    // Missing seed is a config error.
    r = run_cli("simulate --config " + (dir / "chosen.json").string() + " --out " +
                    (dir / "c").string(),
                dir);
    CHECK(r.exit_code == 2);

    // Zero intensity: every sample survives.
    std::string no_hazard = chosen;
    no_hazard.replace(no_hazard.find("\"value\": 0.1"), std::string("\"value\": 0.1").size(),
                      "\"value\": 0.0");
    write(dir / "nohazard.json", no_hazard);
    r = run_cli("simulate --config " + (dir / "nohazard.json").string() + " --out " +
                    (dir / "d").string() + " --seed 3",
                dir);
    CHECK(r.exit_code == 0);
    const std::string csv = slurp(dir / "d" / "simulation.csv");
    CHECK(csv.find("default") == std::string::npos);
}

TEST_CASE("empirical survival frequency matches exp(-mu T) within 3 standard errors") {
    const fs::path dir = fresh_dir("simulate_ci");
    std::string config = kAmbiguousConfig;
    config.insert(config.rfind('}'), R"(, "simulate": {"samples": 100000, "kernel_index": 0})");
    write(dir / "config.json", config);
    const RunResult r = run_cli("simulate --config " + (dir / "config.json").string() +
                                    " --out " + (dir / "out").string() + " --seed 99",
                                dir);
    CHECK(r.exit_code == 0);

    const std::string csv = slurp(dir / "out" / "simulation.csv");
    std::istringstream lines(csv);
    std::string line;
    std::getline(lines, line);  // header
    long survived = 0, total = 0;
    while (std::getline(lines, line)) {
        ++total;
        if (line.find("survival") != std::string::npos) ++survived;
    }
    CHECK(total == 100000);
    const double p = std::exp(-0.1 * 3.0);
    const double se = std::sqrt(p * (1.0 - p) / static_cast<double>(total));
    CHECK(std::abs(static_cast<double>(survived) / static_cast<double>(total) - p) <= 3.0 * se);
}
