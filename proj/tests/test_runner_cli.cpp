#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "doctest.h"
#include "timebin/config.hpp"
#include "timebin/events.hpp"
#include "timebin/runner.hpp"

using namespace timebin;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "timebin_cli_tests" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(TIMEBIN_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    REQUIRE(in.good());
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

// key -> first numeric token after it, for the "key value ..." text files
std::map<std::string, double> parse_keyed(const std::string& text) {
    std::map<std::string, double> out;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream fields(line);
        std::string key;
        double value;
        if (fields >> key >> value) out[key] = value;
    }
    return out;
}

}  // namespace

TEST_CASE("analytic-tables writes its files and the manifest lists them") {
    const fs::path dir = fresh_dir("analytic");
    RunOptions opt;
    opt.output_dir = dir.string();
    const RunManifest manifest = run_preset("analytic-tables", opt);
    CHECK(manifest.files == std::vector<std::string>{"joint_table.csv", "visibility_curve.csv",
                                                     "manifest.txt"});
    for (const std::string& f : manifest.files) CHECK(fs::exists(dir / f));

    const std::string joint = slurp(dir / "joint_table.csv");
    CHECK(joint.find("bin_a,port_a,bin_b,port_b,probability") != std::string::npos);
    std::size_t rows = 0;
    std::istringstream in(joint);
    std::string line;
    while (std::getline(in, line))
        if (!line.empty() && line[0] != '#' && line.find("bin_a") == std::string::npos) ++rows;
    CHECK(rows == 36);

    const std::string manifest_text = slurp(dir / "manifest.txt");
    CHECK(manifest_text.find("preset analytic-tables") != std::string::npos);
    CHECK(manifest_text.find("joint_table.csv") != std::string::npos);
}

TEST_CASE("config echo in outputs re-parses to the resolved config") {
    const fs::path dir = fresh_dir("echo");
    RunOptions opt;
    opt.output_dir = dir.string();
    opt.overrides = {"mu=0.07", "seed=99"};
    run_preset("analytic-tables", opt);
    const ExperimentConfig resolved = resolve_config("analytic-tables", opt);
    CHECK(resolved.mu == doctest::Approx(0.07));
    const std::string text = slurp(dir / "joint_table.csv");
    const auto pos = text.find("# config ");
    REQUIRE(pos != std::string::npos);
    const std::string json = text.substr(pos + 9, text.find('\n', pos) - pos - 9);
    CHECK(config_from_json(json) == resolved);
}

TEST_CASE("sidepeak preset estimates the configured pair probability") {
    const fs::path dir = fresh_dir("sidepeak");
    RunOptions opt;
    opt.output_dir = dir.string();
    opt.overrides = {"mu=0.05", "n_pulses=20000000", "alice.dark_rate=0", "bob.dark_rate=0"};
    opt.seed = 2026;
    const RunManifest manifest = run_preset("sidepeak", opt);
    CHECK(fs::exists(dir / "tac.csv"));
    CHECK(fs::exists(dir / "ppair.txt"));
    CHECK(manifest.config.mu == doctest::Approx(0.05));

    const auto keyed = parse_keyed(slurp(dir / "ppair.txt"));
    REQUIRE(keyed.count("sidepeak_corrected"));
    CHECK(keyed.at("sidepeak_corrected") == doctest::Approx(0.05).epsilon(0.25));
    REQUIRE(keyed.count("sidepeak_raw"));
    CHECK(keyed.at("sidepeak_raw") < keyed.at("sidepeak_corrected"));
    REQUIRE(keyed.count("standard"));
    CHECK(keyed.at("standard") == doctest::Approx(0.05).epsilon(0.25));
}

TEST_CASE("bell-scan rejects a run without pulses, naming the invariant") {
    RunOptions opt;
    opt.output_dir = fresh_dir("nopulses").string();
    opt.overrides = {"n_pulses=0"};
    CHECK_THROWS_WITH_AS(run_preset("bell-scan", opt), doctest::Contains("n_pulses"),
                         std::invalid_argument);
}

TEST_CASE("unknown preset and malformed overrides are usage errors") {
    RunOptions opt;
    CHECK_THROWS_AS(run_preset("frobnicate", opt), UsageError);
    opt.overrides = {"mu0.1"};
    CHECK_THROWS_AS(run_preset("analytic-tables", opt), UsageError);
}

TEST_CASE("validate_config_file reports diagnostics") {
    const fs::path dir = fresh_dir("validate");
    const fs::path good = dir / "good.json";
    {
        std::ofstream out(good);
        out << to_json(default_bell_config());
    }
    CHECK(validate_config_file(good.string()).empty());

    const fs::path bad = dir / "bad.json";
    {
        std::ofstream out(bad);
        std::string doc = to_json(default_bell_config());
        out << apply_override(doc, "mu=0.9");
    }
    const auto diags = validate_config_file(bad.string());
    REQUIRE(!diags.empty());
    CHECK(diags[0].field == "mu");

    CHECK_THROWS_AS(validate_config_file((dir / "missing.json").string()), std::runtime_error);
}

TEST_CASE("cli exit codes") {
    const fs::path dir = fresh_dir("cli");
    CHECK(run_cli("analytic-tables --out " + (dir / "ok").string()) == 0);
    CHECK(run_cli("frobnicate") == 2);
    CHECK(run_cli("bell-scan --set mu-is-bad") == 2);
    CHECK(run_cli("bell-scan --set n_pulses=0 --out " + (dir / "fail").string()) == 1);
    CHECK(run_cli("tac-histogram --check-config --set mu=0.9") == 1);
    CHECK(run_cli("tac-histogram --check-config") == 0);
}

TEST_CASE("cli reproducibility: identical invocations give identical csv files") {
    const fs::path a = fresh_dir("repro_a");
    const fs::path b = fresh_dir("repro_b");
    const std::string args =
        "sidepeak --seed 11 --set n_pulses=400000 --set chunk_count=1 --out ";
    REQUIRE(run_cli(args + a.string()) == 0);
    REQUIRE(run_cli(args + b.string()) == 0);
    for (const char* f : {"tac.csv", "windows.csv", "ppair.txt"}) CHECK(slurp(a / f) == slurp(b / f));
}

TEST_CASE("tac-histogram dumps a parseable event stream on request") {
    const fs::path dir = fresh_dir("events");
    const std::string args = "tac-histogram --dump-events --seed 5 --set n_pulses=20000 --out " +
                             dir.string();
    REQUIRE(run_cli(args) == 0);
    REQUIRE(fs::exists(dir / "events.txt"));
    std::ifstream in(dir / "events.txt");
    const EventStream stream = read_event_stream(in);
    CHECK(stream.config.n_pulses == 20000);
    CHECK(!stream.events.empty());
}
