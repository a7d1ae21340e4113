// End-to-end checks of the command-line tool; the binary path arrives via
// the CONCORD_CLI environment variable set by ctest.

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

namespace fs = std::filesystem;

namespace {

struct CliResult {
    int status = -1;
    std::string output;
};

const char* cli_path() {
    const char* p = std::getenv("CONCORD_CLI");
    REQUIRE_MESSAGE(p != nullptr, "CONCORD_CLI must point at the binary");
    return p;
}

fs::path config_dir() {
    const char* p = std::getenv("CONCORD_CONFIG_DIR");
    REQUIRE_MESSAGE(p != nullptr, "CONCORD_CONFIG_DIR must point at configs/");
    return p;
}

fs::path scratch_dir() {
    const auto dir = fs::temp_directory_path() / "concord_cli_test";
    return dir;
}

CliResult run_cli(const std::string& args, const fs::path& cwd = fs::current_path()) {
    const fs::path log = scratch_dir() / "cli_output.txt";
    fs::create_directories(scratch_dir());
    const std::string cmd = "cd '" + cwd.string() + "' && '" + std::string(cli_path()) +
                            "' " + args + " > '" + log.string() + "' 2>&1";
    const int raw = std::system(cmd.c_str());
    CliResult r;
    r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    std::ifstream f(log);
    std::stringstream buf;
    buf << f.rdbuf();
    r.output = buf.str();
    return r;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_CASE("cli run produces the full artifact set and replays bit-identically") {
    const fs::path out = scratch_dir() / "run_a1";
    fs::remove_all(out);
    const fs::path config = config_dir() / "appendix_a1.json";
    REQUIRE(fs::exists(config));

    const CliResult run = run_cli("run --config '" + config.string() +
                                  "' --rounds 3 --seed 5 --out '" + out.string() + "'");
    CHECK_MESSAGE(run.status == 0, run.output);
    const fs::path seed_dir = out / "seed_5";
    for (const char* name :
         {"manifest.json", "metrics.csv", "trust_round_1.csv", "trust_round_3.csv",
          "predictions_round_2.csv", "fit_round_3.svg", "trust_heatmap.svg",
          "shared_x.csv", "data_agent_0.csv"})
        CHECK_MESSAGE(fs::exists(seed_dir / name), name);

    // immediate replay: identical metrics
    const CliResult replay =
        run_cli("replay '" + (seed_dir / "manifest.json").string() + "'");
    CHECK_MESSAGE(replay.status == 0, replay.output);
    CHECK(replay.output.find("bit-identical") != std::string::npos);

    // replay is independent of the working directory
    const fs::path elsewhere = scratch_dir() / "elsewhere";
    fs::create_directories(elsewhere);
    const CliResult replay2 =
        run_cli("replay '" + (seed_dir / "manifest.json").string() + "'", elsewhere);
    CHECK(replay2.status == 0);

    // an edited seed in the manifest must be detected as a mismatch
    auto manifest = nlohmann::json::parse(slurp(seed_dir / "manifest.json"));
    manifest["config"]["master_seed"] = 6;
    {
        std::ofstream f(seed_dir / "manifest.json");
        f << manifest.dump(2) << "\n";
    }
    const CliResult tampered =
        run_cli("replay '" + (seed_dir / "manifest.json").string() + "'");
    CHECK(tampered.status == 1);
    CHECK(tampered.output.find("mismatch") != std::string::npos);
}

TEST_CASE("two runs from different working directories agree byte for byte") {
    const fs::path out_a = scratch_dir() / "wd_a";
    const fs::path out_b = scratch_dir() / "wd_b";
    fs::remove_all(out_a);
    fs::remove_all(out_b);
    const fs::path config = config_dir() / "appendix_a1.json";
    const fs::path elsewhere = scratch_dir() / "cwd2";
    fs::create_directories(elsewhere);

    CHECK(run_cli("run --config '" + config.string() + "' --rounds 2 --seed 9 --out '" +
                  out_a.string() + "'")
              .status == 0);
    CHECK(run_cli("run --config '" + config.string() + "' --rounds 2 --seed 9 --out '" +
                      out_b.string() + "'",
                  elsewhere)
              .status == 0);
    CHECK(slurp(out_a / "seed_9" / "metrics.csv") ==
          slurp(out_b / "seed_9" / "metrics.csv"));
}

TEST_CASE("classification runs under both schemes yield comparable metric files") {
    const fs::path cfg = scratch_dir() / "small_cls.json";
    fs::create_directories(scratch_dir());
    {
        std::ofstream f(cfg);
        f << R"({
            "kind": "classification_toy",
            "rounds": 4,
            "warmup_rounds": 1,
            "seed": 2,
            "classification": {"n_per_client": 60, "shared_per_class": 12,
                               "init_epochs": 5},
            "output": "unused"
        })";
    }
    const fs::path out_dyn = scratch_dir() / "cls_dynamic";
    const fs::path out_nav = scratch_dir() / "cls_naive";
    fs::remove_all(out_dyn);
    fs::remove_all(out_nav);

    const CliResult dyn = run_cli("run --config '" + cfg.string() +
                                  "' --scheme dynamic --out '" + out_dyn.string() + "'");
    CHECK_MESSAGE(dyn.status == 0, dyn.output);
    const CliResult nav = run_cli("run --config '" + cfg.string() +
                                  "' --scheme naive --out '" + out_nav.string() + "'");
    CHECK_MESSAGE(nav.status == 0, nav.output);

    const fs::path m_dyn = out_dyn / "seed_2" / "metrics.csv";
    const fs::path m_nav = out_nav / "seed_2" / "metrics.csv";
    REQUIRE(fs::exists(m_dyn));
    REQUIRE(fs::exists(m_nav));
    CHECK(slurp(m_dyn) != slurp(m_nav));  // schemes actually differ

    // classification artifacts: decision rasters per agent
    for (int i = 0; i < 4; ++i) {
        CHECK(fs::exists(out_dyn / "seed_2" /
                         ("decision_boundary_agent_" + std::to_string(i) + ".csv")));
        CHECK(fs::exists(out_dyn / "seed_2" /
                         ("decision_boundary_agent_" + std::to_string(i) + ".svg")));
    }
}

TEST_CASE("cli error paths") {
    const CliResult missing = run_cli("run --config /does/not/exist.json");
    CHECK(missing.status != 0);

    const fs::path bad = scratch_dir() / "bad.json";
    {
        std::ofstream f(bad);
        f << "{\n  \"kind\": \"regression_toy\",\n  \"oops\": 1\n}\n";
    }
    const CliResult unknown_key = run_cli("run --config '" + bad.string() + "'");
    CHECK(unknown_key.status == 2);
    CHECK(unknown_key.output.find("oops") != std::string::npos);

    const fs::path invalid = scratch_dir() / "invalid.json";
    {
        std::ofstream f(invalid);
        f << "{\n  \"kind\": \"regression_toy\",\n  broken\n}\n";
    }
    const CliResult parse_error = run_cli("run --config '" + invalid.string() + "'");
    CHECK(parse_error.status == 2);
    CHECK(parse_error.output.find(":3") != std::string::npos);  // line anchor

    CHECK(run_cli("verify --suite nonsense --trials 5").status == 2);
    CHECK(run_cli("verify --suite sia --trials 0").status == 2);
    CHECK(run_cli("replay /no/such/manifest.json").status == 2);
}

TEST_CASE("cli verify runs the property suites") {
    const CliResult metro = run_cli("verify --suite metropolis --trials 5 --seed 3");
    CHECK_MESSAGE(metro.status == 0, metro.output);
    CHECK(metro.output.find("suite metropolis: 5 trials, 0 failures") !=
          std::string::npos);

    const CliResult all = run_cli("verify --suite all --trials 3 --seed 4");
    CHECK_MESSAGE(all.status == 0, all.output);
    CHECK(all.output.find("scrambling_lemma") != std::string::npos);
    CHECK(all.output.find("confidence_ineq") != std::string::npos);
}
