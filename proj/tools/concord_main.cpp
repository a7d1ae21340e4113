// Experiment runner and property verifier.
//
//   concord run    --config <file> [--seed S] [--out DIR] [--scheme V]
//                  [--lambda L] [--rounds N]
//   concord verify --suite <name> [--trials N] [--seed S]
//   concord replay <manifest.json>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "concord/charts.hpp"
#include "concord/config.hpp"
#include "concord/errors.hpp"
#include "concord/verify.hpp"

namespace fs = std::filesystem;
using namespace concord;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

std::string read_file(const fs::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw InvalidInputError("cannot open " + path.string());
    std::stringstream buf;
    buf << f.rdbuf();
    return buf.str();
}

void write_error_manifest(const fs::path& dir, const std::string& message) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    std::ofstream f(dir / "error_manifest.json");
    nlohmann::json doc;
    doc["error"] = message;
    f << doc.dump(2) << "\n";
}

void write_run_charts(const History& history, const SimulatorState& state,
                      const fs::path& dir) {
    const SimulationConfig& cfg = history.config;
    if (cfg.task == TaskKind::regression) {
        std::vector<double> reference(state.shared_grid.size());
        for (std::size_t i = 0; i < reference.size(); ++i)
            reference[i] = cubic_truth_eval(state.shared_grid[i]);
        for (const RoundRecord& rec : history.records)
            write_regression_fit_svg(
                dir / ("fit_round_" + std::to_string(rec.round) + ".svg"),
                state.shared_grid, rec.predictions.values, reference);
    } else {
        const double lo = -6.0;
        const double hi = 6.0;
        const int resolution = 200;
        for (std::size_t i = 0; i < state.agents.size(); ++i) {
            const Matrix grid = decision_grid(state.agents[i].mlp, lo, hi, resolution);
            write_decision_grid_csv(
                dir / ("decision_boundary_agent_" + std::to_string(i) + ".csv"), grid,
                lo, hi);
            write_decision_grid_svg(
                dir / ("decision_boundary_agent_" + std::to_string(i) + ".svg"), grid);
        }
    }
    if (!history.records.empty())
        write_trust_heatmap_svg(dir / "trust_heatmap.svg",
                                history.records.back().trust.matrix.mat());
}

void write_run_datasets(const SimulatorState& state, const fs::path& dir) {
    for (std::size_t i = 0; i < state.agents.size(); ++i) {
        const AgentState& agent = state.agents[i];
        const fs::path path = dir / ("data_agent_" + std::to_string(i) + ".csv");
        if (agent.is_mlp)
            write_labeled_classification_csv(path, agent.cls_data);
        else
            write_labeled_regression_csv(path, agent.reg_data);
    }
    if (!state.agents.empty() && state.agents.front().is_mlp)
        write_unlabeled_csv(dir / "shared_x.csv", state.shared_x);
    else
        write_unlabeled_csv(dir / "shared_x.csv", state.shared_grid);
}

int cmd_run(const std::string& config_path, const std::string& out_override,
            const std::string& scheme_override, double lambda_override,
            int rounds_override, long long seed_override) {
    ExperimentConfig cfg;
    try {
        cfg = load_experiment_config(config_path);
        if (!out_override.empty()) cfg.output_dir = out_override;
        if (!scheme_override.empty()) {
            TrustScheme scheme = cfg.sim.scheme;
            if (scheme_override == "naive") scheme.variant = TrustVariant::naive;
            else if (scheme_override == "static") scheme.variant = TrustVariant::static_scheme;
            else if (scheme_override == "dynamic") scheme.variant = TrustVariant::dynamic;
            else throw InvalidInputError("unknown --scheme value: " + scheme_override);
            cfg.sim.scheme = scheme;
        }
        if (lambda_override >= 0.0) cfg.sim.lambda = lambda_override;
        if (rounds_override > 0) cfg.sim.rounds = rounds_override;
        if (seed_override >= 0)
            cfg.seeds = {static_cast<std::uint64_t>(seed_override)};
        SimulationConfig check = cfg.sim;
        check.master_seed = cfg.seeds.front();
        validate_config(check);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }

    for (std::uint64_t seed : cfg.seeds) {
        SimulationConfig sim = cfg.sim;
        sim.master_seed = seed;
        const fs::path dir = cfg.output_dir / ("seed_" + std::to_string(seed));
        try {
            SimulatorState final_state;
            const History history = run_simulation(sim, &final_state);
            fs::create_directories(dir);
            export_history(history, dir);
            write_run_datasets(final_state, dir);
            write_run_charts(history, final_state, dir);
            std::cout << "seed " << seed << ": " << history.records.size()
                      << " rounds, final disagreement "
                      << format_double(history.records.back().disagreement);
            if (history.consensus_time)
                std::cout << ", consensus at round " << *history.consensus_time;
            std::cout << ", artifacts in " << dir.string() << "\n";
        } catch (const std::exception& e) {
            std::cerr << "error: seed " << seed << ": " << e.what() << "\n";
            write_error_manifest(dir, e.what());
            return kExitFailure;
        }
    }
    return kExitOk;
}

int cmd_verify(const std::string& suite, int trials, std::uint64_t seed) {
    std::vector<SuiteResult> results;
    try {
        if (trials < 1) throw InvalidInputError("verify: trials must be >= 1");
        if (suite == "all")
            results = run_all_suites(trials, seed);
        else
            results.push_back(run_verify_suite(suite, trials, seed));
    } catch (const InvalidInputError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitFailure;
    }
    bool all_passed = true;
    for (const SuiteResult& r : results) {
        std::cout << "suite " << r.name << ": " << r.trials << " trials, " << r.failures
                  << " failures " << (r.passed() ? "[PASS]" : "[FAIL]") << "\n";
        for (const std::string& ce : r.counterexamples)
            std::cout << "counterexample:\n" << ce;
        all_passed = all_passed && r.passed();
    }
    return all_passed ? kExitOk : kExitFailure;
}

int cmd_replay(const std::string& manifest_path) {
    fs::path manifest(manifest_path);
    History recorded;
    std::string recorded_metrics;
    try {
        if (!fs::exists(manifest))
            throw InvalidInputError("replay: no manifest at " + manifest.string());
        const fs::path dir = manifest.parent_path();
        recorded = import_history(dir);
        recorded_metrics = read_file(dir / "metrics.csv");
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
    try {
        const History rerun = run_simulation(recorded.config);
        const fs::path tmp =
            fs::temp_directory_path() /
            ("concord_replay_" + std::to_string(recorded.config.master_seed) + "_" +
             std::to_string(::getpid()));
        export_history(rerun, tmp);
        const std::string rerun_metrics = read_file(tmp / "metrics.csv");
        fs::remove_all(tmp);
        if (rerun_metrics != recorded_metrics) {
            std::cerr << "replay mismatch: metrics.csv differs from the recorded run\n";
            return kExitFailure;
        }
        std::cout << "replay ok: metrics.csv is bit-identical ("
                  << rerun.records.size() << " rounds)\n";
        return kExitOk;
    } catch (const std::exception& e) {
        std::cerr << "error: replay run failed: " << e.what() << "\n";
        return kExitFailure;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"trust-weighted prediction-consensus simulator"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_override;
    std::string scheme_override;
    double lambda_override = -1.0;
    int rounds_override = 0;
    long long seed_override = -1;
    auto* run = app.add_subcommand("run", "run an experiment from a config file");
    run->add_option("--config", config_path, "experiment config (json)")->required();
    run->add_option("--out", out_override, "output directory override");
    run->add_option("--scheme", scheme_override, "trust scheme: naive|static|dynamic");
    run->add_option("--lambda", lambda_override, "disagreement weight override");
    run->add_option("--rounds", rounds_override, "round count override");
    run->add_option("--seed", seed_override, "single-seed override");

    std::string suite = "all";
    int trials = 100;
    std::uint64_t verify_seed = 12345;
    auto* verify = app.add_subcommand("verify", "run randomized property suites");
    verify->add_option("--suite", suite,
                       "scrambling_lemma|metropolis|prop_single|prop_multi|"
                       "confidence_ineq|sia|all");
    verify->add_option("--trials", trials, "trials per suite");
    verify->add_option("--seed", verify_seed, "suite rng seed");

    std::string manifest_path;
    auto* replay = app.add_subcommand("replay", "re-run a recorded experiment");
    replay->add_option("manifest", manifest_path, "path to manifest.json")->required();

    CLI11_PARSE(app, argc, argv);

    if (run->parsed())
        return cmd_run(config_path, out_override, scheme_override, lambda_override,
                       rounds_override, seed_override);
    if (verify->parsed()) return cmd_verify(suite, trials, verify_seed);
    if (replay->parsed()) return cmd_replay(manifest_path);
    return kExitUsage;
}
