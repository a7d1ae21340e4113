#include "concord/config.hpp"

#include <fstream>
#include <sstream>

#include "concord/errors.hpp"

namespace concord {

namespace {

using nlohmann::json;

void require_keys(const json& obj, const std::string& where,
                  std::initializer_list<const char*> allowed) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool known = false;
        for (const char* k : allowed)
            if (it.key() == k) {
                known = true;
                break;
            }
        if (!known)
            throw InvalidInputError("config: unknown key '" + it.key() + "' in " + where);
    }
}

template <typename T>
T get_or(const json& obj, const char* key, T fallback) {
    if (!obj.contains(key)) return fallback;
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception& e) {
        throw InvalidInputError(std::string("config: bad value for '") + key +
                                "': " + e.what());
    }
}

TrustVariant variant_from_string(const std::string& s) {
    if (s == "naive") return TrustVariant::naive;
    if (s == "static") return TrustVariant::static_scheme;
    if (s == "dynamic") return TrustVariant::dynamic;
    throw InvalidInputError("config: unknown trust scheme '" + s + "'");
}

std::string variant_to_string(TrustVariant v) {
    switch (v) {
        case TrustVariant::naive: return "naive";
        case TrustVariant::static_scheme: return "static";
        case TrustVariant::dynamic: return "dynamic";
    }
    return "dynamic";
}

void apply_trust(const json& obj, TrustScheme& scheme) {
    require_keys(obj, "trust", {"scheme", "confidence_weighted", "entropy_floor"});
    if (obj.contains("scheme"))
        scheme.variant = variant_from_string(obj.at("scheme").get<std::string>());
    scheme.confidence_weighted =
        get_or(obj, "confidence_weighted", scheme.confidence_weighted);
    scheme.entropy_floor = get_or(obj, "entropy_floor", scheme.entropy_floor);
}

void apply_regression(const json& obj, SimulationConfig& sim) {
    require_keys(obj, "regression", {"grid", "agents"});
    if (obj.contains("grid")) {
        const json& grid = obj.at("grid");
        require_keys(grid, "regression.grid", {"lo", "hi", "n"});
        sim.grid_lo = get_or(grid, "lo", sim.grid_lo);
        sim.grid_hi = get_or(grid, "hi", sim.grid_hi);
        sim.grid_n = get_or(grid, "n", sim.grid_n);
    }
    if (obj.contains("agents")) {
        sim.poly_agents.clear();
        for (const json& a : obj.at("agents")) {
            require_keys(a, "regression.agents[]",
                         {"x_mean", "x_std", "n", "noise_std", "degree"});
            PolyAgentConfig agent;
            agent.data.x_mean = get_or(a, "x_mean", 0.0);
            agent.data.x_std = get_or(a, "x_std", 1.0);
            agent.data.n = get_or(a, "n", 50);
            agent.data.noise_std = get_or(a, "noise_std", 1.0);
            agent.degree = get_or(a, "degree", 4);
            sim.poly_agents.push_back(agent);
        }
    }
}

void apply_classification(const json& obj, SimulationConfig& sim) {
    require_keys(obj, "classification",
                 {"class_means", "client_mixtures", "n_per_client", "shared_per_class",
                  "flip_fractions", "layers", "init_epochs", "train"});
    if (obj.contains("class_means")) {
        sim.cls.class_means.clear();
        for (const json& m : obj.at("class_means")) {
            if (!m.is_array() || m.size() != 2)
                throw InvalidInputError("config: class_means entries must be [x, y]");
            sim.cls.class_means.push_back({m.at(0).get<double>(), m.at(1).get<double>()});
        }
    }
    if (obj.contains("client_mixtures")) {
        sim.cls.client_mixtures.clear();
        for (const json& row : obj.at("client_mixtures"))
            sim.cls.client_mixtures.push_back(row.get<std::vector<double>>());
    }
    sim.cls.n_per_client = get_or(obj, "n_per_client", sim.cls.n_per_client);
    sim.cls.shared_per_class = get_or(obj, "shared_per_class", sim.cls.shared_per_class);
    if (obj.contains("flip_fractions"))
        sim.flip_fractions = obj.at("flip_fractions").get<std::vector<double>>();
    if (obj.contains("layers"))
        sim.mlp_layers = obj.at("layers").get<std::vector<int>>();
    sim.init_epochs = get_or(obj, "init_epochs", sim.init_epochs);
    if (obj.contains("train")) {
        const json& tr = obj.at("train");
        require_keys(tr, "classification.train",
                     {"learning_rate", "local_epochs", "batch_local", "batch_shared"});
        sim.train.learning_rate = get_or(tr, "learning_rate", sim.train.learning_rate);
        sim.train.local_epochs = get_or(tr, "local_epochs", sim.train.local_epochs);
        sim.train.batch_size_local = get_or(tr, "batch_local", sim.train.batch_size_local);
        sim.train.batch_size_shared =
            get_or(tr, "batch_shared", sim.train.batch_size_shared);
    }
}

void apply_sim_fields(const json& doc, SimulationConfig& sim) {
    if (doc.contains("task")) {
        const std::string task = doc.at("task").get<std::string>();
        if (task == "regression")
            sim.task = TaskKind::regression;
        else if (task == "classification")
            sim.task = TaskKind::classification;
        else
            throw InvalidInputError("config: unknown task '" + task + "'");
    }
    sim.rounds = get_or(doc, "rounds", sim.rounds);
    sim.warmup_rounds = get_or(doc, "warmup_rounds", sim.warmup_rounds);
    sim.lambda = get_or(doc, "lambda", sim.lambda);
    sim.consensus_threshold =
        get_or(doc, "consensus_threshold", sim.consensus_threshold);
    sim.master_seed = get_or(doc, "master_seed", sim.master_seed);
    if (doc.contains("trust")) apply_trust(doc.at("trust"), sim.scheme);
    if (doc.contains("regression")) apply_regression(doc.at("regression"), sim);
    if (doc.contains("classification")) apply_classification(doc.at("classification"), sim);
}

constexpr std::initializer_list<const char*> kSimKeys = {
    "task",   "rounds", "warmup_rounds", "lambda",         "consensus_threshold",
    "master_seed", "trust",  "regression",    "classification"};

}  // namespace

SimulationConfig preset_regression_toy() {
    SimulationConfig sim;
    sim.task = TaskKind::regression;
    sim.rounds = 20;
    sim.warmup_rounds = 0;
    sim.lambda = 1.0;
    // consensus band: 5% of the cubic's spread over the shared grid; the
    // noisy local fits keep an RMS disagreement floor well above the 1e-2
    // default, so the toy declares consensus relative to the task scale
    sim.consensus_threshold = 0.267;
    sim.scheme = TrustScheme{TrustVariant::naive, false, 1e-3};
    sim.grid_lo = -4.0;
    sim.grid_hi = 4.0;
    sim.grid_n = 50;
    sim.poly_agents = {
        {{-2.0, 1.0, 50, 1.0}, 4},
        {{0.0, 1.0, 50, 1.0}, 4},
        {{2.0, 1.0, 50, 1.0}, 4},
    };
    return sim;
}

SimulationConfig preset_weak_node_toy() {
    SimulationConfig sim;
    sim.task = TaskKind::regression;
    sim.rounds = 50;
    sim.warmup_rounds = 0;
    sim.lambda = 1.0;
    sim.scheme = TrustScheme{TrustVariant::dynamic, false, 1e-3};
    sim.grid_lo = -4.0;
    sim.grid_hi = 6.0;
    sim.grid_n = 50;
    sim.poly_agents = {
        {{-2.0, 1.0, 50, 1.0}, 4},
        {{0.0, 1.0, 50, 1.0}, 4},
        {{2.0, 1.0, 50, 1.0}, 4},
        {{3.0, 1.0, 50, 1.0}, 1},
    };
    return sim;
}

SimulationConfig preset_classification_toy() {
    SimulationConfig sim;
    sim.task = TaskKind::classification;
    sim.rounds = 15;
    sim.warmup_rounds = 3;
    sim.lambda = 0.5;
    sim.scheme = TrustScheme{TrustVariant::dynamic, true, 1e-3};
    sim.cls.class_means = {{-2.0, 2.0}, {2.0, 2.0}, {-2.0, -2.0}, {2.0, -2.0}};
    sim.cls.client_mixtures = {
        {0.7, 0.1, 0.1, 0.1},
        {0.1, 0.7, 0.1, 0.1},
        {0.1, 0.1, 0.7, 0.1},
        {0.1, 0.1, 0.1, 0.7},
    };
    sim.cls.n_per_client = 200;
    sim.cls.shared_per_class = 50;
    sim.flip_fractions = {0.1, 0.1, 0.1, 1.0};
    sim.mlp_layers = {2, 5, 10, 4};
    sim.init_epochs = 40;
    sim.train.learning_rate = 0.05;
    sim.train.local_epochs = 5;
    sim.train.batch_size_local = 64;
    sim.train.batch_size_shared = 256;
    return sim;
}

ExperimentConfig parse_experiment_config(const nlohmann::json& doc) {
    if (!doc.is_object()) throw InvalidInputError("config: top level must be an object");
    std::vector<const char*> allowed{"kind", "seed", "seeds", "output"};
    allowed.insert(allowed.end(), kSimKeys.begin(), kSimKeys.end());
    for (auto it = doc.begin(); it != doc.end(); ++it) {
        bool known = false;
        for (const char* k : allowed)
            if (it.key() == k) known = true;
        if (!known)
            throw InvalidInputError("config: unknown key '" + it.key() + "' at top level");
    }

    ExperimentConfig cfg;
    cfg.kind = get_or<std::string>(doc, "kind", "custom");
    if (cfg.kind == "regression_toy")
        cfg.sim = preset_regression_toy();
    else if (cfg.kind == "weak_node_toy")
        cfg.sim = preset_weak_node_toy();
    else if (cfg.kind == "classification_toy")
        cfg.sim = preset_classification_toy();
    else if (cfg.kind != "custom")
        throw InvalidInputError("config: unknown kind '" + cfg.kind + "'");

    apply_sim_fields(doc, cfg.sim);

    if (doc.contains("seeds") && doc.contains("seed"))
        throw InvalidInputError("config: give either 'seed' or 'seeds', not both");
    if (doc.contains("seeds")) {
        cfg.seeds = doc.at("seeds").get<std::vector<std::uint64_t>>();
        if (cfg.seeds.empty()) throw InvalidInputError("config: 'seeds' must be non-empty");
    } else if (doc.contains("seed")) {
        cfg.seeds = {doc.at("seed").get<std::uint64_t>()};
    }
    cfg.output_dir = get_or<std::string>(doc, "output", "out");

    SimulationConfig check = cfg.sim;
    check.master_seed = cfg.seeds.front();
    validate_config(check);
    return cfg;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw InvalidInputError("config: cannot open " + path.string());
    std::stringstream buf;
    buf << f.rdbuf();
    const std::string text = buf.str();
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        std::size_t line = 1;
        for (std::size_t i = 0; i < e.byte && i < text.size(); ++i)
            if (text[i] == '\n') ++line;
        throw InvalidInputError(path.string() + ":" + std::to_string(line) + ": " +
                                e.what());
    }
    try {
        return parse_experiment_config(doc);
    } catch (const InvalidInputError& e) {
        throw InvalidInputError(path.string() + ": " + e.what());
    }
}

nlohmann::json simconfig_to_json(const SimulationConfig& config) {
    nlohmann::json doc;
    doc["task"] = config.task == TaskKind::regression ? "regression" : "classification";
    doc["rounds"] = config.rounds;
    doc["warmup_rounds"] = config.warmup_rounds;
    doc["lambda"] = config.lambda;
    doc["consensus_threshold"] = config.consensus_threshold;
    doc["master_seed"] = config.master_seed;
    doc["trust"] = {{"scheme", variant_to_string(config.scheme.variant)},
                    {"confidence_weighted", config.scheme.confidence_weighted},
                    {"entropy_floor", config.scheme.entropy_floor}};
    if (config.task == TaskKind::regression) {
        nlohmann::json agents = nlohmann::json::array();
        for (const auto& a : config.poly_agents)
            agents.push_back({{"x_mean", a.data.x_mean},
                              {"x_std", a.data.x_std},
                              {"n", a.data.n},
                              {"noise_std", a.data.noise_std},
                              {"degree", a.degree}});
        doc["regression"] = {
            {"grid", {{"lo", config.grid_lo}, {"hi", config.grid_hi}, {"n", config.grid_n}}},
            {"agents", std::move(agents)}};
    } else {
        nlohmann::json means = nlohmann::json::array();
        for (const auto& m : config.cls.class_means) means.push_back({m[0], m[1]});
        doc["classification"] = {
            {"class_means", std::move(means)},
            {"client_mixtures", config.cls.client_mixtures},
            {"n_per_client", config.cls.n_per_client},
            {"shared_per_class", config.cls.shared_per_class},
            {"flip_fractions", config.flip_fractions},
            {"layers", config.mlp_layers},
            {"init_epochs", config.init_epochs},
            {"train",
             {{"learning_rate", config.train.learning_rate},
              {"local_epochs", config.train.local_epochs},
              {"batch_local", config.train.batch_size_local},
              {"batch_shared", config.train.batch_size_shared}}}};
    }
    return doc;
}

SimulationConfig simconfig_from_json(const nlohmann::json& doc) {
    if (!doc.is_object()) throw InvalidInputError("config: expected an object");
    for (auto it = doc.begin(); it != doc.end(); ++it) {
        bool known = false;
        for (const char* k : kSimKeys)
            if (it.key() == k) known = true;
        if (!known)
            throw InvalidInputError("config: unknown key '" + it.key() + "'");
    }
    SimulationConfig sim;
    sim.poly_agents.clear();
    apply_sim_fields(doc, sim);
    return sim;
}

// ------------------------------------------------------------- history io

namespace {

std::string metric_csv_line(int round, int agent, const char* name, double value) {
    return std::to_string(round) + "," + std::to_string(agent) + "," + name + "," +
           format_double(value) + "\n";
}

}  // namespace

void export_history(const History& history, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);

    nlohmann::json manifest;
    manifest["format_version"] = 1;
    manifest["config"] = simconfig_to_json(history.config);
    manifest["rounds_recorded"] = history.records.size();
    if (history.consensus_time)
        manifest["consensus_time"] = *history.consensus_time;
    else
        manifest["consensus_time"] = nullptr;
    {
        std::ofstream f(dir / "manifest.json");
        if (!f) throw InvalidInputError("cannot write manifest in " + dir.string());
        f << manifest.dump(2) << "\n";
    }

    std::ofstream metrics(dir / "metrics.csv");
    if (!metrics) throw InvalidInputError("cannot write metrics in " + dir.string());
    metrics << "round,agent,metric,value\n";
    const bool classification = history.config.task == TaskKind::classification;
    for (const RoundRecord& rec : history.records) {
        metrics << metric_csv_line(rec.round, -1, "disagreement", rec.disagreement);
        for (std::size_t a = 0; a < rec.agent_metrics.size(); ++a) {
            const EvalMetrics& m = rec.agent_metrics[a];
            if (classification) {
                metrics << metric_csv_line(rec.round, static_cast<int>(a), "accuracy",
                                           m.accuracy);
                metrics << metric_csv_line(rec.round, static_cast<int>(a),
                                           "balanced_accuracy", m.balanced_accuracy);
            } else {
                metrics << metric_csv_line(rec.round, static_cast<int>(a), "mse", m.mse);
            }
        }
        write_matrix_csv(dir / ("trust_round_" + std::to_string(rec.round) + ".csv"),
                         rec.trust.matrix.mat());
        write_matrix_csv(dir / ("predictions_round_" + std::to_string(rec.round) + ".csv"),
                         rec.predictions.values);
    }
}

History import_history(const std::filesystem::path& dir) {
    std::ifstream mf(dir / "manifest.json");
    if (!mf) throw InvalidInputError("import_history: no manifest in " + dir.string());
    nlohmann::json manifest;
    try {
        manifest = nlohmann::json::parse(mf);
    } catch (const nlohmann::json::parse_error& e) {
        throw InvalidInputError("import_history: bad manifest: " + std::string(e.what()));
    }

    History history;
    history.config = simconfig_from_json(manifest.at("config"));
    if (!manifest.at("consensus_time").is_null())
        history.consensus_time = manifest.at("consensus_time").get<int>();
    const auto rounds = manifest.at("rounds_recorded").get<std::size_t>();

    // metrics rows keyed by round
    std::vector<double> disagreement(rounds + 1, 0.0);
    const std::size_t n_agents = agent_count(history.config);
    std::vector<std::vector<EvalMetrics>> metrics(rounds + 1,
                                                  std::vector<EvalMetrics>(n_agents));
    {
        std::ifstream f(dir / "metrics.csv");
        if (!f) throw InvalidInputError("import_history: no metrics.csv");
        std::string line;
        std::getline(f, line);  // header
        while (std::getline(f, line)) {
            if (line.empty()) continue;
            std::stringstream row(line);
            std::string round_s;
            std::string agent_s;
            std::string name;
            std::string value_s;
            std::getline(row, round_s, ',');
            std::getline(row, agent_s, ',');
            std::getline(row, name, ',');
            std::getline(row, value_s, ',');
            const int round = std::stoi(round_s);
            const int agent = std::stoi(agent_s);
            const double value = std::strtod(value_s.c_str(), nullptr);
            if (round < 1 || static_cast<std::size_t>(round) > rounds)
                throw InvalidInputError("import_history: metric row for round " + round_s);
            if (agent == -1) {
                disagreement[static_cast<std::size_t>(round)] = value;
            } else {
                EvalMetrics& m = metrics[static_cast<std::size_t>(round)]
                                        [static_cast<std::size_t>(agent)];
                if (name == "mse") m.mse = value;
                else if (name == "accuracy") m.accuracy = value;
                else if (name == "balanced_accuracy") m.balanced_accuracy = value;
                else throw InvalidInputError("import_history: unknown metric " + name);
            }
        }
    }

    const bool classification = history.config.task == TaskKind::classification;
    const std::size_t samples =
        classification ? history.config.cls.class_means.size() *
                             static_cast<std::size_t>(history.config.cls.shared_per_class)
                       : static_cast<std::size_t>(history.config.grid_n);
    const std::size_t classes =
        classification ? history.config.cls.class_means.size() : 1;

    for (std::size_t t = 1; t <= rounds; ++t) {
        Matrix trust_m =
            read_matrix_csv(dir / ("trust_round_" + std::to_string(t) + ".csv"));
        Matrix preds_m =
            read_matrix_csv(dir / ("predictions_round_" + std::to_string(t) + ".csv"));
        const bool warmup = static_cast<int>(t) <= history.config.warmup_rounds;
        TrustScheme scheme = warmup ? TrustScheme{TrustVariant::naive, false, 1e-3}
                                    : history.config.scheme;
        TrustMatrix trust(StochasticMatrix(std::move(trust_m)), static_cast<long>(t),
                          scheme);
        PredictionSet preds =
            classification
                ? PredictionSet::classification(std::move(preds_m), samples, classes)
                : PredictionSet::regression(std::move(preds_m));
        PredictionSet pseudo = form_pseudo_labels(trust.matrix, preds);
        history.records.push_back(RoundRecord{static_cast<int>(t), std::move(trust),
                                              std::move(preds), std::move(pseudo),
                                              disagreement[t], metrics[t]});
    }
    return history;
}

}  // namespace concord
