// dbslab: run value-iteration, Q-learning, bias, bound and DQN suites and
// write their CSV artifacts.

#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "dbs/experiment.hpp"

namespace {

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
    std::vector<std::uint64_t> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::size_t used = 0;
        try {
            out.push_back(std::stoull(item, &used));
        } catch (const std::exception&) {
            used = 0;
        }
        if (item.empty() || used != item.size()) throw dbs::ConfigError("seeds", "not an unsigned integer: '" + item + "'");
    }
    return out;
}

std::vector<std::string> split(const std::string& text) {
    // operator descriptors contain commas ("dbs:c=0.5,p=2"), so variants are ';'-separated
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ';'))
        if (!item.empty()) out.push_back(item);
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"dbslab: dynamic Boltzmann softmax experiment runner"};
    app.require_subcommand(1);

    std::string config_path, seeds, out_dir, map_path, variants;
    int workers = 0;
    bool force = false;
    std::uint64_t iterations = 0, episodes = 0, trials = 0;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "JSON configuration file")->check(CLI::ExistingFile);
        sub->add_option("--seed", seeds, "seed or comma-separated seeds");
        sub->add_option("--out", out_dir, "output directory");
        sub->add_option("--workers", workers, "parallel runs")->check(CLI::PositiveNumber);
        sub->add_flag("--force", force, "overwrite existing artifacts");
    };

    auto* vi = app.add_subcommand("vi", "value iteration loss curves on a GridWorld map");
    auto* qlearn = app.add_subcommand("qlearn", "tabular Q-learning with max / DBS / log-sum-exp targets");
    auto* bias = app.add_subcommand("bias", "Monte Carlo overestimation bias of the summary operators");
    auto* bounds = app.add_subcommand("bounds", "error-bound, step-bound and beta-threshold tables");
    auto* dqn = app.add_subcommand("dqn", "desk-scale DBS-DQN with meta-adapted coefficient");
    for (auto* sub : {vi, qlearn, bias, bounds, dqn}) add_common(sub);
    for (auto* sub : {vi, qlearn}) sub->add_option("--map", map_path, "GridWorld map file");
    for (auto* sub : {vi, qlearn, dqn}) sub->add_option("--variants", variants, "';'-separated variant descriptors");
    vi->add_option("--iterations", iterations, "value-iteration sweeps");
    for (auto* sub : {qlearn, dqn}) sub->add_option("--episodes", episodes, "training episodes");
    bias->add_option("--trials", trials, "Monte Carlo trials");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        app.exit(e);
        return 2;
    }

    try {
        dbs::ExperimentConfig cfg;
        if (!config_path.empty()) {
            std::ifstream in(config_path);
            nlohmann::json j;
            try {
                j = nlohmann::json::parse(in);
            } catch (const nlohmann::json::exception& e) {
                throw dbs::ConfigError("config", e.what());
            }
            cfg = dbs::ExperimentConfig::from_json(j);
        }
        cfg.suite = app.get_subcommands().front()->get_name();
        if (!seeds.empty()) cfg.seeds = parse_seeds(seeds);
        if (!out_dir.empty()) cfg.out_dir = out_dir;
        if (!map_path.empty()) cfg.map_path = map_path;
        if (!variants.empty()) cfg.variants = split(variants);
        if (workers > 0) cfg.workers = workers;
        if (force) cfg.force = true;
        if (iterations > 0) cfg.iterations = iterations;
        if (episodes > 0) cfg.episodes = episodes;
        if (trials > 0) cfg.trials = trials;

        const auto rec = dbs::run_experiment(cfg);
        std::cout << rec.summary_text;
        std::cout << "wrote " << rec.artifacts.size() << " files to " << cfg.out_dir.string() << " in "
                  << rec.seconds << " s\n";
        return 0;
    } catch (const dbs::ConfigError& e) {
        std::cerr << "invalid configuration: " << e.what() << "\n";
        return 2;
    } catch (const dbs::DivergenceError& e) {
        std::cerr << "run diverged: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
