#pragma once

// Experiment orchestration shared by the dbslab CLI and the acceptance
// suite: config parsing, seeded suite runners, CSV artifacts, manifests.

#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "dbs/dqn.hpp"
#include "dbs/mdp.hpp"
#include "dbs/operators.hpp"
#include "dbs/qlearning.hpp"

namespace dbs {

/// Raised for a bad configuration value; `field` names the offender.
struct ConfigError : std::invalid_argument {
    ConfigError(std::string field, const std::string& what)
        : std::invalid_argument(field + ": " + what), field(std::move(field)) {}
    std::string field;
};

struct OverwriteError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Operator descriptors: "max", "boltz:b=10", "lse:b=1e5", "dbs:p=2",
/// "dbs:c=0.5,p=2".
OperatorKind parse_operator(const std::string& text);

struct ExperimentConfig {
    std::string suite;  // vi | qlearn | bias | bounds | dqn
    std::filesystem::path map_path = default_map_path();
    std::vector<std::uint64_t> seeds{0};
    std::filesystem::path out_dir = "results";
    int workers = 1;
    bool force = false;

    std::vector<std::string> variants;  // empty -> suite defaults
    std::uint64_t iterations = 200;     // vi
    std::uint64_t episodes = 0;         // qlearn / dqn; 0 -> suite default
    double alpha = 0.1;                 // qlearn
    double epsilon = 0.1;               // qlearn
    std::uint64_t window = 100;         // qlearn summary window

    std::uint64_t trials = 100000;  // bias
    std::vector<int> ms{2, 5, 10};
    std::vector<double> beta_ts{0.1, 1, 10, 100};
    std::vector<double> betas{0.1, 1, 10, 100};

    double gamma = 0.9;  // bounds
    int n_actions = 4;
    double reward_bound = 1.0;

    int grid_size = 6;  // dqn uses an open grid_size x grid_size world
    DqnConfig dqn;

    static ExperimentConfig from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
    std::vector<std::string> effective_variants() const;
    std::uint64_t effective_episodes() const;
    void validate() const;
};

struct RunRecord {
    nlohmann::json config;
    std::map<std::string, std::string> files;  // artifact name -> content
    std::vector<std::filesystem::path> artifacts;
    nlohmann::json summary;
    std::string summary_text;
    double seconds = 0.0;
};

/// Runs the suite in memory, then persists it with write_results.
RunRecord run_experiment(const ExperimentConfig& cfg);

/// Suite computation only; no files are written.
RunRecord compute_experiment(const ExperimentConfig& cfg);

/// Writes every artifact atomically plus run_manifest.json (config hash and
/// artifact list). Refuses to overwrite unless `force`.
std::vector<std::filesystem::path> write_results(RunRecord& record, const std::filesystem::path& dir, bool force);

/// 64-bit FNV-1a of the canonical config dump, as 16 hex digits.
std::string config_hash(const nlohmann::json& config);

// Statistics shared with the acceptance suite.

double mean_of(const std::vector<double>& v);
double median_of(std::vector<double> v);

/// Mean / median steps over the last `window` episodes.
double final_window_mean_steps(const std::vector<EpisodeStats>& eps, std::uint64_t window);
double final_window_median_steps(const std::vector<EpisodeStats>& eps, std::uint64_t window);

/// One-sided exact sign test. Returns P[X >= worse] for X ~ Binomial(worse + better, 1/2);
/// ties are dropped. A small value is evidence that "worse" outcomes dominate.
double sign_test_p(int worse, int better);

/// Per-variant Q-learning results over seeds.
struct LearnerSuite {
    std::vector<std::string> variants;
    std::vector<std::uint64_t> seeds;
    std::vector<std::vector<TrainResult>> runs;  // [variant][seed]
};

LearnerSuite run_learners(const GridWorld& env, const std::vector<std::string>& variants,
                          const std::vector<std::uint64_t>& seeds, std::uint64_t episodes, double alpha,
                          double epsilon, int workers);

}  // namespace dbs
