#pragma once

#include <cstdint>
#include <vector>

#include "dbs/mdp.hpp"
#include "dbs/operators.hpp"
#include "dbs/rng.hpp"

namespace dbs {

struct LearnerConfig {
    OperatorKind op = OperatorKind::max();
    double alpha = 0.1;
    double epsilon = 0.1;
    std::uint64_t episodes = 5000;
    std::uint64_t seed = 0;

    void validate() const;
};

struct EpisodeStats {
    std::uint64_t episode = 0;
    int steps = 0;
    double total_reward = 0.0;
    bool reached_goal = false;

    friend bool operator==(const EpisodeStats&, const EpisodeStats&) = default;
};

/// Epsilon-greedy: uniform action with probability epsilon, otherwise an
/// argmax action with ties broken uniformly at random.
std::size_t select_action(ActionValues q_row, double epsilon, Rng& rng);

/// Bootstrap value of a non-terminal next state at episode index t.
double next_state_value(ActionValues q_row, const OperatorKind& op, std::uint64_t t);

/// Q(s,a) += alpha (r + gamma V(s') - Q(s,a)), V(s') = 0 for terminal s'.
void q_update(QFunction& q, const TabularMdp& mdp, std::size_t s, std::size_t a, double r, std::size_t s_next,
              std::uint64_t t, const LearnerConfig& cfg);

struct TrainResult {
    std::vector<EpisodeStats> episodes;
    QFunction q;
    std::vector<std::uint64_t> visits;  // update count per (s, a), row-major
};

/// Tabular Q-learning on a GridWorld; episode t uses beta_t for dbs operators.
TrainResult train(const GridWorld& env, const LearnerConfig& cfg);

}  // namespace dbs
