#pragma once

// Desk-scale DBS-DQN: a small differentiable Q-approximator with explicit
// gradients, FIFO replay, a target copy, and meta-gradient adaptation of
// the schedule coefficient c in beta_t(c) = c * t^p.

#include <cstdint>
#include <deque>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "dbs/mdp.hpp"
#include "dbs/operators.hpp"
#include "dbs/rng.hpp"

namespace dbs {

enum class Architecture : std::uint32_t { Linear = 0, OneHidden = 1 };

std::string to_string(Architecture a);

/// One-hot encoding of state indices.
class FeatureMap {
public:
    explicit FeatureMap(std::size_t n_states) : dim_(n_states) {}
    std::vector<double> operator()(std::size_t state) const;
    std::size_t dim() const { return dim_; }

private:
    std::size_t dim_;
};

/// Q(x, .; theta). Linear: theta is an n_actions x d matrix, Q = theta x.
/// OneHidden: Q = W2 tanh(W1 x + b1) + b2 with theta = [W1 | b1 | W2 | b2].
class ApproxModel {
public:
    static ApproxModel linear(std::size_t feature_dim, std::size_t n_actions);
    static ApproxModel one_hidden(std::size_t feature_dim, std::size_t hidden, std::size_t n_actions);

    std::vector<double> forward(std::span<const double> x) const;
    /// dQ(x, a; theta) / d theta
    std::vector<double> grad_q(std::span<const double> x, std::size_t action) const;

    void init_random(Rng& rng, double scale);

    Architecture architecture() const { return arch_; }
    std::size_t feature_dim() const { return d_; }
    std::size_t hidden() const { return h_; }
    std::size_t n_actions() const { return a_; }
    std::size_t n_params() const { return theta_.size(); }

    const std::vector<double>& theta() const { return theta_; }
    void set_theta(std::vector<double> theta);

private:
    ApproxModel(Architecture arch, std::size_t d, std::size_t h, std::size_t a, std::size_t n)
        : arch_(arch), d_(d), h_(h), a_(a), theta_(n, 0.0) {}
    void check_input(std::span<const double> x) const;

    Architecture arch_;
    std::size_t d_, h_, a_;
    std::vector<double> theta_;
};

/// Delayed copy of the online parameters.
struct TargetModel {
    ApproxModel net;
};

TargetModel target_sync(const ApproxModel& model);

struct Experience {
    std::vector<double> s;
    std::size_t action = 0;
    double reward = 0.0;
    std::vector<double> s_next;
    bool terminal = false;
    std::uint64_t step = 0;
};

/// Bounded FIFO store; sampling is uniform with replacement.
class ReplayBuffer {
public:
    explicit ReplayBuffer(std::size_t capacity);

    void push(Experience e);
    std::size_t size() const { return items_.size(); }
    std::size_t capacity() const { return capacity_; }
    /// i = 0 is the oldest stored experience.
    const Experience& at(std::size_t i) const { return items_.at(i); }

    std::vector<const Experience*> sample(std::size_t n, Rng& rng) const;

private:
    std::size_t capacity_;
    std::deque<Experience> items_;
};

/// beta_t(c) = c * t^p
double coefficient_beta(double c, std::uint64_t t, double p = 2.0);

/// y = r for terminal transitions, else r + gamma * op(Q(s'; theta^-)).
/// A dbs kind passed here is evaluated at schedule index 1; training uses
/// the beta overload with the live beta_t(c).
double td_target(const Experience& e, const TargetModel& target, const OperatorKind& op, double gamma);
double td_target(const Experience& e, const TargetModel& target, double beta, double gamma);

struct LossGrad {
    double loss = 0.0;
    std::vector<double> grad;
};

/// J = mean_j 1/2 (y_j - Q(s_j, a_j; theta))^2 and its semi-gradient in theta
/// (targets held constant).
LossGrad loss_and_grad(std::span<const Experience* const> batch, const ApproxModel& model,
                       const TargetModel& target, const OperatorKind& target_op, double gamma);
LossGrad loss_and_grad(std::span<const Experience* const> batch, const ApproxModel& model,
                       const TargetModel& target, double c, std::uint64_t t, double gamma, double p = 2.0);

std::vector<double> sgd_step(std::span<const double> theta, std::span<const double> grad, double alpha);

struct MetaState {
    static constexpr double c_min = 1e-6;
    double c = 1.0;
    double eta = 1e-4;
};

/// dJ'/dc for the held-out transition `next` after the step theta -> theta'
/// taken on `batch` with beta_t(c_ref). The factor d theta'/dc is
/// alpha * gamma * mean_j [ t^p * dboltz/dbeta(Q(s'_j; theta^-), c_ref t^p) * dQ(s_j, a_j; theta)/d theta ]
/// over the non-terminal batch entries; J' uses the target with c_ref held fixed.
double meta_grad_c(std::span<const Experience* const> batch, const ApproxModel& before, const ApproxModel& after,
                   const TargetModel& target, const Experience& next, double c_ref, double alpha, double gamma,
                   std::uint64_t t, double p = 2.0);

/// c' = max(c - eta * grad, c_min)
MetaState c_update(const MetaState& meta, double grad_c);

enum class TargetMode { MetaDbs, FixedDbs, Max };

struct DqnConfig {
    Architecture arch = Architecture::Linear;
    std::size_t hidden = 16;
    std::uint64_t episodes = 3000;
    std::size_t buffer_capacity = 10000;
    std::size_t batch_size = 32;
    double alpha = 0.01;
    double eps_start = 1.0;
    double eps_end = 0.05;
    double eps_anneal_fraction = 0.2;  // of the episode budget
    std::uint64_t sync_every = 200;    // environment steps
    double c0 = 1.0;
    double eta = 1e-4;
    double power = 2.0;
    TargetMode mode = TargetMode::MetaDbs;
    double init_scale = 0.01;
    std::uint64_t snapshot_every = 0;  // episodes; 0 disables
    std::uint64_t seed = 0;

    void validate() const;
};

struct DqnEpisode {
    std::uint64_t episode = 0;
    int steps = 0;
    double ret = 0.0;
    double epsilon = 0.0;
    double c = 0.0;
    double loss_mean = 0.0;
    bool reached_goal = false;

    friend bool operator==(const DqnEpisode&, const DqnEpisode&) = default;
};

struct Snapshot {
    std::uint64_t episode = 0;
    std::vector<double> theta;
};

struct DqnRunRecord {
    std::vector<DqnEpisode> episodes;
    std::vector<double> c_trajectory;        // c after every environment step
    std::vector<std::uint8_t> action_trace;  // action taken at every environment step
    std::vector<Snapshot> snapshots;
    std::uint64_t total_steps = 0;
    std::uint64_t syncs = 0;
    ApproxModel final_model = ApproxModel::linear(1, 1);
};

struct DivergenceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

DqnRunRecord train_dqn(const GridWorld& env, const DqnConfig& cfg);

/// Binary snapshot: "DBSTHETA", u32 architecture tag, u32 hidden units,
/// u64 feature dim, u64 action count, u64 parameter count, then the
/// parameters as little-endian IEEE-754 doubles.
std::string encode_snapshot(const ApproxModel& model);
ApproxModel decode_snapshot(std::string_view bytes);
void write_snapshot(const std::filesystem::path& path, const ApproxModel& model);
ApproxModel read_snapshot(const std::filesystem::path& path);

}  // namespace dbs
