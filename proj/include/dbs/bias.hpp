#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dbs/operators.hpp"
#include "dbs/rng.hpp"

namespace dbs {

enum class Family { Gaussian, BernoulliScaled };

/// One random variable X_i: mean, spread (std. deviation for gaussian,
/// half-range for the +-spread Bernoulli), and samples per estimate.
struct VariableSpec {
    Family family = Family::Gaussian;
    double mean = 0.0;
    double spread = 1.0;
    int samples = 1;
};

std::vector<VariableSpec> equal_mean_gaussians(int m, double mean = 0.0, double spread = 1.0, int samples = 1);

/// mu_hat_i = mean of `samples` fresh draws of X_i.
std::vector<double> draw_sample_means(std::span<const VariableSpec> specs, Rng& rng);

struct BiasReport {
    std::string op;
    double bias = 0.0;
    double std_error = 0.0;
    std::uint64_t trials = 0;
};

/// Monte Carlo estimate of E[op(mu_hat)] - max_i mu_i. Trials are split into
/// fixed blocks with their own RNG stream (seed, block) and reduced in block
/// order, so the OpenMP result is bit-identical to estimator_bias_serial.
BiasReport estimator_bias(std::span<const VariableSpec> specs, const OperatorKind& op, std::uint64_t trials,
                          std::uint64_t seed);
BiasReport estimator_bias_serial(std::span<const VariableSpec> specs, const OperatorKind& op,
                                 std::uint64_t trials, std::uint64_t seed);

/// boltz(mu_hat, beta_t) <= max(mu_hat) <= lse(mu_hat, beta), with 1e-12 slack.
bool pointwise_order_check(ActionValues mu_hat, double beta_t, double beta);

struct OrderingBench {
    std::vector<BiasReport> dbs;  // one per beta_t
    BiasReport max;
    std::vector<BiasReport> lse;  // one per beta
    std::uint64_t pointwise_violations = 0;
    std::uint64_t trials = 0;
};

/// Evaluates every operator on the same realizations and counts trials in
/// which any (beta_t, beta) pair breaks the pointwise ordering.
OrderingBench bias_ordering_bench(std::span<const VariableSpec> specs, std::span<const double> beta_ts,
                                  std::span<const double> betas, std::uint64_t trials, std::uint64_t seed);

}  // namespace dbs
