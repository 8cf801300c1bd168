#include "dbs/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dbs {

namespace {

void check_common(double gamma, int n_actions, double reward_bound, bool open_gamma) {
    const bool gamma_ok = open_gamma ? (gamma > 0.0 && gamma < 1.0) : (gamma >= 0.0 && gamma < 1.0);
    if (!gamma_ok) throw std::invalid_argument("gamma out of range");
    if (n_actions < 2) throw std::invalid_argument("n_actions must be >= 2");
    if (!(reward_bound > 0.0)) throw std::invalid_argument("reward bound R must be > 0");
}

}  // namespace

double corollary_bound(double beta, double gamma, int n_actions, double reward_bound) {
    if (!(beta > 0.0)) throw std::invalid_argument("beta must be > 0");
    check_common(gamma, n_actions, reward_bound, false);
    const double softmax_term = std::log(static_cast<double>(n_actions)) / (beta * (1.0 - gamma));
    const double range_term = 2.0 * reward_bound / ((1.0 - gamma) * (1.0 - gamma));
    return std::min(softmax_term, range_term);
}

std::uint64_t theorem2_steps(double eps, double gamma, double reward_bound, int n_actions, double p) {
    if (!(eps > 0.0 && eps < 0.25)) throw std::invalid_argument("eps must lie in (0, 1/4)");
    if (!(p > 0.0)) throw std::invalid_argument("p must be > 0");
    check_common(gamma, n_actions, reward_bound, true);
    const double contraction =
        (std::log(1.0 / eps) + std::log(1.0 / (1.0 - gamma)) + std::log(reward_bound) + std::log(4.0)) /
        std::log(1.0 / gamma);
    const double schedule =
        std::pow(2.0 * std::log(static_cast<double>(n_actions)) / ((1.0 - gamma) * eps), 1.0 / p) - 1.0;
    const double t = std::ceil(std::max({contraction, schedule, 1.0}));
    return static_cast<std::uint64_t>(t);
}

double beta_threshold(double gamma, int n_actions, double reward_bound) {
    check_common(gamma, n_actions, reward_bound, true);
    const double a = static_cast<double>(n_actions);
    const double denom =
        std::max(gamma * (a - 1.0) / std::log(a), 2.0 * gamma * (a - 1.0) * reward_bound / (1.0 - gamma)) - 1.0;
    if (!(denom > 0.0)) throw std::domain_error("beta threshold undefined: denominator is not positive");
    return 2.0 / denom;
}

}  // namespace dbs
