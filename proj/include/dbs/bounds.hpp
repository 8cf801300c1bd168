#pragma once

#include <cstdint>

namespace dbs {

/// Limit error bound of fixed-beta softmax value iteration:
/// min{ log|A| / (beta (1 - gamma)), 2R / (1 - gamma)^2 }.
double corollary_bound(double beta, double gamma, int n_actions, double reward_bound);

/// Iterations after which power-schedule (beta_t = t^p) value iteration is
/// within eps of V*: ceil(max{ (log(1/eps) + log(1/(1-gamma)) + log R + log 4) / log(1/gamma),
///                              (2 log|A| / ((1-gamma) eps))^{1/p} - 1 }).
std::uint64_t theorem2_steps(double eps, double gamma, double reward_bound, int n_actions, double p);

/// Inverse-temperature threshold
/// 2 / (max{ gamma(|A|-1)/log|A|, 2 gamma (|A|-1) R / (1-gamma) } - 1).
/// Throws std::domain_error when the denominator is not positive.
double beta_threshold(double gamma, int n_actions, double reward_bound);

}  // namespace dbs
