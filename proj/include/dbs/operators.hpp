#pragma once

// Value-summary operators over a vector of action values: hard max,
// Boltzmann softmax, log-sum-exp, plus the derivatives of the softmax
// that the meta-gradient and the gradient checks need.
//
// Every kernel works in shifted form: exponents are beta * (x_i - max x),
// which are <= 0, so nothing overflows for any beta >= 0 (including +inf).

#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace dbs {

using ActionValues = std::span<const double>;

double max_op(ActionValues x);

/// Boltzmann softmax sum_i e^{b x_i} x_i / sum_i e^{b x_i}. beta = 0 gives
/// the arithmetic mean; when every non-maximal weight underflows the result
/// is exactly max x (the mean of the tied maxima).
double boltz(ActionValues x, double beta);

/// (1/beta) log sum_i e^{beta x_i}; beta must be strictly positive.
double log_sum_exp(ActionValues x, double beta);

std::vector<double> boltz_weights(ActionValues x, double beta);

/// Entropy of the Boltzmann distribution divided by beta. Equals
/// log_sum_exp(x, beta) - boltz(x, beta) and never exceeds log(n) / beta.
double entropy_gap(ActionValues x, double beta);

/// d boltz / d beta, which is the Boltzmann-weighted variance of x.
double dboltz_dbeta(ActionValues x, double beta);

/// d boltz / d x_j = p_j (1 + beta (x_j - boltz)).
std::vector<double> grad_boltz(ActionValues x, double beta);

/// Inverse-temperature schedule. Indices start at 1.
class BetaSchedule {
public:
    static BetaSchedule constant(double beta);
    /// beta_t = coeff * t^power
    static BetaSchedule power(double coeff, double power);

    double operator()(std::uint64_t t) const;

    bool is_constant() const { return constant_; }
    double coeff() const { return coeff_; }
    double exponent() const { return power_; }
    std::string describe() const;

private:
    BetaSchedule(bool constant, double coeff, double power)
        : constant_(constant), coeff_(coeff), power_(power) {}

    bool constant_;
    double coeff_;  // beta for the constant kind
    double power_;
};

inline double schedule_eval(const BetaSchedule& s, std::uint64_t t) { return s(t); }

/// Tagged choice of summary operator. `apply` takes the schedule index t,
/// which only the dbs kind looks at.
class OperatorKind {
public:
    struct Max {};
    struct Boltzmann { double beta; };
    struct LogSumExp { double beta; };
    struct Dbs { BetaSchedule schedule; };

    static OperatorKind max();
    static OperatorKind boltzmann(double beta);
    static OperatorKind log_sum_exp(double beta);
    static OperatorKind dbs(BetaSchedule schedule);

    double apply(ActionValues x, std::uint64_t t = 1) const;

    /// Stable short label, e.g. "max", "boltz_b10", "lse_b100", "dbs_p2".
    std::string describe() const;

    const std::variant<Max, Boltzmann, LogSumExp, Dbs>& kind() const { return kind_; }
    bool is_max() const { return std::holds_alternative<Max>(kind_); }

private:
    explicit OperatorKind(std::variant<Max, Boltzmann, LogSumExp, Dbs> k) : kind_(std::move(k)) {}
    std::variant<Max, Boltzmann, LogSumExp, Dbs> kind_;
};

}  // namespace dbs
