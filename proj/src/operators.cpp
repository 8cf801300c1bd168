#include "dbs/operators.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

namespace dbs {

namespace {

void check_values(ActionValues x) {
    if (x.empty()) throw std::invalid_argument("action-value vector is empty");
    for (double v : x)
        if (!std::isfinite(v)) throw std::invalid_argument("action-value vector has a non-finite entry");
}

void check_beta_nonneg(double beta) {
    if (std::isnan(beta) || beta < 0.0) throw std::invalid_argument("beta must be >= 0");
}

void check_beta_pos(double beta) {
    if (std::isnan(beta) || beta <= 0.0) throw std::invalid_argument("beta must be > 0");
}

// beta * d with d <= 0; a zero gap stays at zero even for beta = inf
inline double scaled(double beta, double d) { return d == 0.0 ? 0.0 : beta * d; }

struct Shifted {
    double max;
    double total;  // sum of e^{beta d_i}, always >= 1
};

// Fills w with unnormalized weights e^{beta (x_i - max)}.
Shifted shifted_weights(ActionValues x, double beta, std::vector<double>& w) {
    const double m = *std::max_element(x.begin(), x.end());
    w.resize(x.size());
    double total = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        w[i] = std::exp(scaled(beta, x[i] - m));
        total += w[i];
    }
    return {m, total};
}

std::string fmt_num(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

}  // namespace

double max_op(ActionValues x) {
    check_values(x);
    return *std::max_element(x.begin(), x.end());
}

double boltz(ActionValues x, double beta) {
    check_values(x);
    check_beta_nonneg(beta);
    const double m = *std::max_element(x.begin(), x.end());
    double total = 0.0, acc = 0.0;
    for (double v : x) {
        const double d = v - m;
        const double w = std::exp(scaled(beta, d));
        total += w;
        acc += w * d;
    }
    return m + acc / total;
}

double log_sum_exp(ActionValues x, double beta) {
    check_values(x);
    check_beta_pos(beta);
    const double m = *std::max_element(x.begin(), x.end());
    double total = 0.0;
    for (double v : x) total += std::exp(scaled(beta, v - m));
    return m + std::log(total) / beta;
}

std::vector<double> boltz_weights(ActionValues x, double beta) {
    check_values(x);
    check_beta_nonneg(beta);
    std::vector<double> w;
    const auto s = shifted_weights(x, beta, w);
    for (double& v : w) v /= s.total;
    return w;
}

double entropy_gap(ActionValues x, double beta) {
    check_values(x);
    check_beta_pos(beta);
    std::vector<double> w;
    const auto s = shifted_weights(x, beta, w);
    const double log_total = std::log(s.total);
    // -log p_i = log(total) - beta d_i
    double h = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (w[i] == 0.0) continue;
        const double p = w[i] / s.total;
        h += p * (log_total - scaled(beta, x[i] - s.max));
    }
    return h / beta;
}

double dboltz_dbeta(ActionValues x, double beta) {
    check_values(x);
    check_beta_nonneg(beta);
    std::vector<double> w;
    const auto s = shifted_weights(x, beta, w);
    double mean = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) mean += w[i] * (x[i] - s.max);
    mean /= s.total;
    double var = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double c = (x[i] - s.max) - mean;
        var += w[i] * c * c;
    }
    return var / s.total;
}

std::vector<double> grad_boltz(ActionValues x, double beta) {
    check_values(x);
    check_beta_nonneg(beta);
    std::vector<double> w;
    const auto s = shifted_weights(x, beta, w);
    double mean = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) mean += w[i] * (x[i] - s.max);
    mean /= s.total;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (w[i] == 0.0) continue;
        const double p = w[i] / s.total;
        w[i] = p * (1.0 + scaled(beta, (x[i] - s.max) - mean));
    }
    return w;
}

BetaSchedule BetaSchedule::constant(double beta) {
    check_beta_nonneg(beta);
    return BetaSchedule(true, beta, 0.0);
}

BetaSchedule BetaSchedule::power(double coeff, double power) {
    if (!(coeff > 0.0)) throw std::invalid_argument("power schedule needs coefficient > 0");
    if (!(power > 0.0)) throw std::invalid_argument("power schedule needs exponent > 0");
    return BetaSchedule(false, coeff, power);
}

double BetaSchedule::operator()(std::uint64_t t) const {
    if (t < 1) throw std::out_of_range("schedule index starts at 1");
    if (constant_) return coeff_;
    return coeff_ * std::pow(static_cast<double>(t), power_);
}

std::string BetaSchedule::describe() const {
    if (constant_) return "b" + fmt_num(coeff_);
    if (coeff_ == 1.0) return "p" + fmt_num(power_);
    return "c" + fmt_num(coeff_) + "p" + fmt_num(power_);
}

OperatorKind OperatorKind::max() { return OperatorKind(Max{}); }

OperatorKind OperatorKind::boltzmann(double beta) {
    check_beta_nonneg(beta);
    return OperatorKind(Boltzmann{beta});
}

OperatorKind OperatorKind::log_sum_exp(double beta) {
    check_beta_pos(beta);
    return OperatorKind(LogSumExp{beta});
}

OperatorKind OperatorKind::dbs(BetaSchedule schedule) { return OperatorKind(Dbs{schedule}); }

double OperatorKind::apply(ActionValues x, std::uint64_t t) const {
    struct Visitor {
        ActionValues x;
        std::uint64_t t;
        double operator()(const Max&) const { return max_op(x); }
        double operator()(const Boltzmann& b) const { return boltz(x, b.beta); }
        double operator()(const LogSumExp& l) const { return dbs::log_sum_exp(x, l.beta); }
        double operator()(const Dbs& d) const { return boltz(x, d.schedule(t)); }
    };
    return std::visit(Visitor{x, t}, kind_);
}

std::string OperatorKind::describe() const {
    struct Visitor {
        std::string operator()(const Max&) const { return "max"; }
        std::string operator()(const Boltzmann& b) const { return "boltz_b" + fmt_num(b.beta); }
        std::string operator()(const LogSumExp& l) const { return "lse_b" + fmt_num(l.beta); }
        std::string operator()(const Dbs& d) const { return "dbs_" + d.schedule.describe(); }
    };
    return std::visit(Visitor{}, kind_);
}

}  // namespace dbs
