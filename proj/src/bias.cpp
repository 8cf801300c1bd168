#include "dbs/bias.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dbs {

namespace {

constexpr std::uint64_t kBlock = 4096;

void check_specs(std::span<const VariableSpec> specs) {
    if (specs.empty()) throw std::invalid_argument("need at least one variable");
    for (const auto& v : specs) {
        if (!(v.spread > 0.0) || !std::isfinite(v.spread)) throw std::invalid_argument("spread must be > 0");
        if (v.samples < 1) throw std::invalid_argument("samples per variable must be >= 1");
        if (!std::isfinite(v.mean)) throw std::invalid_argument("mean must be finite");
    }
}

double true_max(std::span<const VariableSpec> specs) {
    double m = specs[0].mean;
    for (const auto& v : specs) m = std::max(m, v.mean);
    return m;
}

struct Moments {
    double sum = 0.0;
    double sumsq = 0.0;
    void add(double x) {
        sum += x;
        sumsq += x * x;
    }
    void merge(const Moments& o) {
        sum += o.sum;
        sumsq += o.sumsq;
    }
};

BiasReport finish(std::string op, const Moments& m, std::uint64_t trials, double mu_star) {
    const double n = static_cast<double>(trials);
    const double mean = m.sum / n;
    double var = trials > 1 ? (m.sumsq - m.sum * mean) / (n - 1.0) : 0.0;
    var = std::max(var, 0.0);
    return {std::move(op), mean - mu_star, std::sqrt(var / n), trials};
}

std::uint64_t n_blocks(std::uint64_t trials) { return (trials + kBlock - 1) / kBlock; }

Moments run_block(std::span<const VariableSpec> specs, const OperatorKind& op, std::uint64_t trials,
                  std::uint64_t seed, std::uint64_t block) {
    Rng rng = make_rng(seed, block);
    const std::uint64_t begin = block * kBlock;
    const std::uint64_t end = std::min(trials, begin + kBlock);
    Moments m;
    for (std::uint64_t k = begin; k < end; ++k) m.add(op.apply(draw_sample_means(specs, rng), 1));
    return m;
}

}  // namespace

std::vector<VariableSpec> equal_mean_gaussians(int m, double mean, double spread, int samples) {
    return std::vector<VariableSpec>(static_cast<std::size_t>(m), VariableSpec{Family::Gaussian, mean, spread, samples});
}

std::vector<double> draw_sample_means(std::span<const VariableSpec> specs, Rng& rng) {
    check_specs(specs);
    std::vector<double> out(specs.size());
    std::normal_distribution<double> normal(0.0, 1.0);
    std::bernoulli_distribution coin(0.5);
    for (std::size_t i = 0; i < specs.size(); ++i) {
        const auto& v = specs[i];
        double acc = 0.0;
        for (int k = 0; k < v.samples; ++k) acc += v.family == Family::Gaussian ? normal(rng) : (coin(rng) ? 1.0 : -1.0);
        out[i] = v.mean + v.spread * (acc / v.samples);
    }
    return out;
}

BiasReport estimator_bias_serial(std::span<const VariableSpec> specs, const OperatorKind& op,
                                 std::uint64_t trials, std::uint64_t seed) {
    check_specs(specs);
    if (trials < 1) throw std::invalid_argument("trials must be >= 1");
    Moments total;
    for (std::uint64_t b = 0; b < n_blocks(trials); ++b) total.merge(run_block(specs, op, trials, seed, b));
    return finish(op.describe(), total, trials, true_max(specs));
}

BiasReport estimator_bias(std::span<const VariableSpec> specs, const OperatorKind& op, std::uint64_t trials,
                          std::uint64_t seed) {
    check_specs(specs);
    if (trials < 1) throw std::invalid_argument("trials must be >= 1");
    op.apply(std::vector<double>(specs.size(), 0.0), 1);  // surface operator errors before the parallel region
    const auto blocks = static_cast<std::int64_t>(n_blocks(trials));
    std::vector<Moments> parts(static_cast<std::size_t>(blocks));
#pragma omp parallel for schedule(dynamic)
    for (std::int64_t b = 0; b < blocks; ++b)
        parts[static_cast<std::size_t>(b)] = run_block(specs, op, trials, seed, static_cast<std::uint64_t>(b));
    Moments total;
    for (const auto& p : parts) total.merge(p);
    return finish(op.describe(), total, trials, true_max(specs));
}

bool pointwise_order_check(ActionValues mu_hat, double beta_t, double beta) {
    constexpr double slack = 1e-12;
    const double m = max_op(mu_hat);
    return boltz(mu_hat, beta_t) <= m + slack && m <= log_sum_exp(mu_hat, beta) + slack;
}

OrderingBench bias_ordering_bench(std::span<const VariableSpec> specs, std::span<const double> beta_ts,
                                  std::span<const double> betas, std::uint64_t trials, std::uint64_t seed) {
    check_specs(specs);
    if (trials < 1) throw std::invalid_argument("trials must be >= 1");
    for (double b : beta_ts) OperatorKind::boltzmann(b);
    for (double b : betas) OperatorKind::log_sum_exp(b);

    const std::size_t nd = beta_ts.size(), nl = betas.size();
    struct Part {
        std::vector<Moments> dbs, lse;
        Moments max;
        std::uint64_t violations = 0;
    };
    const auto blocks = static_cast<std::int64_t>(n_blocks(trials));
    std::vector<Part> parts(static_cast<std::size_t>(blocks));

#pragma omp parallel for schedule(dynamic)
    for (std::int64_t b = 0; b < blocks; ++b) {
        Part& part = parts[static_cast<std::size_t>(b)];
        part.dbs.resize(nd);
        part.lse.resize(nl);
        Rng rng = make_rng(seed, static_cast<std::uint64_t>(b));
        const std::uint64_t begin = static_cast<std::uint64_t>(b) * kBlock;
        const std::uint64_t end = std::min(trials, begin + kBlock);
        std::vector<double> soft(nd), hard(nl);
        for (std::uint64_t k = begin; k < end; ++k) {
            const auto mu = draw_sample_means(specs, rng);
            const double m = max_op(mu);
            part.max.add(m);
            for (std::size_t i = 0; i < nd; ++i) part.dbs[i].add(soft[i] = boltz(mu, beta_ts[i]));
            for (std::size_t j = 0; j < nl; ++j) part.lse[j].add(hard[j] = log_sum_exp(mu, betas[j]));
            bool ok = true;
            for (double v : soft) ok = ok && v <= m;
            for (double v : hard) ok = ok && m <= v;
            if (!ok) ++part.violations;
        }
    }

    const double mu_star = true_max(specs);
    std::vector<Moments> dbs(nd), lse(nl);
    Moments mx;
    OrderingBench out;
    for (const auto& p : parts) {
        for (std::size_t i = 0; i < nd; ++i) dbs[i].merge(p.dbs[i]);
        for (std::size_t j = 0; j < nl; ++j) lse[j].merge(p.lse[j]);
        mx.merge(p.max);
        out.pointwise_violations += p.violations;
    }
    for (std::size_t i = 0; i < nd; ++i)
        out.dbs.push_back(finish(OperatorKind::boltzmann(beta_ts[i]).describe(), dbs[i], trials, mu_star));
    for (std::size_t j = 0; j < nl; ++j)
        out.lse.push_back(finish(OperatorKind::log_sum_exp(betas[j]).describe(), lse[j], trials, mu_star));
    out.max = finish("max", mx, trials, mu_star);
    out.trials = trials;
    return out;
}

}  // namespace dbs
