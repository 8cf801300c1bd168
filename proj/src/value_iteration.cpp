#include "dbs/value_iteration.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace dbs {

namespace {

void check_dims(const TabularMdp& mdp, const ValueFunction& v) {
    if (v.size() != mdp.n_states()) throw std::invalid_argument("value function length does not match the MDP");
}

inline double q_value(const TabularMdp& mdp, const ValueFunction& v, std::size_t s, std::size_t a) {
    double expect = 0.0;
    for (const auto& o : mdp.outcomes(s, a)) expect += o.prob * v[o.next];
    return mdp.reward(s, a) + mdp.gamma() * expect;
}

inline double sweep_state(const TabularMdp& mdp, const ValueFunction& v, const OperatorKind& op,
                          std::uint64_t t, std::size_t s, std::vector<double>& row) {
    if (mdp.is_terminal(s)) return 0.0;
    for (std::size_t a = 0; a < mdp.n_actions(); ++a) row[a] = q_value(mdp, v, s, a);
    return op.apply(row, t);
}

}  // namespace

QFunction bellman_backup_q(const TabularMdp& mdp, const ValueFunction& v) {
    check_dims(mdp, v);
    QFunction q(mdp.n_states(), mdp.n_actions());
    for (std::size_t s = 0; s < mdp.n_states(); ++s) {
        if (mdp.is_terminal(s)) continue;
        for (std::size_t a = 0; a < mdp.n_actions(); ++a) q(s, a) = q_value(mdp, v, s, a);
    }
    return q;
}

ValueFunction vi_sweep_serial(const TabularMdp& mdp, const ValueFunction& v, const OperatorKind& op,
                              std::uint64_t t) {
    check_dims(mdp, v);
    ValueFunction out(mdp.n_states());
    std::vector<double> row(mdp.n_actions());
    for (std::size_t s = 0; s < mdp.n_states(); ++s) out[s] = sweep_state(mdp, v, op, t, s, row);
    return out;
}

ValueFunction vi_sweep(const TabularMdp& mdp, const ValueFunction& v, const OperatorKind& op, std::uint64_t t) {
    check_dims(mdp, v);
    const auto n = static_cast<std::int64_t>(mdp.n_states());
    ValueFunction out(mdp.n_states());
    // exceptions may not leave an OpenMP region
    bool failed = false;
#pragma omp parallel if (n > 256)
    {
        std::vector<double> row(mdp.n_actions());
#pragma omp for schedule(static)
        for (std::int64_t s = 0; s < n; ++s) {
            try {
                out[static_cast<std::size_t>(s)] = sweep_state(mdp, v, op, t, static_cast<std::size_t>(s), row);
            } catch (...) {
#pragma omp atomic write
                failed = true;
            }
        }
    }
    if (failed) return vi_sweep_serial(mdp, v, op, t);  // rethrows from the serial path
    return out;
}

double value_loss(const ValueFunction& v, const ValueFunction& v_star) {
    if (v.size() != v_star.size()) throw std::invalid_argument("value functions differ in length");
    double loss = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) loss = std::max(loss, std::abs(v[i] - v_star[i]));
    return loss;
}

ValueFunction oracle_optimal_values(const TabularMdp& mdp, double tol) {
    if (!(tol > 0.0)) throw std::invalid_argument("oracle tolerance must be > 0");
    const double gamma = mdp.gamma();
    const double threshold = gamma > 0.0 ? tol * (1.0 - gamma) / gamma : std::numeric_limits<double>::infinity();
    const auto op = OperatorKind::max();
    ValueFunction v(mdp.n_states(), 0.0);
    for (;;) {
        ValueFunction next = vi_sweep(mdp, v, op, 1);
        const double change = value_loss(next, v);
        v = std::move(next);
        if (change < threshold) return v;
    }
}

ViRunRecord vi_run(const TabularMdp& mdp, const OperatorKind& op, std::uint64_t iterations,
                   const ValueFunction& v0, const ValueFunction& v_star) {
    if (iterations < 1) throw std::invalid_argument("iterations must be >= 1");
    check_dims(mdp, v0);
    check_dims(mdp, v_star);
    ViRunRecord rec;
    rec.op = op.describe();
    rec.iterations = iterations;
    rec.losses.reserve(iterations);
    ValueFunction v = v0;
    for (std::uint64_t t = 1; t <= iterations; ++t) {
        v = vi_sweep(mdp, v, op, t);
        rec.losses.push_back(value_loss(v, v_star));
    }
    rec.final_v = std::move(v);
    return rec;
}

ViRunRecord vi_run(const TabularMdp& mdp, const OperatorKind& op, std::uint64_t iterations,
                   const ValueFunction& v0) {
    return vi_run(mdp, op, iterations, v0, oracle_optimal_values(mdp, 1e-12));
}

}  // namespace dbs
