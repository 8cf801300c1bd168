#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dbs/mdp.hpp"
#include "dbs/operators.hpp"

namespace dbs {

/// Q(s,a) = r(s,a) + gamma * sum_{s'} p(s'|s,a) v(s'); terminal rows are 0.
QFunction bellman_backup_q(const TabularMdp& mdp, const ValueFunction& v);

/// One value-iteration sweep V'(s) = op(Q(s,.)) at schedule index t.
/// Parallel over states with OpenMP; every state is computed independently
/// so the result does not depend on the thread count.
ValueFunction vi_sweep(const TabularMdp& mdp, const ValueFunction& v, const OperatorKind& op, std::uint64_t t);

/// Single-threaded reference for vi_sweep; kept for tests and benchmarks.
ValueFunction vi_sweep_serial(const TabularMdp& mdp, const ValueFunction& v, const OperatorKind& op,
                              std::uint64_t t);

double value_loss(const ValueFunction& v, const ValueFunction& v_star);

/// Max-operator value iteration, stopped once successive iterates differ by
/// less than tol * (1 - gamma) / gamma, so ||V - V*|| < tol.
ValueFunction oracle_optimal_values(const TabularMdp& mdp, double tol = 1e-12);

struct ViRunRecord {
    std::string op;
    std::vector<double> losses;  // losses[k] = ||V_{k+1} - V*||
    ValueFunction final_v;
    std::uint64_t iterations = 0;

    double final_loss() const { return losses.empty() ? 0.0 : losses.back(); }
};

/// Runs `iterations` sweeps starting from v0; sweep number t (from 1) is the
/// schedule index for dbs operators.
ViRunRecord vi_run(const TabularMdp& mdp, const OperatorKind& op, std::uint64_t iterations,
                   const ValueFunction& v0, const ValueFunction& v_star);

/// As above, computing V* with the oracle at tol 1e-12.
ViRunRecord vi_run(const TabularMdp& mdp, const OperatorKind& op, std::uint64_t iterations,
                   const ValueFunction& v0);

}  // namespace dbs
