// OpenMP kernels against their serial references.

#include <benchmark/benchmark.h>

#include "dbs/bias.hpp"
#include "dbs/value_iteration.hpp"

namespace {

const dbs::TabularMdp& big_mdp() {
    static const dbs::TabularMdp mdp = dbs::random_mdp(50000, 8, 4, 0.95, 7);
    return mdp;
}

template <bool Parallel>
void BM_ViSweep(benchmark::State& state) {
    const auto& mdp = big_mdp();
    const auto op = dbs::OperatorKind::dbs(dbs::BetaSchedule::power(1.0, 2.0));
    dbs::ValueFunction v(mdp.n_states(), 0.0);
    std::uint64_t t = 1;
    for (auto _ : state) {
        v = Parallel ? dbs::vi_sweep(mdp, v, op, t) : dbs::vi_sweep_serial(mdp, v, op, t);
        ++t;
        benchmark::DoNotOptimize(v.data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(mdp.n_states()));
}

template <bool Parallel>
void BM_EstimatorBias(benchmark::State& state) {
    const auto specs = dbs::equal_mean_gaussians(static_cast<int>(state.range(0)));
    const auto op = dbs::OperatorKind::boltzmann(10.0);
    for (auto _ : state) {
        auto r = Parallel ? dbs::estimator_bias(specs, op, 100000, 1) : dbs::estimator_bias_serial(specs, op, 100000, 1);
        benchmark::DoNotOptimize(r.bias);
    }
    state.SetItemsProcessed(state.iterations() * 100000);
}

}  // namespace

BENCHMARK(BM_ViSweep<false>)->Name("vi_sweep/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ViSweep<true>)->Name("vi_sweep/omp")->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_EstimatorBias<false>)->Name("estimator_bias/serial")->Arg(2)->Arg(10)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_EstimatorBias<true>)->Name("estimator_bias/omp")->Arg(2)->Arg(10)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
