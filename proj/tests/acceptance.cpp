// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit if any
// criterion fails. Thresholds and runtime limits are fixed here.

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "dbs/bias.hpp"
#include "dbs/bounds.hpp"
#include "dbs/dqn.hpp"
#include "dbs/experiment.hpp"
#include "dbs/value_iteration.hpp"
#include "gradcheck.hpp"

using namespace dbs;

namespace {

struct Verdict {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            detail += (detail.empty() ? "" : "; ") + std::string("FAILED ") + what;
        }
    }
    void note(const std::string& what) { detail += (detail.empty() ? "" : "; ") + what; }
};

std::string fmt(const char* f, double v) {
    char buf[96];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

const GridWorld& default_world() {
    static const GridWorld w = build_gridworld(load_gridworld_map(default_map_path()));
    return w;
}

// ---------------------------------------------------------------------------

Verdict operator_identities() {
    Verdict out;
    Rng rng = make_rng(2024);
    std::uniform_int_distribution<std::size_t> len(1, 16);
    std::uniform_real_distribution<double> u(-10, 10);
    const double betas[] = {1e-3, 0.01, 0.1, 1, 10, 100, 1e3, 1e6};
    const double beta_ts[] = {0, 1e-3, 0.1, 1, 10, 100, 1e4, 1e9};
    double worst = 0;
    long sandwich_fail = 0, checks = 0;
    for (int k = 0; k < 10000; ++k) {
        std::vector<double> x(len(rng));
        for (auto& v : x) v = u(rng);
        const double m = max_op(x);
        for (double bt : beta_ts) {
            ++checks;
            sandwich_fail += !(boltz(x, bt) <= m);
        }
        for (double b : betas) {
            ++checks;
            sandwich_fail += !(m <= log_sum_exp(x, b));
            worst = std::max(worst, std::abs(log_sum_exp(x, b) - boltz(x, b) - entropy_gap(x, b)));
        }
    }
    out.require(worst <= 1e-10, "entropy identity");
    out.require(sandwich_fail == 0, "sandwich");
    out.note("10^4 vectors, max |LSE - boltz - gap| = " + fmt("%.2e", worst) + ", sandwich violations " +
             std::to_string(sandwich_fail) + "/" + std::to_string(checks));
    return out;
}

std::vector<double> final_losses;  // t^3, t^2, t^1, beta=100 from criterion 2

Verdict vi_convergence() {
    Verdict out;
    const auto& w = default_world();
    const auto v_star = oracle_optimal_values(w.mdp, 1e-12);
    const ValueFunction v0(w.mdp.n_states(), 0.0);
    const auto run = [&](const OperatorKind& op) { return vi_run(w.mdp, op, 200, v0, v_star); };

    const auto p2 = run(OperatorKind::dbs(BetaSchedule::power(1, 2)));
    std::size_t reached = 0;
    while (reached < p2.losses.size() && p2.losses[reached] > 1e-4) ++reached;
    out.require(reached < p2.losses.size(), "t^2 loss <= 1e-4 within 200 iterations");
    out.note("t^2 loss <= 1e-4 at iteration " + std::to_string(reached + 1));

    const double r = w.mdp.reward_bound();
    for (double beta : {1.0, 10.0, 100.0}) {
        const auto f = run(OperatorKind::boltzmann(beta));
        const double bound = corollary_bound(beta, w.mdp.gamma(), static_cast<int>(w.mdp.n_actions()), r);
        const double drift = std::abs(f.losses[199] - f.losses[179]);
        out.require(f.final_loss() > 0.0, "beta=" + fmt("%g", beta) + " plateau is positive");
        out.require(f.final_loss() <= bound, "beta=" + fmt("%g", beta) + " plateau <= bound");
        out.require(drift <= 1e-8, "beta=" + fmt("%g", beta) + " has plateaued");
        out.note("beta=" + fmt("%g", beta) + " plateau " + fmt("%.4g", f.final_loss()) + " <= " + fmt("%.4g", bound));
        if (beta == 100.0) {
            final_losses = {run(OperatorKind::dbs(BetaSchedule::power(1, 3))).final_loss(), p2.final_loss(),
                            run(OperatorKind::dbs(BetaSchedule::power(1, 1))).final_loss(), f.final_loss()};
        }
    }
    return out;
}

Verdict vi_ordering() {
    Verdict out;
    const auto& l = final_losses;
    out.require(l.size() == 4, "losses recorded");
    if (l.size() != 4) return out;
    out.require(l[0] <= l[1] + 1e-9, "t^3 <= t^2");
    out.require(l[1] <= l[2] + 1e-9, "t^2 <= t^1");
    out.require(l[2] <= l[3] + 1e-9, "t^1 <= beta=100");
    out.note("final losses t^3 " + fmt("%.3e", l[0]) + ", t^2 " + fmt("%.3e", l[1]) + ", t " + fmt("%.3e", l[2]) +
             ", beta=100 " + fmt("%.3e", l[3]));
    return out;
}

Verdict step_bound() {
    Verdict out;
    const auto& w = default_world();
    const auto v_star = oracle_optimal_values(w.mdp, 1e-12);
    const ValueFunction v0(w.mdp.n_states(), 0.0);
    const auto n79 = theorem2_steps(0.01, 0.9, 1, 4, 2);
    out.require(n79 == 79, "theorem2_steps(0.01, 0.9, 1, 4, 2) == 79");
    for (double eps : {0.01, 0.001})
        for (double p : {1.0, 2.0}) {
            const auto n = theorem2_steps(eps, 0.9, 1, 4, p);
            const auto r = vi_run(w.mdp, OperatorKind::dbs(BetaSchedule::power(1, p)), n, v0, v_star);
            out.require(r.final_loss() <= eps, "eps=" + fmt("%g", eps) + " p=" + fmt("%g", p));
            out.note("eps=" + fmt("%g", eps) + " p=" + fmt("%g", p) + ": " + std::to_string(n) + " iters, loss " +
                     fmt("%.1e", r.final_loss()));
        }
    return out;
}

Verdict bound_calculators() {
    Verdict out;
    const double cb = corollary_bound(100, 0.9, 4, 1);
    const double bt = beta_threshold(0.9, 4, 1);
    out.require(std::abs(cb - 0.13863) <= 1e-5, "corollary_bound");
    out.require(std::abs(bt - 0.03774) <= 1e-5, "beta_threshold");
    out.note("corollary_bound = " + fmt("%.6f", cb) + ", beta_threshold = " + fmt("%.6f", bt));
    return out;
}

Verdict learning_ranking() {
    Verdict out;
    const auto& w = default_world();
    const std::vector<std::string> soft{"lse:b=1e2", "lse:b=1e3", "lse:b=1e4", "lse:b=1e5", "lse:b=1e6"};
    std::vector<std::string> variants{"dbs:p=2", "max"};
    variants.insert(variants.end(), soft.begin(), soft.end());
    std::vector<std::uint64_t> seeds;
    for (std::uint64_t s = 0; s < 10; ++s) seeds.push_back(s);
    const auto suite = run_learners(w, variants, seeds, 5000, 0.1, 0.1, omp_get_max_threads());

    std::vector<std::vector<double>> per_seed(variants.size());
    for (std::size_t v = 0; v < variants.size(); ++v)
        for (const auto& run : suite.runs[v]) per_seed[v].push_back(final_window_mean_steps(run.episodes, 100));
    std::size_t best = 2;
    for (std::size_t v = 3; v < variants.size(); ++v)
        if (mean_of(per_seed[v]) < mean_of(per_seed[best])) best = v;

    const auto compare = [&](std::size_t other, const std::string& name) {
        int worse = 0, better = 0;
        for (std::size_t k = 0; k < seeds.size(); ++k) {
            worse += per_seed[0][k] > per_seed[other][k];
            better += per_seed[0][k] < per_seed[other][k];
        }
        const double p = sign_test_p(worse, better);
        out.require(p >= 0.05, "DBS-t^2 <= " + name + " (sign test p = " + fmt("%.3g", p) + ")");
        out.note("vs " + name + ": mean " + fmt("%.3f", mean_of(per_seed[0])) + " vs " +
                 fmt("%.3f", mean_of(per_seed[other])) + ", seeds worse/better/tied " + std::to_string(worse) + "/" +
                 std::to_string(better) + "/" + std::to_string(10 - worse - better) + ", one-sided p " + fmt("%.3g", p));
    };
    compare(1, "max");
    compare(best, "best soft-Q (" + variants[best] + ")");

    std::vector<double> tail;
    for (const auto& run : suite.runs[0])
        for (std::size_t i = run.episodes.size() - 100; i < run.episodes.size(); ++i) tail.push_back(run.episodes[i].steps);
    const double med = median_of(tail);
    const int bfs = *shortest_path_length(w.spec);
    out.require(med <= 1.25 * bfs, "DBS-t^2 median <= 1.25 x shortest path");
    out.note("DBS-t^2 final median " + fmt("%.1f", med) + " <= 1.25 x " + std::to_string(bfs));
    return out;
}

Verdict bias_ordering() {
    Verdict out;
    const double grid[] = {0.1, 1, 10, 100};
    for (int m : {2, 5, 10}) {
        const auto specs = equal_mean_gaussians(m);
        const auto b = bias_ordering_bench(specs, grid, grid, 100000, 7000 + static_cast<std::uint64_t>(m));
        out.require(b.pointwise_violations == 0, "M=" + std::to_string(m) + " pointwise");
        bool mean_ok = true;
        for (const auto& d : b.dbs) mean_ok = mean_ok && d.bias <= b.max.bias;
        for (const auto& l : b.lse) mean_ok = mean_ok && b.max.bias <= l.bias;
        out.require(mean_ok, "M=" + std::to_string(m) + " mean ordering");
        out.note("M=" + std::to_string(m) + " max bias " + fmt("%.4f", b.max.bias) + ", violations " +
                 std::to_string(b.pointwise_violations));
        if (m == 2) {
            const double target = 1.0 / std::sqrt(std::numbers::pi);
            const double z = std::abs(b.max.bias - target) / b.max.std_error;
            out.require(z <= 3.0, "M=2 max bias within 3 SE of 1/sqrt(pi)");
            out.note("M=2 |bias - 1/sqrt(pi)| = " + fmt("%.2f", z) + " SE");
        }
    }
    return out;
}

Verdict gradient_soundness() {
    Verdict out;
    double worst_theta = 0, worst_meta = 0;
    for (int k = 0; k < 100; ++k) {
        const auto cfg = gradcheck::random_config(31337, k);
        worst_theta = std::max(worst_theta, gradcheck::theta_gradient_error(cfg));
        worst_meta = std::max(worst_meta, gradcheck::meta_gradient_check(cfg).rel);
    }
    out.require(worst_theta <= 1e-4, "dJ/dtheta");
    out.require(worst_meta <= 1e-4, "dJ'/dc");
    out.note("100 configs (50 linear, 50 one-hidden): max rel err dJ/dtheta " + fmt("%.1e", worst_theta) +
             ", dJ'/dc " + fmt("%.1e", worst_meta));
    return out;
}

Verdict dqn_learning() {
    Verdict out;
    const auto env = build_gridworld(open_gridworld(6, 6));
    DqnConfig cfg;
    cfg.episodes = 3000;
    cfg.seed = 0;
    const auto meta = train_dqn(env, cfg);
    int goals = 0;
    for (std::size_t i = meta.episodes.size() - 200; i < meta.episodes.size(); ++i) goals += meta.episodes[i].reached_goal;
    out.require(goals >= 190, "goal in >= 95% of the final 200 episodes");
    const bool c_ok = std::all_of(meta.c_trajectory.begin(), meta.c_trajectory.end(),
                                  [](double c) { return c > 0.0 && std::isfinite(c); });
    out.require(c_ok, "c positive and finite");
    const auto [cmin, cmax] = std::minmax_element(meta.c_trajectory.begin(), meta.c_trajectory.end());
    out.note("meta DBS-DQN goals " + std::to_string(goals) + "/200, c in [" + fmt("%.15g", *cmin) + ", " +
             fmt("%.15g", *cmax) + "]");

    DqnConfig frozen = cfg;
    frozen.mode = TargetMode::FixedDbs;
    frozen.c0 = 1e12;
    DqnConfig max = cfg;
    max.mode = TargetMode::Max;
    const auto a = train_dqn(env, frozen);
    const auto b = train_dqn(env, max);
    bool same = a.action_trace == b.action_trace && a.total_steps == b.total_steps &&
                a.final_model.theta() == b.final_model.theta() && a.episodes.size() == b.episodes.size();
    for (std::size_t i = 0; same && i < a.episodes.size(); ++i) {
        const auto& x = a.episodes[i];
        const auto& y = b.episodes[i];
        same = x.steps == y.steps && x.ret == y.ret && x.loss_mean == y.loss_mean && x.reached_goal == y.reached_goal;
    }
    out.require(same, "frozen-huge-c matches max-target DQN step for step");
    out.note("frozen c=1e12 vs max: " + std::to_string(a.total_steps) + " steps " +
             (same ? "identical" : "differ"));
    return out;
}

std::map<std::string, std::string> read_dir(const std::filesystem::path& dir) {
    std::map<std::string, std::string> out;
    for (const auto& e : std::filesystem::directory_iterator(dir)) {
        std::ifstream in(e.path(), std::ios::binary);
        std::stringstream ss;
        ss << in.rdbuf();
        out[e.path().filename().string()] = ss.str();
    }
    return out;
}

Verdict determinism() {
    Verdict out;
    const auto root = std::filesystem::temp_directory_path() / "dbslab_acceptance_determinism";
    std::filesystem::remove_all(root);
    for (const char* suite : {"vi", "qlearn", "bias", "bounds", "dqn"}) {
        ExperimentConfig cfg;
        cfg.suite = suite;
        cfg.seeds = {0, 1};
        cfg.workers = omp_get_max_threads();
        std::map<std::string, std::string> runs[2];
        for (int k = 0; k < 2; ++k) {
            cfg.out_dir = root / (std::string(suite) + "_" + std::to_string(k));
            run_experiment(cfg);
            runs[k] = read_dir(cfg.out_dir);
        }
        std::size_t csvs = 0;
        for (const auto& [name, _] : runs[0]) csvs += name.ends_with(".csv");
        out.require(csvs > 0 && runs[0] == runs[1], std::string(suite) + " byte-identical");
        out.note(std::string(suite) + ": " + std::to_string(csvs) + " csv " +
                 (runs[0] == runs[1] ? "identical" : "differ"));
    }
    std::filesystem::remove_all(root);
    return out;
}

struct Criterion {
    int id;
    const char* name;
    double limit_seconds;  // 0 = no limit
    std::function<Verdict()> run;
};

}  // namespace

int main() {
    const std::vector<Criterion> criteria{
        {1, "operator identities", 5, operator_identities},
        {2, "DBS value iteration convergence and fixed-beta plateaus", 10, vi_convergence},
        {3, "final-loss ordering t^3 <= t^2 <= t <= beta=100", 0, vi_ordering},
        {4, "step bound for power schedules", 10, step_bound},
        {5, "bound calculators", 0, bound_calculators},
        {6, "GridWorld Q-learning ranking", 300, learning_ranking},
        {7, "overestimation bias ordering", 30, bias_ordering},
        {8, "DQN gradient soundness", 30, gradient_soundness},
        {9, "DQN learning and max-target reduction", 180, dqn_learning},
        {10, "byte-identical reruns", 0, determinism},
    };
    int failed = 0;
    for (const auto& c : criteria) {
        const auto start = std::chrono::steady_clock::now();
        Verdict o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o.require(false, std::string("exception: ") + e.what());
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (c.limit_seconds > 0) o.require(secs < c.limit_seconds, "runtime limit " + fmt("%g s", c.limit_seconds));
        failed += !o.pass;
        std::printf("%s [%2d] %s (%.2f s): %s\n", o.pass ? "PASS" : "FAIL", c.id, c.name, secs, o.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
