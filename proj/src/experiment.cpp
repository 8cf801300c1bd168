#include "dbs/experiment.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <type_traits>
#include <set>
#include <sstream>

#include "dbs/bias.hpp"
#include "dbs/bounds.hpp"
#include "dbs/csv.hpp"
#include "dbs/value_iteration.hpp"

namespace dbs {

using nlohmann::json;

namespace {

const std::set<std::string> kSuites{"vi", "qlearn", "bias", "bounds", "dqn"};

double parse_number(const std::string& field, const std::string& s) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        throw ConfigError(field, "not a number: '" + s + "'");
    }
    if (used != s.size()) throw ConfigError(field, "not a number: '" + s + "'");
    return v;
}

// "key=value,key=value" -> map
std::map<std::string, double> parse_params(const std::string& field, const std::string& body) {
    std::map<std::string, double> out;
    std::stringstream ss(body);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto eq = item.find('=');
        if (eq == std::string::npos) throw ConfigError(field, "expected key=value in '" + body + "'");
        out[item.substr(0, eq)] = parse_number(field, item.substr(eq + 1));
    }
    return out;
}

double take(std::map<std::string, double>& params, const std::string& key, const std::string& text) {
    auto it = params.find(key);
    if (it == params.end()) throw ConfigError("operator", "'" + text + "' is missing " + key);
    const double v = it->second;
    params.erase(it);
    return v;
}

template <class T>
struct is_unsigned_field : std::is_unsigned<T> {};
template <class T>
struct is_unsigned_field<std::vector<T>> : std::is_unsigned<T> {};

bool has_negative(const json& j) {
    if (j.is_number()) return j.get<double>() < 0;
    if (j.is_array()) return std::any_of(j.begin(), j.end(), [](const json& e) { return has_negative(e); });
    return false;
}

template <class T>
void read(const json& j, const char* key, T& dst) {
    if (!j.contains(key)) return;
    if constexpr (is_unsigned_field<T>::value && !std::is_same_v<T, bool>)
        if (has_negative(j.at(key))) throw ConfigError(key, "must not be negative");
    try {
        dst = j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(key, e.what());
    }
}

std::string variant_label(const std::string& v) {
    std::string out;
    for (char c : v) out += (std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '-') ? c : '_';
    return out;
}

std::string artifact_name(const std::string& suite, const std::string& variant, std::uint64_t seed,
                          const char* ext = ".csv") {
    return suite + "_" + variant_label(variant) + "_" + std::to_string(seed) + ext;
}

std::string sparkline(const std::vector<double>& values, std::size_t width = 48) {
    static const char* bars[] = {"▁", "▂", "▃", "▄", "▅", "▆", "▇", "█"};
    if (values.empty()) return {};
    std::vector<double> logs;
    const std::size_t step = std::max<std::size_t>(1, values.size() / width);
    for (std::size_t i = 0; i < values.size(); i += step) logs.push_back(std::log10(std::max(values[i], 1e-16)));
    const auto [lo, hi] = std::minmax_element(logs.begin(), logs.end());
    std::string out;
    for (double v : logs) {
        const double f = *hi > *lo ? (v - *lo) / (*hi - *lo) : 0.0;
        out += bars[std::min(7, static_cast<int>(f * 7.999))];
    }
    return out;
}

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

// ---------------------------------------------------------------- vi

void run_vi(const ExperimentConfig& cfg, RunRecord& rec) {
    const GridWorld env = build_gridworld(load_gridworld_map(cfg.map_path));
    const auto v_star = oracle_optimal_values(env.mdp, 1e-12);
    const ValueFunction v0(env.mdp.n_states(), 0.0);
    std::ostringstream text;
    text << "value iteration on " << cfg.map_path.filename().string() << " (" << env.mdp.n_states()
         << " states, gamma " << env.mdp.gamma() << ", " << cfg.iterations << " iterations)\n";
    for (const auto& variant : cfg.effective_variants()) {
        const OperatorKind op = parse_operator(variant);
        const auto run = vi_run(env.mdp, op, cfg.iterations, v0, v_star);
        for (std::uint64_t seed : cfg.seeds) {
            CsvWriter csv({"iteration", "loss"});
            for (std::size_t k = 0; k < run.losses.size(); ++k) {
                csv.field(static_cast<unsigned long long>(k + 1)).field(run.losses[k]);
                csv.end_row();
            }
            rec.files[artifact_name("vi", variant, seed)] = csv.str();
        }
        json entry{{"variant", variant}, {"final_loss", run.final_loss()}};
        std::string line = "  " + variant + ": final loss " + fmt("%.3e", run.final_loss());
        if (const auto* b = std::get_if<OperatorKind::Boltzmann>(&op.kind()); b && b->beta > 0.0) {
            const double bound =
                corollary_bound(b->beta, env.mdp.gamma(), static_cast<int>(env.mdp.n_actions()), env.mdp.reward_bound());
            entry["corollary_bound"] = bound;
            line += " (bound " + fmt("%.4g", bound) + ")";
        }
        rec.summary["runs"].push_back(entry);
        text << line << "  " << sparkline(run.losses) << "\n";
    }
    rec.summary_text = text.str();
}

// ---------------------------------------------------------------- qlearn

void run_qlearn(const ExperimentConfig& cfg, RunRecord& rec) {
    const GridWorld env = build_gridworld(load_gridworld_map(cfg.map_path));
    const auto variants = cfg.effective_variants();
    const auto suite =
        run_learners(env, variants, cfg.seeds, cfg.effective_episodes(), cfg.alpha, cfg.epsilon, cfg.workers);
    const int shortest = *shortest_path_length(env.spec);

    std::ostringstream text;
    text << "Q-learning on " << cfg.map_path.filename().string() << ", " << cfg.seeds.size() << " seeds x "
         << cfg.effective_episodes() << " episodes, shortest path " << shortest << "\n";
    rec.summary["shortest_path"] = shortest;
    std::vector<double> variant_means(variants.size());
    for (std::size_t v = 0; v < variants.size(); ++v) {
        std::vector<double> means, medians;
        for (std::size_t k = 0; k < cfg.seeds.size(); ++k) {
            const auto& run = suite.runs[v][k];
            CsvWriter csv({"run_id", "variant", "seed", "episode", "steps", "total_reward", "reached_goal"});
            const std::string run_id = variant_label(variants[v]) + "_" + std::to_string(cfg.seeds[k]);
            for (const auto& ep : run.episodes) {
                csv.field(run_id).field(variants[v]).field(static_cast<unsigned long long>(cfg.seeds[k]));
                csv.field(static_cast<unsigned long long>(ep.episode)).field(ep.steps).field(ep.total_reward);
                csv.field(ep.reached_goal);
                csv.end_row();
            }
            rec.files[artifact_name("qlearn", variants[v], cfg.seeds[k])] = csv.str();
            means.push_back(final_window_mean_steps(run.episodes, cfg.window));
            medians.push_back(final_window_median_steps(run.episodes, cfg.window));
        }
        variant_means[v] = mean_of(means);
        rec.summary["variants"].push_back({{"variant", variants[v]},
                                           {"final_window_mean_steps", variant_means[v]},
                                           {"final_window_median_steps", median_of(medians)}});
        text << "  " << variants[v] << ": final-" << cfg.window << " mean steps " << fmt("%.3f", variant_means[v])
             << ", median " << fmt("%.1f", median_of(medians)) << "\n";
    }
    rec.summary_text = text.str();
}

// ---------------------------------------------------------------- bias

void run_bias(const ExperimentConfig& cfg, RunRecord& rec) {
    std::ostringstream text;
    text << "overestimation bias, " << cfg.trials << " trials, equal-mean unit gaussians, n = 1\n";
    for (std::uint64_t seed : cfg.seeds) {
        CsvWriter csv({"operator", "beta", "M", "n", "trials", "bias", "stderr", "seed"});
        for (int m : cfg.ms) {
            const auto specs = equal_mean_gaussians(m);
            const auto bench = bias_ordering_bench(specs, cfg.beta_ts, cfg.betas, cfg.trials, seed + static_cast<std::uint64_t>(m));
            auto row = [&](const std::string& op, double beta, const BiasReport& r) {
                csv.field(op).field(beta).field(m).field(1).field(static_cast<unsigned long long>(r.trials));
                csv.field(r.bias).field(r.std_error).field(static_cast<unsigned long long>(seed));
                csv.end_row();
            };
            for (std::size_t i = 0; i < cfg.beta_ts.size(); ++i) row("dbs", cfg.beta_ts[i], bench.dbs[i]);
            row("max", 0.0, bench.max);
            for (std::size_t j = 0; j < cfg.betas.size(); ++j) row("lse", cfg.betas[j], bench.lse[j]);
            text << "  seed " << seed << " M=" << m << ": max bias " << fmt("%.4f", bench.max.bias) << " +- "
                 << fmt("%.4f", bench.max.std_error) << ", pointwise violations " << bench.pointwise_violations << "\n";
            rec.summary["benches"].push_back({{"seed", seed},
                                              {"M", m},
                                              {"max_bias", bench.max.bias},
                                              {"pointwise_violations", bench.pointwise_violations}});
        }
        rec.files[artifact_name("bias", "all", seed)] = csv.str();
    }
    rec.summary_text = text.str();
}

// ---------------------------------------------------------------- bounds

void run_bounds(const ExperimentConfig& cfg, RunRecord& rec) {
    CsvWriter csv({"quantity", "gamma", "n_actions", "R", "beta", "eps", "p", "value"});
    auto row = [&](const char* q, double g, int a, double r, double beta, double eps, double p, double v) {
        csv.field(q).field(g).field(a).field(r).field(beta).field(eps).field(p).field(v);
        csv.end_row();
    };
    const double g = cfg.gamma, r = cfg.reward_bound;
    const int a = cfg.n_actions;
    std::ostringstream text;
    text << "bounds for gamma " << g << ", |A| " << a << ", R " << r << "\n";
    for (double beta : {0.001, 0.01, 0.1, 1.0, 10.0, 100.0, 1000.0}) {
        const double v = corollary_bound(beta, g, a, r);
        row("corollary_bound", g, a, r, beta, 0.0, 0.0, v);
        text << "  corollary_bound(beta=" << beta << ") = " << fmt("%.5f", v) << "\n";
    }
    try {
        const double th = beta_threshold(g, a, r);
        row("beta_threshold", g, a, r, 0.0, 0.0, 0.0, th);
        text << "  beta_threshold = " << fmt("%.5f", th) << "\n";
        rec.summary["beta_threshold"] = th;
    } catch (const std::domain_error&) {
        text << "  beta_threshold undefined for these parameters\n";
    }
    for (double eps : {0.01, 0.001})
        for (double p : {1.0, 2.0, 3.0}) {
            const auto steps = theorem2_steps(eps, g, r, a, p);
            row("theorem2_steps", g, a, r, 0.0, eps, p, static_cast<double>(steps));
            text << "  theorem2_steps(eps=" << eps << ", p=" << p << ") = " << steps << "\n";
        }
    for (double gg : {0.85, 0.9, 0.95, 0.99})
        for (int aa = 3; aa <= 18; ++aa) row("beta_threshold_sweep", gg, aa, 1.0, 0.0, 0.0, 0.0, beta_threshold(gg, aa, 1.0));
    rec.summary["corollary_bound_beta100"] = corollary_bound(100.0, g, a, r);
    for (std::uint64_t seed : cfg.seeds) rec.files[artifact_name("bounds", "table", seed)] = csv.str();
    rec.summary_text = text.str();
}

// ---------------------------------------------------------------- dqn

DqnConfig dqn_variant(const ExperimentConfig& cfg, const std::string& variant, std::uint64_t seed) {
    DqnConfig d = cfg.dqn;
    d.episodes = cfg.effective_episodes();
    d.seed = seed;
    const auto colon = variant.find(':');
    const std::string head = variant.substr(0, colon);
    auto params = colon == std::string::npos ? std::map<std::string, double>{} : parse_params("variants", variant.substr(colon + 1));
    if (head == "meta") {
        d.mode = TargetMode::MetaDbs;
        if (params.contains("c")) d.c0 = params["c"];
    } else if (head == "fixed") {
        d.mode = TargetMode::FixedDbs;
        if (params.contains("c")) d.c0 = params["c"];
    } else if (head == "frozen") {
        d.mode = TargetMode::FixedDbs;
        d.c0 = 1e12;
    } else if (head == "max") {
        d.mode = TargetMode::Max;
    } else {
        throw ConfigError("variants", "unknown dqn variant '" + variant + "'");
    }
    return d;
}

void run_dqn(const ExperimentConfig& cfg, RunRecord& rec) {
    const GridWorld env = build_gridworld(open_gridworld(cfg.grid_size, cfg.grid_size));
    const auto variants = cfg.effective_variants();
    struct Job {
        std::string variant;
        std::uint64_t seed;
    };
    std::vector<Job> jobs;
    for (const auto& v : variants)
        for (auto s : cfg.seeds) jobs.push_back({v, s});
    std::vector<DqnConfig> configs;
    for (const auto& j : jobs) configs.push_back(dqn_variant(cfg, j.variant, j.seed));

    std::vector<DqnRunRecord> runs(jobs.size());
    std::vector<std::string> errors(jobs.size());
#pragma omp parallel for schedule(dynamic) num_threads(cfg.workers)
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(jobs.size()); ++i) {
        try {
            runs[static_cast<std::size_t>(i)] = train_dqn(env, configs[static_cast<std::size_t>(i)]);
        } catch (const std::exception& e) {
            errors[static_cast<std::size_t>(i)] = e.what();
        }
    }
    for (std::size_t i = 0; i < jobs.size(); ++i)
        if (!errors[i].empty())
            throw DivergenceError("dqn run " + jobs[i].variant + " seed " + std::to_string(jobs[i].seed) + ": " + errors[i]);

    std::ostringstream text;
    text << "DBS-DQN on open " << cfg.grid_size << "x" << cfg.grid_size << " grid, " << cfg.effective_episodes()
         << " episodes\n";
    for (std::size_t i = 0; i < jobs.size(); ++i) {
        const auto& run = runs[i];
        const std::string run_id = variant_label(jobs[i].variant) + "_" + std::to_string(jobs[i].seed);
        CsvWriter csv({"run_id", "episode", "steps", "return", "epsilon", "c", "loss_mean"});
        for (const auto& ep : run.episodes) {
            csv.field(run_id).field(static_cast<unsigned long long>(ep.episode)).field(ep.steps).field(ep.ret);
            csv.field(ep.epsilon).field(ep.c).field(ep.loss_mean);
            csv.end_row();
        }
        rec.files[artifact_name("dqn", jobs[i].variant, jobs[i].seed)] = csv.str();
        for (const auto& snap : run.snapshots) {
            ApproxModel m = run.final_model;
            m.set_theta(snap.theta);
            rec.files["dqn_" + run_id + "_ep" + std::to_string(snap.episode) + ".bin"] = encode_snapshot(m);
        }
        const std::size_t window = std::min<std::size_t>(200, run.episodes.size());
        std::size_t reached = 0;
        for (std::size_t k = run.episodes.size() - window; k < run.episodes.size(); ++k) reached += run.episodes[k].reached_goal;
        const double rate = static_cast<double>(reached) / static_cast<double>(window);
        rec.summary["runs"].push_back({{"run_id", run_id},
                                       {"final_goal_rate", rate},
                                       {"final_c", run.episodes.back().c},
                                       {"total_steps", run.total_steps}});
        text << "  " << run_id << ": goal rate (last " << window << ") " << fmt("%.3f", rate) << ", final c "
             << fmt("%.6g", run.episodes.back().c) << "\n";
    }
    rec.summary_text = text.str();
}

}  // namespace

OperatorKind parse_operator(const std::string& text) {
    const auto colon = text.find(':');
    const std::string head = text.substr(0, colon);
    auto params = colon == std::string::npos ? std::map<std::string, double>{} : parse_params("operator", text.substr(colon + 1));
    OperatorKind op = OperatorKind::max();
    try {
        if (head == "max") {
            op = OperatorKind::max();
        } else if (head == "boltz") {
            op = OperatorKind::boltzmann(take(params, "b", text));
        } else if (head == "lse") {
            op = OperatorKind::log_sum_exp(take(params, "b", text));
        } else if (head == "dbs") {
            const double p = take(params, "p", text);
            double c = 1.0;
            if (params.contains("c")) c = take(params, "c", text);
            op = OperatorKind::dbs(BetaSchedule::power(c, p));
        } else {
            throw ConfigError("operator", "unknown operator '" + text + "'");
        }
    } catch (const ConfigError&) {
        throw;
    } catch (const std::invalid_argument& e) {
        throw ConfigError("operator", "'" + text + "': " + e.what());
    }
    if (!params.empty()) throw ConfigError("operator", "'" + text + "' has unexpected parameter " + params.begin()->first);
    return op;
}

ExperimentConfig ExperimentConfig::from_json(const json& j) {
    static const std::set<std::string> known{"suite", "map", "seeds", "out", "workers", "force", "variants",
                                             "iterations", "episodes", "alpha", "epsilon", "window", "trials", "ms",
                                             "beta_ts", "betas", "gamma", "n_actions", "reward_bound", "grid_size",
                                             "dqn"};
    static const std::set<std::string> known_dqn{"arch", "hidden", "buffer", "batch", "alpha", "eps_start",
                                                 "eps_end", "eps_anneal_fraction", "sync_every", "c0", "eta",
                                                 "power", "init_scale", "snapshot_every"};
    if (!j.is_object()) throw ConfigError("config", "top level must be a JSON object");
    for (const auto& [k, _] : j.items())
        if (!known.contains(k)) throw ConfigError(k, "unknown configuration key");
    ExperimentConfig c;
    read(j, "suite", c.suite);
    std::string path;
    read(j, "map", path);
    if (!path.empty()) c.map_path = path;
    read(j, "seeds", c.seeds);
    path.clear();
    read(j, "out", path);
    if (!path.empty()) c.out_dir = path;
    read(j, "workers", c.workers);
    read(j, "force", c.force);
    read(j, "variants", c.variants);
    read(j, "iterations", c.iterations);
    read(j, "episodes", c.episodes);
    read(j, "alpha", c.alpha);
    read(j, "epsilon", c.epsilon);
    read(j, "window", c.window);
    read(j, "trials", c.trials);
    read(j, "ms", c.ms);
    read(j, "beta_ts", c.beta_ts);
    read(j, "betas", c.betas);
    read(j, "gamma", c.gamma);
    read(j, "n_actions", c.n_actions);
    read(j, "reward_bound", c.reward_bound);
    read(j, "grid_size", c.grid_size);
    if (j.contains("dqn")) {
        const auto& d = j.at("dqn");
        if (!d.is_object()) throw ConfigError("dqn", "must be an object");
        for (const auto& [k, _] : d.items())
            if (!known_dqn.contains(k)) throw ConfigError("dqn." + k, "unknown configuration key");
        std::string arch;
        read(d, "arch", arch);
        if (!arch.empty()) {
            if (arch == "linear") c.dqn.arch = Architecture::Linear;
            else if (arch == "mlp") c.dqn.arch = Architecture::OneHidden;
            else throw ConfigError("dqn.arch", "expected 'linear' or 'mlp'");
        }
        read(d, "hidden", c.dqn.hidden);
        read(d, "buffer", c.dqn.buffer_capacity);
        read(d, "batch", c.dqn.batch_size);
        read(d, "alpha", c.dqn.alpha);
        read(d, "eps_start", c.dqn.eps_start);
        read(d, "eps_end", c.dqn.eps_end);
        read(d, "eps_anneal_fraction", c.dqn.eps_anneal_fraction);
        read(d, "sync_every", c.dqn.sync_every);
        read(d, "c0", c.dqn.c0);
        read(d, "eta", c.dqn.eta);
        read(d, "power", c.dqn.power);
        read(d, "init_scale", c.dqn.init_scale);
        read(d, "snapshot_every", c.dqn.snapshot_every);
    }
    return c;
}

json ExperimentConfig::to_json() const {
    // workers, force and out do not change results and stay out of the hash
    return json{{"suite", suite},
                {"map", map_path.filename().string()},
                {"seeds", seeds},
                {"variants", effective_variants()},
                {"iterations", iterations},
                {"episodes", effective_episodes()},
                {"alpha", alpha},
                {"epsilon", epsilon},
                {"window", window},
                {"trials", trials},
                {"ms", ms},
                {"beta_ts", beta_ts},
                {"betas", betas},
                {"gamma", gamma},
                {"n_actions", n_actions},
                {"reward_bound", reward_bound},
                {"grid_size", grid_size},
                {"dqn",
                 {{"arch", to_string(dqn.arch)},
                  {"hidden", dqn.hidden},
                  {"buffer", dqn.buffer_capacity},
                  {"batch", dqn.batch_size},
                  {"alpha", dqn.alpha},
                  {"eps_start", dqn.eps_start},
                  {"eps_end", dqn.eps_end},
                  {"eps_anneal_fraction", dqn.eps_anneal_fraction},
                  {"sync_every", dqn.sync_every},
                  {"c0", dqn.c0},
                  {"eta", dqn.eta},
                  {"power", dqn.power},
                  {"init_scale", dqn.init_scale},
                  {"snapshot_every", dqn.snapshot_every}}}};
}

std::vector<std::string> ExperimentConfig::effective_variants() const {
    if (!variants.empty()) return variants;
    if (suite == "vi") return {"max", "dbs:p=1", "dbs:p=2", "dbs:p=3", "boltz:b=1", "boltz:b=10", "boltz:b=100"};
    if (suite == "qlearn")
        return {"max", "dbs:p=1", "dbs:p=2", "dbs:p=3", "lse:b=100", "lse:b=1000", "lse:b=10000", "lse:b=100000",
                "lse:b=1000000"};
    if (suite == "dqn") return {"meta"};
    return {};
}

std::uint64_t ExperimentConfig::effective_episodes() const {
    if (episodes > 0) return episodes;
    return suite == "dqn" ? 3000 : 5000;
}

void ExperimentConfig::validate() const {
    if (!kSuites.contains(suite)) throw ConfigError("suite", "unknown suite '" + suite + "'");
    if (seeds.empty()) throw ConfigError("seeds", "at least one seed is required");
    if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size())
        throw ConfigError("seeds", "seeds must be distinct");
    if (workers < 1) throw ConfigError("workers", "must be >= 1");
    if ((suite == "vi" || suite == "qlearn") && !std::filesystem::exists(map_path))
        throw ConfigError("map", "file does not exist: " + map_path.string());
    if (iterations < 1) throw ConfigError("iterations", "must be >= 1");
    if (window < 1) throw ConfigError("window", "must be >= 1");
    if (trials < 1) throw ConfigError("trials", "must be >= 1");
    if (ms.empty() || std::any_of(ms.begin(), ms.end(), [](int m) { return m < 1; }))
        throw ConfigError("ms", "need positive variable counts");
    if (!(alpha > 0.0 && alpha <= 1.0)) throw ConfigError("alpha", "must lie in (0, 1]");
    if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw ConfigError("epsilon", "must lie in [0, 1]");
    if (grid_size < 2) throw ConfigError("grid_size", "must be >= 2");
    if (suite == "vi" || suite == "qlearn")
        for (const auto& v : effective_variants()) parse_operator(v);
    if (suite == "dqn") {
        for (const auto& v : effective_variants()) dqn_variant(*this, v, 0);
        try {
            DqnConfig d = dqn;
            d.episodes = effective_episodes();
            d.validate();
        } catch (const std::invalid_argument& e) {
            throw ConfigError("dqn", e.what());
        }
    }
    if (suite == "bias") {
        for (double b : beta_ts)
            if (!(b >= 0.0)) throw ConfigError("beta_ts", "must be >= 0");
        for (double b : betas)
            if (!(b > 0.0)) throw ConfigError("betas", "must be > 0");
    }
}

std::string config_hash(const json& config) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : config.dump()) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

RunRecord compute_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    const auto start = std::chrono::steady_clock::now();
    RunRecord rec;
    rec.config = cfg.to_json();
    rec.summary = json::object();
    if (cfg.suite == "vi") run_vi(cfg, rec);
    else if (cfg.suite == "qlearn") run_qlearn(cfg, rec);
    else if (cfg.suite == "bias") run_bias(cfg, rec);
    else if (cfg.suite == "bounds") run_bounds(cfg, rec);
    else run_dqn(cfg, rec);
    rec.files["summary.txt"] = rec.summary_text;
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return rec;
}

std::vector<std::filesystem::path> write_results(RunRecord& record, const std::filesystem::path& dir, bool force) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) throw std::runtime_error("cannot create output directory " + dir.string());
    const fs::path manifest = dir / "run_manifest.json";
    if (!force) {
        if (fs::exists(manifest)) throw OverwriteError("refusing to overwrite " + manifest.string() + " (use --force)");
        for (const auto& [name, _] : record.files)
            if (fs::exists(dir / name)) throw OverwriteError("refusing to overwrite " + (dir / name).string() + " (use --force)");
    }
    record.artifacts.clear();
    json listing = json::array();
    for (const auto& [name, content] : record.files) {
        write_file_atomic(dir / name, content);
        record.artifacts.push_back(dir / name);
        listing.push_back(name);
    }
    const json m{{"config_hash", config_hash(record.config)},
                 {"config", record.config},
                 {"artifacts", listing},
                 {"summary", record.summary}};
    write_file_atomic(manifest, m.dump(2) + "\n");
    record.artifacts.push_back(manifest);
    return record.artifacts;
}

RunRecord run_experiment(const ExperimentConfig& cfg) {
    RunRecord rec = compute_experiment(cfg);
    write_results(rec, cfg.out_dir, cfg.force);
    return rec;
}

double mean_of(const std::vector<double>& v) {
    if (v.empty()) return 0.0;
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double median_of(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

namespace {
std::vector<double> window_steps(const std::vector<EpisodeStats>& eps, std::uint64_t window) {
    const std::size_t w = std::min<std::size_t>(window, eps.size());
    std::vector<double> out;
    for (std::size_t k = eps.size() - w; k < eps.size(); ++k) out.push_back(eps[k].steps);
    return out;
}
}  // namespace

double final_window_mean_steps(const std::vector<EpisodeStats>& eps, std::uint64_t window) {
    return mean_of(window_steps(eps, window));
}

double final_window_median_steps(const std::vector<EpisodeStats>& eps, std::uint64_t window) {
    return median_of(window_steps(eps, window));
}

double sign_test_p(int worse, int better) {
    const int n = worse + better;
    if (n == 0) return 1.0;
    double p = 0.0;
    for (int k = worse; k <= n; ++k)
        p += std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0) - n * std::log(2.0));
    return std::min(1.0, p);
}

LearnerSuite run_learners(const GridWorld& env, const std::vector<std::string>& variants,
                          const std::vector<std::uint64_t>& seeds, std::uint64_t episodes, double alpha,
                          double epsilon, int workers) {
    LearnerSuite out{variants, seeds, {}};
    std::vector<LearnerConfig> configs;
    for (const auto& v : variants)
        for (auto s : seeds) configs.push_back(LearnerConfig{parse_operator(v), alpha, epsilon, episodes, s});
    for (const auto& c : configs) c.validate();
    std::vector<TrainResult> flat(configs.size());
    std::vector<std::exception_ptr> errors(configs.size());
#pragma omp parallel for schedule(dynamic) num_threads(std::max(1, workers))
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(configs.size()); ++i) {
        try {
            flat[static_cast<std::size_t>(i)] = train(env, configs[static_cast<std::size_t>(i)]);
        } catch (...) {
            errors[static_cast<std::size_t>(i)] = std::current_exception();
        }
    }
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);
    out.runs.resize(variants.size());
    for (std::size_t v = 0; v < variants.size(); ++v)
        for (std::size_t k = 0; k < seeds.size(); ++k) out.runs[v].push_back(std::move(flat[v * seeds.size() + k]));
    return out;
}

}  // namespace dbs
