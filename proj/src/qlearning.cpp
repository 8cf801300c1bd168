#include "dbs/qlearning.hpp"

#include <cmath>
#include <stdexcept>

namespace dbs {

void LearnerConfig::validate() const {
    if (!(alpha > 0.0 && alpha <= 1.0)) throw std::invalid_argument("alpha must lie in (0, 1]");
    if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw std::invalid_argument("epsilon must lie in [0, 1]");
    if (episodes < 1) throw std::invalid_argument("episodes must be >= 1");
}

std::size_t select_action(ActionValues q_row, double epsilon, Rng& rng) {
    if (q_row.empty()) throw std::invalid_argument("empty action-value row");
    if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw std::invalid_argument("epsilon must lie in [0, 1]");
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    if (unit(rng) < epsilon) {
        std::uniform_int_distribution<std::size_t> pick(0, q_row.size() - 1);
        return pick(rng);
    }
    double best = q_row[0];
    std::size_t n_best = 1;
    for (std::size_t a = 1; a < q_row.size(); ++a) {
        if (q_row[a] > best) {
            best = q_row[a];
            n_best = 1;
        } else if (q_row[a] == best) {
            ++n_best;
        }
    }
    std::size_t k = 0;
    if (n_best > 1) k = std::uniform_int_distribution<std::size_t>(0, n_best - 1)(rng);
    for (std::size_t a = 0; a < q_row.size(); ++a)
        if (q_row[a] == best && k-- == 0) return a;
    return 0;  // unreachable
}

double next_state_value(ActionValues q_row, const OperatorKind& op, std::uint64_t t) { return op.apply(q_row, t); }

void q_update(QFunction& q, const TabularMdp& mdp, std::size_t s, std::size_t a, double r, std::size_t s_next,
              std::uint64_t t, const LearnerConfig& cfg) {
    if (s >= q.n_states() || s_next >= q.n_states() || a >= q.n_actions())
        throw std::out_of_range("q_update index out of range");
    const double v_next = mdp.is_terminal(s_next) ? 0.0 : next_state_value(q.row(s_next), cfg.op, t);
    double& entry = q(s, a);
    entry += cfg.alpha * (r + mdp.gamma() * v_next - entry);
}

namespace {

std::size_t sample_next(const TabularMdp& mdp, std::size_t s, std::size_t a, Rng& rng) {
    const auto row = mdp.outcomes(s, a);
    if (row.size() == 1) return row[0].next;
    double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    for (const auto& o : row) {
        if (u < o.prob) return o.next;
        u -= o.prob;
    }
    return row.back().next;
}

}  // namespace

TrainResult train(const GridWorld& env, const LearnerConfig& cfg) {
    cfg.validate();
    const TabularMdp& mdp = env.mdp;
    TrainResult out;
    out.q = QFunction(mdp.n_states(), mdp.n_actions(), 0.0);
    out.visits.assign(mdp.n_states() * mdp.n_actions(), 0);
    out.episodes.reserve(cfg.episodes);
    Rng rng = make_rng(cfg.seed);

    for (std::uint64_t t = 1; t <= cfg.episodes; ++t) {
        EpisodeStats ep;
        ep.episode = t;
        std::size_t s = env.start_state;
        while (ep.steps < env.spec.max_steps) {
            const std::size_t a = select_action(out.q.row(s), cfg.epsilon, rng);
            const double r = mdp.reward(s, a);
            const std::size_t s_next = sample_next(mdp, s, a, rng);
            q_update(out.q, mdp, s, a, r, s_next, t, cfg);
            ++out.visits[s * mdp.n_actions() + a];
            ++ep.steps;
            ep.total_reward += r;
            s = s_next;
            if (mdp.is_terminal(s)) {
                ep.reached_goal = true;
                break;
            }
        }
        out.episodes.push_back(ep);
    }
    return out;
}

}  // namespace dbs
