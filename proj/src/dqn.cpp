#include "dbs/dqn.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <optional>
#include <sstream>

#include "dbs/qlearning.hpp"

namespace dbs {

static_assert(std::endian::native == std::endian::little, "snapshot format assumes a little-endian host");

std::string to_string(Architecture a) { return a == Architecture::Linear ? "linear" : "mlp"; }

std::vector<double> FeatureMap::operator()(std::size_t state) const {
    if (state >= dim_) throw std::out_of_range("state index outside the feature map");
    std::vector<double> x(dim_, 0.0);
    x[state] = 1.0;
    return x;
}

ApproxModel ApproxModel::linear(std::size_t feature_dim, std::size_t n_actions) {
    if (feature_dim == 0 || n_actions == 0) throw std::invalid_argument("model dimensions must be positive");
    return ApproxModel(Architecture::Linear, feature_dim, 0, n_actions, feature_dim * n_actions);
}

ApproxModel ApproxModel::one_hidden(std::size_t feature_dim, std::size_t hidden, std::size_t n_actions) {
    if (feature_dim == 0 || hidden == 0 || n_actions == 0) throw std::invalid_argument("model dimensions must be positive");
    const std::size_t n = hidden * feature_dim + hidden + n_actions * hidden + n_actions;
    return ApproxModel(Architecture::OneHidden, feature_dim, hidden, n_actions, n);
}

void ApproxModel::check_input(std::span<const double> x) const {
    if (x.size() != d_) throw std::invalid_argument("feature dimension does not match the model");
}

void ApproxModel::set_theta(std::vector<double> theta) {
    if (theta.size() != theta_.size()) throw std::invalid_argument("parameter vector has the wrong size");
    theta_ = std::move(theta);
}

void ApproxModel::init_random(Rng& rng, double scale) {
    std::normal_distribution<double> normal(0.0, scale);
    for (double& w : theta_) w = normal(rng);
}

std::vector<double> ApproxModel::forward(std::span<const double> x) const {
    check_input(x);
    std::vector<double> q(a_, 0.0);
    if (arch_ == Architecture::Linear) {
        for (std::size_t a = 0; a < a_; ++a) {
            const double* w = theta_.data() + a * d_;
            double acc = 0.0;
            for (std::size_t j = 0; j < d_; ++j)
                if (x[j] != 0.0) acc += w[j] * x[j];
            q[a] = acc;
        }
        return q;
    }
    const double* w1 = theta_.data();
    const double* b1 = w1 + h_ * d_;
    const double* w2 = b1 + h_;
    const double* b2 = w2 + a_ * h_;
    std::vector<double> hid(h_);
    for (std::size_t k = 0; k < h_; ++k) {
        double z = b1[k];
        for (std::size_t j = 0; j < d_; ++j)
            if (x[j] != 0.0) z += w1[k * d_ + j] * x[j];
        hid[k] = std::tanh(z);
    }
    for (std::size_t a = 0; a < a_; ++a) {
        double acc = b2[a];
        for (std::size_t k = 0; k < h_; ++k) acc += w2[a * h_ + k] * hid[k];
        q[a] = acc;
    }
    return q;
}

std::vector<double> ApproxModel::grad_q(std::span<const double> x, std::size_t action) const {
    check_input(x);
    if (action >= a_) throw std::out_of_range("action index out of range");
    std::vector<double> g(theta_.size(), 0.0);
    if (arch_ == Architecture::Linear) {
        std::copy(x.begin(), x.end(), g.begin() + static_cast<std::ptrdiff_t>(action * d_));
        return g;
    }
    const double* w1 = theta_.data();
    const double* b1 = w1 + h_ * d_;
    const double* w2 = b1 + h_;
    const std::size_t off_b1 = h_ * d_, off_w2 = off_b1 + h_, off_b2 = off_w2 + a_ * h_;
    for (std::size_t k = 0; k < h_; ++k) {
        double z = b1[k];
        for (std::size_t j = 0; j < d_; ++j)
            if (x[j] != 0.0) z += w1[k * d_ + j] * x[j];
        const double hk = std::tanh(z);
        const double back = w2[action * h_ + k] * (1.0 - hk * hk);
        for (std::size_t j = 0; j < d_; ++j) g[k * d_ + j] = back * x[j];
        g[off_b1 + k] = back;
        g[off_w2 + action * h_ + k] = hk;
    }
    g[off_b2 + action] = 1.0;
    return g;
}

TargetModel target_sync(const ApproxModel& model) { return TargetModel{model}; }

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0) throw std::invalid_argument("replay capacity must be positive");
}

void ReplayBuffer::push(Experience e) {
    if (items_.size() == capacity_) items_.pop_front();
    items_.push_back(std::move(e));
}

std::vector<const Experience*> ReplayBuffer::sample(std::size_t n, Rng& rng) const {
    if (items_.empty()) throw std::logic_error("cannot sample from an empty replay buffer");
    std::uniform_int_distribution<std::size_t> pick(0, items_.size() - 1);
    std::vector<const Experience*> out(n);
    for (auto& p : out) p = &items_[pick(rng)];
    return out;
}

double coefficient_beta(double c, std::uint64_t t, double p) {
    if (t < 1) throw std::out_of_range("step index starts at 1");
    return c * std::pow(static_cast<double>(t), p);
}

double td_target(const Experience& e, const TargetModel& target, const OperatorKind& op, double gamma) {
    if (e.terminal) return e.reward;
    return e.reward + gamma * op.apply(target.net.forward(e.s_next), 1);
}

double td_target(const Experience& e, const TargetModel& target, double beta, double gamma) {
    if (e.terminal) return e.reward;
    return e.reward + gamma * boltz(target.net.forward(e.s_next), beta);
}

LossGrad loss_and_grad(std::span<const Experience* const> batch, const ApproxModel& model,
                       const TargetModel& target, const OperatorKind& target_op, double gamma) {
    if (batch.empty()) throw std::invalid_argument("empty minibatch");
    LossGrad out;
    out.grad.assign(model.n_params(), 0.0);
    for (const Experience* e : batch) {
        const double y = td_target(*e, target, target_op, gamma);
        const double err = y - model.forward(e->s)[e->action];
        out.loss += 0.5 * err * err;
        const auto g = model.grad_q(e->s, e->action);
        for (std::size_t i = 0; i < g.size(); ++i) out.grad[i] -= err * g[i];
    }
    const double inv = 1.0 / static_cast<double>(batch.size());
    out.loss *= inv;
    for (double& v : out.grad) v *= inv;
    return out;
}

LossGrad loss_and_grad(std::span<const Experience* const> batch, const ApproxModel& model,
                       const TargetModel& target, double c, std::uint64_t t, double gamma, double p) {
    return loss_and_grad(batch, model, target, OperatorKind::boltzmann(coefficient_beta(c, t, p)), gamma);
}

std::vector<double> sgd_step(std::span<const double> theta, std::span<const double> grad, double alpha) {
    if (theta.size() != grad.size()) throw std::invalid_argument("parameter and gradient sizes differ");
    std::vector<double> out(theta.begin(), theta.end());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] -= alpha * grad[i];
    return out;
}

double meta_grad_c(std::span<const Experience* const> batch, const ApproxModel& before, const ApproxModel& after,
                   const TargetModel& target, const Experience& next, double c_ref, double alpha, double gamma,
                   std::uint64_t t, double p) {
    if (batch.empty()) throw std::invalid_argument("empty minibatch");
    if (before.n_params() != after.n_params()) throw std::invalid_argument("model shapes differ");
    const double t_pow = std::pow(static_cast<double>(t), p);
    const double beta = c_ref * t_pow;

    // B = d theta' / dc
    std::vector<double> dtheta(before.n_params(), 0.0);
    for (const Experience* e : batch) {
        if (e->terminal) continue;
        const double dboltz_dc = t_pow * dboltz_dbeta(target.net.forward(e->s_next), beta);
        if (dboltz_dc == 0.0) continue;
        const auto g = before.grad_q(e->s, e->action);
        for (std::size_t i = 0; i < g.size(); ++i) dtheta[i] += dboltz_dc * g[i];
    }
    const double scale = alpha * gamma / static_cast<double>(batch.size());

    // A = dJ'/d theta' on the held-out transition
    const double y = td_target(next, target, beta, gamma);
    const double err = y - after.forward(next.s)[next.action];
    const auto g_next = after.grad_q(next.s, next.action);
    double dot = 0.0;
    for (std::size_t i = 0; i < g_next.size(); ++i) dot += g_next[i] * dtheta[i];
    return -err * dot * scale;
}

MetaState c_update(const MetaState& meta, double grad_c) {
    if (std::isnan(grad_c)) throw std::invalid_argument("meta gradient is NaN");
    MetaState out = meta;
    out.c = std::max(meta.c - meta.eta * grad_c, MetaState::c_min);
    if (!std::isfinite(out.c)) throw std::invalid_argument("coefficient c became non-finite");
    return out;
}

void DqnConfig::validate() const {
    if (episodes < 1) throw std::invalid_argument("episodes must be >= 1");
    if (buffer_capacity < 1 || batch_size < 1) throw std::invalid_argument("buffer and batch sizes must be positive");
    if (!(alpha >= 0.0)) throw std::invalid_argument("alpha must be >= 0");
    if (!(eps_start >= 0.0 && eps_start <= 1.0 && eps_end >= 0.0 && eps_end <= 1.0))
        throw std::invalid_argument("epsilon endpoints must lie in [0, 1]");
    if (!(eps_anneal_fraction >= 0.0 && eps_anneal_fraction <= 1.0))
        throw std::invalid_argument("epsilon anneal fraction must lie in [0, 1]");
    if (sync_every < 1) throw std::invalid_argument("sync_every must be >= 1");
    if (!(c0 > 0.0) || !std::isfinite(c0)) throw std::invalid_argument("c0 must be positive and finite");
    if (!(eta >= 0.0)) throw std::invalid_argument("eta must be >= 0");
    if (!(power > 0.0)) throw std::invalid_argument("power must be > 0");
    if (arch == Architecture::OneHidden && hidden < 1) throw std::invalid_argument("hidden units must be >= 1");
}

namespace {

double epsilon_at(const DqnConfig& cfg, std::uint64_t episode) {
    const double horizon = cfg.eps_anneal_fraction * static_cast<double>(cfg.episodes);
    if (horizon <= 0.0) return cfg.eps_end;
    const double frac = std::min(1.0, static_cast<double>(episode - 1) / horizon);
    return cfg.eps_start + (cfg.eps_end - cfg.eps_start) * frac;
}

double max_abs(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

struct PendingMeta {
    ApproxModel before;
    std::uint64_t t;
};

}  // namespace

DqnRunRecord train_dqn(const GridWorld& env, const DqnConfig& cfg) {
    cfg.validate();
    const TabularMdp& mdp = env.mdp;
    const double gamma = mdp.gamma();
    const FeatureMap features(mdp.n_states());

    ApproxModel model = cfg.arch == Architecture::Linear
                            ? ApproxModel::linear(features.dim(), mdp.n_actions())
                            : ApproxModel::one_hidden(features.dim(), cfg.hidden, mdp.n_actions());
    Rng init_rng = make_rng(cfg.seed, 1);
    model.init_random(init_rng, cfg.init_scale);
    TargetModel target = target_sync(model);

    Rng rng = make_rng(cfg.seed, 0);
    // the pending meta step keeps batch copies: pop_front invalidates pointers
    ReplayBuffer buffer(cfg.buffer_capacity);
    MetaState meta{cfg.c0, cfg.eta};
    std::vector<Experience> pending_batch;
    std::optional<PendingMeta> pending;

    DqnRunRecord rec;
    std::uint64_t t = 0;
    for (std::uint64_t ep = 1; ep <= cfg.episodes; ++ep) {
        DqnEpisode stats;
        stats.episode = ep;
        stats.epsilon = epsilon_at(cfg, ep);
        double loss_sum = 0.0;
        std::size_t s = env.start_state;
        while (stats.steps < env.spec.max_steps) {
            ++t;
            auto x = features(s);
            const std::size_t a = select_action(model.forward(x), stats.epsilon, rng);
            const double r = mdp.reward(s, a);
            const std::size_t s_next = mdp.outcomes(s, a)[0].next;
            Experience e{std::move(x), a, r, features(s_next), mdp.is_terminal(s_next), t};

            // held-out meta step on the transition that followed the last update
            if (pending) {
                std::vector<const Experience*> view;
                for (const auto& b : pending_batch) view.push_back(&b);
                const double g = meta_grad_c(view, pending->before, model, target, e, meta.c, cfg.alpha, gamma,
                                             pending->t, cfg.power);
                meta = c_update(meta, g);
                pending.reset();
            }
            buffer.push(e);

            const OperatorKind target_op = cfg.mode == TargetMode::Max
                                               ? OperatorKind::max()
                                               : OperatorKind::boltzmann(coefficient_beta(meta.c, t, cfg.power));
            const auto batch = buffer.sample(cfg.batch_size, rng);
            const LossGrad lg = loss_and_grad(batch, model, target, target_op, gamma);
            if (cfg.mode == TargetMode::MetaDbs) {
                pending_batch.clear();
                for (const Experience* b : batch) pending_batch.push_back(*b);
                pending = PendingMeta{model, t};
            }
            model.set_theta(sgd_step(model.theta(), lg.grad, cfg.alpha));
            if (const double m = max_abs(model.theta()); !(m <= 1e6)) {
                std::ostringstream msg;
                msg << "parameters diverged at step " << t << " (episode " << ep << "): |theta|_inf = " << m;
                throw DivergenceError(msg.str());
            }
            if (t % cfg.sync_every == 0) {
                target = target_sync(model);
                ++rec.syncs;
            }

            loss_sum += lg.loss;
            ++stats.steps;
            stats.ret += r;
            rec.c_trajectory.push_back(meta.c);
            rec.action_trace.push_back(static_cast<std::uint8_t>(a));
            s = s_next;
            if (mdp.is_terminal(s)) {
                stats.reached_goal = true;
                break;
            }
        }
        stats.c = meta.c;
        stats.loss_mean = loss_sum / stats.steps;
        rec.episodes.push_back(stats);
        if (cfg.snapshot_every > 0 && ep % cfg.snapshot_every == 0) rec.snapshots.push_back({ep, model.theta()});
    }
    rec.total_steps = t;
    rec.final_model = std::move(model);
    return rec;
}

std::string encode_snapshot(const ApproxModel& model) {
    const auto tag = static_cast<std::uint32_t>(model.architecture());
    const auto hidden = static_cast<std::uint32_t>(model.hidden());
    const std::uint64_t dims[3] = {model.feature_dim(), model.n_actions(), model.n_params()};
    std::string out = "DBSTHETA";
    out.append(reinterpret_cast<const char*>(&tag), sizeof tag);
    out.append(reinterpret_cast<const char*>(&hidden), sizeof hidden);
    out.append(reinterpret_cast<const char*>(dims), sizeof dims);
    out.append(reinterpret_cast<const char*>(model.theta().data()), model.n_params() * sizeof(double));
    return out;
}

ApproxModel decode_snapshot(std::string_view bytes) {
    constexpr std::size_t header = 8 + 4 + 4 + 3 * 8;
    if (bytes.size() < header || bytes.substr(0, 8) != "DBSTHETA") throw std::runtime_error("not a parameter snapshot");
    std::uint32_t tag = 0, hidden = 0;
    std::uint64_t dims[3] = {};
    std::memcpy(&tag, bytes.data() + 8, sizeof tag);
    std::memcpy(&hidden, bytes.data() + 12, sizeof hidden);
    std::memcpy(dims, bytes.data() + 16, sizeof dims);
    if (tag > 1) throw std::runtime_error("unknown architecture tag in snapshot");
    ApproxModel model = tag == static_cast<std::uint32_t>(Architecture::Linear)
                            ? ApproxModel::linear(dims[0], dims[1])
                            : ApproxModel::one_hidden(dims[0], hidden, dims[1]);
    if (model.n_params() != dims[2]) throw std::runtime_error("snapshot header is inconsistent");
    if (bytes.size() != header + dims[2] * sizeof(double)) throw std::runtime_error("snapshot has the wrong length");
    std::vector<double> theta(dims[2]);
    std::memcpy(theta.data(), bytes.data() + header, theta.size() * sizeof(double));
    model.set_theta(std::move(theta));
    return model;
}

void write_snapshot(const std::filesystem::path& path, const ApproxModel& model) {
    const std::string bytes = encode_snapshot(model);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("cannot write snapshot: " + path.string());
}

ApproxModel read_snapshot(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open snapshot: " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return decode_snapshot(ss.str());
}

}  // namespace dbs
