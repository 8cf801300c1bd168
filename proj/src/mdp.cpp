#include "dbs/mdp.hpp"

#include "dbs/rng.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <queue>
#include <sstream>
#include <stdexcept>

namespace dbs {

TabularMdp::TabularMdp(std::size_t n_states, std::size_t n_actions,
                       std::vector<std::vector<Outcome>> transitions, std::vector<double> rewards,
                       double gamma, std::vector<std::size_t> terminal_states)
    : n_states_(n_states),
      n_actions_(n_actions),
      transitions_(std::move(transitions)),
      rewards_(std::move(rewards)),
      gamma_(gamma),
      terminal_(n_states, false) {
    if (n_states == 0 || n_actions == 0) throw std::invalid_argument("MDP needs at least one state and action");
    if (!(gamma >= 0.0 && gamma < 1.0)) throw std::invalid_argument("gamma must lie in [0, 1)");
    if (transitions_.size() != n_states * n_actions || rewards_.size() != n_states * n_actions)
        throw std::invalid_argument("transition/reward tables do not match n_states * n_actions");
    for (std::size_t s : terminal_states) {
        if (s >= n_states) throw std::invalid_argument("terminal state index out of range");
        terminal_[s] = true;
    }
    for (std::size_t s = 0; s < n_states; ++s) {
        for (std::size_t a = 0; a < n_actions; ++a) {
            const auto& row = transitions_[s * n_actions + a];
            if (row.empty()) throw std::invalid_argument("empty transition row");
            double total = 0.0;
            for (const auto& o : row) {
                if (o.next >= n_states) throw std::invalid_argument("transition target out of range");
                if (!(o.prob >= 0.0)) throw std::invalid_argument("negative transition probability");
                total += o.prob;
            }
            if (std::abs(total - 1.0) > 1e-12) throw std::invalid_argument("transition row does not sum to 1");
            if (!std::isfinite(rewards_[s * n_actions + a])) throw std::invalid_argument("non-finite reward");
            if (terminal_[s]) {
                const bool self_loop = row.size() == 1 && row[0].next == s;
                if (!self_loop || rewards_[s * n_actions + a] != 0.0)
                    throw std::invalid_argument("terminal states must self-loop with reward 0");
            }
        }
    }
}

double TabularMdp::reward_bound() const {
    double r = 0.0;
    for (double v : rewards_) r = std::max(r, std::abs(v));
    return r;
}

TabularMdp random_mdp(std::size_t n_states, std::size_t n_actions, std::size_t branching, double gamma,
                      std::uint64_t seed) {
    if (n_states < 2 || branching < 1) throw std::invalid_argument("random MDP needs >= 2 states and branching >= 1");
    Rng rng = make_rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, n_states - 1);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<std::vector<Outcome>> trans(n_states * n_actions);
    std::vector<double> rew(n_states * n_actions, 0.0);
    for (std::size_t s = 0; s < n_states; ++s) {
        for (std::size_t a = 0; a < n_actions; ++a) {
            auto& row = trans[s * n_actions + a];
            if (s == 0) {
                row = {{0, 1.0}};
                continue;
            }
            double total = 0.0;
            for (std::size_t k = 0; k < branching; ++k) {
                row.push_back({pick(rng), unit(rng) + 1e-3});
                total += row.back().prob;
            }
            double acc = 0.0;
            for (std::size_t k = 0; k + 1 < row.size(); ++k) acc += (row[k].prob /= total);
            row.back().prob = 1.0 - acc;
            rew[s * n_actions + a] = 2.0 * unit(rng) - 1.0;
        }
    }
    return TabularMdp(n_states, n_actions, std::move(trans), std::move(rew), gamma, {0});
}

std::optional<std::size_t> GridWorld::state_of(Cell c) const {
    auto it = std::lower_bound(cells.begin(), cells.end(), c);
    if (it == cells.end() || *it != c) return std::nullopt;
    return static_cast<std::size_t>(it - cells.begin());
}

namespace {

bool inside(const GridWorldSpec& g, Cell c) {
    return c.row >= 0 && c.row < g.height && c.col >= 0 && c.col < g.width;
}

Cell step_cell(const GridWorldSpec& g, Cell c, Move m) {
    Cell n = c;
    switch (m) {
        case Move::Up: --n.row; break;
        case Move::Down: ++n.row; break;
        case Move::Left: --n.col; break;
        case Move::Right: ++n.col; break;
    }
    if (!inside(g, n) || g.walls.contains(n)) return c;
    return n;
}

void validate_spec(const GridWorldSpec& g) {
    if (g.width <= 0 || g.height <= 0) throw std::invalid_argument("grid dimensions must be positive");
    if (g.max_steps <= 0) throw std::invalid_argument("max_steps must be positive");
    if (!inside(g, g.start) || !inside(g, g.goal)) throw std::invalid_argument("start/goal outside the grid");
    if (g.walls.contains(g.start) || g.walls.contains(g.goal)) throw std::invalid_argument("start/goal on a wall");
    if (g.start == g.goal) throw std::invalid_argument("start and goal coincide");
    for (const auto& w : g.walls)
        if (!inside(g, w)) throw std::invalid_argument("wall outside the grid");
}

}  // namespace

std::optional<int> shortest_path_length(const GridWorldSpec& spec) {
    validate_spec(spec);
    std::vector<int> dist(static_cast<std::size_t>(spec.width * spec.height), -1);
    auto idx = [&](Cell c) { return static_cast<std::size_t>(c.row * spec.width + c.col); };
    std::queue<Cell> frontier;
    frontier.push(spec.start);
    dist[idx(spec.start)] = 0;
    while (!frontier.empty()) {
        const Cell c = frontier.front();
        frontier.pop();
        if (c == spec.goal) return dist[idx(c)];
        for (std::size_t m = 0; m < kGridActions; ++m) {
            const Cell n = step_cell(spec, c, static_cast<Move>(m));
            if (dist[idx(n)] < 0) {
                dist[idx(n)] = dist[idx(c)] + 1;
                frontier.push(n);
            }
        }
    }
    return std::nullopt;
}

GridWorld build_gridworld(const GridWorldSpec& spec) {
    if (!shortest_path_length(spec)) throw std::invalid_argument("goal is not reachable from start");

    std::vector<Cell> cells;
    for (int r = 0; r < spec.height; ++r)
        for (int c = 0; c < spec.width; ++c)
            if (!spec.walls.contains(Cell{r, c})) cells.push_back({r, c});

    const std::size_t n = cells.size() + 1;
    const std::size_t terminal = cells.size();
    auto index_of = [&](Cell c) {
        return static_cast<std::size_t>(std::lower_bound(cells.begin(), cells.end(), c) - cells.begin());
    };
    const std::size_t goal = index_of(spec.goal);

    std::vector<std::vector<Outcome>> trans(n * kGridActions);
    std::vector<double> rew(n * kGridActions, 0.0);
    for (std::size_t s = 0; s < n; ++s) {
        for (std::size_t a = 0; a < kGridActions; ++a) {
            const std::size_t k = s * kGridActions + a;
            if (s == terminal || s == goal) {
                trans[k] = {{s, 1.0}};
                continue;
            }
            const Cell next = step_cell(spec, cells[s], static_cast<Move>(a));
            if (next == spec.goal) {
                trans[k] = {{terminal, 1.0}};
                rew[k] = spec.goal_reward;
            } else {
                trans[k] = {{index_of(next), 1.0}};
                rew[k] = spec.step_reward;
            }
        }
    }
    TabularMdp mdp(n, kGridActions, std::move(trans), std::move(rew), spec.gamma, {goal, terminal});
    const std::size_t start = index_of(spec.start);
    return GridWorld{spec, std::move(mdp), std::move(cells), start, goal, terminal};
}

GridWorldSpec parse_gridworld_map(const std::string& text) {
    GridWorldSpec spec;
    spec.walls.clear();
    std::istringstream in(text);
    std::string line;
    int row = 0, width = -1, starts = 0, goals = 0;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (width < 0) width = static_cast<int>(line.size());
        if (static_cast<int>(line.size()) != width) throw std::invalid_argument("map is not rectangular");
        for (int col = 0; col < width; ++col) {
            switch (line[static_cast<std::size_t>(col)]) {
                case '#': spec.walls.insert({row, col}); break;
                case '.': break;
                case 'S': spec.start = {row, col}; ++starts; break;
                case 'G': spec.goal = {row, col}; ++goals; break;
                default: throw std::invalid_argument("map contains an unknown character");
            }
        }
        ++row;
    }
    if (row == 0) throw std::invalid_argument("map is empty");
    if (starts != 1 || goals != 1) throw std::invalid_argument("map needs exactly one S and one G");
    spec.width = width;
    spec.height = row;
    return spec;
}

GridWorldSpec load_gridworld_map(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open map file: " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_gridworld_map(ss.str());
}

GridWorldSpec open_gridworld(int width, int height) {
    GridWorldSpec spec;
    spec.width = width;
    spec.height = height;
    spec.start = {0, 0};
    spec.goal = {height - 1, width - 1};
    return spec;
}

std::filesystem::path default_map_path() { return std::filesystem::path(DBSLAB_DATA_DIR) / "gridworld10.txt"; }

}  // namespace dbs
