#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace dbs {

struct Outcome {
    std::size_t next;
    double prob;
};

/// Finite MDP with sparse transition rows. Terminal states self-loop with
/// reward 0 and every row sums to 1; the constructor enforces both.
class TabularMdp {
public:
    TabularMdp(std::size_t n_states, std::size_t n_actions,
               std::vector<std::vector<Outcome>> transitions,  // indexed s * n_actions + a
               std::vector<double> rewards,                     // indexed s * n_actions + a
               double gamma, std::vector<std::size_t> terminal_states);

    std::size_t n_states() const { return n_states_; }
    std::size_t n_actions() const { return n_actions_; }
    double gamma() const { return gamma_; }

    std::span<const Outcome> outcomes(std::size_t s, std::size_t a) const {
        return transitions_[s * n_actions_ + a];
    }
    double reward(std::size_t s, std::size_t a) const { return rewards_[s * n_actions_ + a]; }
    bool is_terminal(std::size_t s) const { return terminal_[s]; }

    /// max_{s,a} |r(s,a)|
    double reward_bound() const;

private:
    std::size_t n_states_;
    std::size_t n_actions_;
    std::vector<std::vector<Outcome>> transitions_;
    std::vector<double> rewards_;
    double gamma_;
    std::vector<bool> terminal_;
};

/// Random MDP with `branching` successors per (s, a) and rewards in [-1, 1];
/// state 0 is terminal.
TabularMdp random_mdp(std::size_t n_states, std::size_t n_actions, std::size_t branching, double gamma,
                      std::uint64_t seed);

using ValueFunction = std::vector<double>;

/// n_states x n_actions table, row-major.
class QFunction {
public:
    QFunction() = default;
    QFunction(std::size_t n_states, std::size_t n_actions, double init = 0.0)
        : n_states_(n_states), n_actions_(n_actions), q_(n_states * n_actions, init) {}

    double& operator()(std::size_t s, std::size_t a) { return q_[s * n_actions_ + a]; }
    double operator()(std::size_t s, std::size_t a) const { return q_[s * n_actions_ + a]; }

    std::span<const double> row(std::size_t s) const {
        return {q_.data() + s * n_actions_, n_actions_};
    }
    std::span<double> row(std::size_t s) { return {q_.data() + s * n_actions_, n_actions_}; }

    std::size_t n_states() const { return n_states_; }
    std::size_t n_actions() const { return n_actions_; }
    const std::vector<double>& data() const { return q_; }

    friend bool operator==(const QFunction&, const QFunction&) = default;

private:
    std::size_t n_states_ = 0;
    std::size_t n_actions_ = 0;
    std::vector<double> q_;
};

struct Cell {
    int row;
    int col;
    friend auto operator<=>(const Cell&, const Cell&) = default;
};

struct GridWorldSpec {
    int width = 10;
    int height = 10;
    std::set<Cell> walls;
    Cell start{0, 0};
    Cell goal{9, 9};
    double step_reward = 0.0;
    double goal_reward = 1.0;
    int max_steps = 300;
    double gamma = 0.9;
};

enum class Move : std::size_t { Up = 0, Down = 1, Left = 2, Right = 3 };
inline constexpr std::size_t kGridActions = 4;

/// A GridWorld compiled into a TabularMdp. States are the non-wall cells in
/// row-major order followed by one absorbing terminal state. Entering the
/// goal pays goal_reward and lands in the terminal state; the goal cell
/// itself is never occupied and is kept absorbing.
struct GridWorld {
    GridWorldSpec spec;
    TabularMdp mdp;
    std::vector<Cell> cells;  // state index -> cell, for non-terminal states
    std::size_t start_state;
    std::size_t goal_state;
    std::size_t terminal_state;

    std::optional<std::size_t> state_of(Cell c) const;
};

GridWorld build_gridworld(const GridWorldSpec& spec);

/// Map format: one row per line, '#' wall, '.' floor, 'S' start, 'G' goal.
GridWorldSpec parse_gridworld_map(const std::string& text);
GridWorldSpec load_gridworld_map(const std::filesystem::path& path);

GridWorldSpec open_gridworld(int width, int height);

/// Path to the default 10x10 map shipped in data/.
std::filesystem::path default_map_path();

/// Breadth-first shortest path length (moves) from start to goal, or
/// nullopt when the goal is unreachable.
std::optional<int> shortest_path_length(const GridWorldSpec& spec);

}  // namespace dbs
