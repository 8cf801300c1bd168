#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "dbs/mdp.hpp"
#include "dbs/value_iteration.hpp"

using namespace dbs;

namespace {

GridWorldSpec corridor_1x2() {
    GridWorldSpec g = open_gridworld(2, 1);
    return g;
}

}  // namespace

TEST_CASE("wall-free 10x10 has 101 states and 4 actions") {
    const auto w = build_gridworld(open_gridworld(10, 10));
    CHECK(w.mdp.n_states() == 101);
    CHECK(w.mdp.n_actions() == 4);
    CHECK(w.mdp.is_terminal(w.terminal_state));
    CHECK(w.cells.size() == 100);
}

TEST_CASE("1x2 corridor pays 1 for the single step") {
    const auto w = build_gridworld(corridor_1x2());
    const auto v = oracle_optimal_values(w.mdp);
    CHECK(v[w.start_state] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(w.mdp.reward(w.start_state, static_cast<std::size_t>(Move::Right)) == 1.0);
    CHECK(w.mdp.outcomes(w.start_state, static_cast<std::size_t>(Move::Right))[0].next == w.terminal_state);
}

TEST_CASE("walled-off goal is rejected") {
    auto g = open_gridworld(4, 4);
    g.walls = {{2, 3}, {3, 2}};
    CHECK_THROWS_AS(build_gridworld(g), std::invalid_argument);
    CHECK_FALSE(shortest_path_length(g).has_value());
}

TEST_CASE("invalid cells are rejected") {
    auto g = open_gridworld(3, 3);
    g.walls = {{0, 0}};
    CHECK_THROWS_AS(build_gridworld(g), std::invalid_argument);
    g = open_gridworld(3, 3);
    g.goal = {5, 5};
    CHECK_THROWS_AS(build_gridworld(g), std::invalid_argument);
    g = open_gridworld(3, 3);
    g.walls = {{7, 1}};
    CHECK_THROWS_AS(build_gridworld(g), std::invalid_argument);
}

TEST_CASE("moves into walls and boundaries stay put") {
    auto g = open_gridworld(3, 3);
    g.walls = {{0, 1}};
    const auto w = build_gridworld(g);
    const std::size_t s = w.start_state;
    CHECK(w.mdp.outcomes(s, static_cast<std::size_t>(Move::Up))[0].next == s);
    CHECK(w.mdp.outcomes(s, static_cast<std::size_t>(Move::Left))[0].next == s);
    CHECK(w.mdp.outcomes(s, static_cast<std::size_t>(Move::Right))[0].next == s);
    CHECK(w.mdp.outcomes(s, static_cast<std::size_t>(Move::Down))[0].next == *w.state_of({1, 0}));
    CHECK(w.mdp.reward(s, static_cast<std::size_t>(Move::Down)) == 0.0);
}

TEST_CASE("every transition row sums to exactly 1 on shipped and open maps") {
    for (const auto& spec : {load_gridworld_map(default_map_path()), open_gridworld(10, 10), open_gridworld(6, 6)}) {
        const auto w = build_gridworld(spec);
        for (std::size_t s = 0; s < w.mdp.n_states(); ++s)
            for (std::size_t a = 0; a < w.mdp.n_actions(); ++a) {
                double total = 0;
                for (const auto& o : w.mdp.outcomes(s, a)) total += o.prob;
                CHECK(total == 1.0);
            }
    }
}

TEST_CASE("map parsing") {
    const auto g = parse_gridworld_map("S.#\n..G\n");
    CHECK(g.width == 3);
    CHECK(g.height == 2);
    CHECK(g.start == Cell{0, 0});
    CHECK(g.goal == Cell{1, 2});
    CHECK(g.walls.size() == 1);
    CHECK(g.walls.contains(Cell{0, 2}));
    CHECK(parse_gridworld_map("S.\r\n.G\r\n").width == 2);

    CHECK_THROWS_AS(parse_gridworld_map("S..\n.G\n"), std::invalid_argument);
    CHECK_THROWS_AS(parse_gridworld_map("S.x\n..G\n"), std::invalid_argument);
    CHECK_THROWS_AS(parse_gridworld_map("S..\n...\n"), std::invalid_argument);
    CHECK_THROWS_AS(parse_gridworld_map("SS.\n..G\n"), std::invalid_argument);
    CHECK_THROWS_AS(parse_gridworld_map(""), std::invalid_argument);
    CHECK_THROWS(load_gridworld_map("/nonexistent/map.txt"));
}

TEST_CASE("default map matches its breadth-first distance") {
    const auto spec = load_gridworld_map(default_map_path());
    CHECK(spec.width == 10);
    CHECK(spec.height == 10);
    const auto d = shortest_path_length(spec);
    REQUIRE(d.has_value());
    const auto w = build_gridworld(spec);
    const auto v = oracle_optimal_values(w.mdp);
    CHECK(v[w.start_state] == doctest::Approx(std::pow(0.9, *d - 1)).epsilon(1e-10));
    CHECK(shortest_path_length(open_gridworld(10, 10)) == 18);
}

TEST_CASE("TabularMdp validation") {
    using Rows = std::vector<std::vector<Outcome>>;
    CHECK_THROWS_AS(TabularMdp(1, 1, Rows{{{0, 0.5}}}, {0.0}, 0.9, {}), std::invalid_argument);
    CHECK_THROWS_AS(TabularMdp(1, 1, Rows{{{0, 1.0}}}, {0.0}, 1.0, {}), std::invalid_argument);
    CHECK_THROWS_AS(TabularMdp(2, 1, Rows{{{0, 1.0}}, {{1, 1.0}}}, {0.0, 1.0}, 0.9, {1}), std::invalid_argument);
    CHECK_THROWS_AS(TabularMdp(2, 1, Rows{{{0, 1.0}}, {{0, 1.0}}}, {0.0, 0.0}, 0.9, {1}), std::invalid_argument);
    CHECK_THROWS_AS(TabularMdp(1, 1, Rows{{{3, 1.0}}}, {0.0}, 0.9, {}), std::invalid_argument);
    CHECK_NOTHROW(TabularMdp(2, 1, Rows{{{0, 0.25}, {1, 0.75}}, {{1, 1.0}}}, {-2.0, 0.0}, 0.5, {1}));
    const TabularMdp m(2, 1, Rows{{{0, 0.25}, {1, 0.75}}, {{1, 1.0}}}, {-2.0, 0.0}, 0.5, {1});
    CHECK(m.reward_bound() == 2.0);
}

TEST_CASE("random_mdp is a valid model") {
    const auto m = random_mdp(50, 3, 4, 0.9, 1);
    CHECK(m.n_states() == 50);
    CHECK(m.is_terminal(0));
    CHECK(m.reward_bound() <= 1.0);
}
