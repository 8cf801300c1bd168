#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <vector>

#include "dbs/operators.hpp"
#include "dbs/rng.hpp"

using namespace dbs;

namespace {

std::vector<double> random_vector(Rng& rng, std::size_t n, double lo, double hi) {
    std::uniform_real_distribution<double> u(lo, hi);
    std::vector<double> x(n);
    for (auto& v : x) v = u(rng);
    return x;
}

// Relative error with an absolute floor: components below 1e-3 are compared
// on an absolute scale, where central-difference round-off dominates.
double rel_err(double a, double b) {
    const double scale = std::max({std::abs(a), std::abs(b), 1e-3});
    return std::abs(a - b) / scale;
}

}  // namespace

TEST_CASE("max_op examples") {
    CHECK(max_op(std::vector<double>{5}) == 5);
    CHECK(max_op(std::vector<double>{1, 3, 2}) == 3);
    CHECK(max_op(std::vector<double>{-2, -2}) == -2);
    CHECK_THROWS_AS(max_op(std::vector<double>{}), std::invalid_argument);
}

TEST_CASE("boltz examples") {
    CHECK(boltz(std::vector<double>{4, 8, 2}, 0.0) == doctest::Approx(14.0 / 3.0).epsilon(1e-15));
    CHECK(boltz(std::vector<double>{1, 0}, std::log(3.0)) == doctest::Approx(0.75).epsilon(1e-14));
    CHECK(std::abs(boltz(std::vector<double>{1, 0}, 1e9) - 1.0) <= 1e-9);
    CHECK_THROWS_AS(boltz(std::vector<double>{1, 0}, -1.0), std::invalid_argument);
    CHECK_THROWS_AS(boltz(std::vector<double>{1, std::nan("")}, 1.0), std::invalid_argument);
    CHECK(boltz(std::vector<double>{1, 0}, std::numeric_limits<double>::infinity()) == 1.0);
}

TEST_CASE("log_sum_exp examples") {
    CHECK(log_sum_exp(std::vector<double>{0, 0}, 1.0) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
    CHECK(log_sum_exp(std::vector<double>{7}, 5.0) == 7.0);
    CHECK(std::abs(log_sum_exp(std::vector<double>{1, 0}, 1e6) - 1.0) <= 1e-5);
    CHECK_THROWS_AS(log_sum_exp(std::vector<double>{1, 0}, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(log_sum_exp(std::vector<double>{1, 0}, -2.0), std::invalid_argument);
}

TEST_CASE("boltz_weights examples") {
    for (double b : {0.0, 0.5, 3.0, 1e6}) {
        auto w = boltz_weights(std::vector<double>{2.5, 2.5, 2.5}, b);
        for (double p : w) CHECK(p == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
    }
    auto w = boltz_weights(std::vector<double>{1, 0}, std::log(3.0));
    CHECK(w[0] == doctest::Approx(0.75).epsilon(1e-14));
    CHECK(w[1] == doctest::Approx(0.25).epsilon(1e-14));
    auto u = boltz_weights(std::vector<double>{-3, 9, 0.5, 4}, 0.0);
    for (double p : u) CHECK(p == 0.25);
}

TEST_CASE("entropy_gap examples") {
    for (std::size_t n : {2u, 3u, 7u}) {
        std::vector<double> x(n, 1.25);
        CHECK(entropy_gap(x, 2.0) == doctest::Approx(std::log(double(n)) / 2.0).epsilon(1e-14));
    }
    const std::vector<double> x{1, 0};
    const double b = std::log(3.0);
    // Independent evaluation of both sides from the closed forms.
    const double lse = std::log(4.0) / b;
    CHECK(entropy_gap(x, b) == doctest::Approx(lse - 0.75).epsilon(1e-13));
    CHECK(entropy_gap(std::vector<double>{3.0}, 4.0) == 0.0);
}

TEST_CASE("dboltz_dbeta examples") {
    CHECK(dboltz_dbeta(std::vector<double>{2, 2, 2}, 3.0) == 0.0);
    CHECK(dboltz_dbeta(std::vector<double>{1, 0}, 0.0) == doctest::Approx(0.25).epsilon(1e-15));
}

TEST_CASE("grad_boltz examples") {
    auto g = grad_boltz(std::vector<double>{3, -1, 4, 1}, 0.0);
    for (double v : g) CHECK(v == doctest::Approx(0.25).epsilon(1e-15));
    auto c = grad_boltz(std::vector<double>{2, 2, 2}, 7.0);
    for (double v : c) CHECK(v == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
}

TEST_CASE("schedule_eval examples") {
    CHECK(schedule_eval(BetaSchedule::power(1, 2), 3) == 9);
    CHECK(schedule_eval(BetaSchedule::constant(5), 1000) == 5);
    CHECK(schedule_eval(BetaSchedule::power(0.5, 2), 4) == 8);
    CHECK_THROWS_AS(schedule_eval(BetaSchedule::power(1, 2), 0), std::out_of_range);
    CHECK_THROWS_AS(BetaSchedule::constant(-1), std::invalid_argument);
    CHECK_THROWS_AS(BetaSchedule::power(0, 2), std::invalid_argument);
    CHECK_THROWS_AS(BetaSchedule::power(1, 0), std::invalid_argument);
    auto s = BetaSchedule::power(0.3, 1.5);
    double prev = 0;
    for (std::uint64_t t = 1; t < 200; ++t) {
        CHECK(s(t) >= prev);
        prev = s(t);
    }
}

TEST_CASE("operator dispatch") {
    const std::vector<double> x{1, 0};
    CHECK(OperatorKind::max().apply(x) == 1);
    CHECK(OperatorKind::boltzmann(std::log(3.0)).apply(x, 50) == doctest::Approx(0.75));
    CHECK(OperatorKind::log_sum_exp(1.0).apply(x) == doctest::Approx(std::log(1.0 + std::exp(1.0))));
    const auto d = OperatorKind::dbs(BetaSchedule::power(1, 2));
    CHECK(d.apply(x, 3) == doctest::Approx(boltz(x, 9.0)).epsilon(1e-15));
    CHECK(d.describe() == "dbs_p2");
    CHECK(OperatorKind::max().describe() == "max");
    CHECK(OperatorKind::boltzmann(10).describe() == "boltz_b10");
    CHECK(OperatorKind::log_sum_exp(100).describe() == "lse_b100");
    CHECK_THROWS_AS(OperatorKind::log_sum_exp(0.0), std::invalid_argument);
}

TEST_CASE("sandwich and entropy identity on random vectors") {
    Rng rng = make_rng(11);
    std::uniform_int_distribution<std::size_t> len(1, 12);
    const double betas[] = {1e-3, 0.1, 1, 10, 100, 1e4};
    int violations = 0;
    double worst_identity = 0;
    for (int k = 0; k < 10000; ++k) {
        auto x = random_vector(rng, len(rng), -5, 5);
        const double m = max_op(x);
        for (double bt : {0.0, 0.1, 1.0, 10.0, 100.0, 1e9})
            if (!(boltz(x, bt) <= m)) ++violations;
        for (double b : betas) {
            if (!(m <= log_sum_exp(x, b))) ++violations;
            const double gap = entropy_gap(x, b);
            worst_identity = std::max(worst_identity, std::abs(log_sum_exp(x, b) - boltz(x, b) - gap));
            if (!(gap <= std::log(double(x.size())) / b + 1e-15)) ++violations;
        }
    }
    CHECK(violations == 0);
    CHECK(worst_identity <= 1e-10);
}

TEST_CASE("boltz is monotone in beta and bounded by min and max") {
    Rng rng = make_rng(12);
    for (int k = 0; k < 2000; ++k) {
        auto x = random_vector(rng, 5, -5, 5);
        double prev = -std::numeric_limits<double>::infinity();
        for (double b : {0.0, 0.1, 1.0, 10.0, 100.0}) {
            const double v = boltz(x, b);
            CHECK(v >= prev - 1e-12);
            CHECK(dboltz_dbeta(x, b) >= 0.0);
            CHECK(v >= *std::min_element(x.begin(), x.end()) - 1e-12);
            prev = v;
        }
    }
}

TEST_CASE("shift covariance") {
    Rng rng = make_rng(13);
    std::uniform_real_distribution<double> shift(-50, 50);
    for (int k = 0; k < 2000; ++k) {
        auto x = random_vector(rng, 6, -5, 5);
        const double s = shift(rng);
        auto y = x;
        for (auto& v : y) v += s;
        for (double b : {0.0, 0.5, 2.0, 30.0}) CHECK(std::abs(boltz(y, b) - boltz(x, b) - s) <= 1e-10);
    }
}

TEST_CASE("limits") {
    const std::vector<double> unique{0.3, 1.7, -2.0, 1.2};
    CHECK(std::abs(boltz(unique, 1e4) - 1.7) <= 1e-12);
    const std::vector<double> tied{1.0, 3.0, 3.0, -1.0};
    CHECK(std::abs(boltz(tied, 1e6) - 3.0) <= 1e-12);
    auto w = boltz_weights(tied, 1e6);
    CHECK(w[1] == doctest::Approx(0.5));
    CHECK(w[2] == doctest::Approx(0.5));
}

TEST_CASE("finite-difference agreement of the derivatives") {
    Rng rng = make_rng(14);
    std::uniform_real_distribution<double> beta_dist(0.0, 3.0);
    double worst_beta = 0, worst_x = 0;
    for (int k = 0; k < 500; ++k) {
        auto x = random_vector(rng, 4, -5, 5);
        const double b = beta_dist(rng);
        const double h = 1e-5;
        const double fd = (boltz(x, b + h) - boltz(x, b - h)) / (2 * h);
        const double an = dboltz_dbeta(x, b);
        worst_beta = std::max(worst_beta, rel_err(fd, an));
        const auto g = grad_boltz(x, b);
        for (std::size_t j = 0; j < x.size(); ++j) {
            auto xp = x, xm = x;
            xp[j] += h;
            xm[j] -= h;
            const double fdx = (boltz(xp, b) - boltz(xm, b)) / (2 * h);
            worst_x = std::max(worst_x, rel_err(fdx, g[j]));
        }
        double total = 0;
        for (double v : g) total += v;
        CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    }
    CHECK(worst_beta <= 1e-5);
    CHECK(worst_x <= 1e-5);
}

TEST_CASE("numerical robustness for huge beta and wide ranges") {
    Rng rng = make_rng(15);
    for (int k = 0; k < 1000; ++k) {
        auto x = random_vector(rng, 8, -1000, 1000);
        for (double b : {1e-3, 1.0, 1e3, 1e6, 1e9, 1e12}) {
            CHECK(std::isfinite(boltz(x, b)));
            CHECK(std::isfinite(log_sum_exp(x, b)));
            CHECK(std::isfinite(entropy_gap(x, b)));
            CHECK(std::isfinite(dboltz_dbeta(x, b)));
            for (double g : grad_boltz(x, b)) CHECK(std::isfinite(g));
            CHECK(boltz(x, b) <= max_op(x));
            CHECK(max_op(x) <= log_sum_exp(x, b));
        }
    }
}
