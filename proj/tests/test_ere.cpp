#include <doctest.h>

#include <cmath>
#include <numbers>

#include "blochere/ere.hpp"

using namespace blochere;

namespace {

std::vector<double> grid(double t_end, double dt) {
    std::vector<double> g;
    for (int i = 0; i * dt <= t_end + 1e-12; ++i) g.push_back(i * dt);
    return g;
}

}  // namespace

TEST_CASE("closed-form rate equation") {
    const auto g = grid(10.0, 0.01);
    const auto decay = solve_ere({1.0, 0.0, 0.0}, g);
    for (std::size_t i = 0; i < g.size(); ++i) CHECK(decay[i] == doctest::Approx(std::exp(-g[i]) - 1.0));

    CHECK(EREParams{1.0, 1.0, -1.0}.steady_state() == -0.5);
    CHECK(EREParams{1.0, 1e9, -1.0}.steady_state() > -1e-8);

    const EREParams p{1.0, 2.5, 0.3};
    const auto n = solve_ere(p, g);
    // monotone between n0 and the steady state
    for (std::size_t i = 1; i < n.size(); ++i) CHECK(n[i] <= n[i - 1]);
    CHECK(n.back() == doctest::Approx(p.steady_state()).epsilon(1e-9));

    CHECK_THROWS(EREParams{0.0, 1.0, -1.0}.validate());
    CHECK_THROWS(EREParams{1.0, -1.0, -1.0}.validate());
    CHECK_THROWS(EREParams{1.0, 1.0, 1.5}.validate());
}

TEST_CASE("finite differences of the closed form satisfy the rate equation to second order") {
    const EREParams p{1.0, 0.7, 0.2};
    double previous = 0.0;
    for (double h : {0.1, 0.05, 0.025}) {
        double worst = 0.0;
        for (double t = 0.5; t < 5.0; t += 0.25) {
            const std::vector<double> pts{t - h, t, t + h};
            const auto n = solve_ere(p, pts);
            const double fd = (n[2] - n[0]) / (2.0 * h);
            worst = std::max(worst, std::abs(fd - (-p.A * (n[1] + 1.0) - p.R * n[1])));
        }
        if (previous > 0.0) CHECK(previous / worst == doctest::Approx(4.0).epsilon(0.02));
        previous = worst;
    }
}

TEST_CASE("weak-field limit") {
    const auto g = grid(20.0, 0.1);
    const auto dark = solve_weak_field({1.0, 0.0, -1.0}, g);
    for (double v : dark) CHECK(v == -1.0);

    const auto weak = solve_weak_field({1.0, 0.3, -1.0}, g);
    CHECK(weak.back() == doctest::Approx(-1.0 + 0.3).epsilon(1e-8));

    // full solution at R = eps R1 agrees with the linearization to O(eps^2)
    const double eps = 1e-3, R1 = 2.0;
    const auto full = solve_ere({1.0, eps * R1, -1.0}, g);
    const auto lin = solve_weak_field({1.0, R1, -1.0}, g);
    double worst = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) worst = std::max(worst, std::abs(full[i] - (-1.0 + eps * (lin[i] + 1.0))));
    CHECK(worst < 10.0 * eps * eps);
    CHECK(worst > 0.1 * eps * eps);
}

TEST_CASE("numerical rate equation with a constant pump") {
    const auto g = grid(8.0, 0.5);
    const auto exact = solve_ere({1.0, 1.5, -1.0}, g);
    const auto num = solve_ere_numeric(1.0, [](double) { return 1.5; }, -1.0, g, 0.01);
    for (std::size_t i = 0; i < g.size(); ++i) CHECK(num[i] == doctest::Approx(exact[i]).epsilon(1e-9));
}

TEST_CASE("B coefficient and the A/B ratio") {
    SIConstants si;
    const double B = b_coefficient(si);
    CHECK(B == doctest::Approx(1.1832756097607433e20).epsilon(1e-12));
    SIConstants doubled = si;
    doubled.mu *= 2.0;
    CHECK(b_coefficient(doubled) / B == doctest::Approx(4.0));
    SIConstants third = si;
    third.mu /= std::sqrt(3.0);
    CHECK(B / b_coefficient(third) == doctest::Approx(3.0));

    const double implied = B * si.hbar * std::pow(si.omega21, 3) / (std::numbers::pi * std::numbers::pi * std::pow(si.c, 3));
    CHECK(ab_ratio_check(si, implied).deviation == doctest::Approx(0.0));
    CHECK(ab_ratio_check(si, 2.0 * implied).deviation == doctest::Approx(1.0));
    SIConstants fast = si;
    fast.omega21 *= 2.0;
    CHECK(ab_ratio_check(fast, implied).A_implied / implied == doctest::Approx(8.0));
}
