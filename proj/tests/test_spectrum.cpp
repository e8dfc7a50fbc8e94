#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "blochere/errors.hpp"
#include "blochere/spectrum.hpp"

using namespace blochere;
using std::numbers::pi;

namespace {

SpectrumSpec sampled_lorentzian(double gamma, double half_span_widths, std::size_t points) {
    std::vector<TablePoint> table;
    const double lo = -half_span_widths * gamma;
    const double h = 2.0 * half_span_widths * gamma / static_cast<double>(points - 1);
    for (std::size_t i = 0; i < points; ++i) {
        const double w = lo + h * static_cast<double>(i);
        table.push_back({w, gamma * gamma / (gamma * gamma + w * w)});
    }
    return SpectrumSpec::tabulated(table);
}

}  // namespace

TEST_CASE("eval_W on a Lorentzian") {
    const auto spec = SpectrumSpec::lorentzian(3.0, 1.5, 0.8);
    CHECK(eval_W(spec, 3.0) == 0.8);
    CHECK(eval_W(spec, 4.5) == doctest::Approx(0.4));
    CHECK(eval_W(SpectrumSpec::lorentzian(0.0, 2.0, 1.0), 2.0) == doctest::Approx(0.5));
    for (double w = -20.0; w <= 20.0; w += 0.37) {
        CHECK(eval_W(spec, w) >= 0.0);
        CHECK(eval_W(spec, w) <= eval_W(spec, 3.0));
    }
}

TEST_CASE("tabulated spectra interpolate linearly and vanish outside") {
    const auto spec = SpectrumSpec::tabulated({{0.0, 0.0}, {1.0, 2.0}, {3.0, 0.0}});
    CHECK(eval_W(spec, 0.5) == doctest::Approx(1.0));
    CHECK(eval_W(spec, 2.0) == doctest::Approx(1.0));
    CHECK(eval_W(spec, -0.1) == 0.0);
    CHECK(eval_W(spec, 3.1) == 0.0);
    CHECK(total_W(spec) == doctest::Approx(3.0));
    CHECK(integrate_W(spec, 0.5, 2.0) == doctest::Approx(0.75 + 1.5));

    CHECK_THROWS_AS(SpectrumSpec::tabulated({{0.0, 1.0}, {1.0, -1.0}}), SpectrumError);
    CHECK_THROWS_AS(SpectrumSpec::tabulated({{0.0, 1.0}, {0.0, 2.0}, {1.0, 1.0}}), SpectrumError);
    CHECK_THROWS_AS(SpectrumSpec::lorentzian(0.0, 0.0, 1.0), SpectrumError);
}

TEST_CASE("tabulated reader skips comments") {
    std::istringstream in("# omega W\n-1 0.5\n\n0 1 # peak\n1 0.5\n");
    const auto spec = read_tabulated(in);
    REQUIRE(spec.table.size() == 3);
    CHECK(spec.center() == 0.0);
    CHECK(eval_W(spec, 0.5) == doctest::Approx(0.75));
    std::istringstream bad("0 1\nabc\n");
    CHECK_THROWS_AS(read_tabulated(bad), SpectrumError);
}

TEST_CASE("Lorentzian correlation closed form") {
    const double gamma = 1.3, R0 = 0.2;
    const auto resonant = SpectrumSpec::lorentzian(0.0, gamma, R0);
    CHECK(correlation_at(resonant, 0.0, 0.0).real() == doctest::Approx(gamma * R0 / 4.0));
    CHECK(correlation_at(resonant, 0.0, 0.0).imag() == 0.0);
    for (double s : {0.1, 0.7, 2.0}) CHECK(correlation_at(resonant, 0.0, s).imag() == 0.0);

    const auto detuned = SpectrumSpec::lorentzian(-2.0, gamma, R0);  // delta = 2
    const std::vector<double> lags{0.0, 0.25, 0.5, 1.0, 2.5};
    const auto c = analytic_correlation(detuned, 0.0, lags);
    REQUIRE(c.closed_form);
    for (std::size_t k = 0; k < lags.size(); ++k) {
        CHECK(std::abs(c.values[k]) == doctest::Approx(gamma * R0 / 4.0 * std::exp(-gamma * lags[k])));
        if (lags[k] > 0.0 && lags[k] < 1.5)
            CHECK(std::arg(c.values[k]) == doctest::Approx(-2.0 * lags[k]));
        const cplx back = correlation_at(detuned, 0.0, -lags[k]);
        CHECK(back.real() == doctest::Approx(c.values[k].real()));
        CHECK(back.imag() == doctest::Approx(-c.values[k].imag()));
    }
    CHECK_THROWS_AS(analytic_correlation(detuned, 0.0, std::vector<double>{-1.0}), SpectrumError);
}

TEST_CASE("tabulated correlation against the closed form") {
    const double gamma = 1.0;
    const auto exact = SpectrumSpec::lorentzian(0.0, gamma, 1.0);

    SUBCASE("span of 20 widths loses the Lorentzian tail at zero lag") {
        const auto table = sampled_lorentzian(gamma, 20.0, 4001);
        const double c0 = correlation_at(exact, 0.0, 0.0).real();
        const double shortfall = 1.0 - correlation_at(table, 0.0, 0.0).real() / c0;
        // weight outside +-20 gamma: 1 - (2/pi) atan(20)
        CHECK(shortfall == doctest::Approx(0.0318045).epsilon(1e-3));
        for (double s : {0.5, 1.0, 2.0, 3.0}) {
            const cplx want = correlation_at(exact, 0.0, s);
            CHECK(std::abs(correlation_at(table, 0.0, s) - want) / std::abs(want) <= 0.01);
        }
    }
    SUBCASE("span of 200 widths is within 1% up to three correlation times") {
        const auto table = sampled_lorentzian(gamma, 200.0, 8001);
        for (double s : {0.0, 0.5, 1.0, 2.0, 3.0}) {
            const cplx want = correlation_at(exact, 0.0, s);
            CHECK(std::abs(correlation_at(table, 0.0, s) - want) / std::abs(want) <= 0.01);
        }
        const cplx fwd = correlation_at(table, 0.0, 0.8);
        const cplx back = correlation_at(table, 0.0, -0.8);
        CHECK(back.real() == doctest::Approx(fwd.real()));
        CHECK(back.imag() == doctest::Approx(-fwd.imag()));
    }
    SUBCASE("a lag far beyond the table resolution does not converge") {
        const auto table = SpectrumSpec::tabulated({{-1.0, 1.0}, {1.0, 1.0}});
        CHECK_THROWS_AS(correlation_at(table, 0.0, 1e7), SpectrumError);
    }
}

TEST_CASE("kernel_K") {
    CHECK(kernel_K(0.0, 1.0, 0.0) == 0.0);
    CHECK(kernel_K(0.0, 1.0, 200.0) == doctest::Approx(2.0));
    CHECK(kernel_K_limit(0.0, 1.0) == 2.0);
    double prev = 0.0;
    for (double t = 0.5; t < 30.0; t += 0.5) {
        const double k = kernel_K(0.0, 1.0, t);
        CHECK(k > prev);
        CHECK(k < 2.0);
        prev = k;
    }
    for (double b : {0.3, 1.7, 8.0})
        for (double t : {0.2, 3.0, 50.0}) CHECK(kernel_K(b, 1.0, t) == doctest::Approx(kernel_K(-b, 1.0, t)));

    // integral over [-200 A, 200 A] at A t = 50, midpoint rule
    const int n = 400000;
    const double h = 400.0 / n;
    double sum = 0.0;
    for (int i = 0; i < n; ++i) sum += kernel_K(-200.0 + (i + 0.5) * h, 1.0, 50.0) * h;
    const double tail = pi - 2.0 * std::atan(400.0);
    CHECK(std::abs(sum - pi) < 1e-2);
    CHECK(std::abs(sum + tail - pi) < 1e-4);
}

TEST_CASE("mode amplitudes") {
    const auto spec = SpectrumSpec::lorentzian(0.0, 1.0, 0.2);
    const double c0 = 0.2 / 4.0;

    SUBCASE("single mode") {
        const auto m = mode_amplitudes(spec, 0.0, 1, {-1.0, 3.0});
        REQUIRE(m.modes.size() == 1);
        CHECK(m.modes[0].beta == 1.0);
        CHECK(m.modes[0].weight == doctest::Approx(kReducedB / (2.0 * pi) * eval_W(spec, 1.0) * 4.0));
    }
    SUBCASE("20-width span truncates the tail and warns") {
        const auto m = mode_amplitudes(spec, 0.0, 512, {-20.0, 20.0});
        double sum = 0.0;
        for (const auto& w : m.modes) sum += w.weight;
        CHECK(sum / c0 - 1.0 == doctest::Approx(-0.0318045).epsilon(2e-3));
        CHECK(m.truncated_fraction == doctest::Approx(0.0318045).epsilon(1e-4));
        CHECK(m.warning.has_value());
    }
    SUBCASE("200-width span matches C(0) within 2%") {
        const auto m = mode_amplitudes(spec, 0.0, 4096, default_span(spec, 0.0));
        double sum = 0.0;
        for (const auto& w : m.modes) sum += w.weight;
        CHECK(std::abs(sum / c0 - 1.0) < 0.02);
        CHECK(sum / c0 - 1.0 == doctest::Approx(-0.00318307).epsilon(1e-3));
        CHECK_FALSE(m.warning.has_value());
        const double quad = kReducedB / (2.0 * pi) * integrate_W(spec, -200.0, 200.0);
        CHECK(sum == doctest::Approx(quad).epsilon(1e-4));
    }
    SUBCASE("dark field") {
        const auto m = mode_amplitudes(SpectrumSpec::lorentzian(0.0, 1.0, 0.0), 0.0, 64, {-5.0, 5.0});
        for (const auto& w : m.modes) CHECK(w.weight == 0.0);
    }
    SUBCASE("jittered grid keeps each mode in its cell") {
        const auto m = mode_amplitudes(spec, 0.0, 100, {-10.0, 10.0}, BetaGrid::Jittered, 5);
        for (std::size_t j = 0; j < m.modes.size(); ++j) {
            CHECK(m.modes[j].beta >= -10.0 + 0.2 * j);
            CHECK(m.modes[j].beta < -10.0 + 0.2 * (j + 1));
        }
    }
}

TEST_CASE("energy density bookkeeping") {
    CHECK(energy_density({}, 1.0) == 0.0);
    const double vf = 3.7;
    const double e2 = field_power_for_density(2.5, 1.0, vf);
    CHECK(spectral_energy_density(2.5, e2, vf) == doctest::Approx(1.0));

    // Lorentzian w_peak = 1, gamma = 1 integrates to pi
    std::vector<FieldSample> samples;
    const double L = 5000.0;
    const int n = 2000001;
    for (int i = 0; i < n; ++i) {
        const double x = -L + 2.0 * L * i / (n - 1);
        const double w = 1e4 + x;
        const double W = 1.0 / (1.0 + x * x);
        samples.push_back({w, field_power_for_density(w, W, vf)});
    }
    const double eta = energy_density(samples, vf);
    CHECK(eta == doctest::Approx(pi - 2.0 / L).epsilon(1e-6));
    CHECK(std::abs(eta - pi) < 1e-3);
}
