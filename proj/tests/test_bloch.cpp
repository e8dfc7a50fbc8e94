#include <doctest.h>

#include <cmath>
#include <numbers>

#include "blochere/bloch.hpp"
#include "blochere/errors.hpp"

using namespace blochere;

namespace {

RabiProcess random_drive(std::uint64_t seed, std::size_t n_modes, double span, double strength) {
    const auto spec = SpectrumSpec::lorentzian(0.3, 1.0, strength);
    ModeSumOptions opt;
    opt.n_modes = n_modes;
    opt.span = BetaSpan{-span, span};
    return synth_mode_sum(spec, 0.0, opt, {seed, 0, StreamTag::FieldPhases});
}

RabiProcess constant_drive(double a) { return RabiProcess::from_modes({{0.0, a, 0.0}}); }

}  // namespace

TEST_CASE("free decay") {
    auto none = RabiProcess::from_modes({});
    SUBCASE("population") {
        const auto tr = integrate({1.0, 0.0, {0.0, 0.0}, 0.0}, none, 5.0, 0.01, {}, {BlochForm::Population, 10});
        for (std::size_t i = 0; i < tr.t.size(); ++i)
            CHECK(0.5 * (tr.n[i] + 1.0) == doctest::Approx(std::exp(-tr.t[i])).epsilon(1e-9));
    }
    SUBCASE("coherence decays at A/2") {
        const cplx c{0.3, -0.2};
        const auto tr = integrate(AtomState::from_inversion(0.0, c), none, 4.0, 0.01, {}, {BlochForm::Population, 10});
        for (std::size_t i = 0; i < tr.t.size(); ++i) {
            CHECK(tr.rho21[i].real() == doctest::Approx(c.real() * std::exp(-0.5 * tr.t[i])).epsilon(1e-9));
            CHECK(tr.rho21[i].imag() == doctest::Approx(c.imag() * std::exp(-0.5 * tr.t[i])).epsilon(1e-9));
        }
    }
    SUBCASE("inversion form from n = 0") {
        const auto tr = integrate(AtomState::from_inversion(0.0), none, 5.0, 0.01, {}, {BlochForm::Inversion, 10});
        for (std::size_t i = 0; i < tr.t.size(); ++i)
            CHECK(tr.n[i] == doctest::Approx(std::exp(-tr.t[i]) - 1.0).epsilon(1e-9));
    }
    SUBCASE("ground state is a fixed point") {
        const auto tr = integrate(AtomState::ground(), none, 3.0, 0.01, {}, {BlochForm::Inversion, 1});
        for (double n : tr.n) CHECK(n == -1.0);
    }
}

TEST_CASE("Rabi oscillation without damping") {
    const double a = 0.7;
    auto drive = constant_drive(a);
    BlochParams p;
    p.A = 0.0;
    const auto tr = integrate(AtomState::ground(), drive, 10.0, 0.001, p, {BlochForm::Inversion, 50});
    for (std::size_t i = 0; i < tr.t.size(); ++i) CHECK(tr.n[i] == doctest::Approx(-std::cos(2.0 * a * tr.t[i])).epsilon(1e-8));
}

TEST_CASE("steady state under a weak resonant mode") {
    const double a = 0.1;
    auto drive = constant_drive(a);
    const auto tr = integrate(AtomState::ground(), drive, 40.0, 0.01);
    CHECK(tr.n.back() == doctest::Approx(-0.9259259259259258).epsilon(1e-7));
    CHECK(tr.n.back() == doctest::Approx(-1.0 / (1.0 + 8.0 * a * a)).epsilon(1e-7));
}

TEST_CASE("strong resonant drive oscillates near twice the Rabi amplitude") {
    const double a = 10.0;
    auto drive = constant_drive(a);
    const double dt = 0.001;
    const auto tr = integrate(AtomState::ground(), drive, 10.0, dt);
    // DFT peak of the mean-removed trace over a frequency grid
    double mean = 0.0;
    for (double n : tr.n) mean += n;
    mean /= static_cast<double>(tr.n.size());
    double best_w = 0.0, best_p = 0.0;
    for (double w = 1.0; w < 40.0; w += 0.01) {
        cplx s{};
        for (std::size_t i = 0; i < tr.n.size(); ++i) s += (tr.n[i] - mean) * std::polar(1.0, -w * tr.t[i]);
        if (std::norm(s) > best_p) {
            best_p = std::norm(s);
            best_w = w;
        }
    }
    CHECK(best_w == doctest::Approx(2.0 * a).epsilon(0.02));
}

TEST_CASE("step-size rule") {
    auto drive = random_drive(1, 32, 10.0, 1.0);
    CHECK(max_stable_step(drive.rates(), 1.0) == doctest::Approx(0.05 / drive.rates().beta_max));
    CHECK_THROWS_AS(step_population_form(AtomState::ground(), drive, 0.05), StepSizeError);
    CHECK_THROWS_AS(step_inversion_form({}, drive, 0.05), StepSizeError);
    BlochParams loose;
    loose.enforce_step_rule = false;
    CHECK_NOTHROW(step_population_form(AtomState::ground(), drive, 0.05, loose));
    auto none = RabiProcess::from_modes({});
    CHECK_THROWS_AS(integrate(AtomState::ground(), none, 1.0, 0.3), BlochError);
}

TEST_CASE("invariants along random drives") {
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
        auto d1 = random_drive(seed, 64, 20.0, 4.0);
        auto d2 = random_drive(seed, 64, 20.0, 4.0);
        const double dt = 0.002;
        const auto pop = integrate(AtomState::ground(), d1, 10.0, dt, {}, {BlochForm::Population, 4});
        const auto inv = integrate(AtomState::ground(), d2, 10.0, dt, {}, {BlochForm::Inversion, 4});
        CHECK(pop.max_trace_error <= 1e-9);
        CHECK(pop.max_positivity_excess <= 1e-7);
        CHECK(inv.max_positivity_excess <= 1e-7);
        CHECK(pop.max_inversion_excess <= 1e-7);
        double worst = 0.0;
        for (std::size_t i = 0; i < pop.n.size(); ++i) worst = std::max(worst, std::abs(pop.n[i] - inv.n[i]));
        CHECK(worst <= 1e-8);
        CHECK(richardson_error(AtomState::ground(), d1, 2.0, dt) < 1e-7);
    }
}

TEST_CASE("invariant breach aborts") {
    auto drive = random_drive(2, 16, 5.0, 1.0);
    AtomState bad{1.2, -0.2, {0.0, 0.0}, 0.0};
    CHECK_THROWS_AS(integrate(bad, drive, 1.0, 0.01), InvariantError);
}

TEST_CASE("memory-kernel right-hand side") {
    auto none = RabiProcess::from_modes({});
    InversionHistory h;
    h.append(0.0, -0.4, -0.6);
    auto drive = random_drive(4, 16, 5.0, 2.0);
    CHECK(memory_kernel_rhs(h, drive, 0.0, 1.0) == doctest::Approx(-0.6));
    CHECK_THROWS_AS(memory_kernel_rhs(h, drive, 0.5, 1.0), HistoryError);
    CHECK_THROWS_AS(memory_kernel_rhs(InversionHistory{}, drive, 0.0, 1.0), HistoryError);

    SUBCASE("dark drive is pure decay") {
        const auto tr = integrate_memory_kernel(0.0, none, 3.0, 0.01, 1.0, 10);
        for (std::size_t i = 0; i < tr.t.size(); ++i)
            CHECK(tr.n[i] == doctest::Approx(std::exp(-tr.t[i]) - 1.0).epsilon(1e-9));
    }
    SUBCASE("matches the two-variable integration up to t = 5") {
        for (std::uint64_t seed : {4u, 9u}) {
            auto d1 = random_drive(seed, 16, 5.0, 2.0);
            auto d2 = random_drive(seed, 16, 5.0, 2.0);
            const double dt = 0.005;
            const auto direct = integrate(AtomState::ground(), d1, 5.0, dt, {}, {BlochForm::Inversion, 1});
            const auto kernel = integrate_memory_kernel(-1.0, d2, 5.0, dt, 1.0, 1);
            REQUIRE(direct.n.size() == kernel.n.size());
            double worst = 0.0;
            for (std::size_t i = 0; i < direct.n.size(); ++i) worst = std::max(worst, std::abs(direct.n[i] - kernel.n[i]));
            CHECK(worst <= 1e-6);
            CHECK(std::abs(direct.n.back() + 1.0) > 1e-2);  // the drive did something
        }
    }
}
