#include <doctest.h>

#include <cmath>
#include <string>

#include "blochere/ensemble.hpp"
#include "blochere/errors.hpp"

using namespace blochere;

namespace {

EnsembleConfig base(double gamma, double R0, std::size_t n_atoms, double t_end) {
    EnsembleConfig c;
    c.spectrum = SpectrumSpec::lorentzian(0.0, gamma, R0);
    c.n_atoms = n_atoms;
    c.t_end = t_end;
    c.output_dt = 0.1;
    c.seed = 3;
    return c;
}

}  // namespace

TEST_CASE("dark ensemble stays in the ground state") {
    const auto tr = run_ensemble(base(5.0, 0.0, 64, 2.0));
    REQUIRE(tr.time_grid.size() == 21);
    for (std::size_t i = 0; i < tr.n_bar.size(); ++i) {
        CHECK(tr.n_bar[i] == -1.0);
        CHECK(tr.std_error[i] == 0.0);
    }
}

TEST_CASE("results do not depend on the worker count") {
    for (auto backend : {FieldBackend::ColoredNoise, FieldBackend::ModeSum}) {
        auto c = base(2.0, 1.0, 150, 1.0);
        c.drive.backend = backend;
        c.drive.modes.n_modes = 64;
        c.drive.modes.span_widths = 10.0;
        c.workers = 1;
        const auto one = run_ensemble(c);
        c.workers = 3;
        const auto three = run_ensemble(c);
        CHECK(one.n_bar == three.n_bar);
        CHECK(one.std_error == three.std_error);
        for (std::size_t i = 0; i < one.n_bar.size(); ++i) {
            CHECK(one.n_bar[i] >= -1.0 - 3.0 * one.std_error[i]);
            CHECK(one.n_bar[i] <= 1.0 + 3.0 * one.std_error[i]);
        }
    }
}

TEST_CASE("standard error shrinks as 1/sqrt(n_atoms)") {
    auto c = base(5.0, 1.0, 400, 2.0);
    const auto small = run_ensemble(c);
    c.n_atoms = 800;
    const auto large = run_ensemble(c);
    const double ratio = small.std_error.back() / large.std_error.back();
    CHECK(ratio == doctest::Approx(std::sqrt(2.0)).epsilon(0.2));
}

TEST_CASE("integrator failures name the atom") {
    auto c = base(5.0, 1.0, 40, 1.0);
    c.dt = 0.1;  // violates the step rule
    try {
        run_ensemble(c);
        FAIL("expected an error");
    } catch (const EnsembleError& e) {
        CHECK(std::string(e.what()).find("atom 0") != std::string::npos);
    }
    CHECK_THROWS_AS(run_ensemble(base(5.0, 1.0, 1, 1.0)), EnsembleError);
}

TEST_CASE("correlation estimates") {
    SUBCASE("dark field") {
        const auto c = base(5.0, 0.0, 40, 1.0);
        CorrelationRequest req;
        req.t_ref = 1.0;
        req.lags = {0.0, 0.1, 0.2};
        const auto est = estimate_correlations(c, req);
        for (std::size_t k = 0; k < 3; ++k) {
            CHECK(est.C_hat[k] == cplx(0.0, 0.0));
            CHECK(est.Cn_hat[k] == cplx(0.0, 0.0));
        }
        const auto tr = run_ensemble(c);
        const auto d = decorrelation_residual(est, tr);
        CHECK(d.max_abs == 0.0);
    }
    SUBCASE("frozen inversion in a very weak field") {
        auto c = base(5.0, 1e-3, 2000, 2.0);
        CorrelationRequest req;
        req.t_ref = 2.0;
        req.lags = {0.0, 0.1, 0.3};
        const auto est = estimate_correlations(c, req);
        CHECK(est.C_hat[0].real() > 0.0);
        CHECK(std::abs(est.C_hat[0].imag()) < 1e-15);
        for (std::size_t k = 0; k < 3; ++k)
            CHECK(std::abs(est.Cn_hat[k] + est.C_hat[k]) < 0.01 * std::abs(est.C_hat[0]));
    }
    SUBCASE("stderr cap") {
        auto c = base(5.0, 1.0, 40, 1.0);
        CorrelationRequest req;
        req.t_ref = 1.0;
        req.lags = {0.0};
        req.stderr_cap = 1e-9;
        CHECK_THROWS_AS(estimate_correlations(c, req), EnsembleError);
    }
}

TEST_CASE("decorrelation residual: broadband versus narrowband strong drive") {
    auto broad = base(50.0, 0.5, 2000, 2.0);
    CorrelationRequest req;
    req.t_ref = 2.0;
    req.lags = {0.0, 0.01, 0.02, 0.04};
    const auto est_b = estimate_correlations(broad, req);
    const auto d_b = decorrelation_residual(est_b, run_ensemble([&] {
                                                auto c = broad;
                                                c.output_dt = 0.01;
                                                return c;
                                            }()));

    auto narrow = base(1.0, 10.0, 2000, 2.0);
    req.lags = {0.0, 0.2, 0.4, 0.8};
    const auto est_n = estimate_correlations(narrow, req);
    const auto d_n = decorrelation_residual(est_n, run_ensemble(narrow));
    MESSAGE("max |D| broadband " << d_b.max_abs << ", narrowband " << d_n.max_abs);
    CHECK(d_b.max_abs <= 0.1);
    CHECK(d_n.max_abs > 2.0 * d_b.max_abs);

    auto coarse = broad;
    coarse.output_dt = 0.5;
    CHECK_THROWS_AS(decorrelation_residual(est_b, run_ensemble(coarse)), EnsembleError);
}

TEST_CASE("ensemble rate rebuilt from C_n matches the measured slope") {
    auto c = base(5.0, 1.0, 1000, 2.0);
    c.output_dt = 0.01;
    c.dt = 0.001;
    CorrelationRequest req;
    req.t_ref = 1.0;
    for (int k = 0; k <= 100; ++k) req.lags.push_back(0.01 * k);
    const auto est = estimate_correlations(c, req);
    const auto tr = run_ensemble(c);
    // central difference at t_ref on the same atoms
    const std::size_t i = 100;
    const double slope = (tr.n_bar[i + 1] - tr.n_bar[i - 1]) / 0.02;
    const double rebuilt = ensemble_rate_from_correlation(est, tr.n_bar[i], 1.0);
    MESSAGE("slope " << slope << ", rebuilt " << rebuilt);
    CHECK(rebuilt == doctest::Approx(slope).epsilon(0.02).scale(1.0));
}
