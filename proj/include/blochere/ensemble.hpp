// Ensembles of independent atom-field realizations and their statistics.
#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "blochere/bloch.hpp"
#include "blochere/field.hpp"
#include "blochere/spectrum.hpp"

namespace blochere {

struct DriveConfig {
    FieldBackend backend = FieldBackend::ColoredNoise;
    ModeSumOptions modes;
};

struct EnsembleConfig {
    SpectrumSpec spectrum = SpectrumSpec::lorentzian(0.0, 1.0, 0.0);
    double omega21 = 0.0;
    DriveConfig drive;
    BlochParams bloch;
    BlochForm form = BlochForm::Population;
    AtomState initial = AtomState::ground();
    std::size_t n_atoms = 1000;
    double t_end = 10.0;
    double output_dt = 0.1;
    double dt = 0.0;  ///< 0 picks the largest rule-compliant step dividing output_dt
    std::uint64_t seed = 1;
    unsigned workers = 1;
};

/// Integrator step for a configuration: the explicit dt when set, otherwise
/// output_dt / ceil(output_dt / limit) with the stability-rule limit.
double resolve_step(const EnsembleConfig& config);

/// Builds the drive seen by each atom of an ensemble. The mode comb (and the
/// shared Explicit3D realization) is built once.
class DriveFactory {
public:
    DriveFactory(const EnsembleConfig& config, double dt);
    RabiProcess make(std::uint64_t atom) const;
    RabiProcess::Rates nominal_rates() const;

private:
    SpectrumSpec spectrum_;
    double omega21_;
    FieldBackend backend_;
    std::uint64_t seed_;
    double dt_;
    std::optional<ModeSumField> field_;
};

struct EnsembleTrace {
    std::vector<double> time_grid;
    std::vector<double> n_bar;
    std::vector<double> std_error;
    std::size_t n_atoms = 0;
    std::uint64_t seed = 0;
    double dt = 0.0;
};

/// Mean inversion and its standard error over n_atoms independent atoms.
EnsembleTrace run_ensemble(const EnsembleConfig& config);

struct CorrelationEstimate {
    double t_ref = 0.0;
    std::vector<double> lags;
    std::vector<cplx> C_hat;   ///< <Omega*(t_ref) Omega(t_ref - lag)>
    std::vector<cplx> Cn_hat;  ///< <Omega*(t_ref) Omega(t_ref - lag) n(t_ref - lag)>
    std::vector<double> std_error;     ///< of C_hat, |(se_re, se_im)|
    std::vector<double> std_error_Cn;  ///< of Cn_hat
    std::size_t n_atoms = 0;
    std::size_t n_batches = 0;
};

struct CorrelationRequest {
    double t_ref = 5.0;
    std::vector<double> lags;  ///< multiples of the step, each <= t_ref
    std::size_t n_batches = 10;
    std::optional<double> stderr_cap;  ///< fail when any stderr exceeds this
};

/// Monte Carlo estimates of C and C_n from full atom-field simulations,
/// standard errors by batch means over atom-index batches.
CorrelationEstimate estimate_correlations(const EnsembleConfig& config, const CorrelationRequest& request);

/// Field-only estimate of <Omega*(t_ref) Omega(t_ref - lag)> over n_atoms
/// realizations on lags k * lag_step, k < n_lags. Standard errors are the
/// per-realization standard error of the mean.
CorrelationEstimate estimate_field_correlation(const EnsembleConfig& config, double t_ref,
                                               double lag_step, std::size_t n_lags);

struct DecorrelationProfile {
    std::vector<double> lags;
    std::vector<cplx> residual;  ///< (C_n - C n_bar(t_ref - lag)) / C(0)
    double max_abs = 0.0;
};

/// Residual of the factorization C_n(t, tau) ~ C(t, tau) n_bar(tau).
DecorrelationProfile decorrelation_residual(const CorrelationEstimate& est, const EnsembleTrace& trace);

/// Right-hand side of the ensemble inversion equation rebuilt from the
/// measured C_n: -A (n_bar + 1) - 4 Re Integral_0^t_ref C_n(lag) e^{-A lag / 2} dlag.
/// The lags must be a uniform grid from 0 to t_ref.
double ensemble_rate_from_correlation(const CorrelationEstimate& est, double n_bar, double A);

}  // namespace blochere
