// Spectral energy densities, their correlation functions, the Lorentzian
// response kernel and field-energy bookkeeping.
//
// Reduced units: A = 1 sets the time scale and the stimulated coefficient is
// B = 1/2, so a spectral density W(omega) is numerically the pump rate
// 2 B W(omega) it produces.
#pragma once

#include <complex>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace blochere {

using cplx = std::complex<double>;

/// B in reduced units.
inline constexpr double kReducedB = 0.5;

struct TablePoint {
    double omega;
    double w;
};

struct SpectrumSpec {
    enum class Shape { Lorentzian, Tabulated };

    Shape shape = Shape::Lorentzian;
    double omega0 = 0.0;
    double gamma = 1.0;   ///< half width at half maximum
    double w_peak = 0.0;  ///< W(omega0)
    std::vector<TablePoint> table;  ///< sorted by omega, Tabulated only

    static SpectrumSpec lorentzian(double omega0, double gamma, double w_peak);
    static SpectrumSpec tabulated(std::vector<TablePoint> table);

    /// Throws SpectrumError when the invariants do not hold.
    void validate() const;

    bool is_lorentzian() const { return shape == Shape::Lorentzian; }

    /// Centre of the spectrum: omega0, or the table's peak location.
    double center() const;

    /// Frequency scale used for grid sizing: gamma, or the table's HWHM.
    double width() const;
};

/// W(omega). Linear interpolation inside a table, zero outside it.
double eval_W(const SpectrumSpec& spec, double omega);

/// Exact integral of W over [lo, hi].
double integrate_W(const SpectrumSpec& spec, double lo, double hi);

/// Total integral of W over all frequencies.
double total_W(const SpectrumSpec& spec);

/// Two-column "omega W" text with '#' comments.
SpectrumSpec read_tabulated(std::istream& in);
SpectrumSpec read_tabulated_file(const std::string& path);

/// C(s) = amplitude * exp(-(gamma + i delta) s) for s >= 0.
struct LorentzianClosedForm {
    double gamma;
    double delta;
    double amplitude;

    cplx operator()(double s) const;
};

struct CorrelationFn {
    std::vector<double> lags;
    std::vector<cplx> values;
    std::optional<LorentzianClosedForm> closed_form;
};

/// Closed form of <Omega*(t) Omega(t - s)> for a Lorentzian spectrum.
LorentzianClosedForm lorentzian_closed_form(const SpectrumSpec& spec, double omega21);

/// C(s) = (B / 2 pi) * integral dbeta W(omega21 + beta) e^{i beta s} for any
/// real s. Tabulated spectra use trapezoid quadrature refined by doubling
/// until successive results agree to 0.1%; throws SpectrumError when that
/// takes more than 2^22 integrand evaluations.
cplx correlation_at(const SpectrumSpec& spec, double omega21, double s);

/// correlation_at over a list of nonnegative lags.
CorrelationFn analytic_correlation(const SpectrumSpec& spec, double omega21,
                                   std::span<const double> lags);

/// Re[(1 - e^{-(A/2 - i beta) t}) / (A/2 - i beta)].
double kernel_K(double beta, double A, double t);

/// Long-time limit of kernel_K: (A/2) / ((A/2)^2 + beta^2).
double kernel_K_limit(double beta, double A);

enum class BetaGrid { Uniform, Jittered };

/// Detuning interval beta = omega - omega21 covered by a mode comb.
struct BetaSpan {
    double lo;
    double hi;
};

/// Span of +-half_width_widths spectral widths about the spectrum centre, or
/// the table range for tabulated spectra.
BetaSpan default_span(const SpectrumSpec& spec, double omega21, double half_width_widths = 200.0);

struct ModeWeight {
    double beta;    ///< omega_j - omega21
    double weight;  ///< |a_j|^2
};

struct ModeAmplitudes {
    std::vector<ModeWeight> modes;
    double truncated_fraction = 0.0;  ///< spectral weight outside the span
    std::optional<std::string> warning;
};

/// Discretizes C(s) into |a_j|^2 = (B/2pi) W(omega21 + beta_j) dbeta. The
/// jittered grid draws each beta_j uniformly inside its cell.
ModeAmplitudes mode_amplitudes(const SpectrumSpec& spec, double omega21, std::size_t n_modes,
                               BetaSpan span, BetaGrid grid = BetaGrid::Uniform,
                               std::uint64_t seed = 0);

/// One spectral sample of the parallel field component.
struct FieldSample {
    double omega;
    double e_par_sq;  ///< |E_par(omega)|^2
};

/// W(omega) = 8 (2pi)^4 omega^2 |E_par|^2 / volume_factor, volume_factor = V c^3 / eps0.
double spectral_energy_density(double omega, double e_par_sq, double volume_factor);

/// Inverse of spectral_energy_density.
double field_power_for_density(double omega, double w, double volume_factor);

/// eta = integral W(omega) d omega by the trapezoid rule over the samples.
double energy_density(std::span<const FieldSample> samples, double volume_factor);

}  // namespace blochere
