// Closure-level memory equation for Lorentzian spectra, the S_p series
// magnitudes, the applicability ratio and Bloch-vs-rate-equation sweeps.
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "blochere/bloch.hpp"
#include "blochere/ensemble.hpp"

namespace blochere {

struct ValidityConfig {
    double gamma = 1.0;
    double delta = 0.0;  ///< omega21 - omega0
    double R0 = 0.0;     ///< peak pump rate 2 B W(omega0)
    int p_max = 4;
    double A = 1.0;

    void validate() const;
    /// z = A/2 + gamma + i delta, the decay rate of the memory kernel.
    cplx kernel_rate() const { return {0.5 * A + gamma, delta}; }
};

/// R = 2 B W(omega21) = R0 gamma^2 / (gamma^2 + delta^2).
double pump_rate(const ValidityConfig& config);

/// O(S_p) = gamma (2A + R)^p (gamma^2 + delta^2)^{-(p+1)/2} for p = 0..p_max.
std::vector<double> sp_magnitudes(const ValidityConfig& config);

/// r = R / sqrt(gamma^2 + delta^2).
double bound_ratio(const ValidityConfig& config);

enum class ValidityFlag { Green, Amber, Red };

/// Green for r <= 0.1, amber for r <= 0.5, red above.
ValidityFlag classify(double r);
const char* to_string(ValidityFlag flag);

/// A |dW/dbeta| / W at beta = 0, i.e. 2 A |delta| / (gamma^2 + delta^2).
double flatness(const ValidityConfig& config);
inline constexpr double kFlatnessLimit = 0.1;

/// dn/dt = -A (n + 1) - gamma R0 Re Integral_0^t n(tau) e^{-z (t - tau)} dtau,
/// with n from the history. Throws HistoryError when t lies outside it.
double memory_ode_rhs(const InversionHistory& history, const ValidityConfig& config, double t);

struct ClosureTrace {
    std::vector<double> t;
    std::vector<double> n;
    std::vector<cplx> J;  ///< Integral_0^t n(tau) e^{-z (t - tau)} dtau
};

/// Integrates the memory equation through its equivalent local system
/// dn/dt = -A (n + 1) - gamma R0 Re J, dJ/dt = n - z J with RK4.
/// Requires dt <= 0.05 / max(A, |z|) and t_end a whole number of steps.
ClosureTrace integrate_closure(const ValidityConfig& config, double n0, double t_end, double dt,
                               std::size_t stride = 1);

/// Integrates the memory equation itself: trapezoid steps on a Hermite
/// history, each right-hand side from memory_ode_rhs, corrected three times.
/// Cost grows as the square of the step count.
ClosureTrace integrate_memory_ode(const ValidityConfig& config, double n0, double t_end, double dt,
                                  std::size_t stride = 1);

/// Max over the closure trajectory of |Re J - Re sum_{q<=p} (-1)^q [n^(q)(t) - n^(q)(0) e^{-zt}] / z^{q+1}|
/// for p = 0..p_max, the remainder of the integration-by-parts series.
std::vector<double> series_remainder(const ValidityConfig& config, double n0, double t_end, double dt);

struct SweepPoint {
    double gamma = 1.0;
    double delta = 0.0;
    double R0 = 0.0;
};

struct SweepSettings {
    EnsembleConfig ensemble;  ///< spectrum, omega21 and seed are set per point
    double A = 1.0;
};

struct SweepRow {
    SweepPoint point;
    double R = 0.0;
    double r = 0.0;
    double eps_dev = 0.0;
    double std_error = 0.0;  ///< of n_bar at the time of the maximum
    double t_at_max = 0.0;
    double flatness = 0.0;
    bool flatness_flag = false;
    ValidityFlag flag = ValidityFlag::Green;
    std::uint64_t seed = 0;
    std::optional<std::string> error;
};

/// Seed of grid point i, derived from the run seed.
std::uint64_t sweep_point_seed(std::uint64_t run_seed, std::size_t index);

/// eps_dev = max |n_bar - n_ERE| over t in [3/gamma, t_end] for one ensemble.
void measure_deviation(const EnsembleTrace& trace, double gamma, double R, double A, double n0,
                       SweepRow& row);

/// Runs one ensemble per point and compares it with the rate equation.
/// Failures are recorded in the row and the sweep continues.
std::vector<SweepRow> sweep_validity(const std::vector<SweepPoint>& points, const SweepSettings& settings);

}  // namespace blochere
