// Single-atom optical Bloch equations under a stochastic Rabi drive.
#pragma once

#include <complex>
#include <optional>
#include <vector>

#include "blochere/field.hpp"

namespace blochere {

struct BlochParams {
    double A = 1.0;           ///< spontaneous emission rate
    double tolerance = 1e-7;  ///< invariant slack before a trajectory is aborted
    bool enforce_step_rule = true;
};

enum class BlochForm { Population, Inversion };

/// Density-matrix variables of one atom.
struct AtomState {
    double rho22 = 0.0;
    double rho11 = 1.0;
    cplx rho21{0.0, 0.0};
    double t = 0.0;

    double inversion() const { return rho22 - rho11; }

    static AtomState ground() { return {}; }
    static AtomState from_inversion(double n, cplx rho21 = {}, double t = 0.0) {
        return {0.5 * (1.0 + n), 0.5 * (1.0 - n), rho21, t};
    }
};

struct InversionState {
    double n = -1.0;
    cplx rho21{0.0, 0.0};
    double t = 0.0;
};

/// Largest step allowed by dt <= 0.05 / max(A, beta_max, Omega_max, gamma).
double max_stable_step(const RabiProcess::Rates& rates, double A);

/// One RK4 step of the (rho22, rho11, rho21) equations.
AtomState step_population_form(const AtomState& state, RabiProcess& drive, double dt,
                               const BlochParams& params = {});

/// One RK4 step of the (n, rho21) equations.
InversionState step_inversion_form(const InversionState& state, RabiProcess& drive, double dt,
                                   const BlochParams& params = {});

/// Per-atom trajectory sampled every `stride` steps, t = 0 included.
struct AtomTrace {
    std::vector<double> t;
    std::vector<double> n;
    std::vector<cplx> rho21;
    std::vector<cplx> omega;  ///< Omega at the sample times (held value for colored noise)
    double max_trace_error = 0.0;       ///< max |rho22 + rho11 - 1| (population form)
    double max_positivity_excess = 0.0; ///< max (|rho21|^2 - rho22 rho11)
    double max_inversion_excess = 0.0;  ///< max (|n| - 1)
};

struct IntegrateOptions {
    BlochForm form = BlochForm::Population;
    std::size_t stride = 1;
    bool record_drive = false;
};

/// Integrates to t_end on a fixed grid; t_end must be a whole number of steps.
/// Throws InvariantError when n leaves [-1, 1] or positivity fails by more
/// than params.tolerance.
AtomTrace integrate(const AtomState& initial, RabiProcess& drive, double t_end, double dt,
                    const BlochParams& params = {}, const IntegrateOptions& options = {});

/// Half-step Richardson estimate of the RK4 error in n over [0, t_end].
double richardson_error(const AtomState& initial, const RabiProcess& drive, double t_end, double dt,
                        const BlochParams& params = {});

/// Piecewise cubic Hermite history of a single atom's inversion.
class InversionHistory {
public:
    void append(double t, double n, double dn);
    void replace_last(double n, double dn);

    std::size_t size() const { return t_.size(); }
    double t_begin() const { return t_.front(); }
    double t_end() const { return t_.back(); }
    bool empty() const { return t_.empty(); }

    /// Interpolated n(tau) for tau inside the history.
    double value(double tau) const;

    /// Integral over [0, t] of f(tau) n(tau) by 3-point Gauss-Legendre per node interval.
    template <typename F>
    cplx integrate_weighted(double t, F&& f) const;

private:
    double interval_value(std::size_t i, double tau) const;

    std::vector<double> t_;
    std::vector<double> n_;
    std::vector<double> dn_;
};

/// dn/dt = -A(n + 1) - 4 Re Integral_0^t Omega*(t) Omega(tau) n(tau) e^{A(tau - t)/2} dtau,
/// with n(tau) from the history. `n_now` overrides n(t) in the local term.
double memory_kernel_rhs(const InversionHistory& history, const RabiProcess& drive, double t,
                         double A, std::optional<double> n_now = std::nullopt);

/// Trajectory of the integro-differential equation with rho21(0) = 0.
AtomTrace integrate_memory_kernel(double n0, const RabiProcess& drive, double t_end, double dt,
                                  double A, std::size_t stride = 1);

template <typename F>
cplx InversionHistory::integrate_weighted(double t, F&& f) const {
    static constexpr double kNodes[3] = {-0.7745966692414834, 0.0, 0.7745966692414834};
    static constexpr double kWeights[3] = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};
    cplx sum{0.0, 0.0};
    for (std::size_t i = 0; i + 1 < t_.size() && t_[i] < t; ++i) {
        const double a = t_[i];
        const double b = std::min(t_[i + 1], t);
        const double half = 0.5 * (b - a);
        const double mid = 0.5 * (a + b);
        for (int q = 0; q < 3; ++q) {
            const double tau = mid + half * kNodes[q];
            sum += half * kWeights[q] * f(tau) * interval_value(i, tau);
        }
    }
    return sum;
}

}  // namespace blochere
