// Einstein rate equation oracle: dn/dt = -A (n + 1) - R n, with R = 2 B W(omega21).
#pragma once

#include <functional>
#include <span>
#include <vector>

namespace blochere {

struct EREParams {
    double A = 1.0;
    double R = 1.0;   ///< pump rate 2 B W(omega21)
    double n0 = -1.0;

    void validate() const;
    double steady_state() const { return -A / (A + R); }
    double relaxation_rate() const { return A + R; }
};

/// n(t) = n_inf + (n0 - n_inf) e^{-(A + R) t}.
std::vector<double> solve_ere(const EREParams& params, std::span<const double> t_grid);

/// First-order weak-field trace: dn1/dt = -A (n1 + 1) + R1 with n1(0) = params.n0
/// and R1 = params.R the order-one pump. Relaxes to -1 + R1 / A.
std::vector<double> solve_weak_field(const EREParams& params, std::span<const double> t_grid);

/// RK4 solution for a time-dependent pump R(t); t_grid must be increasing.
std::vector<double> solve_ere_numeric(double A, const std::function<double(double)>& pump,
                                      double n0, std::span<const double> t_grid, double max_step);

/// SI inputs for the B coefficient. Defaults are CODATA 2018 values, a 1 D
/// dipole and the sodium D2 line.
struct SIConstants {
    double mu = 3.33564e-30;        ///< C m
    double hbar = 1.054571817e-34;  ///< J s
    double eps0 = 8.8541878128e-12; ///< F / m
    double c = 299792458.0;         ///< m / s
    double omega21 = 3.1970e15;     ///< rad / s

    void validate() const;
};

/// B = pi mu^2 / (3 hbar^2 eps0), in m^3 J^-1 s^-2: the stimulated rate per
/// unit spectral energy density per unit angular frequency.
double b_coefficient(const SIConstants& si);

struct ABRatioReport {
    double B;
    double A_implied;  ///< B hbar omega21^3 / (pi^2 c^3)
    double A_input;
    double deviation;  ///< |A_input - A_implied| / A_implied
};

ABRatioReport ab_ratio_check(const SIConstants& si, double A_input);

}  // namespace blochere
