#include "blochere/ere.hpp"

#include <cmath>
#include <numbers>

#include "blochere/errors.hpp"

namespace blochere {

namespace {

class EREError : public Error {
public:
    explicit EREError(const std::string& what) : Error("ere", what) {}
};

}  // namespace

void EREParams::validate() const {
    if (!(A > 0.0)) throw EREError("A must be positive");
    if (!(R >= 0.0)) throw EREError("R must be nonnegative");
    if (!(n0 >= -1.0 && n0 <= 1.0)) throw EREError("n0 must lie in [-1, 1]");
}

std::vector<double> solve_ere(const EREParams& params, std::span<const double> t_grid) {
    params.validate();
    const double n_inf = params.steady_state();
    const double rate = params.relaxation_rate();
    std::vector<double> out;
    out.reserve(t_grid.size());
    for (double t : t_grid) out.push_back(n_inf + (params.n0 - n_inf) * std::exp(-rate * t));
    return out;
}

std::vector<double> solve_weak_field(const EREParams& params, std::span<const double> t_grid) {
    params.validate();
    const double n_inf = -1.0 + params.R / params.A;
    std::vector<double> out;
    out.reserve(t_grid.size());
    for (double t : t_grid) out.push_back(n_inf + (params.n0 - n_inf) * std::exp(-params.A * t));
    return out;
}

std::vector<double> solve_ere_numeric(double A, const std::function<double(double)>& pump,
                                      double n0, std::span<const double> t_grid, double max_step) {
    if (!(A > 0.0)) throw EREError("A must be positive");
    if (!(max_step > 0.0)) throw EREError("max_step must be positive");
    auto rhs = [&](double t, double n) { return -A * (n + 1.0) - pump(t) * n; };
    std::vector<double> out;
    out.reserve(t_grid.size());
    double t = t_grid.empty() ? 0.0 : t_grid.front();
    double n = n0;
    for (double target : t_grid) {
        if (target < t) throw EREError("time grid must be nondecreasing");
        const auto substeps = static_cast<std::size_t>(std::ceil((target - t) / max_step));
        const double h = substeps ? (target - t) / static_cast<double>(substeps) : 0.0;
        for (std::size_t i = 0; i < substeps; ++i) {
            const double k1 = rhs(t, n);
            const double k2 = rhs(t + 0.5 * h, n + 0.5 * h * k1);
            const double k3 = rhs(t + 0.5 * h, n + 0.5 * h * k2);
            const double k4 = rhs(t + h, n + h * k3);
            n += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            t += h;
        }
        t = target;
        out.push_back(n);
    }
    return out;
}

void SIConstants::validate() const {
    if (!(mu > 0.0 && hbar > 0.0 && eps0 > 0.0 && c > 0.0 && omega21 > 0.0))
        throw EREError("SI constants must all be positive");
}

double b_coefficient(const SIConstants& si) {
    si.validate();
    return std::numbers::pi * si.mu * si.mu / (3.0 * si.hbar * si.hbar * si.eps0);
}

ABRatioReport ab_ratio_check(const SIConstants& si, double A_input) {
    const double B = b_coefficient(si);
    const double pi2 = std::numbers::pi * std::numbers::pi;
    const double A_implied = B * si.hbar * std::pow(si.omega21, 3) / (pi2 * std::pow(si.c, 3));
    return {B, A_implied, A_input, std::abs(A_input - A_implied) / A_implied};
}

}  // namespace blochere
