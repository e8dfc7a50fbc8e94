#include "blochere/bloch.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "blochere/errors.hpp"

namespace blochere {

namespace {

struct PopulationRate {
    double d22, d11;
    cplx d21;
};

PopulationRate population_rhs(double r22, double r11, cplx r21, cplx omega, double A) {
    const double exchange = 2.0 * (std::conj(omega) * r21).imag();
    return {-A * r22 + exchange, A * r22 - exchange,
            -0.5 * A * r21 - cplx{0.0, 1.0} * omega * (r22 - r11)};
}

struct InversionRate {
    double dn;
    cplx d21;
};

InversionRate inversion_rhs(double n, cplx r21, cplx omega, double A) {
    return {-A * (n + 1.0) + 4.0 * (std::conj(omega) * r21).imag(),
            -0.5 * A * r21 - cplx{0.0, 1.0} * omega * n};
}

void check_step(const RabiProcess& drive, double dt, const BlochParams& params) {
    if (!(dt > 0.0)) throw StepSizeError("step must be positive");
    if (!params.enforce_step_rule) return;
    const double limit = max_stable_step(drive.rates(), params.A);
    if (dt > limit * (1.0 + 1e-9)) {
        std::ostringstream msg;
        msg << "step " << dt << " exceeds the stability rule limit " << limit;
        throw StepSizeError(msg.str());
    }
}

std::size_t step_count(double t_end, double dt) {
    const double ratio = t_end / dt;
    const double rounded = std::round(ratio);
    if (std::abs(ratio - rounded) > 1e-9 * std::max(1.0, ratio))
        throw StepSizeError("t_end is not a whole number of steps");
    return static_cast<std::size_t>(rounded);
}

}  // namespace

double max_stable_step(const RabiProcess::Rates& rates, double A) {
    const double fastest = std::max({A, rates.beta_max, rates.omega_bound, rates.gamma});
    if (fastest <= 0.0) return std::numeric_limits<double>::infinity();
    return 0.05 / fastest;
}

AtomState step_population_form(const AtomState& s, RabiProcess& drive, double dt,
                               const BlochParams& params) {
    check_step(drive, dt, params);
    const auto omega = drive.stage_drive(s.t, dt);
    const double A = params.A;
    const double h = 0.5 * dt;

    const auto k1 = population_rhs(s.rho22, s.rho11, s.rho21, omega[0], A);
    const auto k2 = population_rhs(s.rho22 + h * k1.d22, s.rho11 + h * k1.d11, s.rho21 + h * k1.d21,
                                   omega[1], A);
    const auto k3 = population_rhs(s.rho22 + h * k2.d22, s.rho11 + h * k2.d11, s.rho21 + h * k2.d21,
                                   omega[1], A);
    const auto k4 = population_rhs(s.rho22 + dt * k3.d22, s.rho11 + dt * k3.d11,
                                   s.rho21 + dt * k3.d21, omega[2], A);
    const double w = dt / 6.0;
    return {s.rho22 + w * (k1.d22 + 2.0 * k2.d22 + 2.0 * k3.d22 + k4.d22),
            s.rho11 + w * (k1.d11 + 2.0 * k2.d11 + 2.0 * k3.d11 + k4.d11),
            s.rho21 + w * (k1.d21 + 2.0 * k2.d21 + 2.0 * k3.d21 + k4.d21), s.t + dt};
}

InversionState step_inversion_form(const InversionState& s, RabiProcess& drive, double dt,
                                   const BlochParams& params) {
    check_step(drive, dt, params);
    const auto omega = drive.stage_drive(s.t, dt);
    const double A = params.A;
    const double h = 0.5 * dt;

    const auto k1 = inversion_rhs(s.n, s.rho21, omega[0], A);
    const auto k2 = inversion_rhs(s.n + h * k1.dn, s.rho21 + h * k1.d21, omega[1], A);
    const auto k3 = inversion_rhs(s.n + h * k2.dn, s.rho21 + h * k2.d21, omega[1], A);
    const auto k4 = inversion_rhs(s.n + dt * k3.dn, s.rho21 + dt * k3.d21, omega[2], A);
    const double w = dt / 6.0;
    return {s.n + w * (k1.dn + 2.0 * k2.dn + 2.0 * k3.dn + k4.dn),
            s.rho21 + w * (k1.d21 + 2.0 * k2.d21 + 2.0 * k3.d21 + k4.d21), s.t + dt};
}

AtomTrace integrate(const AtomState& initial, RabiProcess& drive, double t_end, double dt,
                    const BlochParams& params, const IntegrateOptions& options) {
    if (std::abs(initial.rho22 + initial.rho11 - 1.0) > params.tolerance ||
        std::norm(initial.rho21) > initial.rho22 * initial.rho11 + params.tolerance ||
        initial.rho22 < -params.tolerance || initial.rho11 < -params.tolerance)
        throw InvariantError("initial state is not a valid density matrix");
    check_step(drive, dt, params);
    const std::size_t steps = step_count(t_end, dt);
    const std::size_t stride = std::max<std::size_t>(1, options.stride);

    AtomTrace trace;
    const std::size_t samples = steps / stride + 1;
    trace.t.reserve(samples);
    trace.n.reserve(samples);
    trace.rho21.reserve(samples);

    AtomState pop = initial;
    InversionState inv{initial.inversion(), initial.rho21, initial.t};
    const BlochParams unchecked{params.A, params.tolerance, false};

    auto record = [&](double t, double n, cplx r21) {
        trace.t.push_back(t);
        trace.n.push_back(n);
        trace.rho21.push_back(r21);
        if (options.record_drive) trace.omega.push_back(drive.sample(t));
    };
    auto audit = [&](std::size_t step, double n, double r22, double r11, cplx r21) {
        const double inv_excess = std::abs(n) - 1.0;
        const double pos_excess = std::norm(r21) - r22 * r11;
        trace.max_inversion_excess = std::max(trace.max_inversion_excess, inv_excess);
        trace.max_positivity_excess = std::max(trace.max_positivity_excess, pos_excess);
        if (inv_excess > params.tolerance || pos_excess > params.tolerance || !std::isfinite(n)) {
            std::ostringstream msg;
            msg << "invariant breach at step " << step << " (t=" << initial.t + step * dt
                << "): n=" << n << ", |rho21|^2-rho22*rho11=" << pos_excess;
            throw InvariantError(msg.str());
        }
    };

    record(initial.t, initial.inversion(), initial.rho21);
    for (std::size_t k = 1; k <= steps; ++k) {
        double n = 0.0;
        cplx r21;
        if (options.form == BlochForm::Population) {
            pop = step_population_form(pop, drive, dt, unchecked);
            pop.t = initial.t + static_cast<double>(k) * dt;
            trace.max_trace_error = std::max(trace.max_trace_error, std::abs(pop.rho22 + pop.rho11 - 1.0));
            n = pop.inversion();
            r21 = pop.rho21;
            audit(k, n, pop.rho22, pop.rho11, r21);
        } else {
            inv = step_inversion_form(inv, drive, dt, unchecked);
            inv.t = initial.t + static_cast<double>(k) * dt;
            n = inv.n;
            r21 = inv.rho21;
            audit(k, n, 0.5 * (1.0 + n), 0.5 * (1.0 - n), r21);
        }
        if (k % stride == 0) record(initial.t + static_cast<double>(k) * dt, n, r21);
    }
    return trace;
}

double richardson_error(const AtomState& initial, const RabiProcess& drive, double t_end, double dt,
                        const BlochParams& params) {
    RabiProcess coarse_drive = drive;
    RabiProcess fine_drive = drive;
    const auto coarse = integrate(initial, coarse_drive, t_end, dt, params, {BlochForm::Population, 1, false});
    const auto fine = integrate(initial, fine_drive, t_end, 0.5 * dt, params, {BlochForm::Population, 2, false});
    double worst = 0.0;
    for (std::size_t i = 0; i < coarse.n.size(); ++i)
        worst = std::max(worst, std::abs(coarse.n[i] - fine.n[i]));
    return worst / 15.0;
}

void InversionHistory::append(double t, double n, double dn) {
    if (!t_.empty() && !(t > t_.back())) throw HistoryError("bloch", "history times must increase");
    t_.push_back(t);
    n_.push_back(n);
    dn_.push_back(dn);
}

void InversionHistory::replace_last(double n, double dn) {
    n_.back() = n;
    dn_.back() = dn;
}

double InversionHistory::interval_value(std::size_t i, double tau) const {
    const double h = t_[i + 1] - t_[i];
    const double u = (tau - t_[i]) / h;
    const double u2 = u * u;
    const double u3 = u2 * u;
    return (2 * u3 - 3 * u2 + 1) * n_[i] + (u3 - 2 * u2 + u) * h * dn_[i] +
           (-2 * u3 + 3 * u2) * n_[i + 1] + (u3 - u2) * h * dn_[i + 1];
}

double InversionHistory::value(double tau) const {
    if (t_.empty() || tau < t_.front() - 1e-12 || tau > t_.back() + 1e-12)
        throw HistoryError("bloch", "inversion history does not cover t=" + std::to_string(tau));
    if (t_.size() == 1) return n_.front();
    auto upper = std::upper_bound(t_.begin(), t_.end(), tau);
    std::size_t i = upper == t_.begin() ? 0 : static_cast<std::size_t>(upper - t_.begin()) - 1;
    i = std::min(i, t_.size() - 2);
    return interval_value(i, tau);
}

double memory_kernel_rhs(const InversionHistory& history, const RabiProcess& drive, double t,
                         double A, std::optional<double> n_now) {
    if (history.empty() || history.t_begin() != 0.0 || t < 0.0 || t > history.t_end() + 1e-12)
        throw HistoryError("bloch", "insufficient inversion history for t=" + std::to_string(t));
    const double n = n_now.value_or(history.value(t));
    const cplx memory = history.integrate_weighted(
        t, [&](double tau) { return drive.evaluate(tau) * std::exp(0.5 * A * (tau - t)); });
    return -A * (n + 1.0) - 4.0 * (std::conj(drive.evaluate(t)) * memory).real();
}

AtomTrace integrate_memory_kernel(double n0, const RabiProcess& drive, double t_end, double dt,
                                  double A, std::size_t stride) {
    if (!drive.mode_sum()) throw BlochError("memory-kernel integration needs a mode-sum drive");
    const std::size_t steps = step_count(t_end, dt);
    stride = std::max<std::size_t>(1, stride);

    InversionHistory history;
    history.append(0.0, n0, -A * (n0 + 1.0));
    AtomTrace trace;
    trace.t.push_back(0.0);
    trace.n.push_back(n0);

    double n = n0;
    double prev_n = n0;
    double prev_dn = -A * (n0 + 1.0);
    double prev_prev_n = n0;
    double prev_prev_dn = prev_dn;
    for (std::size_t k = 0; k < steps; ++k) {
        const double t = static_cast<double>(k) * dt;
        // provisional node at t + dt, extrapolated from the last interval
        double guess_n = n + dt * prev_dn;
        double guess_dn = prev_dn;
        if (k > 0) {
            // Hermite cubic through (t-dt, t) evaluated at u = 2
            guess_n = 5.0 * prev_prev_n - 4.0 * prev_n + dt * (2.0 * prev_prev_dn + 4.0 * prev_dn);
            guess_dn = (12.0 * prev_prev_n - 12.0 * prev_n) / dt + 5.0 * prev_prev_dn + 8.0 * prev_dn;
        }
        history.append(t + dt, guess_n, guess_dn);

        const double k1 = memory_kernel_rhs(history, drive, t, A, n);
        const double k2 = memory_kernel_rhs(history, drive, t + 0.5 * dt, A, n + 0.5 * dt * k1);
        const double k3 = memory_kernel_rhs(history, drive, t + 0.5 * dt, A, n + 0.5 * dt * k2);
        const double k4 = memory_kernel_rhs(history, drive, t + dt, A, n + dt * k3);
        const double next = n + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);

        history.replace_last(next, k4);
        double dn_next = memory_kernel_rhs(history, drive, t + dt, A, next);
        history.replace_last(next, dn_next);
        dn_next = memory_kernel_rhs(history, drive, t + dt, A, next);
        history.replace_last(next, dn_next);

        prev_prev_n = n;
        prev_prev_dn = prev_dn;
        prev_n = next;
        prev_dn = dn_next;
        n = next;
        if ((k + 1) % stride == 0) {
            trace.t.push_back(t + dt);
            trace.n.push_back(n);
        }
    }
    return trace;
}

}  // namespace blochere
