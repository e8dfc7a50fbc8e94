#include "blochere/validity.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include <fmt/format.h>

#include "blochere/ere.hpp"
#include "blochere/errors.hpp"
#include "blochere/rng.hpp"

namespace blochere {

void ValidityConfig::validate() const {
    if (!(gamma > 0.0)) throw ValidityError(fmt::format("gamma must be > 0, got {}", gamma));
    if (!(A > 0.0)) throw ValidityError(fmt::format("A must be > 0, got {}", A));
    if (!(R0 >= 0.0)) throw ValidityError(fmt::format("R0 must be >= 0, got {}", R0));
    if (!std::isfinite(delta)) throw ValidityError("delta must be finite");
    if (p_max < 1) throw ValidityError(fmt::format("p_max must be >= 1, got {}", p_max));
}

double pump_rate(const ValidityConfig& config) {
    const double g2 = config.gamma * config.gamma;
    return config.R0 * g2 / (g2 + config.delta * config.delta);
}

std::vector<double> sp_magnitudes(const ValidityConfig& config) {
    config.validate();
    const double width = std::hypot(config.gamma, config.delta);
    const double ratio = (2.0 * config.A + pump_rate(config)) / width;
    std::vector<double> out;
    out.reserve(config.p_max + 1);
    double term = config.gamma / width;
    for (int p = 0; p <= config.p_max; ++p) {
        out.push_back(term);
        term *= ratio;
    }
    return out;
}

double bound_ratio(const ValidityConfig& config) {
    config.validate();
    return pump_rate(config) / std::hypot(config.gamma, config.delta);
}

ValidityFlag classify(double r) {
    if (r <= 0.1) return ValidityFlag::Green;
    if (r <= 0.5) return ValidityFlag::Amber;
    return ValidityFlag::Red;
}

const char* to_string(ValidityFlag flag) {
    switch (flag) {
        case ValidityFlag::Green: return "green";
        case ValidityFlag::Amber: return "amber";
        case ValidityFlag::Red: return "red";
    }
    return "?";
}

double flatness(const ValidityConfig& config) {
    config.validate();
    const double d = config.delta;
    return 2.0 * config.A * std::abs(d) / (config.gamma * config.gamma + d * d);
}

double memory_ode_rhs(const InversionHistory& history, const ValidityConfig& config, double t) {
    config.validate();
    if (history.empty()) throw HistoryError("validity", "empty inversion history");
    const double slack = 1e-12 * std::max(1.0, std::abs(t));
    if (t < history.t_begin() - slack || t > history.t_end() + slack)
        throw HistoryError("validity", fmt::format("history covers [{}, {}], requested t = {}",
                                                   history.t_begin(), history.t_end(), t));
    const cplx z = config.kernel_rate();
    const cplx J = history.integrate_weighted(t, [&](double tau) { return std::exp(-z * (t - tau)); });
    const double n = history.value(t);
    return -config.A * (n + 1.0) - config.gamma * config.R0 * J.real();
}

namespace {

// State (n, Re J, Im J) of the local system x' = M x + b.
using Vec = std::array<double, 3>;
using Mat = std::array<Vec, 3>;

Mat closure_matrix(const ValidityConfig& c) {
    const cplx z = c.kernel_rate();
    const double k = c.gamma * c.R0;
    return {{{-c.A, -k, 0.0}, {1.0, -z.real(), z.imag()}, {0.0, -z.imag(), -z.real()}}};
}

Vec mat_vec(const Mat& m, const Vec& x) {
    Vec y{};
    for (int i = 0; i < 3; ++i) y[i] = m[i][0] * x[0] + m[i][1] * x[1] + m[i][2] * x[2];
    return y;
}

Vec rhs(const Mat& m, double A, const Vec& x) {
    Vec y = mat_vec(m, x);
    y[0] -= A;
    return y;
}

Vec axpy(const Vec& x, double a, const Vec& k) { return {x[0] + a * k[0], x[1] + a * k[1], x[2] + a * k[2]}; }

std::size_t step_count(double t_end, double dt) {
    if (!(dt > 0.0)) throw ValidityError(fmt::format("dt must be > 0, got {}", dt));
    if (!(t_end >= 0.0)) throw ValidityError(fmt::format("t_end must be >= 0, got {}", t_end));
    const double steps = t_end / dt;
    const double rounded = std::round(steps);
    if (std::abs(steps - rounded) > 1e-9 * std::max(1.0, steps))
        throw ValidityError(fmt::format("t_end {} is not a whole number of steps of {}", t_end, dt));
    return static_cast<std::size_t>(rounded);
}

}  // namespace

ClosureTrace integrate_closure(const ValidityConfig& config, double n0, double t_end, double dt,
                               std::size_t stride) {
    config.validate();
    const double limit = 0.05 / std::max(config.A, std::abs(config.kernel_rate()));
    if (dt > limit * (1.0 + 1e-12))
        throw ValidityError(fmt::format("dt = {} exceeds the step limit {} for |z| = {}", dt, limit,
                                        std::abs(config.kernel_rate())));
    stride = std::max<std::size_t>(stride, 1);
    const std::size_t steps = step_count(t_end, dt);
    const Mat m = closure_matrix(config);

    ClosureTrace out;
    Vec x{n0, 0.0, 0.0};
    auto record = [&](std::size_t k) {
        out.t.push_back(static_cast<double>(k) * dt);
        out.n.push_back(x[0]);
        out.J.emplace_back(x[1], x[2]);
    };
    record(0);
    for (std::size_t k = 1; k <= steps; ++k) {
        const Vec k1 = rhs(m, config.A, x);
        const Vec k2 = rhs(m, config.A, axpy(x, 0.5 * dt, k1));
        const Vec k3 = rhs(m, config.A, axpy(x, 0.5 * dt, k2));
        const Vec k4 = rhs(m, config.A, axpy(x, dt, k3));
        for (int i = 0; i < 3; ++i) x[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        if (k % stride == 0 || k == steps) record(k);
    }
    return out;
}

ClosureTrace integrate_memory_ode(const ValidityConfig& config, double n0, double t_end, double dt,
                                  std::size_t stride) {
    config.validate();
    stride = std::max<std::size_t>(stride, 1);
    const std::size_t steps = step_count(t_end, dt);
    const cplx z = config.kernel_rate();
    auto kernel_integral = [&](const InversionHistory& h, double t) {
        return h.integrate_weighted(t, [&](double tau) { return std::exp(-z * (t - tau)); });
    };

    InversionHistory history;
    double n = n0;
    double dn = -config.A * (n0 + 1.0);
    history.append(0.0, n, dn);
    ClosureTrace out;
    auto record = [&](double t) {
        out.t.push_back(t);
        out.n.push_back(n);
        out.J.push_back(kernel_integral(history, t));
    };
    record(0.0);
    for (std::size_t k = 1; k <= steps; ++k) {
        const double t = static_cast<double>(k) * dt;
        double next = n + dt * dn;
        history.append(t, next, dn);
        double dn_next = dn;
        for (int pass = 0; pass < 3; ++pass) {
            dn_next = memory_ode_rhs(history, config, t);
            next = n + 0.5 * dt * (dn + dn_next);
            history.replace_last(next, dn_next);
        }
        n = next;
        dn = memory_ode_rhs(history, config, t);
        history.replace_last(n, dn);
        if (k % stride == 0 || k == steps) record(t);
    }
    return out;
}

std::vector<double> series_remainder(const ValidityConfig& config, double n0, double t_end, double dt) {
    const ClosureTrace trace = integrate_closure(config, n0, t_end, dt);
    const Mat m = closure_matrix(config);
    const cplx z = config.kernel_rate();
    const auto p_max = static_cast<std::size_t>(config.p_max);

    // n^(q) for q = 0..p_max: x' = M x + b and x^(q) = M^(q-1) x' beyond that.
    auto derivatives = [&](const Vec& x) {
        std::vector<double> d(p_max + 1);
        d[0] = x[0];
        Vec v = rhs(m, config.A, x);
        for (std::size_t q = 1; q <= p_max; ++q) {
            d[q] = v[0];
            v = mat_vec(m, v);
        }
        return d;
    };
    const std::vector<double> d0 = derivatives({n0, 0.0, 0.0});

    std::vector<double> worst(p_max + 1, 0.0);
    for (std::size_t i = 1; i < trace.t.size(); ++i) {
        const double t = trace.t[i];
        const Vec x{trace.n[i], trace.J[i].real(), trace.J[i].imag()};
        const std::vector<double> d = derivatives(x);
        const cplx damp = std::exp(-z * t);
        cplx partial{0.0, 0.0};
        cplx zpow = z;
        double sign = 1.0;
        for (std::size_t q = 0; q <= p_max; ++q) {
            partial += sign * (d[q] - d0[q] * damp) / zpow;
            worst[q] = std::max(worst[q], std::abs(trace.J[i].real() - partial.real()));
            zpow *= z;
            sign = -sign;
        }
    }
    return worst;
}

std::uint64_t sweep_point_seed(std::uint64_t run_seed, std::size_t index) {
    CounterRng rng({run_seed, index, StreamTag::SweepPoint});
    return rng.next_u64();
}

void measure_deviation(const EnsembleTrace& trace, double gamma, double R, double A, double n0,
                       SweepRow& row) {
    const double t_start = 3.0 / gamma;
    const auto ere = solve_ere({A, R, n0}, trace.time_grid);
    bool any = false;
    row.eps_dev = 0.0;
    for (std::size_t i = 0; i < trace.time_grid.size(); ++i) {
        if (trace.time_grid[i] < t_start * (1.0 - 1e-12)) continue;
        const double d = std::abs(trace.n_bar[i] - ere[i]);
        if (!any || d > row.eps_dev) {
            row.eps_dev = d;
            row.std_error = trace.std_error[i];
            row.t_at_max = trace.time_grid[i];
        }
        any = true;
    }
    if (!any)
        throw ValidityError(fmt::format("horizon t_end = {} ends before 3/gamma = {}",
                                        trace.time_grid.empty() ? 0.0 : trace.time_grid.back(), t_start));
}

std::vector<SweepRow> sweep_validity(const std::vector<SweepPoint>& points, const SweepSettings& settings) {
    if (points.empty()) throw ValidityError("sweep grid is empty");
    std::vector<SweepRow> rows;
    rows.reserve(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
        SweepRow row;
        row.point = points[i];
        row.seed = sweep_point_seed(settings.ensemble.seed, i);
        try {
            const ValidityConfig vc{points[i].gamma, points[i].delta, points[i].R0, 1, settings.A};
            row.R = pump_rate(vc);
            row.r = bound_ratio(vc);
            row.flag = classify(row.r);
            row.flatness = flatness(vc);
            row.flatness_flag = row.flatness > kFlatnessLimit;

            EnsembleConfig ec = settings.ensemble;
            ec.bloch.A = settings.A;
            ec.spectrum = SpectrumSpec::lorentzian(ec.omega21 - vc.delta, vc.gamma, vc.R0);
            ec.seed = row.seed;
            const EnsembleTrace trace = run_ensemble(ec);
            measure_deviation(trace, vc.gamma, row.R, settings.A, ec.initial.inversion(), row);
        } catch (const std::exception& e) {
            row.error = fmt::format("point {}: {}", i, e.what());
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace blochere
