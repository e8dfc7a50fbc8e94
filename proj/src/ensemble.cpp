#include "blochere/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "blochere/errors.hpp"
#include "blochere/parallel.hpp"

namespace blochere {

namespace {

constexpr std::size_t kAtomsPerBlock = 32;

/// Welford accumulators for a fixed-length series.
struct SeriesStats {
    std::size_t count = 0;
    std::vector<double> mean;
    std::vector<double> m2;

    explicit SeriesStats(std::size_t length = 0) : mean(length, 0.0), m2(length, 0.0) {}

    void add(std::span<const double> values) {
        ++count;
        const double inv = 1.0 / static_cast<double>(count);
        for (std::size_t i = 0; i < mean.size(); ++i) {
            const double delta = values[i] - mean[i];
            mean[i] += delta * inv;
            m2[i] += delta * (values[i] - mean[i]);
        }
    }

    static SeriesStats merge(const SeriesStats& a, const SeriesStats& b) {
        if (a.count == 0) return b;
        if (b.count == 0) return a;
        SeriesStats out(a.mean.size());
        out.count = a.count + b.count;
        const double na = static_cast<double>(a.count);
        const double nb = static_cast<double>(b.count);
        const double n = na + nb;
        for (std::size_t i = 0; i < a.mean.size(); ++i) {
            const double delta = b.mean[i] - a.mean[i];
            out.mean[i] = a.mean[i] + delta * nb / n;
            out.m2[i] = a.m2[i] + b.m2[i] + delta * delta * na * nb / n;
        }
        return out;
    }

    double stderr_of(std::size_t i) const {
        if (count < 2) return 0.0;
        const double n = static_cast<double>(count);
        return std::sqrt(std::max(0.0, m2[i]) / (n - 1.0) / n);
    }
};

std::size_t whole_multiple(double value, double unit, const char* what) {
    const double ratio = value / unit;
    const double rounded = std::round(ratio);
    if (rounded < 0.0 || std::abs(ratio - rounded) > 1e-9 * std::max(1.0, ratio))
        throw EnsembleError(std::string(what) + " is not a whole multiple of the step");
    return static_cast<std::size_t>(rounded);
}

void check_common(const EnsembleConfig& config) {
    config.spectrum.validate();
    if (config.n_atoms < 2) throw EnsembleError("n_atoms must be at least 2");
    if (!(config.t_end > 0.0)) throw EnsembleError("t_end must be positive");
    if (!(config.output_dt > 0.0)) throw EnsembleError("output_dt must be positive");
}

template <typename Fn>
auto with_atom_context(std::uint64_t atom, Fn&& fn) {
    try {
        return fn();
    } catch (const Error& e) {
        throw EnsembleError("atom " + std::to_string(atom) + ": " + e.what());
    }
}

}  // namespace

DriveFactory::DriveFactory(const EnsembleConfig& config, double dt)
    : spectrum_(config.spectrum),
      omega21_(config.omega21),
      backend_(config.drive.backend),
      seed_(config.seed),
      dt_(dt) {
    if (backend_ == FieldBackend::ModeSum) {
        field_.emplace(spectrum_, omega21_, config.drive.modes, seed_);
    } else if (!spectrum_.is_lorentzian()) {
        throw FieldError("colored noise backend requires a Lorentzian spectrum");
    }
}

RabiProcess DriveFactory::make(std::uint64_t atom) const {
    if (field_) return RabiProcess::for_atom(*field_, atom);
    return synth_colored_noise(spectrum_, omega21_, SeedPath{seed_, atom, StreamTag::ColoredNoise},
                               std::min(dt_, 0.1 / spectrum_.gamma));
}

RabiProcess::Rates DriveFactory::nominal_rates() const {
    if (field_) {
        RabiProcess::Rates rates = RabiProcess::for_atom(*field_, 0).rates();
        if (field_->options().amplitudes == AmplitudeStats::ComplexGaussian) rates.omega_bound *= 1.5;
        return rates;
    }
    const auto form = lorentzian_closed_form(spectrum_, omega21_);
    return {std::abs(form.delta), 4.0 * std::sqrt(form.amplitude), form.gamma};
}

double resolve_step(const EnsembleConfig& config) {
    check_common(config);
    whole_multiple(config.t_end, config.output_dt, "t_end");
    if (config.dt > 0.0) {
        whole_multiple(config.output_dt, config.dt, "output_dt");
        return config.dt;
    }
    const DriveFactory probe(config, config.output_dt);
    const double limit = max_stable_step(probe.nominal_rates(), config.bloch.A);
    const double substeps = std::max(1.0, std::ceil(config.output_dt / limit - 1e-9));
    return config.output_dt / substeps;
}

EnsembleTrace run_ensemble(const EnsembleConfig& config) {
    const double dt = resolve_step(config);
    const std::size_t stride = whole_multiple(config.output_dt, dt, "output_dt");
    const std::size_t steps = whole_multiple(config.t_end, dt, "t_end");
    const std::size_t n_times = steps / stride + 1;
    const DriveFactory factory(config, dt);

    const std::size_t n_blocks = (config.n_atoms + kAtomsPerBlock - 1) / kAtomsPerBlock;
    std::vector<SeriesStats> blocks(n_blocks, SeriesStats(n_times));
    parallel_blocks(n_blocks, resolve_workers(config.workers), [&](std::size_t b) {
        SeriesStats stats(n_times);
        const std::size_t end = std::min(config.n_atoms, (b + 1) * kAtomsPerBlock);
        for (std::size_t a = b * kAtomsPerBlock; a < end; ++a) {
            with_atom_context(a, [&] {
                RabiProcess drive = factory.make(a);
                const auto trace = integrate(config.initial, drive, config.t_end, dt, config.bloch,
                                             {config.form, stride, false});
                stats.add(trace.n);
            });
        }
        blocks[b] = std::move(stats);
    });
    const SeriesStats total = tree_reduce(std::move(blocks), SeriesStats::merge);

    EnsembleTrace out;
    out.n_atoms = config.n_atoms;
    out.seed = config.seed;
    out.dt = dt;
    out.time_grid.reserve(n_times);
    for (std::size_t i = 0; i < n_times; ++i)
        out.time_grid.push_back(config.initial.t + static_cast<double>(i) * config.output_dt);
    out.n_bar = total.mean;
    out.std_error.resize(n_times);
    for (std::size_t i = 0; i < n_times; ++i) out.std_error[i] = total.stderr_of(i);
    return out;
}

CorrelationEstimate estimate_correlations(const EnsembleConfig& config, const CorrelationRequest& request) {
    const double dt = resolve_step(config);
    if (request.lags.empty()) throw EnsembleError("no lags requested");
    if (request.n_batches < 2 || request.n_batches > config.n_atoms)
        throw EnsembleError("batch count must lie in [2, n_atoms]");
    const std::size_t ref_index = whole_multiple(request.t_ref, dt, "t_ref");
    std::vector<std::size_t> lag_steps;
    for (double lag : request.lags) {
        if (!(lag >= 0.0) || lag > request.t_ref * (1.0 + 1e-12))
            throw EnsembleError("lags must lie in [0, t_ref]");
        lag_steps.push_back(whole_multiple(lag, dt, "lag"));
    }
    const std::size_t n_lags = lag_steps.size();
    const DriveFactory factory(config, dt);

    // per-atom products, reduced afterwards in atom order
    std::vector<cplx> products(config.n_atoms * n_lags * 2);
    const std::size_t n_blocks = (config.n_atoms + kAtomsPerBlock - 1) / kAtomsPerBlock;
    parallel_blocks(n_blocks, resolve_workers(config.workers), [&](std::size_t b) {
        const std::size_t end = std::min(config.n_atoms, (b + 1) * kAtomsPerBlock);
        for (std::size_t a = b * kAtomsPerBlock; a < end; ++a) {
            with_atom_context(a, [&] {
                RabiProcess drive = factory.make(a);
                const auto trace = integrate(config.initial, drive, request.t_ref, dt, config.bloch,
                                             {config.form, 1, true});
                const cplx omega_ref_conj = std::conj(trace.omega[ref_index]);
                for (std::size_t k = 0; k < n_lags; ++k) {
                    const std::size_t idx = ref_index - lag_steps[k];
                    const cplx prod = omega_ref_conj * trace.omega[idx];
                    products[(a * n_lags + k) * 2] = prod;
                    products[(a * n_lags + k) * 2 + 1] = prod * trace.n[idx];
                }
            });
        }
    });

    const std::size_t n_batches = request.n_batches;
    std::vector<std::vector<cplx>> batch_sum(n_batches, std::vector<cplx>(2 * n_lags));
    std::vector<std::size_t> batch_count(n_batches, 0);
    for (std::size_t a = 0; a < config.n_atoms; ++a) {
        const std::size_t batch = a * n_batches / config.n_atoms;
        ++batch_count[batch];
        for (std::size_t i = 0; i < 2 * n_lags; ++i) batch_sum[batch][i] += products[a * 2 * n_lags + i];
    }

    CorrelationEstimate est;
    est.t_ref = request.t_ref;
    est.lags = request.lags;
    est.n_atoms = config.n_atoms;
    est.n_batches = n_batches;
    const double n = static_cast<double>(config.n_atoms);
    const double nb = static_cast<double>(n_batches);
    for (std::size_t k = 0; k < n_lags; ++k) {
        for (int which = 0; which < 2; ++which) {
            const std::size_t i = 2 * k + static_cast<std::size_t>(which);
            cplx total{0.0, 0.0};
            for (std::size_t b = 0; b < n_batches; ++b) total += batch_sum[b][i];
            const cplx mean = total / n;
            double var_re = 0.0;
            double var_im = 0.0;
            for (std::size_t b = 0; b < n_batches; ++b) {
                const cplx m = batch_sum[b][i] / static_cast<double>(batch_count[b]);
                var_re += (m.real() - mean.real()) * (m.real() - mean.real());
                var_im += (m.imag() - mean.imag()) * (m.imag() - mean.imag());
            }
            const double se = std::sqrt((var_re + var_im) / (nb * (nb - 1.0)));
            if (which == 0) {
                est.C_hat.push_back(mean);
                est.std_error.push_back(se);
            } else {
                est.Cn_hat.push_back(mean);
                est.std_error_Cn.push_back(se);
            }
        }
    }
    if (request.stderr_cap) {
        for (std::size_t k = 0; k < n_lags; ++k) {
            if (est.std_error[k] > *request.stderr_cap || est.std_error_Cn[k] > *request.stderr_cap)
                throw EnsembleError("insufficient realizations: standard error " +
                                    std::to_string(std::max(est.std_error[k], est.std_error_Cn[k])) +
                                    " exceeds the cap at lag " + std::to_string(request.lags[k]));
        }
    }
    return est;
}

CorrelationEstimate estimate_field_correlation(const EnsembleConfig& config, double t_ref,
                                               double lag_step, std::size_t n_lags) {
    config.spectrum.validate();
    if (config.n_atoms < 2) throw EnsembleError("need at least two realizations");
    if (n_lags < 1 || !(lag_step > 0.0)) throw EnsembleError("lag grid must be nonempty");
    const double t_start = t_ref - static_cast<double>(n_lags - 1) * lag_step;
    if (t_start < 0.0) throw EnsembleError("t_ref must cover the largest lag");
    const double hold = config.spectrum.is_lorentzian() ? 0.05 / config.spectrum.gamma : lag_step;
    const DriveFactory factory(config, std::min(lag_step, hold));

    const std::size_t n_blocks = (config.n_atoms + kAtomsPerBlock - 1) / kAtomsPerBlock;
    std::vector<SeriesStats> blocks(n_blocks, SeriesStats(2 * n_lags));
    parallel_blocks(n_blocks, resolve_workers(config.workers), [&](std::size_t b) {
        SeriesStats stats(2 * n_lags);
        std::vector<double> row(2 * n_lags);
        const std::size_t end = std::min(config.n_atoms, (b + 1) * kAtomsPerBlock);
        for (std::size_t a = b * kAtomsPerBlock; a < end; ++a) {
            RabiProcess drive = factory.make(a);
            const auto values = drive.sample_grid(t_start, lag_step, n_lags);
            const cplx ref_conj = std::conj(values.back());
            for (std::size_t k = 0; k < n_lags; ++k) {
                const cplx prod = ref_conj * values[n_lags - 1 - k];
                row[2 * k] = prod.real();
                row[2 * k + 1] = prod.imag();
            }
            stats.add(row);
        }
        blocks[b] = std::move(stats);
    });
    const SeriesStats total = tree_reduce(std::move(blocks), SeriesStats::merge);

    CorrelationEstimate est;
    est.t_ref = t_ref;
    est.n_atoms = config.n_atoms;
    est.n_batches = config.n_atoms;
    for (std::size_t k = 0; k < n_lags; ++k) {
        est.lags.push_back(static_cast<double>(k) * lag_step);
        est.C_hat.emplace_back(total.mean[2 * k], total.mean[2 * k + 1]);
        est.std_error.push_back(std::hypot(total.stderr_of(2 * k), total.stderr_of(2 * k + 1)));
    }
    return est;
}

DecorrelationProfile decorrelation_residual(const CorrelationEstimate& est, const EnsembleTrace& trace) {
    if (est.lags.empty() || est.lags.front() != 0.0)
        throw EnsembleError("grid mismatch: the correlation estimate needs lag 0");
    if (est.Cn_hat.size() != est.lags.size())
        throw EnsembleError("grid mismatch: the estimate carries no C_n values");
    DecorrelationProfile out;
    out.lags = est.lags;
    const double norm = est.C_hat.front().real();
    for (std::size_t k = 0; k < est.lags.size(); ++k) {
        const double tau = est.t_ref - est.lags[k];
        const auto it = std::find_if(trace.time_grid.begin(), trace.time_grid.end(), [&](double t) {
            return std::abs(t - tau) <= 1e-9 * std::max(1.0, std::abs(tau));
        });
        if (it == trace.time_grid.end())
            throw EnsembleError("grid mismatch: trace has no sample at t=" + std::to_string(tau));
        const double n_bar = trace.n_bar[static_cast<std::size_t>(it - trace.time_grid.begin())];
        const cplx r = norm > 0.0 ? (est.Cn_hat[k] - est.C_hat[k] * n_bar) / norm : cplx{0.0, 0.0};
        out.residual.push_back(r);
        out.max_abs = std::max(out.max_abs, std::abs(r));
    }
    return out;
}

double ensemble_rate_from_correlation(const CorrelationEstimate& est, double n_bar, double A) {
    const std::size_t m = est.lags.size();
    if (m < 2 || est.lags.front() != 0.0 || est.Cn_hat.size() != m)
        throw EnsembleError("need C_n on a uniform lag grid starting at 0");
    const double h = est.lags[1] - est.lags[0];
    for (std::size_t k = 1; k < m; ++k) {
        if (std::abs(est.lags[k] - static_cast<double>(k) * h) > 1e-9 * std::max(1.0, est.lags[k]))
            throw EnsembleError("lag grid must be uniform");
    }
    if (std::abs(est.lags.back() - est.t_ref) > 1e-9 * std::max(1.0, est.t_ref))
        throw EnsembleError("lag grid must reach t_ref");
    auto f = [&](std::size_t k) { return est.Cn_hat[k] * std::exp(-0.5 * A * est.lags[k]); };
    cplx integral{0.0, 0.0};
    const std::size_t intervals = m - 1;
    if (intervals % 2 == 0) {
        for (std::size_t k = 0; k < m; ++k) {
            const double w = (k == 0 || k == intervals) ? 1.0 : (k % 2 == 1 ? 4.0 : 2.0);
            integral += w * f(k);
        }
        integral *= h / 3.0;
    } else {
        for (std::size_t k = 0; k < m; ++k) integral += (k == 0 || k == intervals ? 0.5 : 1.0) * f(k);
        integral *= h;
    }
    return -A * (n_bar + 1.0) - 4.0 * integral.real();
}

}  // namespace blochere
