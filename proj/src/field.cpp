#include "blochere/field.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "blochere/errors.hpp"

namespace blochere {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double wrap_phase(double phase) {
    double wrapped = std::fmod(phase, kTwoPi);
    if (wrapped < 0.0) wrapped += kTwoPi;
    return wrapped;
}

}  // namespace

Vec3 random_direction(CounterRng& rng) {
    const double cos_theta = rng.uniform(-1.0, 1.0);
    const double sin_theta = std::sqrt(std::max(0.0, 1.0 - cos_theta * cos_theta));
    const double phi = kTwoPi * rng.uniform();
    return {sin_theta * std::cos(phi), sin_theta * std::sin(phi), cos_theta};
}

ModeSumField::ModeSumField(const SpectrumSpec& spec, double omega21, const ModeSumOptions& options,
                           std::uint64_t run_seed)
    : options_(options), run_seed_(run_seed) {
    spec.validate();
    const BetaSpan span = options.span.value_or(default_span(spec, omega21, options.span_widths));
    comb_ = mode_amplitudes(spec, omega21, options.n_modes, span, options.grid, run_seed);

    if (options.geometry == Geometry::Explicit3D) {
        CounterRng dir_rng(SeedPath{run_seed, 0, StreamTag::Directions});
        CounterRng phase_rng(SeedPath{run_seed, 0, StreamTag::FieldPhases});
        directions_.reserve(comb_.modes.size());
        shared_phases_.reserve(comb_.modes.size());
        for (std::size_t j = 0; j < comb_.modes.size(); ++j) {
            if (options.force_equatorial) {
                const double phi = kTwoPi * dir_rng.uniform();
                directions_.push_back({std::cos(phi), std::sin(phi), 0.0});
            } else {
                directions_.push_back(random_direction(dir_rng));
            }
            shared_phases_.push_back(kTwoPi * phase_rng.uniform());
        }
    }
}

double ModeSumField::coupling(std::size_t j) const {
    if (options_.geometry != Geometry::Explicit3D || options_.force_equatorial) return 1.0;
    const double z = directions_[j].z;
    const double sin_theta = std::sqrt(std::max(0.0, 1.0 - z * z));
    // <sin^2 theta> = 2/3 over the sphere
    return std::sqrt(1.5) * sin_theta;
}

RabiProcess::RabiProcess(std::variant<ModeSumState, ColoredNoiseState> state, SeedPath path)
    : state_(std::move(state)), seed_path_(path) {
    compute_rates();
}

void RabiProcess::compute_rates() {
    rates_ = {};
    if (const auto* ms = mode_sum()) {
        double amp_sum = 0.0;
        double power = 0.0;
        for (const auto& m : ms->modes) {
            rates_.beta_max = std::max(rates_.beta_max, std::abs(m.beta));
            amp_sum += m.amp;
            power += m.amp * m.amp;
        }
        rates_.omega_bound = std::min(amp_sum, 4.0 * std::sqrt(power));
    } else {
        const auto& cn = std::get<ColoredNoiseState>(state_);
        rates_.beta_max = std::abs(cn.delta);
        rates_.gamma = cn.gamma;
        rates_.omega_bound = 4.0 * std::sqrt(cn.variance);
    }
}

RabiProcess RabiProcess::from_modes(std::vector<RabiMode> modes, SeedPath path) {
    for (const auto& m : modes) {
        if (!(m.amp >= 0.0)) throw FieldError("mode amplitudes must be nonnegative");
        if (!(m.phase >= 0.0 && m.phase < kTwoPi)) throw FieldError("mode phases must lie in [0, 2pi)");
    }
    return RabiProcess(ModeSumState{std::move(modes), {}, std::nullopt}, path);
}

RabiProcess RabiProcess::for_atom(const ModeSumField& field, std::uint64_t atom) {
    const SeedPath path{field.run_seed(), atom, StreamTag::FieldPhases};
    const auto& comb = field.comb();
    const auto& opts = field.options();
    ModeSumState state;
    state.modes.reserve(comb.size());

    if (opts.geometry == Geometry::PhaseOnly) {
        CounterRng phases(path);
        CounterRng amps(path.with_tag(StreamTag::FieldAmplitudes));
        for (const auto& c : comb) {
            double amp = std::sqrt(c.weight);
            if (opts.amplitudes == AmplitudeStats::ComplexGaussian) amp *= std::abs(amps.complex_normal());
            state.modes.push_back({c.beta, amp, kTwoPi * phases.uniform()});
        }
    } else {
        // one shared field realization seen from a random position
        CounterRng pos_rng(path.with_tag(StreamTag::Positions));
        CounterRng amps(SeedPath{field.run_seed(), 0, StreamTag::FieldAmplitudes});
        const double L = opts.box_wavelengths;
        const Vec3 r{L * pos_rng.uniform(), L * pos_rng.uniform(), L * pos_rng.uniform()};
        state.position = r;
        state.directions = field.directions();
        for (std::size_t j = 0; j < comb.size(); ++j) {
            double amp = std::sqrt(comb[j].weight) * field.coupling(j);
            if (opts.amplitudes == AmplitudeStats::ComplexGaussian) amp *= std::abs(amps.complex_normal());
            const auto& k = field.directions()[j];
            // the detuning is a negligible fraction of the optical wavenumber
            const double spatial = kTwoPi * (k.x * r.x + k.y * r.y + k.z * r.z);
            state.modes.push_back({comb[j].beta, amp, wrap_phase(field.shared_phases_[j] + spatial)});
        }
    }
    return RabiProcess(std::move(state), path);
}

RabiProcess RabiProcess::colored_noise(double gamma, double delta, double variance, double dt,
                                       SeedPath path) {
    if (!(gamma > 0.0)) throw FieldError("colored noise needs gamma > 0");
    if (!(variance >= 0.0)) throw FieldError("colored noise variance must be nonnegative");
    if (!(dt > 0.0) || dt > 0.1 / gamma * (1.0 + 1e-12))
        throw FieldError("colored noise step must satisfy 0 < dt <= 0.1/gamma");
    path.tag = StreamTag::ColoredNoise;
    ColoredNoiseState st{gamma, delta, variance, dt, 0.0, {0.0, 0.0}, CounterRng(path)};
    st.value = std::sqrt(variance) * st.rng.complex_normal();
    return RabiProcess(std::move(st), path);
}

FieldBackend RabiProcess::backend() const {
    return mode_sum() ? FieldBackend::ModeSum : FieldBackend::ColoredNoise;
}

cplx RabiProcess::evaluate(double t) const {
    const auto* ms = mode_sum();
    if (!ms) throw FieldError("colored noise cannot be evaluated at arbitrary times");
    cplx sum{0.0, 0.0};
    for (const auto& m : ms->modes) sum += m.value(t);
    return sum;
}

cplx RabiProcess::sample(double t) {
    if (mode_sum()) return evaluate(t);
    auto& cn = std::get<ColoredNoiseState>(state_);
    if (t < cn.t) throw FieldError("colored noise sampled out of order");
    const double gap = t - cn.t;
    if (gap > 0.0) {
        const cplx decay = std::exp(cplx{-cn.gamma * gap, cn.delta * gap});
        const double fresh = cn.variance * -std::expm1(-2.0 * cn.gamma * gap);
        cn.value = decay * cn.value + std::sqrt(fresh) * cn.rng.complex_normal();
        cn.t = t;
    }
    return cn.value;
}

std::vector<cplx> RabiProcess::sample_grid(double t0, double dt, std::size_t count) {
    std::vector<cplx> out(count, cplx{0.0, 0.0});
    if (const auto* ms = mode_sum()) {
        for (const auto& m : ms->modes) {
            cplx z = m.value(t0);
            const cplx step = std::polar(1.0, -m.beta * dt);
            for (std::size_t k = 0; k < count; ++k) {
                out[k] += z;
                z *= step;
            }
        }
        return out;
    }
    for (std::size_t k = 0; k < count; ++k) out[k] = sample(t0 + static_cast<double>(k) * dt);
    return out;
}

RabiProcess::StageDrive RabiProcess::stage_drive(double t, double dt) {
    if (const auto* ms = mode_sum()) {
        StageDrive d{};
        for (const auto& m : ms->modes) {
            const cplx z = m.value(t);
            const cplx half = std::polar(1.0, -0.5 * m.beta * dt);
            const cplx mid = z * half;
            d[0] += z;
            d[1] += mid;
            d[2] += mid * half;
        }
        return d;
    }
    const cplx v = sample(t);
    return {v, v, v};
}

RabiProcess synth_mode_sum(const SpectrumSpec& spec, double omega21, const ModeSumOptions& options,
                           SeedPath path) {
    const ModeSumField field(spec, omega21, options, path.run_seed);
    return RabiProcess::for_atom(field, path.unit);
}

RabiProcess synth_colored_noise(const SpectrumSpec& spec, double omega21, SeedPath path, double dt) {
    if (!spec.is_lorentzian()) throw FieldError("colored noise backend requires a Lorentzian spectrum");
    const auto form = lorentzian_closed_form(spec, omega21);
    return RabiProcess::colored_noise(form.gamma, form.delta, form.amplitude, dt, path);
}

}  // namespace blochere
