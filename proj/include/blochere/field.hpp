// Stochastic Rabi drives Omega_a(t) with a prescribed two-time correlation.
//
// Phase convention: a field component at omega = omega21 + beta contributes
// a e^{i(phi - beta t)} to Omega, so <Omega*(t) Omega(t - s)> carries
// e^{+i beta s} and a spectrum centred at detuning delta rotates as e^{-i delta s}.
#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "blochere/rng.hpp"
#include "blochere/spectrum.hpp"

namespace blochere {

enum class FieldBackend { ModeSum, ColoredNoise };
enum class Geometry { PhaseOnly, Explicit3D };
enum class AmplitudeStats { Deterministic, ComplexGaussian };

struct Vec3 {
    double x, y, z;
};

struct RabiMode {
    double beta;   ///< omega_j - omega21
    double amp;    ///< >= 0
    double phase;  ///< [0, 2 pi)

    cplx value(double t) const { return std::polar(amp, phase - beta * t); }
};

struct ModeSumOptions {
    std::size_t n_modes = 1024;
    std::optional<BetaSpan> span;  ///< default_span() when empty
    double span_widths = 200.0;
    BetaGrid grid = BetaGrid::Uniform;
    AmplitudeStats amplitudes = AmplitudeStats::Deterministic;
    Geometry geometry = Geometry::PhaseOnly;
    double box_wavelengths = 1000.0;  ///< side of the atom cube (Explicit3D)
    bool force_equatorial = false;    ///< Explicit3D with every theta_j = pi/2, unscaled
};

/// Atom-independent part of a mode-sum field: the comb and, for Explicit3D,
/// the shared directions and phases of the single field realization.
class ModeSumField {
public:
    ModeSumField(const SpectrumSpec& spec, double omega21, const ModeSumOptions& options,
                 std::uint64_t run_seed);

    const std::vector<ModeWeight>& comb() const { return comb_.modes; }
    const ModeAmplitudes& amplitudes() const { return comb_; }
    const ModeSumOptions& options() const { return options_; }
    const std::vector<Vec3>& directions() const { return directions_; }
    std::uint64_t run_seed() const { return run_seed_; }

    /// sqrt(3/2) sin(theta_j): the Explicit3D coupling factor, 1 otherwise.
    double coupling(std::size_t j) const;

private:
    ModeSumOptions options_;
    ModeAmplitudes comb_;
    std::vector<Vec3> directions_;
    std::vector<double> shared_phases_;
    std::uint64_t run_seed_;

    friend class RabiProcess;
};

/// One realization of the complex Rabi drive seen by one atom.
class RabiProcess {
public:
    struct ModeSumState {
        std::vector<RabiMode> modes;
        std::vector<Vec3> directions;  ///< Explicit3D only
        std::optional<Vec3> position;  ///< Explicit3D only, in wavelengths
    };

    struct ColoredNoiseState {
        double gamma;
        double delta;
        double variance;  ///< stationary <|Omega|^2>
        double dt;        ///< hold step used by the Bloch integrator
        double t = 0.0;
        cplx value{0.0, 0.0};
        CounterRng rng;
    };

    /// Rates that bound the integrator step.
    struct Rates {
        double beta_max = 0.0;
        double omega_bound = 0.0;
        double gamma = 0.0;
    };

    /// Omega at the three RK4 stage times t, t + dt/2, t + dt.
    using StageDrive = std::array<cplx, 3>;

    static RabiProcess from_modes(std::vector<RabiMode> modes, SeedPath path = {});
    static RabiProcess for_atom(const ModeSumField& field, std::uint64_t atom);
    static RabiProcess colored_noise(double gamma, double delta, double variance, double dt,
                                     SeedPath path);

    FieldBackend backend() const;
    const SeedPath& seed_path() const { return seed_path_; }
    const ModeSumState* mode_sum() const { return std::get_if<ModeSumState>(&state_); }
    const ColoredNoiseState* noise() const { return std::get_if<ColoredNoiseState>(&state_); }
    const Rates& rates() const { return rates_; }

    /// Omega(t). ColoredNoise requires nondecreasing t and advances its state.
    cplx sample(double t);

    /// Omega(t0 + k dt) for k = 0..count-1.
    std::vector<cplx> sample_grid(double t0, double dt, std::size_t count);

    /// Omega(t) without advancing anything; ModeSum only.
    cplx evaluate(double t) const;

    /// Drive values for one integrator step. ColoredNoise holds Omega(t)
    /// constant across the step.
    StageDrive stage_drive(double t, double dt);

private:
    RabiProcess(std::variant<ModeSumState, ColoredNoiseState> state, SeedPath path);
    void compute_rates();

    std::variant<ModeSumState, ColoredNoiseState> state_;
    SeedPath seed_path_;
    Rates rates_;
};

/// Random-phase mode sum for one atom.
RabiProcess synth_mode_sum(const SpectrumSpec& spec, double omega21, const ModeSumOptions& options,
                           SeedPath path);

/// Complex mean-reverting process with <Omega*(t) Omega(t - s)> equal to the
/// Lorentzian closed form, started from its stationary law.
RabiProcess synth_colored_noise(const SpectrumSpec& spec, double omega21, SeedPath path, double dt);

/// Uniform direction on the unit sphere.
Vec3 random_direction(CounterRng& rng);

}  // namespace blochere
