#include "blochere/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "blochere/errors.hpp"
#include "blochere/rng.hpp"

namespace blochere {

namespace {

constexpr double kPi = std::numbers::pi;

// Integral of the linear segment between (x0, y0) and (x1, y1) clipped to [lo, hi].
double clipped_segment(double x0, double y0, double x1, double y1, double lo, double hi) {
    const double a = std::max(x0, lo);
    const double b = std::min(x1, hi);
    if (b <= a) return 0.0;
    const double slope = (y1 - y0) / (x1 - x0);
    const double ya = y0 + slope * (a - x0);
    const double yb = y0 + slope * (b - x0);
    return 0.5 * (ya + yb) * (b - a);
}

cplx tabulated_correlation(const SpectrumSpec& spec, double omega21, double s) {
    const auto& table = spec.table;
    const double prefactor = kReducedB / (2.0 * kPi);
    const double scale = prefactor * total_W(spec);
    if (scale == 0.0) return {0.0, 0.0};

    // Level 0 uses the table nodes; each level halves every interval.
    auto integrand = [&](double omega) {
        return eval_W(spec, omega) * std::polar(1.0, (omega - omega21) * s);
    };
    cplx sum{0.0, 0.0};
    for (std::size_t i = 0; i + 1 < table.size(); ++i) {
        const double h = table[i + 1].omega - table[i].omega;
        sum += 0.5 * h * (integrand(table[i].omega) + integrand(table[i + 1].omega));
    }
    cplx previous = prefactor * sum;

    constexpr std::size_t kMaxEvaluations = std::size_t{1} << 22;
    const std::size_t intervals = table.size() - 1;
    for (int level = 1; (intervals << level) <= kMaxEvaluations; ++level) {
        const auto subdivisions = std::size_t{1} << level;
        double widest = 0.0;
        cplx refined{0.0, 0.0};
        for (std::size_t i = 0; i + 1 < table.size(); ++i) {
            const double x0 = table[i].omega;
            const double h = (table[i + 1].omega - x0) / static_cast<double>(subdivisions);
            widest = std::max(widest, h);
            cplx seg = 0.5 * (integrand(x0) + integrand(table[i + 1].omega));
            for (std::size_t k = 1; k < subdivisions; ++k) seg += integrand(x0 + h * static_cast<double>(k));
            refined += h * seg;
        }
        const cplx current = prefactor * refined;
        const double reference = std::max(std::abs(current), 1e-6 * scale);
        // Agreement between aliased sums is not convergence; the phase must
        // also be resolved across every subinterval.
        const bool resolved = widest * std::abs(s) <= 1.0;
        if (resolved && std::abs(current - previous) < 1e-3 * reference) return current;
        previous = current;
    }
    throw SpectrumError("correlation quadrature did not converge at lag " + std::to_string(s));
}

}  // namespace

SpectrumSpec SpectrumSpec::lorentzian(double omega0, double gamma, double w_peak) {
    SpectrumSpec spec;
    spec.shape = Shape::Lorentzian;
    spec.omega0 = omega0;
    spec.gamma = gamma;
    spec.w_peak = w_peak;
    spec.validate();
    return spec;
}

SpectrumSpec SpectrumSpec::tabulated(std::vector<TablePoint> table) {
    std::sort(table.begin(), table.end(),
              [](const TablePoint& a, const TablePoint& b) { return a.omega < b.omega; });
    SpectrumSpec spec;
    spec.shape = Shape::Tabulated;
    spec.table = std::move(table);
    spec.validate();
    if (!spec.table.empty()) {
        const auto peak = std::max_element(
            spec.table.begin(), spec.table.end(),
            [](const TablePoint& a, const TablePoint& b) { return a.w < b.w; });
        spec.omega0 = peak->omega;
        spec.w_peak = peak->w;
    }
    return spec;
}

void SpectrumSpec::validate() const {
    if (shape == Shape::Lorentzian) {
        if (!(gamma > 0.0) || !std::isfinite(gamma))
            throw SpectrumError("Lorentzian half-width gamma must be positive");
        if (!(w_peak >= 0.0) || !std::isfinite(w_peak))
            throw SpectrumError("W(omega0) must be finite and nonnegative");
        if (!std::isfinite(omega0)) throw SpectrumError("omega0 must be finite");
        return;
    }
    if (table.size() < 2) throw SpectrumError("tabulated spectrum needs at least two points");
    for (std::size_t i = 0; i < table.size(); ++i) {
        if (!(table[i].w >= 0.0) || !std::isfinite(table[i].w))
            throw SpectrumError("tabulated W must be finite and nonnegative");
        if (i > 0 && !(table[i].omega > table[i - 1].omega))
            throw SpectrumError("tabulated frequencies must be strictly increasing");
    }
}

double SpectrumSpec::center() const { return omega0; }

double SpectrumSpec::width() const {
    if (shape == Shape::Lorentzian) return gamma;
    if (w_peak <= 0.0) return table.back().omega - table.front().omega;
    // half-width of the Lorentzian with the same peak and area
    return total_W(*this) / (kPi * w_peak);
}

double eval_W(const SpectrumSpec& spec, double omega) {
    if (spec.shape == SpectrumSpec::Shape::Lorentzian) {
        const double x = omega - spec.omega0;
        const double g2 = spec.gamma * spec.gamma;
        return spec.w_peak * g2 / (g2 + x * x);
    }
    const auto& t = spec.table;
    if (omega < t.front().omega || omega > t.back().omega) return 0.0;
    auto upper = std::upper_bound(t.begin(), t.end(), omega,
                                  [](double w, const TablePoint& p) { return w < p.omega; });
    if (upper == t.end()) return t.back().w;
    const auto lower = upper - 1;
    const double frac = (omega - lower->omega) / (upper->omega - lower->omega);
    return lower->w + frac * (upper->w - lower->w);
}

double integrate_W(const SpectrumSpec& spec, double lo, double hi) {
    if (hi <= lo) return 0.0;
    if (spec.shape == SpectrumSpec::Shape::Lorentzian) {
        const double g = spec.gamma;
        return spec.w_peak * g *
               (std::atan((hi - spec.omega0) / g) - std::atan((lo - spec.omega0) / g));
    }
    double sum = 0.0;
    for (std::size_t i = 0; i + 1 < spec.table.size(); ++i) {
        const auto& p = spec.table[i];
        const auto& q = spec.table[i + 1];
        sum += clipped_segment(p.omega, p.w, q.omega, q.w, lo, hi);
    }
    return sum;
}

double total_W(const SpectrumSpec& spec) {
    if (spec.shape == SpectrumSpec::Shape::Lorentzian) return kPi * spec.gamma * spec.w_peak;
    return integrate_W(spec, spec.table.front().omega, spec.table.back().omega);
}

SpectrumSpec read_tabulated(std::istream& in) {
    std::vector<TablePoint> table;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        std::istringstream fields(line);
        double omega = 0.0;
        double w = 0.0;
        if (!(fields >> omega)) {
            if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
            throw SpectrumError("bad spectrum table line " + std::to_string(line_no));
        }
        if (!(fields >> w))
            throw SpectrumError("missing W value on spectrum table line " + std::to_string(line_no));
        table.push_back({omega, w});
    }
    return SpectrumSpec::tabulated(std::move(table));
}

SpectrumSpec read_tabulated_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw SpectrumError("cannot open spectrum table '" + path + "'");
    return read_tabulated(in);
}

cplx LorentzianClosedForm::operator()(double s) const {
    return amplitude * std::exp(cplx{-gamma * s, -delta * s});
}

LorentzianClosedForm lorentzian_closed_form(const SpectrumSpec& spec, double omega21) {
    if (!spec.is_lorentzian()) throw SpectrumError("closed form requires a Lorentzian spectrum");
    return {spec.gamma, omega21 - spec.omega0, 0.5 * kReducedB * spec.gamma * spec.w_peak};
}

cplx correlation_at(const SpectrumSpec& spec, double omega21, double s) {
    if (spec.is_lorentzian()) {
        const auto form = lorentzian_closed_form(spec, omega21);
        const cplx value = form(std::abs(s));
        return s < 0.0 ? std::conj(value) : value;
    }
    return tabulated_correlation(spec, omega21, s);
}

CorrelationFn analytic_correlation(const SpectrumSpec& spec, double omega21,
                                   std::span<const double> lags) {
    CorrelationFn out;
    out.lags.assign(lags.begin(), lags.end());
    out.values.reserve(lags.size());
    for (double s : lags) {
        if (!(s >= 0.0)) throw SpectrumError("correlation lags must be nonnegative");
        out.values.push_back(correlation_at(spec, omega21, s));
    }
    if (spec.is_lorentzian()) out.closed_form = lorentzian_closed_form(spec, omega21);
    return out;
}

double kernel_K(double beta, double A, double t) {
    const cplx z{0.5 * A, -beta};
    if (std::abs(z) * t < 1e-8) return t;  // small-argument limit of the integral
    return ((1.0 - std::exp(-z * t)) / z).real();
}

double kernel_K_limit(double beta, double A) {
    const double half = 0.5 * A;
    return half / (half * half + beta * beta);
}

BetaSpan default_span(const SpectrumSpec& spec, double omega21, double half_width_widths) {
    if (spec.is_lorentzian()) {
        const double centre = spec.omega0 - omega21;
        const double half = half_width_widths * spec.gamma;
        return {centre - half, centre + half};
    }
    return {spec.table.front().omega - omega21, spec.table.back().omega - omega21};
}

ModeAmplitudes mode_amplitudes(const SpectrumSpec& spec, double omega21, std::size_t n_modes,
                               BetaSpan span, BetaGrid grid, std::uint64_t seed) {
    if (n_modes < 1) throw SpectrumError("mode count must be at least 1");
    if (!(span.hi > span.lo)) throw SpectrumError("mode span must have positive width");

    ModeAmplitudes out;
    out.modes.reserve(n_modes);
    const double cell = (span.hi - span.lo) / static_cast<double>(n_modes);
    const double prefactor = kReducedB / (2.0 * kPi);
    CounterRng rng(SeedPath{seed, 0, StreamTag::GridJitter});
    for (std::size_t j = 0; j < n_modes; ++j) {
        const double offset = grid == BetaGrid::Jittered ? rng.uniform() : 0.5;
        const double beta = span.lo + (static_cast<double>(j) + offset) * cell;
        out.modes.push_back({beta, prefactor * eval_W(spec, omega21 + beta) * cell});
    }

    const double total = total_W(spec);
    if (total > 0.0) {
        const double inside = integrate_W(spec, omega21 + span.lo, omega21 + span.hi);
        out.truncated_fraction = std::max(0.0, 1.0 - inside / total);
        if (out.truncated_fraction > 0.01) {
            out.warning = "mode span truncates " +
                          std::to_string(100.0 * out.truncated_fraction) +
                          "% of the spectral weight (limit 1%)";
        }
    }
    return out;
}

double spectral_energy_density(double omega, double e_par_sq, double volume_factor) {
    const double two_pi4 = std::pow(2.0 * kPi, 4);
    return 8.0 * two_pi4 * omega * omega * e_par_sq / volume_factor;
}

double field_power_for_density(double omega, double w, double volume_factor) {
    const double two_pi4 = std::pow(2.0 * kPi, 4);
    return w * volume_factor / (8.0 * two_pi4 * omega * omega);
}

double energy_density(std::span<const FieldSample> samples, double volume_factor) {
    if (samples.size() < 2) return 0.0;
    std::vector<FieldSample> sorted(samples.begin(), samples.end());
    std::sort(sorted.begin(), sorted.end(),
              [](const FieldSample& a, const FieldSample& b) { return a.omega < b.omega; });
    double eta = 0.0;
    double prev = spectral_energy_density(sorted[0].omega, sorted[0].e_par_sq, volume_factor);
    for (std::size_t i = 1; i < sorted.size(); ++i) {
        const double cur = spectral_energy_density(sorted[i].omega, sorted[i].e_par_sq, volume_factor);
        eta += 0.5 * (prev + cur) * (sorted[i].omega - sorted[i - 1].omega);
        prev = cur;
    }
    return eta;
}

}  // namespace blochere
