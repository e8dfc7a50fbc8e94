#include "blochere/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "blochere/errors.hpp"
#include "blochere/parallel.hpp"

namespace blochere {

namespace {

constexpr const char* kCommandNames[] = {"simulate", "correlate", "ere", "validate", "sweep"};

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(s);
    while (std::getline(in, item, sep)) out.push_back(trim(item));
    if (!s.empty() && s.back() == sep) out.emplace_back();
    return out;
}

double parse_real(const std::string& key, const std::string& text) {
    double value = 0.0;
    const char* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (text.empty() || ec != std::errc() || ptr != end || !std::isfinite(value))
        throw ConfigError(fmt::format("{}: expected a finite real number, got '{}'", key, text));
    return value;
}

std::uint64_t parse_count(const std::string& key, const std::string& text) {
    std::uint64_t value = 0;
    const char* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (text.empty() || ec != std::errc() || ptr != end)
        throw ConfigError(fmt::format("{}: expected a nonnegative integer, got '{}'", key, text));
    return value;
}

std::string join_reals(const std::vector<double>& values, const char* sep) {
    std::string out;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) out += sep;
        out += fmt::format("{}", values[i]);
    }
    return out;
}

const KeySpec& find_key(const std::string& key) {
    const auto& reg = key_registry();
    const auto it = std::find_if(reg.begin(), reg.end(), [&](const KeySpec& k) { return k.key == key; });
    if (it == reg.end()) throw ConfigError(fmt::format("{}: unknown key", key));
    return *it;
}

std::string canonical(const KeySpec& spec, const std::string& raw) {
    const std::string text = trim(raw);
    switch (spec.type) {
        case KeyType::Real:
            return fmt::format("{}", parse_real(spec.key, text));
        case KeyType::Count:
            return fmt::format("{}", parse_count(spec.key, text));
        case KeyType::Text:
            return text;
        case KeyType::Choice:
            if (std::find(spec.choices.begin(), spec.choices.end(), text) == spec.choices.end()) {
                std::string options;
                for (const auto& c : spec.choices) options += (options.empty() ? "" : "|") + c;
                throw ConfigError(fmt::format("{}: expected one of {}, got '{}'", spec.key, options, text));
            }
            return text;
        case KeyType::RealList: {
            std::vector<double> values;
            for (const auto& item : split(text, ',')) values.push_back(parse_real(spec.key, item));
            if (values.empty()) throw ConfigError(fmt::format("{}: expected a comma-separated list", spec.key));
            return join_reals(values, ",");
        }
        case KeyType::PointList: {
            std::vector<std::string> points;
            for (const auto& item : split(text, ';')) {
                const auto parts = split(item, ':');
                if (parts.size() != 3)
                    throw ConfigError(fmt::format("{}: expected gamma:delta:R0 points separated by ';', got '{}'",
                                                  spec.key, item));
                std::vector<double> v;
                for (const auto& p : parts) v.push_back(parse_real(spec.key, p));
                points.push_back(join_reals(v, ":"));
            }
            if (points.empty()) throw ConfigError(fmt::format("{}: expected at least one point", spec.key));
            std::string out;
            for (std::size_t i = 0; i < points.size(); ++i) out += (i ? ";" : "") + points[i];
            return out;
        }
    }
    return text;
}

}  // namespace

Command parse_command(const std::string& name) {
    for (int i = 0; i < 5; ++i)
        if (name == kCommandNames[i]) return static_cast<Command>(i);
    throw ConfigError(fmt::format("run.command: unknown subcommand '{}'", name));
}

const char* to_string(Command command) { return kCommandNames[static_cast<int>(command)]; }

const std::vector<KeySpec>& key_registry() {
    using K = KeyType;
    static const std::vector<KeySpec> reg = {
        {"run.command", K::Choice, "simulate", {"simulate", "correlate", "ere", "validate", "sweep"},
         "subcommand this configuration was resolved for"},
        {"run.seed", K::Count, "1", {}, "master seed"},
        {"run.workers", K::Count, "0", {}, "worker threads; 0 uses BLOCH_ERE_WORKERS, then the hardware count"},
        {"run.out", K::Text, "bloch_ere_out", {}, "output directory"},

        {"spectrum.shape", K::Choice, "lorentzian", {"lorentzian", "tabulated"}, "spectral shape"},
        {"spectrum.omega0", K::Real, "0", {}, "centre frequency (units of A)"},
        {"spectrum.gamma", K::Real, "50", {}, "half width gamma (units of A)"},
        {"spectrum.w_peak", K::Real, "0.1", {}, "W(omega0); equals the peak pump rate R0 in reduced units"},
        {"spectrum.table", K::Text, "", {}, "two-column omega W file for tabulated spectra"},
        {"spectrum.omega21", K::Real, "0", {}, "transition frequency in the same frame as omega0"},

        {"field.backend", K::Choice, "colored_noise", {"colored_noise", "mode_sum"}, "drive synthesis"},
        {"field.n_modes", K::Count, "1024", {}, "modes of the mode sum"},
        {"field.span_widths", K::Real, "200", {}, "half span of the mode comb in spectral widths"},
        {"field.grid", K::Choice, "uniform", {"uniform", "jittered"}, "mode comb grid"},
        {"field.amplitudes", K::Choice, "deterministic", {"deterministic", "complex_gaussian"},
         "mode amplitude statistics"},
        {"field.geometry", K::Choice, "phase_only", {"phase_only", "explicit_3d"}, "mode geometry"},
        {"field.box_wavelengths", K::Real, "1000", {}, "atom cube side in wavelengths (explicit_3d)"},

        {"bloch.A", K::Real, "1", {}, "spontaneous emission rate"},
        {"bloch.dt", K::Real, "0", {}, "integrator step; 0 picks the largest rule-compliant step"},
        {"bloch.form", K::Choice, "population", {"population", "inversion"}, "equation form"},
        {"bloch.tolerance", K::Real, "1e-07", {}, "invariant slack"},
        {"bloch.n0", K::Real, "-1", {}, "initial inversion (rho21(0) = 0)"},

        {"ensemble.n_atoms", K::Count, "1000", {}, "atoms per ensemble"},
        {"ensemble.t_end", K::Real, "10", {}, "horizon (units of 1/A)"},
        {"ensemble.output_dt", K::Real, "0.1", {}, "output grid spacing"},

        {"correlate.t_ref", K::Real, "5", {}, "reference time t of C(t, t - lag)"},
        {"correlate.lag_step", K::Real, "0.01", {}, "lag spacing"},
        {"correlate.n_lags", K::Count, "7", {}, "number of lags, starting at 0"},
        {"correlate.batches", K::Count, "10", {}, "batch count for batch-means errors"},
        {"correlate.stderr_cap", K::Real, "0", {}, "fail when a standard error exceeds this; 0 disables"},

        {"ere.A", K::Real, "1", {}, "spontaneous rate"},
        {"ere.R", K::Real, "1", {}, "pump rate 2 B W(omega21)"},
        {"ere.n0", K::Real, "-1", {}, "initial inversion"},
        {"ere.t_end", K::Real, "10", {}, "horizon"},
        {"ere.dt", K::Real, "0.1", {}, "output spacing"},
        {"ere.mu", K::Real, "3.33564e-30", {}, "dipole matrix element (C m)"},
        {"ere.omega21", K::Real, "3.197e+15", {}, "transition angular frequency (rad/s)"},
        {"ere.A_input", K::Real, "0", {}, "A (1/s) to compare with B hbar omega21^3 / (pi^2 c^3); 0 skips"},

        {"validity.p_max", K::Count, "4", {}, "S_p series order reported"},
        {"validate.points", K::PointList, "50:0:0.1;1:0:1", {}, "gamma:delta:R0 points separated by ';'"},
        {"sweep.gamma", K::RealList, "50,5,0.5", {}, "gamma values"},
        {"sweep.delta", K::RealList, "0", {}, "delta values"},
        {"sweep.R0", K::RealList, "0.1,1", {}, "R0 values"},
    };
    return reg;
}

RunConfig::RunConfig(Command command) : command_(command) {
    for (const auto& k : key_registry()) values_[k.key] = canonical(k, k.default_value);
    values_["run.command"] = to_string(command);
}

void RunConfig::set(const std::string& key, const std::string& value) {
    const KeySpec& spec = find_key(key);
    const std::string v = canonical(spec, value);
    if (key == "run.command" && v != to_string(command_))
        throw ConfigError(fmt::format("run.command: configuration is for '{}', not '{}'", v, to_string(command_)));
    values_[key] = v;
}

void RunConfig::set_assignment(const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos)
        throw ConfigError(fmt::format("expected key=value, got '{}'", assignment));
    set(trim(assignment.substr(0, eq)), assignment.substr(eq + 1));
}

const std::string& RunConfig::text(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError(fmt::format("{}: unknown key", key));
    return it->second;
}

double RunConfig::real(const std::string& key) const { return parse_real(key, text(key)); }

std::uint64_t RunConfig::count(const std::string& key) const { return parse_count(key, text(key)); }

std::vector<double> RunConfig::reals(const std::string& key) const {
    std::vector<double> out;
    for (const auto& item : split(text(key), ',')) out.push_back(parse_real(key, item));
    return out;
}

std::vector<SweepPoint> RunConfig::points(const std::string& key) const {
    std::vector<SweepPoint> out;
    for (const auto& item : split(text(key), ';')) {
        const auto parts = split(item, ':');
        out.push_back({parse_real(key, parts.at(0)), parse_real(key, parts.at(1)), parse_real(key, parts.at(2))});
    }
    return out;
}

void RunConfig::merge(std::istream& in, const std::string& source_name) {
    std::set<std::string> seen;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(fmt::format("{}:{}: expected key = value", source_name, line_no));
        const std::string key = trim(line.substr(0, eq));
        if (!seen.insert(key).second)
            throw ConfigError(fmt::format("{}: repeated in {} at line {}", key, source_name, line_no));
        try {
            set(key, line.substr(eq + 1));
        } catch (const ConfigError& e) {
            const std::string what = e.what();
            const std::string prefix = "config: ";
            throw ConfigError(fmt::format("{} ({}:{})", what.substr(what.rfind(prefix, 0) == 0 ? prefix.size() : 0),
                                          source_name, line_no));
        }
    }
}

void RunConfig::merge_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(fmt::format("cannot read config file '{}'", path));
    merge(in, path);
}

std::string RunConfig::manifest() const {
    std::string out = fmt::format("# bloch_ere {} manifest\n", to_string(command_));
    std::string section;
    for (const auto& k : key_registry()) {
        const std::string s = k.key.substr(0, k.key.find('.'));
        if (s != section) {
            if (!section.empty()) out += "\n";
            section = s;
        }
        out += fmt::format("{} = {}\n", k.key, values_.at(k.key));
    }
    return out;
}

std::map<std::string, std::string> RunConfig::result_keys() const {
    auto out = values_;
    out.erase("run.workers");
    out.erase("run.out");
    return out;
}

void RunConfig::check() const {
    if (text("spectrum.shape") == "tabulated" && text("spectrum.table").empty())
        throw ConfigError("spectrum.table: required when spectrum.shape = tabulated");
}

RunConfig parse_config(Command command, const std::string& config_path,
                       const std::vector<std::string>& overrides) {
    RunConfig config(command);
    if (!config_path.empty()) config.merge_file(config_path);
    for (const auto& o : overrides) config.set_assignment(o);
    config.check();
    return config;
}

EnsembleConfig ensemble_config(const RunConfig& config) {
    EnsembleConfig ec;
    if (config.text("spectrum.shape") == "tabulated") {
        ec.spectrum = read_tabulated_file(config.text("spectrum.table"));
    } else {
        ec.spectrum = SpectrumSpec::lorentzian(config.real("spectrum.omega0"), config.real("spectrum.gamma"),
                                               config.real("spectrum.w_peak"));
    }
    ec.omega21 = config.real("spectrum.omega21");

    const bool mode_sum = config.text("field.backend") == "mode_sum";
    ec.drive.backend = mode_sum ? FieldBackend::ModeSum : FieldBackend::ColoredNoise;
    ec.drive.modes.n_modes = config.count("field.n_modes");
    ec.drive.modes.span_widths = config.real("field.span_widths");
    ec.drive.modes.grid = config.text("field.grid") == "jittered" ? BetaGrid::Jittered : BetaGrid::Uniform;
    ec.drive.modes.amplitudes = config.text("field.amplitudes") == "complex_gaussian"
                                    ? AmplitudeStats::ComplexGaussian
                                    : AmplitudeStats::Deterministic;
    ec.drive.modes.geometry =
        config.text("field.geometry") == "explicit_3d" ? Geometry::Explicit3D : Geometry::PhaseOnly;
    ec.drive.modes.box_wavelengths = config.real("field.box_wavelengths");

    ec.bloch.A = config.real("bloch.A");
    ec.bloch.tolerance = config.real("bloch.tolerance");
    ec.dt = config.real("bloch.dt");
    ec.form = config.text("bloch.form") == "inversion" ? BlochForm::Inversion : BlochForm::Population;
    const double n0 = config.real("bloch.n0");
    if (n0 < -1.0 || n0 > 1.0) throw ConfigError(fmt::format("bloch.n0: must lie in [-1, 1], got {}", n0));
    ec.initial = AtomState::from_inversion(n0);

    ec.n_atoms = config.count("ensemble.n_atoms");
    ec.t_end = config.real("ensemble.t_end");
    ec.output_dt = config.real("ensemble.output_dt");
    ec.seed = config.count("run.seed");
    ec.workers = resolve_workers(static_cast<unsigned>(config.count("run.workers")));
    return ec;
}

EREParams ere_params(const RunConfig& config) {
    EREParams p{config.real("ere.A"), config.real("ere.R"), config.real("ere.n0")};
    p.validate();
    return p;
}

SIConstants si_constants(const RunConfig& config) {
    SIConstants si;
    si.mu = config.real("ere.mu");
    si.omega21 = config.real("ere.omega21");
    si.validate();
    return si;
}

}  // namespace blochere
