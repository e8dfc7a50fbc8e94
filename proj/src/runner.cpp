#include "blochere/runner.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <ostream>

#include <fmt/format.h>
#include <json.hpp>

#include "blochere/errors.hpp"

namespace blochere {

namespace {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

class OutputDir {
public:
    explicit OutputDir(const std::string& path) : root_(path) {
        std::error_code ec;
        fs::create_directories(root_, ec);
        if (ec) throw ConfigError(fmt::format("run.out: cannot create '{}': {}", path, ec.message()));
    }

    void write(const std::string& name, const std::string& content) {
        const fs::path file = root_ / name;
        std::ofstream out(file, std::ios::binary | std::ios::trunc);
        out << content;
        if (!out) throw ConfigError(fmt::format("run.out: cannot write '{}'", file.string()));
        written_.push_back(name);
    }

    std::vector<std::string> files() const { return written_; }

private:
    fs::path root_;
    std::vector<std::string> written_;
};

ordered_json header(const RunConfig& config) {
    ordered_json j;
    j["schema_version"] = kSchemaVersion;
    j["command"] = to_string(config.command());
    ordered_json manifest = ordered_json::object();
    for (const auto& [k, v] : config.result_keys()) manifest[k] = v;
    j["manifest"] = manifest;
    return j;
}

std::string num(double x) { return fmt::format("{}", x); }

double pump_at_transition(const EnsembleConfig& ec) { return 2.0 * kReducedB * eval_W(ec.spectrum, ec.omega21); }

void run_simulate(const RunConfig& config, OutputDir& out, std::ostream& console) {
    const EnsembleConfig ec = ensemble_config(config);
    const EnsembleTrace trace = run_ensemble(ec);

    std::string csv = "t,n_bar,stderr\n";
    for (std::size_t i = 0; i < trace.time_grid.size(); ++i)
        csv += fmt::format("{},{},{}\n", trace.time_grid[i], trace.n_bar[i], trace.std_error[i]);
    out.write("trace.csv", csv);

    const double R = pump_at_transition(ec);
    const auto ere = solve_ere({ec.bloch.A, R, ec.initial.inversion()}, trace.time_grid);
    double max_dev = 0.0;
    for (std::size_t i = 0; i < ere.size(); ++i) max_dev = std::max(max_dev, std::abs(trace.n_bar[i] - ere[i]));

    ordered_json j = header(config);
    j["n_atoms"] = trace.n_atoms;
    j["dt"] = trace.dt;
    j["pump_rate"] = R;
    j["final_n_bar"] = trace.n_bar.back();
    j["final_stderr"] = trace.std_error.back();
    j["ere_final"] = ere.back();
    j["ere_max_abs_deviation"] = max_dev;
    if (ec.spectrum.is_lorentzian()) {
        const ValidityConfig vc{ec.spectrum.gamma, ec.omega21 - ec.spectrum.omega0, ec.spectrum.w_peak, 1,
                                ec.bloch.A};
        j["bound_ratio"] = bound_ratio(vc);
        j["validity_flag"] = to_string(classify(bound_ratio(vc)));
    }
    out.write("simulate.json", j.dump(2) + "\n");
    console << fmt::format("simulate: {} atoms, final n_bar {} +- {}, rate-equation value {}\n", trace.n_atoms,
                           trace.n_bar.back(), trace.std_error.back(), ere.back());
}

void run_correlate(const RunConfig& config, OutputDir& out, std::ostream& console) {
    EnsembleConfig ec = ensemble_config(config);
    CorrelationRequest req;
    req.t_ref = config.real("correlate.t_ref");
    const double lag_step = config.real("correlate.lag_step");
    const auto n_lags = config.count("correlate.n_lags");
    if (n_lags < 1) throw ConfigError("correlate.n_lags: must be at least 1");
    for (std::uint64_t k = 0; k < n_lags; ++k) req.lags.push_back(static_cast<double>(k) * lag_step);
    req.n_batches = config.count("correlate.batches");
    if (const double cap = config.real("correlate.stderr_cap"); cap > 0.0) req.stderr_cap = cap;
    const CorrelationEstimate est = estimate_correlations(ec, req);

    // inversion on the tau = t_ref - lag grid for the closure residual
    ec.t_end = req.t_ref;
    ec.output_dt = lag_step;
    const EnsembleTrace trace = run_ensemble(ec);
    const DecorrelationProfile dec = decorrelation_residual(est, trace);

    std::string csv = "lag,ReC,ImC,ReCn,ImCn,stderr\n";
    for (std::size_t k = 0; k < est.lags.size(); ++k)
        csv += fmt::format("{},{},{},{},{},{}\n", est.lags[k], est.C_hat[k].real(), est.C_hat[k].imag(),
                           est.Cn_hat[k].real(), est.Cn_hat[k].imag(), est.std_error[k]);
    out.write("correlation.csv", csv);

    std::string dcsv = "lag,ReD,ImD\n";
    for (std::size_t k = 0; k < dec.lags.size(); ++k)
        dcsv += fmt::format("{},{},{}\n", dec.lags[k], dec.residual[k].real(), dec.residual[k].imag());
    out.write("decorrelation.csv", dcsv);

    ordered_json j = header(config);
    j["n_atoms"] = est.n_atoms;
    j["n_batches"] = est.n_batches;
    j["t_ref"] = est.t_ref;
    j["stderr_Cn"] = est.std_error_Cn;
    j["decorrelation_max_abs"] = dec.max_abs;
    const auto analytic = analytic_correlation(ec.spectrum, ec.omega21, est.lags);
    double worst = 0.0;
    ordered_json ref = ordered_json::array();
    for (std::size_t k = 0; k < est.lags.size(); ++k) {
        ref.push_back({analytic.values[k].real(), analytic.values[k].imag()});
        if (est.std_error[k] > 0.0) worst = std::max(worst, std::abs(est.C_hat[k] - analytic.values[k]) / est.std_error[k]);
    }
    j["analytic_C"] = ref;
    j["max_deviation_in_stderr"] = worst;
    out.write("correlate.json", j.dump(2) + "\n");
    console << fmt::format("correlate: {} lags, max |C_hat - C| = {} stderr, max |D| = {}\n", est.lags.size(), worst,
                           dec.max_abs);
}

void run_ere(const RunConfig& config, OutputDir& out, std::ostream& console) {
    const EREParams p = ere_params(config);
    const double t_end = config.real("ere.t_end");
    const double dt = config.real("ere.dt");
    if (!(dt > 0.0)) throw ConfigError("ere.dt: must be positive");
    if (!(t_end >= 0.0)) throw ConfigError("ere.t_end: must be nonnegative");
    const auto steps = static_cast<std::size_t>(std::floor(t_end / dt + 1e-9));
    std::vector<double> grid;
    for (std::size_t i = 0; i <= steps; ++i) grid.push_back(static_cast<double>(i) * dt);
    const auto n = solve_ere(p, grid);
    const auto weak = solve_weak_field(p, grid);

    std::string csv = "t,n_bar,n_weak\n";
    for (std::size_t i = 0; i < grid.size(); ++i) csv += fmt::format("{},{},{}\n", grid[i], n[i], weak[i]);
    out.write("ere.csv", csv);

    const SIConstants si = si_constants(config);
    ordered_json j = header(config);
    j["steady_state"] = p.steady_state();
    j["relaxation_rate"] = p.relaxation_rate();
    j["weak_field_steady_state"] = -1.0 + p.R / p.A;
    ordered_json b;
    b["B"] = b_coefficient(si);
    b["B_units"] = "m^3 J^-1 s^-2 (rate per spectral energy density per unit angular frequency)";
    b["mu"] = si.mu;
    b["omega21"] = si.omega21;
    const double A_input = config.real("ere.A_input");
    const ABRatioReport rep = ab_ratio_check(si, A_input > 0.0 ? A_input : 1.0);
    b["A_implied"] = rep.A_implied;
    if (A_input > 0.0) {
        b["A_input"] = rep.A_input;
        b["relative_deviation"] = rep.deviation;
    }
    j["coefficients"] = b;
    out.write("ere.json", j.dump(2) + "\n");
    console << csv;
}

void run_validity(const RunConfig& config, const std::vector<SweepPoint>& points, OutputDir& out,
                  std::ostream& console) {
    SweepSettings settings;
    settings.ensemble = ensemble_config(config);
    settings.A = settings.ensemble.bloch.A;
    const auto rows = sweep_validity(points, settings);
    const int p_max = static_cast<int>(config.count("validity.p_max"));

    std::string csv = "gamma,delta,R0,r,eps_dev,stderr,flatness_flag\n";
    ordered_json list = ordered_json::array();
    std::size_t failures = 0;
    for (const auto& row : rows) {
        const bool ok = !row.error;
        csv += fmt::format("{},{},{},{},{},{},{}\n", row.point.gamma, row.point.delta, row.point.R0, row.r,
                           ok ? num(row.eps_dev) : "nan", ok ? num(row.std_error) : "nan",
                           row.flatness_flag ? 1 : 0);
        ordered_json e;
        e["gamma"] = row.point.gamma;
        e["delta"] = row.point.delta;
        e["R0"] = row.point.R0;
        e["R"] = row.R;
        e["r"] = row.r;
        e["flag"] = to_string(row.flag);
        e["flatness"] = row.flatness;
        e["flatness_flag"] = row.flatness_flag;
        e["seed"] = row.seed;
        if (ok) {
            e["eps_dev"] = row.eps_dev;
            e["stderr"] = row.std_error;
            e["t_at_max"] = row.t_at_max;
            ValidityConfig vc{row.point.gamma, row.point.delta, row.point.R0, std::max(p_max, 1), settings.A};
            e["sp_magnitudes"] = sp_magnitudes(vc);
        } else {
            e["error"] = *row.error;
            ++failures;
        }
        list.push_back(e);
    }
    out.write("validity.csv", csv);

    ordered_json j = header(config);
    j["n_points"] = rows.size();
    j["n_failed"] = failures;
    j["points"] = list;
    out.write(fmt::format("{}.json", to_string(config.command())), j.dump(2) + "\n");
    console << fmt::format("{}: {} points, {} failed\n", to_string(config.command()), rows.size(), failures);
    for (const auto& row : rows)
        if (row.error) console << "  " << *row.error << "\n";
}

std::vector<SweepPoint> cartesian(const RunConfig& config) {
    std::vector<SweepPoint> points;
    for (double g : config.reals("sweep.gamma"))
        for (double d : config.reals("sweep.delta"))
            for (double r0 : config.reals("sweep.R0")) points.push_back({g, d, r0});
    return points;
}

}  // namespace

std::vector<std::string> run(const RunConfig& config, const std::string& out_dir, std::ostream& console) {
    OutputDir out(out_dir);
    switch (config.command()) {
        case Command::Simulate: run_simulate(config, out, console); break;
        case Command::Correlate: run_correlate(config, out, console); break;
        case Command::Ere: run_ere(config, out, console); break;
        case Command::Validate: run_validity(config, config.points("validate.points"), out, console); break;
        case Command::Sweep: run_validity(config, cartesian(config), out, console); break;
    }
    out.write("manifest.cfg", config.manifest());
    return out.files();
}

std::string output_help(Command command) {
    switch (command) {
        case Command::Simulate:
            return "Outputs:\n"
                   "  trace.csv      t,n_bar,stderr: ensemble mean inversion and its standard error\n"
                   "  simulate.json  summary with the rate-equation comparison\n"
                   "  manifest.cfg   resolved configuration; rerun with --config\n";
        case Command::Correlate:
            return "Outputs:\n"
                   "  correlation.csv    lag,ReC,ImC,ReCn,ImCn,stderr: C(t_ref, t_ref - lag) and\n"
                   "                     C_n(t_ref, t_ref - lag); stderr is the batch-means error of C\n"
                   "  decorrelation.csv  lag,ReD,ImD: (C_n - C n_bar) / C(0)\n"
                   "  correlate.json     summary with the analytic correlation\n"
                   "  manifest.cfg       resolved configuration; rerun with --config\n";
        case Command::Ere:
            return "Outputs (ere.csv is also printed):\n"
                   "  ere.csv       t,n_bar,n_weak: closed-form rate-equation trace and weak-field trace\n"
                   "  ere.json      steady state, rates and B / A diagnostics. B is in m^3 J^-1 s^-2,\n"
                   "                per unit spectral energy density per unit ANGULAR frequency omega\n"
                   "  manifest.cfg  resolved configuration; rerun with --config\n";
        case Command::Validate:
        case Command::Sweep:
            return fmt::format(
                "Outputs:\n"
                "  validity.csv  gamma,delta,R0,r,eps_dev,stderr,flatness_flag: one row per point;\n"
                "                eps_dev = max |n_bar - n_ERE| over [3/gamma, t_end], stderr at that time,\n"
                "                flatness_flag = 1 when 2A|delta|/(gamma^2+delta^2) > 0.1\n"
                "  {}.json  per-point details: R, flag (green r<=0.1, amber r<=0.5, red), S_p magnitudes\n"
                "  manifest.cfg  resolved configuration; rerun with --config\n",
                to_string(command));
    }
    return {};
}

}  // namespace blochere
