// bloch_ere: command-line front end.
#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "blochere/config.hpp"
#include "blochere/errors.hpp"
#include "blochere/runner.hpp"

namespace {

struct Flags {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> workers;
    std::optional<std::string> out;
    std::vector<std::string> sets;
};

const char* describe(blochere::Command c) {
    using blochere::Command;
    switch (c) {
        case Command::Simulate: return "Integrate an ensemble of atoms and emit the mean inversion n_bar(t)";
        case Command::Correlate: return "Estimate the field correlations C and C_n and the closure residual";
        case Command::Ere: return "Closed-form rate-equation trace and B coefficient diagnostics";
        case Command::Validate: return "Bloch vs rate-equation deviation at the points in validate.points";
        case Command::Sweep: return "Bloch vs rate-equation deviation over the grid sweep.gamma x sweep.delta x sweep.R0";
    }
    return "";
}

std::string key_listing() {
    std::string out = "Configuration keys (flat 'key = value' file, '#' comments):\n";
    for (const auto& k : blochere::key_registry())
        out += fmt::format("  {:<22} {} [default: {}]\n", k.key, k.help,
                           k.default_value.empty() ? "\"\"" : k.default_value);
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Stochastic optical Bloch ensembles checked against Einstein's rate equations"};
    app.require_subcommand(1);
    bool list_keys = false;
    app.add_flag("--list-keys", list_keys, "Print every configuration key with its default and exit");
    app.footer("Per-key overrides: --set section.key=value (repeatable). "
               "BLOCH_ERE_WORKERS sets the worker count when neither --workers nor run.workers does.");

    Flags flags;
    std::optional<blochere::Command> chosen;
    for (auto c : {blochere::Command::Simulate, blochere::Command::Correlate, blochere::Command::Ere,
                   blochere::Command::Validate, blochere::Command::Sweep}) {
        CLI::App* sub = app.add_subcommand(blochere::to_string(c), describe(c));
        sub->add_option("--config", flags.config_path, "Configuration or manifest file");
        sub->add_option("--seed", flags.seed, "Master seed (run.seed)");
        sub->add_option("--workers", flags.workers, "Worker threads (run.workers)");
        sub->add_option("--out", flags.out, "Output directory (run.out)");
        sub->add_option("--set", flags.sets, "Override one key, key=value")->take_all()->allow_extra_args(false);
        sub->footer(blochere::output_help(c));
        sub->callback([&chosen, c] { chosen = c; });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (list_keys) {
            std::cout << key_listing();
            return 0;
        }
        return app.exit(e);
    }
    if (list_keys) {
        std::cout << key_listing();
        return 0;
    }

    try {
        std::vector<std::string> overrides = flags.sets;
        if (flags.seed) overrides.push_back(fmt::format("run.seed={}", *flags.seed));
        if (flags.workers) overrides.push_back(fmt::format("run.workers={}", *flags.workers));
        if (flags.out) overrides.push_back(fmt::format("run.out={}", *flags.out));
        const auto config = blochere::parse_config(*chosen, flags.config_path, overrides);
        const auto files = blochere::run(config, config.text("run.out"), std::cout);
        std::cerr << fmt::format("wrote {} file(s) to {}\n", files.size(), config.text("run.out"));
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
