// Flat "section.key = value" run configuration.
//
// Every known key has a type and a default. Values are stored in canonical
// text form (numbers in shortest round-trip notation), so a written manifest
// parses back to the identical configuration.
#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "blochere/ensemble.hpp"
#include "blochere/ere.hpp"
#include "blochere/validity.hpp"

namespace blochere {

enum class Command { Simulate, Correlate, Ere, Validate, Sweep };

Command parse_command(const std::string& name);
const char* to_string(Command command);

enum class KeyType { Real, Count, Text, Choice, RealList, PointList };

struct KeySpec {
    std::string key;
    KeyType type;
    std::string default_value;
    std::vector<std::string> choices;  ///< Choice only
    std::string help;
};

/// All recognised keys in manifest order.
const std::vector<KeySpec>& key_registry();

class RunConfig {
public:
    explicit RunConfig(Command command = Command::Simulate);

    Command command() const { return command_; }

    /// Validates and stores a value. Throws ConfigError naming the key.
    void set(const std::string& key, const std::string& value);
    /// "key=value" form used by --set.
    void set_assignment(const std::string& assignment);

    const std::string& text(const std::string& key) const;
    double real(const std::string& key) const;
    std::uint64_t count(const std::string& key) const;
    std::vector<double> reals(const std::string& key) const;
    std::vector<SweepPoint> points(const std::string& key) const;

    /// Reads "key = value" lines; '#' starts a comment. Keys may not repeat
    /// within one source.
    void merge(std::istream& in, const std::string& source_name);
    void merge_file(const std::string& path);

    /// Resolved configuration, one "key = value" line per key, defaults included.
    std::string manifest() const;
    /// Key/value pairs that determine results (run.workers and run.out excluded).
    std::map<std::string, std::string> result_keys() const;

    /// Checks cross-key requirements (e.g. a table path for tabulated spectra).
    void check() const;

private:
    Command command_;
    std::map<std::string, std::string> values_;
};

/// Builds a configuration: defaults, then the file (if any), then overrides in order.
RunConfig parse_config(Command command, const std::string& config_path,
                       const std::vector<std::string>& overrides);

/// Ensemble settings described by a configuration.
EnsembleConfig ensemble_config(const RunConfig& config);
EREParams ere_params(const RunConfig& config);
SIConstants si_constants(const RunConfig& config);

}  // namespace blochere
