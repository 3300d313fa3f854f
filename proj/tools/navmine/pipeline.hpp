#pragma once

#include <cstdint>
#include <filesystem>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "navmine/navmine.hpp"

namespace navmine::cli {

/// MinFreq grid 0.1, 0.2, ..., 0.9.
std::vector<double> default_min_freqs();

struct Config {
    std::vector<std::filesystem::path> inputs;
    LogFormat format = LogFormat::common;
    double timeout_minutes = 30.0;
    std::vector<double> alphas = {1.0, 0.8};
    std::vector<double> min_freqs = default_min_freqs();
    CleaningRules rules;
    std::uint64_t seed = 1;
    std::filesystem::path out = "navmine-out";
    unsigned workers = 1;
    OccurrenceMode occurrence = OccurrenceMode::plain;
    PathOptions path;
    CoherenceOptions coherence;

    /// Throws ConfigError when a parameter is out of range.
    void validate() const;
};

class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class PipelineError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class Stage { parse_stats, sessions, matrices, cluster, evaluate, sweep, all };

std::string_view to_string(Stage stage) noexcept;

/// Runs the pipeline up to `stage`, reusing persisted sessions and matrices
/// from `config.out` when they are fresh. Progress goes to `log`,
/// diagnostics to `err`. Returns the process exit status.
int run_stage(Stage stage, const Config& config, std::ostream& log, std::ostream& err);

inline int run_pipeline(const Config& config, std::ostream& log, std::ostream& err) {
    return run_stage(Stage::all, config, log, err);
}

}  // namespace navmine::cli
