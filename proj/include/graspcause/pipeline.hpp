#pragma once

#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "graspcause/effects.hpp"
#include "graspcause/refute.hpp"
#include "graspcause/report.hpp"

namespace graspcause::cli {

/// Unusable configuration or inputs; maps to exit code 2 before any output
/// file is written. Stage failures map to exit code 1 with a partial report.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct RefuteConfig {
    std::vector<refute::Strategy> strategies = {refute::Strategy::PlaceboTreatmentOutcome,
                                                refute::Strategy::RandomCommonCause,
                                                refute::Strategy::DataSubset};
    double strength = 0.02;
    double fraction = 0.9;
    int reps = 10;
};

struct InterpretConfig {
    int max_depth = 2;
    effects::EstimatorId source = effects::EstimatorId::LDML;
};

struct RunConfig {
    std::string graph_spec = "default";  // "default" or a graph JSON path
    std::filesystem::path data;
    std::string data_as_written;  // config echo keeps the original string
    std::vector<std::string> x_features = {"object_volume"};
    std::vector<std::string> zero_variance;  // explicit symbols
    bool auto_zero_variance = true;          // detect constant fields from the data
    std::vector<effects::EstimatorId> estimators = {
        effects::EstimatorId::LDML, effects::EstimatorId::LDRL, effects::EstimatorId::FDML,
        effects::EstimatorId::FDRL};
    int k = 5;
    double alpha = 0.1;
    double clip_lo = 0.05;
    double clip_hi = 0.95;
    bool linear_nuisance = false;
    RefuteConfig refute;
    InterpretConfig interpret;
    std::filesystem::path output_dir = "graspcause_out";
    std::uint64_t seed = 0;
    bool seed_set = false;
};

/// Reads the run config JSON; relative paths resolve against the config file
/// directory. Throws ConfigError on malformed or incomplete configs.
RunConfig load_run_config(const std::filesystem::path& config_path);

struct RunOutcome {
    report::RunReport report;
    int exit_code = 0;  // 0 all stages ok, 1 at least one stage failed
};

/// Full pipeline: ingest, identify, estimate, refute, interpret; writes
/// report.json, report.md and interpret.dot into output_dir. Throws
/// ConfigError (no outputs written) for unusable configs.
RunOutcome run(const RunConfig& config);

/// Command-line entry: graspcause <run|identify|estimate|refute|interpret|synth|summarize>.
/// Returns 0 on success, 1 on stage failure, 2 on config/usage errors.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace graspcause::cli
