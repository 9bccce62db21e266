#pragma once

#include <map>
#include <string>
#include <vector>

#include "graspcause/causal_graph.hpp"
#include "graspcause/events.hpp"

#include "json.hpp"

namespace graspcause::report {

struct DatasetSummary {
    std::string dataset_id;
    std::size_t n = 0;
    std::map<std::string, int> object_counts;
    std::map<std::string, int> surface_counts;
    std::map<std::string, int> hand_counts;
    events::SplitSpec split;
};

DatasetSummary summarize(const events::EventTable& table);

struct EstimateRow {
    std::string estimator;
    double effect = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    double alpha = 0.1;
    int n = 0;
    std::map<std::string, double> diagnostics;
    std::vector<std::string> warnings;
};

struct RefutationRow {
    std::string estimator;
    std::string strategy;
    double original_effect = 0.0;
    double recomputed_effect = 0.0;
    double delta_abs = 0.0;
    int reps = 0;
    std::uint64_t seed = 0;
    std::vector<std::string> warnings;
};

struct InterpretationLeaf {
    std::string path;
    int n = 0;
    double mean_cate = 0.0;
    std::string direction;
    std::string intensity;
};

struct InterpretationSection {
    std::string estimator;
    int max_depth = 0;
    std::vector<InterpretationLeaf> leaves;
    std::string dot_file;
};

struct StageStatus {
    std::string status = "skipped";  // ok | skipped | error
    std::string reason;
};

struct RunReport {
    std::string generated_at;  // the one nondeterministic field
    std::string version;
    nlohmann::ordered_json config_echo;
    bool has_dataset = false;
    DatasetSummary dataset;
    bool has_estimand = false;
    graph::Estimand estimand;
    std::vector<EstimateRow> estimates;
    std::vector<RefutationRow> refutations;
    bool has_interpretation = false;
    InterpretationSection interpretation;
    std::map<std::string, StageStatus> stages;
};

nlohmann::ordered_json to_json(const RunReport& report);
std::string to_markdown(const RunReport& report);

/// The schema shipped at share/report.schema.json, embedded so validation
/// needs no filesystem lookup.
const char* report_schema_text();

/// Minimal JSON-schema checker (type, required, properties, items, enum,
/// additionalProperties); throws std::runtime_error naming the offending
/// path on the first violation.
void validate_schema(const nlohmann::json& schema, const nlohmann::json& value);

/// Convenience: validate a report payload against the embedded schema.
void validate_report_json(const nlohmann::json& value);

}  // namespace graspcause::report
