#include "graspcause/report.hpp"

#include <sstream>
#include <stdexcept>

namespace graspcause::report {

namespace {

const char* const kSchema = R"SCHEMA({
  "type": "object",
  "required": ["schema_version", "generated_at", "version", "config", "stages"],
  "properties": {
    "schema_version": {"type": "integer"},
    "generated_at": {"type": "string"},
    "version": {"type": "string"},
    "config": {"type": "object"},
    "dataset": {
      "type": "object",
      "required": ["dataset_id", "n", "objects", "surfaces", "hands", "distance"],
      "properties": {
        "dataset_id": {"type": "string"},
        "n": {"type": "integer"},
        "objects": {"type": "object"},
        "surfaces": {"type": "object"},
        "hands": {"type": "object"},
        "distance": {
          "type": "object",
          "required": ["threshold", "n_close", "n_far", "close_range", "far_range"],
          "properties": {
            "threshold": {"type": "number"},
            "n_close": {"type": "integer"},
            "n_far": {"type": "integer"},
            "close_range": {"type": "array", "items": {"type": "number"}},
            "far_range": {"type": "array", "items": {"type": "number"}}
          }
        }
      }
    },
    "estimand": {
      "type": "object",
      "required": ["treatment", "outcome", "adjustment_set", "identifiable", "warnings"],
      "properties": {
        "treatment": {"type": "string"},
        "outcome": {"type": "string"},
        "adjustment_set": {"type": "array", "items": {"type": "string"}},
        "identifiable": {"type": "boolean"},
        "warnings": {"type": "array", "items": {"type": "string"}}
      }
    },
    "estimates": {
      "type": "array",
      "items": {
        "type": "object",
        "required": ["estimator", "effect", "ci_low", "ci_high", "alpha", "n"],
        "properties": {
          "estimator": {"type": "string", "enum": ["LDML", "LDRL", "FDML", "FDRL"]},
          "effect": {"type": "number"},
          "ci_low": {"type": "number"},
          "ci_high": {"type": "number"},
          "alpha": {"type": "number"},
          "n": {"type": "integer"},
          "diagnostics": {"type": "object"},
          "warnings": {"type": "array", "items": {"type": "string"}}
        }
      }
    },
    "refutations": {
      "type": "array",
      "items": {
        "type": "object",
        "required": ["estimator", "strategy", "original_effect", "recomputed_effect", "delta_abs", "reps"],
        "properties": {
          "estimator": {"type": "string", "enum": ["LDML", "LDRL", "FDML", "FDRL"]},
          "strategy": {"type": "string", "enum": ["placebo", "common_cause", "subset"]},
          "original_effect": {"type": "number"},
          "recomputed_effect": {"type": "number"},
          "delta_abs": {"type": "number"},
          "reps": {"type": "integer"},
          "seed": {"type": "integer"},
          "warnings": {"type": "array", "items": {"type": "string"}}
        }
      }
    },
    "interpretation": {
      "type": "object",
      "required": ["estimator", "max_depth", "leaves"],
      "properties": {
        "estimator": {"type": "string"},
        "max_depth": {"type": "integer"},
        "leaves": {
          "type": "array",
          "items": {
            "type": "object",
            "required": ["path", "n", "mean_cate", "direction", "intensity"],
            "properties": {
              "path": {"type": "string"},
              "n": {"type": "integer"},
              "mean_cate": {"type": "number"},
              "direction": {"type": "string", "enum": ["negative", "neutral", "positive"]},
              "intensity": {"type": "string", "enum": ["weak", "strong"]}
            }
          }
        },
        "dot_file": {"type": "string"}
      }
    },
    "stages": {"type": "object"}
  }
})SCHEMA";

void fail(const std::string& path, const std::string& message) {
    throw std::runtime_error("schema violation at " + (path.empty() ? "$" : path) + ": " + message);
}

bool type_matches(const std::string& type, const nlohmann::json& value) {
    if (type == "object") return value.is_object();
    if (type == "array") return value.is_array();
    if (type == "string") return value.is_string();
    if (type == "boolean") return value.is_boolean();
    if (type == "integer") return value.is_number_integer() || value.is_number_unsigned();
    if (type == "number") return value.is_number();
    if (type == "null") return value.is_null();
    return false;
}

void validate_node(const nlohmann::json& schema, const nlohmann::json& value,
                   const std::string& path) {
    if (schema.contains("type")) {
        const std::string type = schema.at("type").get<std::string>();
        if (!type_matches(type, value)) {
            fail(path, "expected " + type + ", got " + std::string(value.type_name()));
        }
    }
    if (schema.contains("enum")) {
        bool found = false;
        for (const auto& allowed : schema.at("enum")) {
            if (allowed == value) {
                found = true;
                break;
            }
        }
        if (!found) fail(path, "value not in enum");
    }
    if (value.is_object()) {
        if (schema.contains("required")) {
            for (const auto& key : schema.at("required")) {
                if (!value.contains(key.get<std::string>())) {
                    fail(path, "missing required key '" + key.get<std::string>() + "'");
                }
            }
        }
        if (schema.contains("properties")) {
            for (const auto& [key, sub] : schema.at("properties").items()) {
                if (value.contains(key)) validate_node(sub, value.at(key), path + "." + key);
            }
            if (schema.contains("additionalProperties") &&
                schema.at("additionalProperties").is_boolean() &&
                !schema.at("additionalProperties").get<bool>()) {
                for (const auto& [key, sub] : value.items()) {
                    (void)sub;
                    if (!schema.at("properties").contains(key)) {
                        fail(path, "unexpected key '" + key + "'");
                    }
                }
            }
        }
    }
    if (value.is_array() && schema.contains("items")) {
        for (std::size_t i = 0; i < value.size(); ++i) {
            validate_node(schema.at("items"), value[i], path + "[" + std::to_string(i) + "]");
        }
    }
}

nlohmann::ordered_json stage_json(const std::map<std::string, StageStatus>& stages) {
    nlohmann::ordered_json out;
    for (const auto& [name, status] : stages) {
        nlohmann::ordered_json s;
        s["status"] = status.status;
        if (!status.reason.empty()) s["reason"] = status.reason;
        out[name] = s;
    }
    return out;
}

std::string format_number(double v) {
    std::ostringstream out;
    out.precision(4);
    out << v;
    return out.str();
}

}  // namespace

DatasetSummary summarize(const events::EventTable& table) {
    if (table.events.empty()) throw std::invalid_argument("summarize: empty table");
    DatasetSummary s;
    s.dataset_id = table.dataset_id;
    s.n = table.size();
    std::vector<double> distances;
    distances.reserve(table.size());
    for (const events::GraspEvent& ev : table.events) {
        ++s.object_counts[ev.object_category];
        ++s.surface_counts[ev.surface_id];
        ++s.hand_counts[events::to_string(ev.hand)];
        distances.push_back(ev.head_hand_distance_m);
    }
    s.split = events::median_split(distances);
    return s;
}

nlohmann::ordered_json to_json(const RunReport& report) {
    nlohmann::ordered_json j;
    j["schema_version"] = 1;
    j["generated_at"] = report.generated_at;
    j["version"] = report.version;
    j["config"] = report.config_echo;

    if (report.has_dataset) {
        nlohmann::ordered_json dataset;
        dataset["dataset_id"] = report.dataset.dataset_id;
        dataset["n"] = report.dataset.n;
        dataset["objects"] = report.dataset.object_counts;
        dataset["surfaces"] = report.dataset.surface_counts;
        dataset["hands"] = report.dataset.hand_counts;
        dataset["distance"] = {
            {"threshold", report.dataset.split.threshold},
            {"n_close", report.dataset.split.n_close},
            {"n_far", report.dataset.split.n_far},
            {"close_range",
             {report.dataset.split.close_range.first, report.dataset.split.close_range.second}},
            {"far_range",
             {report.dataset.split.far_range.first, report.dataset.split.far_range.second}},
        };
        j["dataset"] = dataset;
    }

    if (report.has_estimand) {
        nlohmann::ordered_json e;
        e["treatment"] = report.estimand.treatment;
        e["outcome"] = report.estimand.outcome;
        e["adjustment_set"] = report.estimand.adjustment_set;
        e["identifiable"] = report.estimand.identifiable;
        e["warnings"] = report.estimand.warnings;
        j["estimand"] = e;
    }

    auto estimates = nlohmann::ordered_json::array();
    for (const EstimateRow& row : report.estimates) {
        nlohmann::ordered_json r;
        r["estimator"] = row.estimator;
        r["effect"] = row.effect;
        r["ci_low"] = row.ci_low;
        r["ci_high"] = row.ci_high;
        r["alpha"] = row.alpha;
        r["n"] = row.n;
        r["diagnostics"] = row.diagnostics;
        r["warnings"] = row.warnings;
        estimates.push_back(std::move(r));
    }
    j["estimates"] = estimates;

    auto refutations = nlohmann::ordered_json::array();
    for (const RefutationRow& row : report.refutations) {
        nlohmann::ordered_json r;
        r["estimator"] = row.estimator;
        r["strategy"] = row.strategy;
        r["original_effect"] = row.original_effect;
        r["recomputed_effect"] = row.recomputed_effect;
        r["delta_abs"] = row.delta_abs;
        r["reps"] = row.reps;
        r["seed"] = row.seed;
        r["warnings"] = row.warnings;
        refutations.push_back(std::move(r));
    }
    j["refutations"] = refutations;

    if (report.has_interpretation) {
        nlohmann::ordered_json section;
        section["estimator"] = report.interpretation.estimator;
        section["max_depth"] = report.interpretation.max_depth;
        auto leaves = nlohmann::ordered_json::array();
        for (const InterpretationLeaf& leaf : report.interpretation.leaves) {
            leaves.push_back({{"path", leaf.path},
                              {"n", leaf.n},
                              {"mean_cate", leaf.mean_cate},
                              {"direction", leaf.direction},
                              {"intensity", leaf.intensity}});
        }
        section["leaves"] = leaves;
        if (!report.interpretation.dot_file.empty()) {
            section["dot_file"] = report.interpretation.dot_file;
        }
        j["interpretation"] = section;
    }

    j["stages"] = stage_json(report.stages);
    return j;
}

std::string to_markdown(const RunReport& report) {
    std::ostringstream md;
    md << "# graspcause report\n\n";
    md << "Generated: " << report.generated_at << " (graspcause " << report.version << ")\n\n";

    if (report.has_dataset) {
        md << "## Dataset `" << report.dataset.dataset_id << "` (" << report.dataset.n
           << " events)\n\n";
        md << "| Object | Count |\n|---|---|\n";
        for (const auto& [name, count] : report.dataset.object_counts) {
            md << "| " << name << " | " << count << " |\n";
        }
        md << "\n| Surface | Count |\n|---|---|\n";
        for (const auto& [name, count] : report.dataset.surface_counts) {
            md << "| " << name << " | " << count << " |\n";
        }
        md << "\n| Hand | Count |\n|---|---|\n";
        for (const auto& [name, count] : report.dataset.hand_counts) {
            md << "| " << name << " | " << count << " |\n";
        }
        md << "\n| Distance | Count | Range (m) |\n|---|---|---|\n";
        md << "| Close | " << report.dataset.split.n_close << " | ("
           << format_number(report.dataset.split.close_range.first) << ", "
           << format_number(report.dataset.split.close_range.second) << ") |\n";
        md << "| Far | " << report.dataset.split.n_far << " | ("
           << format_number(report.dataset.split.far_range.first) << ", "
           << format_number(report.dataset.split.far_range.second) << ") |\n\n";
    }

    if (report.has_estimand) {
        md << "## Estimand\n\n";
        md << "Treatment `" << report.estimand.treatment << "`, outcome `"
           << report.estimand.outcome << "`, adjustment set {";
        bool first = true;
        for (const std::string& name : report.estimand.adjustment_set) {
            if (!first) md << ", ";
            md << name;
            first = false;
        }
        md << "}, identifiable: " << (report.estimand.identifiable ? "yes" : "no") << "\n\n";
        for (const std::string& w : report.estimand.warnings) md << "- " << w << "\n";
        md << "\n";
    }

    if (!report.estimates.empty()) {
        md << "## Effects\n\n";
        md << "| Samples | Estimator | Effect | Conf. Intv. |\n|---|---|---|---|\n";
        for (const EstimateRow& row : report.estimates) {
            md << "| " << row.n << " | " << row.estimator << " | " << format_number(row.effect)
               << " | [" << format_number(row.ci_low) << ", " << format_number(row.ci_high)
               << "] |\n";
        }
        md << "\n";
    }

    if (!report.refutations.empty()) {
        md << "## Refutations\n\n";
        md << "| Estimator | Strategy | Recomputed (|delta|) |\n|---|---|---|\n";
        for (const RefutationRow& row : report.refutations) {
            md << "| " << row.estimator << " | " << row.strategy << " | "
               << format_number(row.recomputed_effect) << " (" << format_number(row.delta_abs)
               << ") |\n";
        }
        md << "\n";
    }

    if (report.has_interpretation) {
        md << "## Interpretation (" << report.interpretation.estimator << ", depth "
           << report.interpretation.max_depth << ")\n\n";
        md << "| Leaf | n | Mean CATE | Color |\n|---|---|---|---|\n";
        for (const InterpretationLeaf& leaf : report.interpretation.leaves) {
            md << "| " << leaf.path << " | " << leaf.n << " | " << format_number(leaf.mean_cate)
               << " | " << leaf.direction
               << (leaf.direction == "neutral" ? "" : std::string("/") + leaf.intensity) << " |\n";
        }
        md << "\n";
    }

    md << "## Stages\n\n";
    for (const auto& [name, status] : report.stages) {
        md << "- " << name << ": " << status.status;
        if (!status.reason.empty()) md << " (" << status.reason << ")";
        md << "\n";
    }
    return md.str();
}

const char* report_schema_text() { return kSchema; }

void validate_schema(const nlohmann::json& schema, const nlohmann::json& value) {
    validate_node(schema, value, "");
}

void validate_report_json(const nlohmann::json& value) {
    static const nlohmann::json schema = nlohmann::json::parse(kSchema);
    validate_schema(schema, value);
}

}  // namespace graspcause::report
