#include "graspcause/pipeline.hpp"

#include <chrono>
#include <ctime>
#include <fstream>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "graspcause/explain.hpp"
#include "graspcause/rng.hpp"
#include "graspcause/synth.hpp"
#include "graspcause/version.hpp"

namespace graspcause::cli {

namespace {

constexpr std::uint64_t kSeedEstimate = 17;
constexpr std::uint64_t kSeedRefute = 23;

std::string iso8601_now() {
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

graph::CausalGraph load_graph(const std::string& spec) {
    if (spec == "default") return graph::build_default_graph();
    try {
        return graph::CausalGraph::from_json(read_file(spec));
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError("graph file " + spec + ": " + e.what());
    }
}

/// Constant event fields cannot be adjusted for; map them to their graph
/// symbols so identification can drop them (a single right-dominant subject
/// makes DO constant, for example).
std::set<std::string> detect_zero_variance(const events::EventTable& table) {
    std::set<std::string> out;
    const events::GraspEvent& first = table.events.front();
    bool o = true, ov = true, s = true, sc = true, ss = true, dom = true;
    for (const events::GraspEvent& ev : table.events) {
        o = o && ev.object_category == first.object_category;
        ov = ov && ev.object_volume_m3 == first.object_volume_m3;
        s = s && ev.surface_id == first.surface_id;
        sc = sc && ev.surface_in_container == first.surface_in_container;
        ss = ss && ev.surface_sliding == first.surface_sliding;
        dom = dom && ev.dominant_hand == first.dominant_hand;
    }
    if (o) out.insert("O");
    if (ov) out.insert("OV");
    if (s) out.insert("S");
    if (sc) out.insert("SC");
    if (ss) out.insert("SS");
    if (dom) out.insert("DO");
    return out;
}

effects::EstimatorConfig estimator_config(const RunConfig& cfg) {
    effects::EstimatorConfig est = effects::default_config(derive_seed(cfg.seed, kSeedEstimate));
    est.k = cfg.k;
    est.alpha = cfg.alpha;
    est.clip_lo = cfg.clip_lo;
    est.clip_hi = cfg.clip_hi;
    est.linear_nuisance = cfg.linear_nuisance;
    return est;
}

nlohmann::ordered_json config_echo(const RunConfig& cfg) {
    nlohmann::ordered_json j;
    j["graph"] = cfg.graph_spec;
    j["data"] = cfg.data_as_written;
    j["x_features"] = cfg.x_features;
    if (cfg.auto_zero_variance) {
        j["zero_variance"] = "auto";
    } else {
        j["zero_variance"] = cfg.zero_variance;
    }
    auto estimators = nlohmann::ordered_json::array();
    for (const auto id : cfg.estimators) estimators.push_back(effects::to_string(id));
    j["estimators"] = {{"estimators", estimators},
                       {"k", cfg.k},
                       {"alpha", cfg.alpha},
                       {"clip", {cfg.clip_lo, cfg.clip_hi}},
                       {"nuisance", cfg.linear_nuisance ? "linear" : "forest"}};
    auto strategies = nlohmann::ordered_json::array();
    for (const auto s : cfg.refute.strategies) strategies.push_back(refute::to_string(s));
    j["refute"] = {{"strategies", strategies},
                   {"strength", cfg.refute.strength},
                   {"fraction", cfg.refute.fraction},
                   {"reps", cfg.refute.reps}};
    j["interpret"] = {{"max_depth", cfg.interpret.max_depth},
                      {"estimator", effects::to_string(cfg.interpret.source)}};
    j["seed"] = cfg.seed;
    return j;
}

report::EstimateRow to_row(const effects::EffectEstimate& est) {
    report::EstimateRow row;
    row.estimator = effects::to_string(est.estimator);
    row.effect = est.effect;
    row.ci_low = est.ci_low;
    row.ci_high = est.ci_high;
    row.alpha = est.alpha;
    row.n = est.n;
    row.diagnostics = est.diagnostics;
    row.warnings = est.warnings;
    return row;
}

report::RefutationRow to_row(const std::string& estimator, const refute::RefutationReport& rep) {
    report::RefutationRow row;
    row.estimator = estimator;
    row.strategy = refute::to_string(rep.strategy);
    row.original_effect = rep.original_effect;
    row.recomputed_effect = rep.recomputed_effect;
    row.delta_abs = rep.delta_abs;
    row.reps = rep.reps;
    row.seed = rep.seed;
    row.warnings = rep.warnings;
    return row;
}

}  // namespace

RunConfig load_run_config(const std::filesystem::path& config_path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_file(config_path));
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError("config " + config_path.string() + ": " + e.what());
    }

    RunConfig cfg;
    try {
        const auto base = std::filesystem::absolute(config_path).parent_path();
        cfg.graph_spec = j.value("graph", std::string("default"));
        if (cfg.graph_spec != "default" &&
            std::filesystem::path(cfg.graph_spec).is_relative()) {
            cfg.graph_spec = (base / cfg.graph_spec).string();
        }
        if (!j.contains("data")) throw ConfigError("config: missing 'data'");
        cfg.data_as_written = j.at("data").get<std::string>();
        cfg.data = cfg.data_as_written;
        if (cfg.data.is_relative()) cfg.data = base / cfg.data;
        if (j.contains("x_features")) {
            cfg.x_features = j.at("x_features").get<std::vector<std::string>>();
        }
        if (j.contains("zero_variance")) {
            if (j.at("zero_variance").is_string()) {
                if (j.at("zero_variance") != "auto") {
                    throw ConfigError("config: zero_variance must be \"auto\" or a list");
                }
                cfg.auto_zero_variance = true;
            } else {
                cfg.auto_zero_variance = false;
                cfg.zero_variance = j.at("zero_variance").get<std::vector<std::string>>();
            }
        }
        if (j.contains("estimators")) {
            const auto& e = j.at("estimators");
            if (e.contains("estimators")) {
                cfg.estimators.clear();
                for (const auto& name : e.at("estimators")) {
                    cfg.estimators.push_back(effects::estimator_from_string(name.get<std::string>()));
                }
            }
            cfg.k = e.value("k", cfg.k);
            cfg.alpha = e.value("alpha", cfg.alpha);
            if (e.contains("clip")) {
                const auto clip = e.at("clip").get<std::vector<double>>();
                if (clip.size() != 2) throw ConfigError("config: clip must be [lo, hi]");
                cfg.clip_lo = clip[0];
                cfg.clip_hi = clip[1];
            }
            cfg.linear_nuisance = e.value("nuisance", std::string("forest")) == "linear";
            if (e.contains("seed")) {
                cfg.seed = e.at("seed").get<std::uint64_t>();
                cfg.seed_set = true;
            }
        }
        if (j.contains("refute")) {
            const auto& r = j.at("refute");
            if (r.contains("strategies")) {
                cfg.refute.strategies.clear();
                for (const auto& name : r.at("strategies")) {
                    cfg.refute.strategies.push_back(
                        refute::strategy_from_string(name.get<std::string>()));
                }
            }
            cfg.refute.strength = r.value("strength", cfg.refute.strength);
            cfg.refute.fraction = r.value("fraction", cfg.refute.fraction);
            cfg.refute.reps = r.value("reps", cfg.refute.reps);
        }
        if (j.contains("interpret")) {
            const auto& i = j.at("interpret");
            cfg.interpret.max_depth = i.value("max_depth", cfg.interpret.max_depth);
            if (i.contains("estimator")) {
                cfg.interpret.source =
                    effects::estimator_from_string(i.at("estimator").get<std::string>());
            }
        }
        if (j.contains("output_dir")) {
            std::filesystem::path dir = j.at("output_dir").get<std::string>();
            cfg.output_dir = dir.is_relative() ? base / dir : dir;
        }
        if (j.contains("seed")) {
            cfg.seed = j.at("seed").get<std::uint64_t>();
            cfg.seed_set = true;
        }
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError("config " + config_path.string() + ": " + e.what());
    }
    return cfg;
}

RunOutcome run(const RunConfig& config) {
    // pre-flight: fail before any output file exists
    if (!config.seed_set) throw ConfigError("config: a seed is required (reports must reproduce)");
    if (config.estimators.empty()) throw ConfigError("config: no estimators requested");
    if (!std::filesystem::exists(config.data)) {
        throw ConfigError("config: data file not found: " + config.data.string());
    }
    const graph::CausalGraph model = load_graph(config.graph_spec);

    RunOutcome outcome;
    report::RunReport& rep = outcome.report;
    rep.version = kVersion;
    rep.generated_at = iso8601_now();
    rep.config_echo = config_echo(config);

    auto mark = [&](const std::string& stage, const std::string& status,
                    const std::string& reason = "") {
        rep.stages[stage] = {status, reason};
        if (status == "error") outcome.exit_code = 1;
    };

    events::EventTable table;
    bool have_table = false;
    try {
        table = events::parse_events_file(config.data, config.data.stem().string());
        rep.dataset = report::summarize(table);
        rep.has_dataset = true;
        have_table = true;
        mark("ingest", "ok");
    } catch (const std::exception& e) {
        mark("ingest", "error", e.what());
    }

    graph::Estimand estimand;
    if (have_table) {
        try {
            std::set<std::string> zero_variance(config.zero_variance.begin(),
                                                config.zero_variance.end());
            if (config.auto_zero_variance) {
                const auto detected = detect_zero_variance(table);
                zero_variance.insert(detected.begin(), detected.end());
            }
            estimand = graph::identify(model, "D", "H", zero_variance);
            rep.estimand = estimand;
            rep.has_estimand = true;
            mark("identify", "ok");
        } catch (const std::exception& e) {
            mark("identify", "error", e.what());
        }
    } else {
        mark("identify", "skipped", "ingest failed");
    }

    events::DesignMatrix dm;
    std::map<effects::EstimatorId, effects::EffectEstimate> estimates;
    if (rep.has_estimand) {
        const effects::EstimatorConfig est_cfg = estimator_config(config);
        std::string estimate_errors;
        try {
            dm = events::encode(table, estimand, config.x_features);
            for (const auto id : config.estimators) {
                try {
                    const effects::EffectEstimate est = effects::estimate(dm, id, est_cfg);
                    estimates.emplace(id, est);
                    rep.estimates.push_back(to_row(est));
                } catch (const std::exception& e) {
                    estimate_errors += std::string(estimate_errors.empty() ? "" : "; ") +
                                       effects::to_string(id) + ": " + e.what();
                }
            }
        } catch (const std::exception& e) {
            estimate_errors = e.what();
        }
        if (estimate_errors.empty()) {
            mark("estimate", "ok");
        } else {
            mark("estimate", "error", estimate_errors);
        }
    } else {
        mark("estimate", "skipped", "no estimand");
    }

    if (!estimates.empty()) {
        const effects::EstimatorConfig est_cfg = estimator_config(config);
        std::string refute_errors;
        std::uint64_t combo = 0;
        for (const auto id : config.estimators) {
            if (estimates.find(id) == estimates.end()) continue;
            for (const auto strategy : config.refute.strategies) {
                const std::uint64_t seed = derive_seed(config.seed, kSeedRefute, combo++);
                try {
                    refute::RefutationReport r;
                    switch (strategy) {
                        case refute::Strategy::PlaceboTreatmentOutcome:
                            r = refute::refute_placebo(dm, id, est_cfg, config.refute.reps, seed);
                            break;
                        case refute::Strategy::RandomCommonCause:
                            r = refute::refute_random_common_cause(dm, id, est_cfg,
                                                                   config.refute.strength, seed);
                            break;
                        case refute::Strategy::DataSubset:
                            r = refute::refute_subset(dm, id, est_cfg, config.refute.fraction,
                                                      config.refute.reps, seed);
                            break;
                    }
                    rep.refutations.push_back(to_row(effects::to_string(id), r));
                } catch (const std::exception& e) {
                    refute_errors += std::string(refute_errors.empty() ? "" : "; ") +
                                     effects::to_string(id) + "/" + refute::to_string(strategy) +
                                     ": " + e.what();
                }
            }
        }
        if (refute_errors.empty()) {
            mark("refute", "ok");
        } else {
            mark("refute", "error", refute_errors);
        }
    } else {
        mark("refute", "skipped", "no estimates");
    }

    std::string dot_text;
    if (!estimates.empty() && estimates.count(config.interpret.source) > 0) {
        try {
            const auto& source = estimates.at(config.interpret.source);
            const explain::InterpretTree tree = explain::fit_cate_tree(
                dm.x, source.cate, config.interpret.max_depth, dm.x_names);
            rep.interpretation.estimator = effects::to_string(config.interpret.source);
            rep.interpretation.max_depth = config.interpret.max_depth;
            for (const auto& leaf : explain::leaf_table(tree)) {
                rep.interpretation.leaves.push_back({leaf.path, leaf.n, leaf.mean_cate,
                                                     explain::to_string(leaf.color.direction),
                                                     explain::to_string(leaf.color.intensity)});
            }
            rep.interpretation.dot_file = "interpret.dot";
            rep.has_interpretation = true;
            dot_text = explain::render_dot(tree);
            mark("interpret", "ok");
        } catch (const std::exception& e) {
            mark("interpret", "error", e.what());
        }
    } else {
        mark("interpret", "skipped",
             estimates.empty() ? "no estimates"
                               : "source estimator " +
                                     std::string(effects::to_string(config.interpret.source)) +
                                     " unavailable");
    }

    std::filesystem::create_directories(config.output_dir);
    const nlohmann::ordered_json payload = report::to_json(rep);
    report::validate_report_json(payload);
    {
        std::ofstream out(config.output_dir / "report.json");
        if (!out) throw std::runtime_error("cannot write report.json");
        out << payload.dump(2) << "\n";
    }
    {
        std::ofstream out(config.output_dir / "report.md");
        if (!out) throw std::runtime_error("cannot write report.md");
        out << report::to_markdown(rep);
    }
    if (!dot_text.empty()) {
        std::ofstream out(config.output_dir / "interpret.dot");
        if (!out) throw std::runtime_error("cannot write interpret.dot");
        out << dot_text;
    }
    return outcome;
}

namespace {

int cmd_run(const std::string& config_path, const std::string& seed_override,
            const std::string& out_override, std::ostream& out) {
    RunConfig cfg = load_run_config(config_path);
    if (!seed_override.empty()) {
        cfg.seed = std::stoull(seed_override);
        cfg.seed_set = true;
    }
    if (!out_override.empty()) cfg.output_dir = out_override;
    const RunOutcome outcome = run(cfg);
    out << "report written to " << (cfg.output_dir / "report.json").string() << "\n";
    for (const auto& [stage, status] : outcome.report.stages) {
        out << "  " << stage << ": " << status.status;
        if (!status.reason.empty()) out << " (" << status.reason << ")";
        out << "\n";
    }
    return outcome.exit_code;
}

int cmd_identify(const std::string& graph_spec, const std::string& treatment,
                 const std::string& outcome_name, const std::vector<std::string>& zero_variance,
                 const std::string& data, std::ostream& out) {
    const graph::CausalGraph model = load_graph(graph_spec);
    std::set<std::string> zv(zero_variance.begin(), zero_variance.end());
    if (!data.empty()) {
        const events::EventTable table = events::parse_events_file(data, "cli");
        const auto detected = detect_zero_variance(table);
        zv.insert(detected.begin(), detected.end());
    }
    const graph::Estimand estimand = graph::identify(model, treatment, outcome_name, zv);
    nlohmann::ordered_json j;
    j["treatment"] = estimand.treatment;
    j["outcome"] = estimand.outcome;
    j["adjustment_set"] = estimand.adjustment_set;
    j["identifiable"] = estimand.identifiable;
    j["warnings"] = estimand.warnings;
    out << j.dump(2) << "\n";
    return 0;
}

struct StagePrep {
    events::EventTable table;
    events::DesignMatrix dm;
    effects::EstimatorConfig est_cfg;
    RunConfig cfg;
};

StagePrep prepare_stage(const std::string& config_path, const std::string& data_override) {
    StagePrep prep;
    prep.cfg = load_run_config(config_path);
    if (!data_override.empty()) prep.cfg.data = data_override;
    if (!prep.cfg.seed_set) throw ConfigError("config: a seed is required");
    if (!std::filesystem::exists(prep.cfg.data)) {
        throw ConfigError("config: data file not found: " + prep.cfg.data.string());
    }
    const graph::CausalGraph model = load_graph(prep.cfg.graph_spec);
    prep.table = events::parse_events_file(prep.cfg.data, prep.cfg.data.stem().string());
    std::set<std::string> zv(prep.cfg.zero_variance.begin(), prep.cfg.zero_variance.end());
    if (prep.cfg.auto_zero_variance) {
        const auto detected = detect_zero_variance(prep.table);
        zv.insert(detected.begin(), detected.end());
    }
    const graph::Estimand estimand = graph::identify(model, "D", "H", zv);
    prep.dm = events::encode(prep.table, estimand, prep.cfg.x_features);
    prep.est_cfg = estimator_config(prep.cfg);
    return prep;
}

int cmd_estimate(const std::string& config_path, const std::string& data_override,
                 std::ostream& out) {
    const StagePrep prep = prepare_stage(config_path, data_override);
    auto rows = nlohmann::ordered_json::array();
    for (const auto id : prep.cfg.estimators) {
        const effects::EffectEstimate est = effects::estimate(prep.dm, id, prep.est_cfg);
        rows.push_back({{"estimator", effects::to_string(id)},
                        {"effect", est.effect},
                        {"ci_low", est.ci_low},
                        {"ci_high", est.ci_high},
                        {"alpha", est.alpha},
                        {"n", est.n}});
    }
    out << rows.dump(2) << "\n";
    return 0;
}

int cmd_refute(const std::string& config_path, const std::string& data_override,
               std::ostream& out) {
    const StagePrep prep = prepare_stage(config_path, data_override);
    auto rows = nlohmann::ordered_json::array();
    std::uint64_t combo = 0;
    for (const auto id : prep.cfg.estimators) {
        for (const auto strategy : prep.cfg.refute.strategies) {
            const std::uint64_t seed = derive_seed(prep.cfg.seed, kSeedRefute, combo++);
            refute::RefutationReport r;
            switch (strategy) {
                case refute::Strategy::PlaceboTreatmentOutcome:
                    r = refute::refute_placebo(prep.dm, id, prep.est_cfg, prep.cfg.refute.reps, seed);
                    break;
                case refute::Strategy::RandomCommonCause:
                    r = refute::refute_random_common_cause(prep.dm, id, prep.est_cfg,
                                                           prep.cfg.refute.strength, seed);
                    break;
                case refute::Strategy::DataSubset:
                    r = refute::refute_subset(prep.dm, id, prep.est_cfg, prep.cfg.refute.fraction,
                                              prep.cfg.refute.reps, seed);
                    break;
            }
            rows.push_back({{"estimator", effects::to_string(id)},
                            {"strategy", refute::to_string(r.strategy)},
                            {"original_effect", r.original_effect},
                            {"recomputed_effect", r.recomputed_effect},
                            {"delta_abs", r.delta_abs},
                            {"reps", r.reps}});
        }
    }
    out << rows.dump(2) << "\n";
    return 0;
}

int cmd_interpret(const std::string& config_path, const std::string& data_override,
                  const std::string& dot_out, std::ostream& out) {
    const StagePrep prep = prepare_stage(config_path, data_override);
    const effects::EffectEstimate est =
        effects::estimate(prep.dm, prep.cfg.interpret.source, prep.est_cfg);
    const explain::InterpretTree tree = explain::fit_cate_tree(
        prep.dm.x, est.cate, prep.cfg.interpret.max_depth, prep.dm.x_names);
    auto leaves = nlohmann::ordered_json::array();
    for (const auto& leaf : explain::leaf_table(tree)) {
        leaves.push_back({{"path", leaf.path},
                          {"n", leaf.n},
                          {"mean_cate", leaf.mean_cate},
                          {"direction", explain::to_string(leaf.color.direction)},
                          {"intensity", explain::to_string(leaf.color.intensity)}});
    }
    nlohmann::ordered_json j;
    j["estimator"] = effects::to_string(prep.cfg.interpret.source);
    j["max_depth"] = prep.cfg.interpret.max_depth;
    j["leaves"] = leaves;
    out << j.dump(2) << "\n";
    if (!dot_out.empty()) {
        std::ofstream dot(dot_out);
        if (!dot) throw std::runtime_error("cannot write " + dot_out);
        dot << explain::render_dot(tree);
    }
    return 0;
}

int cmd_synth(const std::string& preset_name, const std::string& scenario_path, int n_override,
              const std::string& seed_text, const std::string& out_dir, std::ostream& out) {
    synth::ScenarioConfig scenario;
    if (!scenario_path.empty()) {
        try {
            scenario = synth::config_from_json(read_file(scenario_path));
        } catch (const ConfigError&) {
            throw;
        } catch (const std::exception& e) {
            throw ConfigError("scenario " + scenario_path + ": " + e.what());
        }
    } else {
        scenario = synth::preset(preset_name.empty() ? "dsv" : preset_name);
    }
    if (n_override > 0) scenario.n = n_override;
    if (!seed_text.empty()) scenario.noise_seed = std::stoull(seed_text);
    const auto [table, truth] = synth::generate(scenario);
    const std::filesystem::path dir = out_dir.empty() ? "." : out_dir;
    synth::write_outputs(table, truth, scenario, dir);
    out << "wrote " << table.size() << " events to " << (dir / "events.csv").string()
        << " (ground-truth CATE mean " << truth.cate_mean << ")\n";
    return 0;
}

int cmd_summarize(const std::string& data, const std::string& segregate_by, std::ostream& out) {
    const events::EventTable table = events::parse_events_file(data, "cli");
    const report::DatasetSummary summary = report::summarize(table);
    nlohmann::ordered_json j;
    j["dataset_id"] = summary.dataset_id;
    j["n"] = summary.n;
    j["objects"] = summary.object_counts;
    j["surfaces"] = summary.surface_counts;
    j["hands"] = summary.hand_counts;
    j["distance"] = {{"threshold", summary.split.threshold},
                     {"n_close", summary.split.n_close},
                     {"n_far", summary.split.n_far}};
    if (!segregate_by.empty()) {
        const events::ReversalReport r = events::reversal_report(table, segregate_by);
        nlohmann::ordered_json rev;
        rev["segregate_by"] = segregate_by;
        rev["aggregate_sign"] = events::to_string(r.aggregate_sign);
        auto strata = nlohmann::ordered_json::object();
        for (const auto& [label, sign] : r.stratum_signs) strata[label] = events::to_string(sign);
        rev["stratum_signs"] = strata;
        rev["reversal"] = r.reversal;
        rev["warnings"] = r.warnings;
        j["reversal"] = rev;
    }
    out << j.dump(2) << "\n";
    return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"causal analysis of grasp-event logs"};
    app.require_subcommand(1);

    std::string config_path, seed_text, out_dir, data_path;

    auto* run_cmd = app.add_subcommand("run", "full pipeline: identify, estimate, refute, interpret");
    run_cmd->add_option("--config", config_path, "run config JSON")->required();
    run_cmd->add_option("--seed", seed_text, "override the config seed");
    run_cmd->add_option("--out", out_dir, "override the output directory");

    std::string graph_spec = "default", treatment = "D", outcome_name = "H";
    std::vector<std::string> zero_variance;
    auto* identify_cmd = app.add_subcommand("identify", "compute the backdoor adjustment set");
    identify_cmd->add_option("--graph", graph_spec, "'default' or a graph JSON file");
    identify_cmd->add_option("--treatment", treatment, "treatment node");
    identify_cmd->add_option("--outcome", outcome_name, "outcome node");
    identify_cmd->add_option("--zero-variance", zero_variance,
                             "symbols constant in the dataset")->delimiter(',');
    identify_cmd->add_option("--data", data_path, "event CSV for zero-variance auto-detection");

    auto* estimate_cmd = app.add_subcommand("estimate", "effect estimates only");
    estimate_cmd->add_option("--config", config_path, "run config JSON")->required();
    estimate_cmd->add_option("--data", data_path, "override the config data path");

    auto* refute_cmd = app.add_subcommand("refute", "refutation checks only");
    refute_cmd->add_option("--config", config_path, "run config JSON")->required();
    refute_cmd->add_option("--data", data_path, "override the config data path");

    std::string dot_out;
    auto* interpret_cmd = app.add_subcommand("interpret", "CATE interpretation tree only");
    interpret_cmd->add_option("--config", config_path, "run config JSON")->required();
    interpret_cmd->add_option("--data", data_path, "override the config data path");
    interpret_cmd->add_option("--dot", dot_out, "write the Graphviz tree here");

    std::string preset_name, scenario_path;
    int synth_n = 0;
    auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic event log with known effects");
    synth_cmd->add_option("--preset", preset_name, "dsv, ds1 or ds2");
    synth_cmd->add_option("--scenario", scenario_path, "scenario config JSON");
    synth_cmd->add_option("--n", synth_n, "event count override");
    synth_cmd->add_option("--seed", seed_text, "noise seed");
    synth_cmd->add_option("--out", out_dir, "output directory (default .)");

    std::string segregate_by;
    auto* summarize_cmd = app.add_subcommand("summarize", "frequency breakdown of an event CSV");
    summarize_cmd->add_option("--data", data_path, "event CSV")->required();
    summarize_cmd->add_option("--segregate-by", segregate_by,
                              "stratify the treatment/outcome table by this field");

    std::vector<const char*> argv;
    argv.push_back("graspcause");
    for (const std::string& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "usage error: " << e.what() << "\n";
        return 2;
    }

    try {
        if (run_cmd->parsed()) return cmd_run(config_path, seed_text, out_dir, out);
        if (identify_cmd->parsed()) {
            return cmd_identify(graph_spec, treatment, outcome_name, zero_variance, data_path, out);
        }
        if (estimate_cmd->parsed()) return cmd_estimate(config_path, data_path, out);
        if (refute_cmd->parsed()) return cmd_refute(config_path, data_path, out);
        if (interpret_cmd->parsed()) return cmd_interpret(config_path, data_path, dot_out, out);
        if (synth_cmd->parsed()) {
            return cmd_synth(preset_name, scenario_path, synth_n, seed_text, out_dir, out);
        }
        if (summarize_cmd->parsed()) return cmd_summarize(data_path, segregate_by, out);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
    err << "no subcommand given\n";
    return 2;
}

}  // namespace graspcause::cli
