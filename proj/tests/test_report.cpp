#include "doctest.h"

#include <fstream>
#include <sstream>

#include "graspcause/report.hpp"
#include "graspcause/synth.hpp"

using namespace graspcause;
using namespace graspcause::report;

namespace {

RunReport minimal_report() {
    RunReport rep;
    rep.generated_at = "2000-01-01T00:00:00Z";
    rep.version = "test";
    rep.config_echo = nlohmann::ordered_json::object();

    auto cfg = synth::preset("dsv");
    cfg.noise_seed = 1;
    const auto [table, truth] = synth::generate(cfg);
    rep.has_dataset = true;
    rep.dataset = summarize(table);

    rep.has_estimand = true;
    rep.estimand.treatment = "D";
    rep.estimand.outcome = "H";
    rep.estimand.adjustment_set = {"O", "OV", "S", "SS", "SC"};
    rep.estimand.identifiable = false;
    rep.estimand.warnings = {"unobserved node 'U' is adjacent to both D and H"};

    EstimateRow row;
    row.estimator = "LDML";
    row.effect = -0.04;
    row.ci_low = -0.21;
    row.ci_high = 0.13;
    row.alpha = 0.1;
    row.n = 137;
    rep.estimates.push_back(row);

    RefutationRow ref;
    ref.estimator = "LDML";
    ref.strategy = "placebo";
    ref.original_effect = -0.04;
    ref.recomputed_effect = -0.07;
    ref.delta_abs = 0.03;
    ref.reps = 10;
    ref.seed = 42;
    rep.refutations.push_back(ref);

    rep.has_interpretation = true;
    rep.interpretation.estimator = "LDML";
    rep.interpretation.max_depth = 2;
    rep.interpretation.leaves.push_back(
        {"object_volume <= 0.003", 90, -0.3, "negative", "strong"});
    rep.interpretation.dot_file = "interpret.dot";

    rep.stages["ingest"] = {"ok", ""};
    rep.stages["identify"] = {"ok", ""};
    rep.stages["estimate"] = {"ok", ""};
    rep.stages["refute"] = {"ok", ""};
    rep.stages["interpret"] = {"ok", ""};
    return rep;
}

}  // namespace

TEST_SUITE("report") {

TEST_CASE("dataset summary counts every event once") {
    auto cfg = synth::preset("ds1");
    cfg.noise_seed = 2;
    const auto [table, truth] = synth::generate(cfg);
    const DatasetSummary s = summarize(table);
    CHECK(s.n == 384);
    int total = 0;
    for (const auto& [name, count] : s.object_counts) total += count;
    CHECK(total == 384);
    total = 0;
    for (const auto& [name, count] : s.hand_counts) total += count;
    CHECK(total == 384);
    CHECK(s.split.n_close + s.split.n_far == 384);
}

TEST_CASE("report json validates against the embedded schema") {
    const RunReport rep = minimal_report();
    const nlohmann::ordered_json payload = to_json(rep);
    CHECK_NOTHROW(validate_report_json(payload));
}

TEST_CASE("schema validation catches shape violations") {
    const RunReport rep = minimal_report();
    nlohmann::json payload = to_json(rep);

    SUBCASE("missing required key") {
        payload.erase("dataset");
        // dataset is optional at the top level (partial reports), so this passes
        CHECK_NOTHROW(validate_report_json(payload));
        payload.erase("stages");
        CHECK_THROWS_AS(validate_report_json(payload), std::runtime_error);
    }
    SUBCASE("wrong type") {
        payload["estimates"][0]["effect"] = "not a number";
        CHECK_THROWS_AS(validate_report_json(payload), std::runtime_error);
    }
    SUBCASE("enum violation") {
        payload["estimates"][0]["estimator"] = "MAGIC";
        CHECK_THROWS_AS(validate_report_json(payload), std::runtime_error);
    }
    SUBCASE("nested requirement") {
        payload["interpretation"]["leaves"][0].erase("path");
        CHECK_THROWS_AS(validate_report_json(payload), std::runtime_error);
    }
}

TEST_CASE("embedded schema matches the shipped file") {
    std::ifstream in(std::string(GRASPCAUSE_SOURCE_DIR) + "/share/report.schema.json");
    REQUIRE(in.good());
    std::stringstream buffer;
    buffer << in.rdbuf();
    const nlohmann::json from_file = nlohmann::json::parse(buffer.str());
    const nlohmann::json embedded = nlohmann::json::parse(report_schema_text());
    CHECK(from_file == embedded);
}

TEST_CASE("markdown carries the table sections") {
    const std::string md = to_markdown(minimal_report());
    CHECK(md.find("| Samples | Estimator | Effect | Conf. Intv. |") != std::string::npos);
    CHECK(md.find("LDML") != std::string::npos);
    CHECK(md.find("placebo") != std::string::npos);
    CHECK(md.find("object_volume <= 0.003") != std::string::npos);
    CHECK(md.find("## Stages") != std::string::npos);
}

TEST_CASE("summarize rejects empty tables") {
    events::EventTable empty;
    CHECK_THROWS_AS(summarize(empty), std::invalid_argument);
}

}  // TEST_SUITE
