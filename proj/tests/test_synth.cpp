#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "graspcause/events.hpp"
#include "graspcause/stats.hpp"
#include "graspcause/synth.hpp"

using namespace graspcause;
using namespace graspcause::synth;

namespace {

double correlation(const std::vector<double>& a, const std::vector<double>& b) {
    const double ma = stable_mean(a);
    const double mb = stable_mean(b);
    double cov = 0, va = 0, vb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        cov += (a[i] - ma) * (b[i] - mb);
        va += (a[i] - ma) * (a[i] - ma);
        vb += (b[i] - mb) * (b[i] - mb);
    }
    if (va == 0 || vb == 0) return 0;
    return cov / std::sqrt(va * vb);
}

}  // namespace

TEST_SUITE("synth") {

TEST_CASE("randomized treatment is uncorrelated with covariates") {
    auto cfg = preset("dsv");
    cfg.n = 10000;
    cfg.noise_seed = 99;
    const auto [table, truth] = generate(cfg);

    std::vector<double> distances;
    for (const auto& ev : table.events) distances.push_back(ev.head_hand_distance_m);
    const events::SplitSpec split = events::median_split(distances);

    std::vector<double> t, volume, sc, ss;
    for (const auto& ev : table.events) {
        t.push_back(ev.head_hand_distance_m > split.threshold ? 1.0 : 0.0);
        volume.push_back(ev.object_volume_m3);
        sc.push_back(ev.surface_in_container ? 1.0 : 0.0);
        ss.push_back(ev.surface_sliding ? 1.0 : 0.0);
    }
    CHECK(std::abs(correlation(t, volume)) <= 0.03);
    CHECK(std::abs(correlation(t, sc)) <= 0.03);
    CHECK(std::abs(correlation(t, ss)) <= 0.03);
}

TEST_CASE("dsv preset reproduces the validation marginals within binomial noise") {
    auto cfg = preset("dsv");
    cfg.noise_seed = 12345;
    const auto [table, truth] = generate(cfg);
    REQUIRE(table.size() == 137);

    std::map<std::string, int> counts;
    for (const auto& ev : table.events) ++counts[ev.object_category];

    const std::map<std::string, int> expected{{"Silverware", 29}, {"Glass", 23}, {"Milk", 24},
                                              {"Juice", 21},      {"Bowl", 16},  {"Cereal", 24}};
    for (const auto& [name, expected_count] : expected) {
        const double p = static_cast<double>(expected_count) / 137.0;
        const double sigma = std::sqrt(137.0 * p * (1.0 - p));
        CHECK(std::abs(counts[name] - expected_count) <= 3.0 * sigma);
    }

    // randomized draws give the near-50/50 split of the validation column
    std::vector<double> distances;
    for (const auto& ev : table.events) distances.push_back(ev.head_hand_distance_m);
    const events::SplitSpec split = events::median_split(distances);
    CHECK(split.n_close == 69);
    CHECK(split.n_far == 68);
}

TEST_CASE("null effect with zero base scores gives exactly zero ground truth") {
    auto cfg = preset("dsv");
    cfg.effect = EffectSpec::Constant(0.0);
    cfg.outcome_base = Coefficients{};
    cfg.noise_seed = 7;
    const auto [table, truth] = generate(cfg);
    CHECK(truth.cate_mean == 0.0);
    for (double c : truth.per_sample_cate) CHECK(c == 0.0);
}

TEST_CASE("generation is deterministic in the seed") {
    auto cfg = preset("ds1");
    cfg.noise_seed = 31;
    const auto [table_a, truth_a] = generate(cfg);
    const auto [table_b, truth_b] = generate(cfg);
    REQUIRE(table_a.size() == table_b.size());
    for (std::size_t i = 0; i < table_a.size(); ++i) {
        CHECK(table_a.events[i].head_hand_distance_m == table_b.events[i].head_hand_distance_m);
        CHECK(table_a.events[i].hand == table_b.events[i].hand);
        CHECK(table_a.events[i].object_category == table_b.events[i].object_category);
    }
    CHECK(truth_a.cate_mean == truth_b.cate_mean);
}

TEST_CASE("linear link with a constant effect recovers tau exactly in the oracle") {
    auto cfg = preset("dsv");
    cfg.link = Link::Linear;
    cfg.effect = EffectSpec::Constant(0.15);
    cfg.outcome_base = Coefficients{};
    cfg.outcome_base.intercept = 0.5;
    const OracleResult oracle = oracle_cate_mean(cfg, 100000);
    CHECK(oracle.mean == doctest::Approx(0.15).epsilon(1e-12));
    CHECK(oracle.std_error == doctest::Approx(0.0));
}

TEST_CASE("oracle matches a hand-computed two-category step mixture") {
    ScenarioConfig cfg;
    cfg.n = 100;
    cfg.objects = {{"small", {0.7, 0.001}}, {"big", {0.3, 0.006}}};
    cfg.surfaces = {{"table", {1.0, false, false}}};
    cfg.link = Link::Linear;
    cfg.outcome_base.intercept = 0.5;
    cfg.effect = EffectSpec::Step(0.003, 0.0, 0.3);
    // mixture: P(small)*0 + P(big)*0.3 = 0.09
    const OracleResult oracle = oracle_cate_mean(cfg, 200000);
    CHECK(oracle.mean == doctest::Approx(0.09).epsilon(0.05));
    CHECK(std::abs(oracle.mean - 0.09) <= 3.0 * std::max(oracle.std_error, 1e-12) + 1e-9);
}

TEST_CASE("oracle runs with different seeds agree within Monte-Carlo error") {
    auto cfg = preset("ds2");
    const OracleResult a = oracle_cate_mean(cfg, 1000000, 1);
    const OracleResult b = oracle_cate_mean(cfg, 1000000, 2);
    const double combined = std::sqrt(a.std_error * a.std_error + b.std_error * b.std_error);
    CHECK(std::abs(a.mean - b.mean) <= 3.0 * combined);
}

TEST_CASE("empirical ground truth converges to the oracle mean") {
    auto cfg = preset("ds1");
    cfg.n = 100000;
    cfg.noise_seed = 5;
    const auto [table, truth] = generate(cfg);
    const OracleResult oracle = oracle_cate_mean(cfg, 500000, 77);
    // empirical SE of the per-sample CATE mean
    const double se_emp = std::sqrt(sample_variance(truth.per_sample_cate) /
                                    static_cast<double>(truth.per_sample_cate.size()));
    const double combined = std::sqrt(se_emp * se_emp + oracle.std_error * oracle.std_error);
    CHECK(std::abs(truth.cate_mean - oracle.mean) <= 3.0 * combined + 1e-9);
}

TEST_CASE("oracle rejects undersized Monte-Carlo budgets") {
    CHECK_THROWS_AS(oracle_cate_mean(preset("dsv"), 1000), std::invalid_argument);
}

TEST_CASE("invalid marginals are rejected") {
    ScenarioConfig cfg = preset("dsv");
    cfg.objects["Glass"].probability += 0.2;  // no longer sums to 1
    CHECK_THROWS_AS(generate(cfg), std::invalid_argument);

    ScenarioConfig cfg2 = preset("dsv");
    cfg2.objects["Glass"].volume_m3 = 0.0;
    CHECK_THROWS_AS(generate(cfg2), std::invalid_argument);

    ScenarioConfig cfg3 = preset("dsv");
    cfg3.n = 5;
    CHECK_THROWS_AS(generate(cfg3), std::invalid_argument);
}

TEST_CASE("scenario config json round trip") {
    auto cfg = preset("ds2");
    cfg.effect = EffectSpec::Step(0.003, -0.1, 0.2);
    cfg.noise_seed = 4242;
    const ScenarioConfig parsed = config_from_json(config_to_json(cfg));
    CHECK(parsed.n == cfg.n);
    CHECK(parsed.objects.size() == cfg.objects.size());
    CHECK(parsed.surfaces.size() == cfg.surfaces.size());
    CHECK(parsed.treatment == cfg.treatment);
    CHECK(parsed.effect.is_step);
    CHECK(parsed.effect.step.threshold == cfg.effect.step.threshold);
    CHECK(parsed.noise_seed == cfg.noise_seed);
    CHECK(parsed.outcome_base.intercept == cfg.outcome_base.intercept);
    CHECK(parsed.outcome_base.terms == cfg.outcome_base.terms);
}

TEST_CASE("write_outputs emits a parseable CSV and sidecar") {
    const auto dir = std::filesystem::temp_directory_path() / "graspcause_synth_test";
    std::filesystem::remove_all(dir);
    auto cfg = preset("dsv");
    cfg.noise_seed = 55;
    const auto [table, truth] = generate(cfg);
    write_outputs(table, truth, cfg, dir);

    const events::EventTable parsed = events::parse_events_file(dir / "events.csv", "roundtrip");
    CHECK(parsed.size() == table.size());

    std::ifstream sidecar(dir / "ground_truth.json");
    REQUIRE(sidecar.good());
    std::stringstream buffer;
    buffer << sidecar.rdbuf();
    CHECK(buffer.str().find("cate_mean") != std::string::npos);
    std::filesystem::remove_all(dir);
}

}  // TEST_SUITE
