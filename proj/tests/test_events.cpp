#include "doctest.h"

#include <cmath>
#include <sstream>

#include "graspcause/events.hpp"
#include "graspcause/rng.hpp"
#include "graspcause/synth.hpp"

using namespace graspcause;
using namespace graspcause::events;

namespace {

std::string valid_row(const std::string& hand = "Right", double distance = 0.7) {
    std::ostringstream row;
    row << "Glass,0.00122,SinkArea,false,false," << hand << ",Right," << distance;
    return row.str();
}

EventTable table_from_rows(const std::vector<std::string>& rows) {
    std::ostringstream csv;
    csv << kCsvHeader << "\n";
    for (const std::string& row : rows) csv << row << "\n";
    std::istringstream in(csv.str());
    return parse_events(in, "fixture");
}

graph::Estimand default_estimand(std::set<std::string> adjustment = {"O", "OV", "S", "SS", "SC"}) {
    graph::Estimand e;
    e.treatment = "D";
    e.outcome = "H";
    e.adjustment_set = std::move(adjustment);
    e.identifiable = true;
    return e;
}

}  // namespace

TEST_SUITE("events") {

TEST_CASE("parses a synthesized validation-shaped log") {
    auto cfg = synth::preset("dsv");
    cfg.noise_seed = 11;
    const auto [table, truth] = synth::generate(cfg);
    std::ostringstream csv;
    write_csv(table, csv);
    std::istringstream in(csv.str());
    const EventTable parsed = parse_events(in, "dsv");
    CHECK(parsed.size() == 137);
    // byte-exact round trip of every numeric field
    for (std::size_t i = 0; i < parsed.size(); ++i) {
        CHECK(parsed.events[i].head_hand_distance_m == table.events[i].head_hand_distance_m);
        CHECK(parsed.events[i].object_volume_m3 == table.events[i].object_volume_m3);
        CHECK(parsed.events[i].hand == table.events[i].hand);
    }
}

TEST_CASE("header-only input is an error") {
    std::istringstream in(std::string(kCsvHeader) + "\n");
    CHECK_THROWS_WITH_AS(parse_events(in, "x"), "no events", std::runtime_error);
}

TEST_CASE("bad rows are reported with their line number") {
    SUBCASE("unknown hand label") {
        std::istringstream in(std::string(kCsvHeader) +
                              "\nGlass,0.00122,SinkArea,false,false,Both,Right,0.7\n");
        try {
            parse_events(in, "x");
            FAIL("expected a parse error");
        } catch (const std::runtime_error& e) {
            const std::string msg = e.what();
            CHECK(msg.find("line 2") != std::string::npos);
            CHECK(msg.find("Both") != std::string::npos);
        }
    }
    SUBCASE("non-positive numeric field") {
        CHECK_THROWS(table_from_rows({"Glass,0,SinkArea,false,false,Left,Right,0.7"}));
        CHECK_THROWS(table_from_rows({"Glass,0.001,SinkArea,false,false,Left,Right,-0.2"}));
    }
    SUBCASE("wrong field count") {
        CHECK_THROWS(table_from_rows({"Glass,0.001,SinkArea,false,false,Left,Right"}));
    }
    SUBCASE("bad boolean") {
        CHECK_THROWS(table_from_rows({"Glass,0.001,SinkArea,maybe,false,Left,Right,0.7"}));
    }
    SUBCASE("wrong header") {
        std::istringstream in("a,b,c\n");
        CHECK_THROWS(parse_events(in, "x"));
    }
}

TEST_CASE("median split on a symmetric four-point vector") {
    const SplitSpec s = median_split({1.0, 2.0, 3.0, 4.0});
    CHECK(s.threshold == doctest::Approx(2.5));
    CHECK(s.n_close == 2);
    CHECK(s.n_far == 2);
    CHECK(s.close_range.first == doctest::Approx(1.0));
    CHECK(s.close_range.second == doctest::Approx(2.0));
    CHECK(s.far_range.first == doctest::Approx(3.0));
    CHECK(s.far_range.second == doctest::Approx(4.0));
}

TEST_CASE("median split of 137 distinct values lands 69/68") {
    Rng rng(5);
    std::vector<double> values;
    for (int i = 0; i < 137; ++i) values.push_back(0.4 + 0.6 * rng.uniform());
    const SplitSpec s = median_split(values);
    CHECK(s.n_close == 69);
    CHECK(s.n_far == 68);
    CHECK(s.close_range.second == doctest::Approx(s.threshold));
}

TEST_CASE("median split rejects degenerate inputs") {
    CHECK_THROWS_AS(median_split({1.0}), std::invalid_argument);
    CHECK_THROWS_AS(median_split({2.0, 2.0, 2.0}), std::invalid_argument);
}

TEST_CASE("median split balance on 1000 random distinct vectors") {
    Rng rng(82);
    for (int rep = 0; rep < 1000; ++rep) {
        const std::size_t n = 2 + rng.below(200);
        std::vector<double> values(n);
        for (double& v : values) v = rng.uniform();  // distinct almost surely
        const SplitSpec s = median_split(values);
        const long diff = static_cast<long>(s.n_close) - static_cast<long>(s.n_far);
        CHECK(std::abs(diff) <= 1);
        CHECK(s.n_close + s.n_far == n);
    }
}

TEST_CASE("encode produces the documented blocks") {
    auto cfg = synth::preset("ds1");
    cfg.noise_seed = 3;
    const auto [table, truth] = synth::generate(cfg);
    const DesignMatrix dm = encode(table, default_estimand());

    CHECK(dm.n() == 384);
    CHECK(dm.x.cols() == 1);
    CHECK(dm.x_names == std::vector<std::string>{"object_volume"});
    // 6 object categories + 9 surfaces + SC + SS before the constant drop
    std::size_t expected_w = 6 + 9 + 2;
    CHECK(dm.w.cols() + static_cast<Eigen::Index>(dm.warnings.size()) ==
          static_cast<Eigen::Index>(expected_w));

    SUBCASE("y and t are 0/1 and both valued") {
        for (Eigen::Index i = 0; i < dm.n(); ++i) {
            CHECK((dm.y[i] == 0.0 || dm.y[i] == 1.0));
            CHECK((dm.t[i] == 0.0 || dm.t[i] == 1.0));
        }
        CHECK(dm.t.sum() > 0);
        CHECK(dm.t.sum() < dm.n());
    }

    SUBCASE("x column is the object volume pass-through") {
        for (Eigen::Index i = 0; i < dm.n(); ++i) {
            CHECK(dm.x(i, 0) == table.events[static_cast<std::size_t>(i)].object_volume_m3);
        }
    }

    SUBCASE("one-hot blocks sum to one per row") {
        Eigen::Index object_cols = 0;
        for (const std::string& name : dm.w_names) {
            if (name.rfind("object_category=", 0) == 0) ++object_cols;
        }
        REQUIRE(object_cols == 6);
        for (Eigen::Index i = 0; i < dm.n(); ++i) {
            double row_sum = 0;
            for (Eigen::Index j = 0; j < object_cols; ++j) row_sum += dm.w(i, j);
            CHECK(row_sum == doctest::Approx(1.0));
        }
    }
}

TEST_CASE("encode drops constant columns with a warning") {
    auto cfg = synth::preset("dsv");
    cfg.noise_seed = 9;
    const auto [table, truth] = synth::generate(cfg);
    // DO is constant (single right-dominant subject) when left in the set
    const DesignMatrix dm = encode(table, default_estimand({"O", "OV", "S", "SS", "SC", "DO"}));
    bool warned = false;
    for (const std::string& w : dm.warnings) {
        warned |= w.find("dominant_hand") != std::string::npos;
    }
    CHECK(warned);
    for (const std::string& name : dm.w_names) CHECK(name != "dominant_hand");
}

TEST_CASE("encode rejects degenerate tables") {
    std::vector<std::string> rows;
    for (int i = 0; i < 25; ++i) {
        rows.push_back(valid_row("Right", 0.5 + 0.01 * i));
    }
    const EventTable all_right = table_from_rows(rows);
    CHECK_THROWS_WITH_AS(encode(all_right, default_estimand()),
                         "encode: outcome has no variation", std::invalid_argument);

    rows.clear();
    for (int i = 0; i < 25; ++i) {
        rows.push_back(valid_row(i % 2 == 0 ? "Left" : "Right", 0.7));
    }
    const EventTable same_distance = table_from_rows(rows);
    CHECK_THROWS_AS(encode(same_distance, default_estimand()), std::invalid_argument);

    rows.resize(10);
    const EventTable tiny = table_from_rows(rows);
    CHECK_THROWS_AS(encode(tiny, default_estimand()), std::invalid_argument);
}

TEST_CASE("encode rejects unknown features") {
    auto cfg = synth::preset("dsv");
    cfg.noise_seed = 4;
    const auto [table, truth] = synth::generate(cfg);
    CHECK_THROWS_AS(encode(table, default_estimand(), {"no_such_feature"}),
                    std::invalid_argument);
}

TEST_CASE("classic Simpson table reverses") {
    // kidney-stone shape: treated wins inside every stratum, loses pooled
    std::vector<StratumCounts> strata{
        {"small", 36, 234, 6, 81},    // control 86.7% vs treated 93.1%
        {"large", 25, 55, 71, 192},   // control 68.8% vs treated 73.0%
    };
    const ReversalReport r = reversal_from_counts(strata);
    CHECK(r.aggregate_sign == Sign::Negative);  // pooled: 78.0% vs 82.6%
    CHECK(r.stratum_signs.at("small") == Sign::Positive);
    CHECK(r.stratum_signs.at("large") == Sign::Positive);
    CHECK(r.reversal);
}

TEST_CASE("single stratum cannot reverse") {
    std::vector<StratumCounts> strata{{"only", 10, 20, 5, 25}};
    const ReversalReport r = reversal_from_counts(strata);
    CHECK(!r.reversal);
}

TEST_CASE("one-armed strata get a zero sign and a warning") {
    std::vector<StratumCounts> strata{
        {"full", 10, 20, 5, 25},
        {"one_arm", 12, 8, 0, 0},
    };
    const ReversalReport r = reversal_from_counts(strata);
    CHECK(r.stratum_signs.at("one_arm") == Sign::Zero);
    CHECK(!r.warnings.empty());
}

TEST_CASE("reversal_report runs end to end on events") {
    auto cfg = synth::preset("dsv");
    cfg.noise_seed = 21;
    const auto [table, truth] = synth::generate(cfg);
    const ReversalReport r = reversal_report(table, "surface_in_container");
    CHECK(r.stratum_signs.size() <= 2);
    CHECK_THROWS_AS(reversal_report(table, "object_volume"), std::invalid_argument);
    CHECK_THROWS_AS(reversal_report(table, "bogus"), std::invalid_argument);
}

TEST_CASE("uniform-random 2x2x2 tables reverse at about the documented 1/60 rate") {
    Rng rng(777);
    const int draws = 100000;
    int reversals = 0;
    for (int i = 0; i < draws; ++i) {
        // Dirichlet(1,...,1) over the eight cells: normalized exponentials
        double cells[8];
        for (double& c : cells) c = -std::log(1.0 - rng.uniform());
        std::vector<StratumCounts> strata{
            {"s1", cells[0], cells[1], cells[2], cells[3]},
            {"s2", cells[4], cells[5], cells[6], cells[7]},
        };
        if (reversal_from_counts(strata).reversal) ++reversals;
    }
    const double rate = static_cast<double>(reversals) / draws;
    CHECK(rate == doctest::Approx(1.0 / 60.0).epsilon(0.3));
    CHECK(std::abs(rate - 0.0167) < 0.005);
}

TEST_CASE("randomized data reverses only at chance level") {
    int reversals = 0;
    const int reps = 120;
    for (int rep = 0; rep < reps; ++rep) {
        auto cfg = synth::preset("dsv");
        cfg.n = 60;
        cfg.noise_seed = 1000 + static_cast<std::uint64_t>(rep);
        const auto [table, truth] = synth::generate(cfg);
        try {
            if (reversal_report(table, "surface_sliding").reversal) ++reversals;
        } catch (const std::invalid_argument&) {
            // degenerate tiny draw; fine to skip
        }
    }
    CHECK(static_cast<double>(reversals) / reps < 0.25);
}

}  // TEST_SUITE
