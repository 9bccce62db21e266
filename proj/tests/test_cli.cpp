#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "graspcause/pipeline.hpp"
#include "graspcause/report.hpp"

#include "json.hpp"

using namespace graspcause;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& tag) {
        path = fs::temp_directory_path() / ("graspcause_cli_" + tag);
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

int run_args(const std::vector<std::string>& args, std::string* out_text = nullptr,
        std::string* err_text = nullptr) {
    std::ostringstream out, err;
    const int code = cli::run_cli(args, out, err);
    if (out_text) *out_text = out.str();
    if (err_text) *err_text = err.str();
    return code;
}

void write_config(const fs::path& path, const std::string& data_file, int reps = 2,
                  std::uint64_t seed = 7) {
    nlohmann::ordered_json cfg;
    cfg["graph"] = "default";
    cfg["data"] = data_file;
    cfg["x_features"] = {"object_volume"};
    cfg["estimators"] = {{"estimators", {"LDML", "LDRL", "FDML", "FDRL"}},
                         {"k", 5},
                         {"alpha", 0.1},
                         {"clip", {0.05, 0.95}},
                         {"nuisance", "linear"}};
    cfg["refute"] = {{"strategies", {"placebo", "common_cause", "subset"}},
                     {"strength", 0.02},
                     {"fraction", 0.9},
                     {"reps", reps}};
    cfg["interpret"] = {{"max_depth", 2}, {"estimator", "LDML"}};
    cfg["seed"] = seed;
    std::ofstream f(path);
    f << cfg.dump(2);
}

nlohmann::json load_json(const fs::path& path) {
    std::ifstream in(path);
    REQUIRE(in.good());
    return nlohmann::json::parse(in);
}

std::string canonical_report(const fs::path& path) {
    nlohmann::ordered_json j;
    {
        std::ifstream in(path);
        REQUIRE(in.good());
        j = nlohmann::ordered_json::parse(in);
    }
    j.erase("generated_at");  // the one nondeterministic field
    return j.dump(2);
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("synth subcommand writes the requested number of events") {
    TempDir dir("synth");
    std::string out;
    const int code = run_args({"synth", "--preset", "dsv", "--n", "137", "--seed", "7", "--out",
                          dir.path.string()},
                         &out);
    CHECK(code == 0);
    CHECK(fs::exists(dir.path / "events.csv"));
    CHECK(fs::exists(dir.path / "ground_truth.json"));

    std::ifstream csv(dir.path / "events.csv");
    int lines = 0;
    std::string line;
    while (std::getline(csv, line)) ++lines;
    CHECK(lines == 138);  // header + 137 rows
}

TEST_CASE("identify subcommand prints the adjustment set") {
    std::string out;
    const int code = run_args({"identify", "--graph", "default", "--treatment", "D", "--outcome", "H",
                          "--zero-variance", "DO"},
                         &out);
    CHECK(code == 0);
    const nlohmann::json j = nlohmann::json::parse(out);
    CHECK(j.at("adjustment_set") == nlohmann::json({"O", "OV", "S", "SC", "SS"}));
    CHECK(j.at("identifiable") == false);  // the unobserved confounder stays
}

TEST_CASE("summarize reproduces the preset hand proportions") {
    TempDir dir("summary");
    REQUIRE(run_args({"synth", "--preset", "ds1", "--n", "3000", "--seed", "3", "--out",
                 dir.path.string()}) == 0);
    std::string out;
    const int code =
        run_args({"summarize", "--data", (dir.path / "events.csv").string()}, &out);
    CHECK(code == 0);
    const nlohmann::json j = nlohmann::json::parse(out);
    const double right = j.at("hands").at("Right").get<double>();
    const double total = j.at("n").get<double>();
    // the recorded collection had 263 of 384 right-handed grasps
    CHECK(std::abs(right / total - 263.0 / 384.0) < 0.05);

    std::string with_reversal;
    CHECK(run_args({"summarize", "--data", (dir.path / "events.csv").string(), "--segregate-by",
               "surface_in_container"},
              &with_reversal) == 0);
    const nlohmann::json j2 = nlohmann::json::parse(with_reversal);
    CHECK(j2.contains("reversal"));
    CHECK(j2.at("reversal").contains("aggregate_sign"));
}

TEST_CASE("full run writes a valid report with every stage") {
    TempDir dir("run");
    REQUIRE(run_args({"synth", "--preset", "dsv", "--seed", "11", "--out", dir.path.string()}) == 0);
    write_config(dir.path / "config.json", "events.csv");

    std::string out;
    const int code = run_args({"run", "--config", (dir.path / "config.json").string(), "--out",
                          (dir.path / "out").string()},
                         &out);
    CHECK(code == 0);
    CHECK(fs::exists(dir.path / "out" / "report.json"));
    CHECK(fs::exists(dir.path / "out" / "report.md"));
    CHECK(fs::exists(dir.path / "out" / "interpret.dot"));

    const nlohmann::json report = load_json(dir.path / "out" / "report.json");
    CHECK_NOTHROW(report::validate_report_json(report));
    CHECK(report.at("estimates").size() == 4);
    CHECK(report.at("refutations").size() == 12);  // 3 strategies per estimator
    int per_estimator = 0;
    for (const auto& row : report.at("refutations")) {
        if (row.at("estimator") == "LDML") ++per_estimator;
    }
    CHECK(per_estimator == 3);
    CHECK(report.at("estimand").at("adjustment_set") ==
          nlohmann::json({"O", "OV", "S", "SC", "SS"}));
    for (const auto& [stage, status] : report.at("stages").items()) {
        CHECK(status.at("status") == "ok");
    }
}

TEST_CASE("missing data path exits 2 and writes nothing") {
    TempDir dir("missing");
    write_config(dir.path / "config.json", "no_such_file.csv");
    std::string err;
    const int code = run_args({"run", "--config", (dir.path / "config.json").string(), "--out",
                          (dir.path / "out").string()},
                         nullptr, &err);
    CHECK(code == 2);
    CHECK(!fs::exists(dir.path / "out"));
    CHECK(err.find("config error") != std::string::npos);
}

TEST_CASE("config without a seed exits 2") {
    TempDir dir("noseed");
    REQUIRE(run_args({"synth", "--preset", "dsv", "--seed", "1", "--out", dir.path.string()}) == 0);
    nlohmann::ordered_json cfg;
    cfg["data"] = "events.csv";
    std::ofstream((dir.path / "config.json")) << cfg.dump();
    std::string err;
    const int code = run_args({"run", "--config", (dir.path / "config.json").string()}, nullptr, &err);
    CHECK(code == 2);
}

TEST_CASE("usage errors exit 2") {
    std::string err;
    CHECK(run_args({"frobnicate"}, nullptr, &err) == 2);
    CHECK(run_args({"run"}, nullptr, &err) == 2);  // missing --config
    CHECK(run_args({}, nullptr, &err) == 2);
}

TEST_CASE("identical config and seed give byte-identical reports") {
    TempDir dir("determinism");
    REQUIRE(run_args({"synth", "--preset", "dsv", "--seed", "21", "--out", dir.path.string()}) == 0);
    write_config(dir.path / "config.json", "events.csv");

    REQUIRE(run_args({"run", "--config", (dir.path / "config.json").string(), "--out",
                 (dir.path / "out1").string()}) == 0);
    REQUIRE(run_args({"run", "--config", (dir.path / "config.json").string(), "--out",
                 (dir.path / "out2").string()}) == 0);
    CHECK(canonical_report(dir.path / "out1" / "report.json") ==
          canonical_report(dir.path / "out2" / "report.json"));
}

TEST_CASE("thread budget never changes the report") {
    TempDir dir("threads");
    REQUIRE(run_args({"synth", "--preset", "dsv", "--seed", "31", "--out", dir.path.string()}) == 0);
    write_config(dir.path / "config.json", "events.csv", 2, 13);

    setenv("GRASPCAUSE_THREADS", "1", 1);
    REQUIRE(run_args({"run", "--config", (dir.path / "config.json").string(), "--out",
                 (dir.path / "serial").string()}) == 0);
    setenv("GRASPCAUSE_THREADS", "4", 1);
    REQUIRE(run_args({"run", "--config", (dir.path / "config.json").string(), "--out",
                 (dir.path / "parallel").string()}) == 0);
    unsetenv("GRASPCAUSE_THREADS");

    CHECK(canonical_report(dir.path / "serial" / "report.json") ==
          canonical_report(dir.path / "parallel" / "report.json"));
}

TEST_CASE("estimate subcommand prints one row per estimator") {
    TempDir dir("estimate");
    REQUIRE(run_args({"synth", "--preset", "dsv", "--seed", "41", "--out", dir.path.string()}) == 0);
    write_config(dir.path / "config.json", "events.csv");
    std::string out;
    const int code = run_args({"estimate", "--config", (dir.path / "config.json").string()}, &out);
    CHECK(code == 0);
    const nlohmann::json rows = nlohmann::json::parse(out);
    REQUIRE(rows.size() == 4);
    for (const auto& row : rows) {
        CHECK(row.at("ci_low").get<double>() <= row.at("effect").get<double>());
        CHECK(row.at("effect").get<double>() <= row.at("ci_high").get<double>());
    }
}

TEST_CASE("interpret subcommand emits leaves and optionally a DOT file") {
    TempDir dir("interpret");
    REQUIRE(run_args({"synth", "--preset", "dsv", "--seed", "51", "--out", dir.path.string()}) == 0);
    write_config(dir.path / "config.json", "events.csv");
    std::string out;
    const int code = run_args({"interpret", "--config", (dir.path / "config.json").string(), "--dot",
                          (dir.path / "tree.dot").string()},
                         &out);
    CHECK(code == 0);
    const nlohmann::json j = nlohmann::json::parse(out);
    CHECK(j.at("estimator") == "LDML");
    CHECK(j.at("leaves").size() >= 1);
    CHECK(fs::exists(dir.path / "tree.dot"));
}

TEST_CASE("a failing stage yields exit 1 and a partial report") {
    TempDir dir("partial");
    // 25 events, every one right-handed: encode fails, estimate stage errors
    std::ofstream csv(dir.path / "events.csv");
    csv << events::kCsvHeader << "\n";
    for (int i = 0; i < 25; ++i) {
        csv << "Glass,0.00122,SinkArea,false,false,Right,Right,0." << 50 + i << "\n";
    }
    csv.close();
    write_config(dir.path / "config.json", "events.csv");

    std::string out;
    const int code = run_args({"run", "--config", (dir.path / "config.json").string(), "--out",
                          (dir.path / "out").string()},
                         &out);
    CHECK(code == 1);
    const nlohmann::json report = load_json(dir.path / "out" / "report.json");
    CHECK_NOTHROW(report::validate_report_json(report));
    CHECK(report.at("stages").at("estimate").at("status") == "error");
    CHECK(report.at("stages").at("refute").at("status") == "skipped");
    CHECK(report.at("estimates").empty());
}

}  // TEST_SUITE
