#include "graspcause/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "graspcause/rng.hpp"
#include "graspcause/stats.hpp"
#include "json.hpp"

namespace graspcause::synth {

namespace {

constexpr std::uint64_t kTagObject = 31;
constexpr std::uint64_t kTagSurface = 32;
constexpr std::uint64_t kTagDistance = 33;
constexpr std::uint64_t kTagOutcome = 34;

double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

double link_prob(Link link, double score) {
    if (link == Link::Logistic) return sigmoid(score);
    return std::clamp(score, 0.0, 1.0);
}

template <typename Spec>
const std::string& draw_from(const std::map<std::string, Spec>& marginals, double total,
                             Rng& rng) {
    double u = rng.uniform() * total;
    for (const auto& [name, spec] : marginals) {
        u -= spec.probability;
        if (u < 0.0) return name;
    }
    return marginals.rbegin()->first;  // guard against rounding at the top end
}

events::GraspEvent draw_covariates(const ScenarioConfig& cfg, double obj_total, double surf_total,
                                   Rng& object_rng, Rng& surface_rng) {
    events::GraspEvent ev;
    const std::string& object = draw_from(cfg.objects, obj_total, object_rng);
    ev.object_category = object;
    ev.object_volume_m3 = cfg.objects.at(object).volume_m3;
    const std::string& surface = draw_from(cfg.surfaces, surf_total, surface_rng);
    const SurfaceSpec& ss = cfg.surfaces.at(surface);
    ev.surface_id = surface;
    ev.surface_in_container = ss.in_container;
    ev.surface_sliding = ss.sliding;
    ev.dominant_hand = events::Hand::Right;
    return ev;
}

double outcome_probability(const ScenarioConfig& cfg, const events::GraspEvent& ev, double t) {
    const double score = cfg.outcome_base.score(ev) + cfg.effect.value(ev) * (t - 0.5);
    return link_prob(cfg.link, score);
}

}  // namespace

double Coefficients::score(const events::GraspEvent& ev) const {
    double total = intercept;
    for (const auto& [key, weight] : terms) {
        if (key == "object_volume") {
            total += weight * ev.object_volume_m3;
        } else if (key == "surface_in_container") {
            total += ev.surface_in_container ? weight : 0.0;
        } else if (key == "surface_sliding") {
            total += ev.surface_sliding ? weight : 0.0;
        } else if (key.rfind("category:", 0) == 0) {
            total += ev.object_category == key.substr(9) ? weight : 0.0;
        } else if (key.rfind("surface:", 0) == 0) {
            total += ev.surface_id == key.substr(8) ? weight : 0.0;
        } else {
            throw std::invalid_argument("unknown coefficient key '" + key + "'");
        }
    }
    return total;
}

EffectSpec EffectSpec::Constant(double tau) {
    EffectSpec spec;
    spec.constant = tau;
    return spec;
}

EffectSpec EffectSpec::Step(double threshold, double low, double high) {
    EffectSpec spec;
    spec.is_step = true;
    spec.step = {threshold, low, high};
    return spec;
}

double EffectSpec::value(const events::GraspEvent& ev) const {
    if (!is_step) return constant;
    return ev.object_volume_m3 > step.threshold ? step.high : step.low;
}

void ScenarioConfig::validate() const {
    if (n < 20) throw std::invalid_argument("scenario: n must be at least 20");
    if (objects.empty()) throw std::invalid_argument("scenario: no object marginals");
    if (surfaces.empty()) throw std::invalid_argument("scenario: no surface marginals");
    double obj_total = 0.0;
    for (const auto& [name, spec] : objects) {
        if (spec.probability < 0.0) throw std::invalid_argument("scenario: negative probability for " + name);
        if (!(spec.volume_m3 > 0.0)) throw std::invalid_argument("scenario: non-positive volume for " + name);
        obj_total += spec.probability;
    }
    double surf_total = 0.0;
    for (const auto& [name, spec] : surfaces) {
        if (spec.probability < 0.0) throw std::invalid_argument("scenario: negative probability for " + name);
        surf_total += spec.probability;
    }
    if (std::abs(obj_total - 1.0) > 1e-6 || std::abs(surf_total - 1.0) > 1e-6) {
        throw std::invalid_argument("scenario: marginal probabilities must each sum to 1");
    }
    if (!(distance_noise_sd > 0.0)) {
        throw std::invalid_argument("scenario: distance_noise_sd must be positive");
    }
}

std::pair<events::EventTable, GroundTruth> generate(const ScenarioConfig& cfg) {
    cfg.validate();

    Rng object_rng(derive_seed(cfg.noise_seed, kTagObject));
    Rng surface_rng(derive_seed(cfg.noise_seed, kTagSurface));
    Rng distance_rng(derive_seed(cfg.noise_seed, kTagDistance));
    Rng outcome_rng(derive_seed(cfg.noise_seed, kTagOutcome));

    events::EventTable table;
    table.dataset_id = cfg.dataset_id;
    table.events.resize(static_cast<std::size_t>(cfg.n));

    std::vector<double> distances(static_cast<std::size_t>(cfg.n));
    for (int i = 0; i < cfg.n; ++i) {
        events::GraspEvent ev = draw_covariates(cfg, 1.0, 1.0, object_rng, surface_rng);
        double z = cfg.distance_noise_sd * distance_rng.normal();
        if (cfg.treatment == TreatmentMechanism::Confounded) {
            z += cfg.distance_coeffs.score(ev);
        }
        // squash the latent score into a plausible reach range
        ev.head_hand_distance_m = 0.4 + 0.6 * sigmoid(z);
        distances[static_cast<std::size_t>(i)] = ev.head_hand_distance_m;
        table.events[static_cast<std::size_t>(i)] = std::move(ev);
    }

    const events::SplitSpec split = events::median_split(distances);

    GroundTruth truth;
    truth.per_sample_cate.resize(static_cast<std::size_t>(cfg.n));
    for (int i = 0; i < cfg.n; ++i) {
        events::GraspEvent& ev = table.events[static_cast<std::size_t>(i)];
        const double t = ev.head_hand_distance_m > split.threshold ? 1.0 : 0.0;
        const double p = outcome_probability(cfg, ev, t);
        ev.hand = outcome_rng.bernoulli(p) ? events::Hand::Right : events::Hand::Left;
        truth.per_sample_cate[static_cast<std::size_t>(i)] =
            outcome_probability(cfg, ev, 1.0) - outcome_probability(cfg, ev, 0.0);
    }
    truth.cate_mean = stable_mean(truth.per_sample_cate);
    return {std::move(table), std::move(truth)};
}

OracleResult oracle_cate_mean(const ScenarioConfig& cfg, std::int64_t mc_n, std::uint64_t seed) {
    cfg.validate();
    if (mc_n < 100000) throw std::invalid_argument("oracle_cate_mean: mc_n must be at least 1e5");

    Rng object_rng(derive_seed(seed, kTagObject));
    Rng surface_rng(derive_seed(seed, kTagSurface));

    double sum = 0.0;
    double sumsq = 0.0;
    for (std::int64_t i = 0; i < mc_n; ++i) {
        const events::GraspEvent ev = draw_covariates(cfg, 1.0, 1.0, object_rng, surface_rng);
        const double cate = outcome_probability(cfg, ev, 1.0) - outcome_probability(cfg, ev, 0.0);
        sum += cate;
        sumsq += cate * cate;
    }
    OracleResult result;
    const double n = static_cast<double>(mc_n);
    result.mean = sum / n;
    const double variance = std::max(0.0, sumsq / n - result.mean * result.mean);
    result.std_error = std::sqrt(variance / n);
    return result;
}

ScenarioConfig preset(const std::string& name) {
    ScenarioConfig cfg;
    cfg.dataset_id = name;

    if (name == "dsv") {
        cfg.n = 137;
        cfg.objects = {
            {"Silverware", {29.0 / 137.0, 8.2e-5}}, {"Glass", {23.0 / 137.0, 1.22e-3}},
            {"Milk", {24.0 / 137.0, 1.40e-3}},      {"Juice", {21.0 / 137.0, 1.93e-3}},
            {"Bowl", {16.0 / 137.0, 2.40e-3}},      {"Cereal", {24.0 / 137.0, 6.30e-3}},
        };
        cfg.surfaces = {
            {"FrdgArea", {1.0 / 136.0, true, false}},
            {"FrdgDrBtmShlf", {22.0 / 136.0, true, false}},
            {"FrdgGlassShlf", {21.0 / 136.0, true, true}},
            {"IslndArea", {21.0 / 136.0, false, false}},
            {"LabFloor", {2.0 / 136.0, false, false}},
            {"OvenDrwRight", {22.0 / 136.0, true, true}},
            {"SinkArea", {1.0 / 136.0, false, false}},
            {"SnkDrwLftBtm", {1.0 / 136.0, true, true}},
            {"SnkDrwLftMid", {20.0 / 136.0, true, true}},
            {"SnkDrwLftTop", {25.0 / 136.0, true, true}},
        };
        cfg.treatment = TreatmentMechanism::Randomized;
        cfg.effect = EffectSpec::Constant(0.0);
        cfg.outcome_base.intercept = 0.135;
        cfg.outcome_base.terms = {
            {"object_volume", 60.0}, {"surface_in_container", -0.4}, {"surface_sliding", 0.3}};
        return cfg;
    }

    if (name == "ds1") {
        cfg.n = 384;
        cfg.objects = {
            {"Silverware", {83.0 / 384.0, 8.2e-5}}, {"Glass", {83.0 / 384.0, 1.22e-3}},
            {"Milk", {18.0 / 384.0, 1.40e-3}},      {"Juice", {88.0 / 384.0, 1.93e-3}},
            {"Bowl", {19.0 / 384.0, 2.40e-3}},      {"Cereal", {93.0 / 384.0, 6.30e-3}},
        };
        cfg.surfaces = {
            {"DiningTable", {12.0 / 381.0, false, false}},
            {"FrdgDrBtmShlf", {5.0 / 381.0, true, false}},
            {"FrdgGlassShlf", {41.0 / 381.0, true, true}},
            {"LabFloor", {5.0 / 381.0, false, false}},
            {"OvenDrwRight", {41.0 / 381.0, true, true}},
            {"SinkArea", {11.0 / 381.0, false, false}},
            {"SnkDrwLftMid", {41.0 / 381.0, true, true}},
            {"SnkDrwLftTop", {41.0 / 381.0, true, true}},
            {"Tray", {184.0 / 381.0, false, false}},
        };
        cfg.treatment = TreatmentMechanism::Confounded;
        cfg.distance_coeffs.intercept = -0.35;
        cfg.distance_coeffs.terms = {
            {"object_volume", 150.0}, {"surface_in_container", 0.8}, {"surface_sliding", -0.4}};
        cfg.effect = EffectSpec::Constant(0.10);
        cfg.outcome_base.intercept = 0.70;
        cfg.outcome_base.terms = {
            {"object_volume", 40.0}, {"surface_in_container", -0.3}, {"surface_sliding", 0.25}};
        return cfg;
    }

    if (name == "ds2") {
        cfg.n = 174;
        cfg.objects = {
            {"Silverware", {70.0 / 174.0, 8.2e-5}}, {"Milk", {8.0 / 174.0, 1.40e-3}},
            {"Bowl", {36.0 / 174.0, 2.40e-3}},      {"Cereal", {28.0 / 174.0, 6.30e-3}},
            {"Tray", {32.0 / 174.0, 9.95e-3}},
        };
        cfg.surfaces = {
            {"DiningTable", {18.0 / 171.0, false, false}},
            {"FrdgArea", {1.0 / 171.0, true, false}},
            {"FrdgDrBtmShlf", {2.0 / 171.0, true, false}},
            {"IslndArea", {8.0 / 171.0, false, false}},
            {"IslndDrwBtmLft", {16.0 / 171.0, true, true}},
            {"OvenArea", {2.0 / 171.0, false, false}},
            {"OvenDrwRight", {16.0 / 171.0, true, true}},
            {"SinkArea", {24.0 / 171.0, false, false}},
            {"SnkDrwLftTop", {42.0 / 171.0, true, true}},
            {"Tray", {42.0 / 171.0, false, false}},
        };
        cfg.treatment = TreatmentMechanism::Confounded;
        cfg.distance_coeffs.intercept = -0.25;
        cfg.distance_coeffs.terms = {
            {"object_volume", 120.0}, {"surface_in_container", 0.6}, {"surface_sliding", -0.3}};
        cfg.effect = EffectSpec::Constant(-0.13);
        cfg.outcome_base.intercept = -0.15;
        cfg.outcome_base.terms = {
            {"object_volume", 30.0}, {"surface_in_container", -0.25}, {"surface_sliding", 0.2}};
        return cfg;
    }

    throw std::invalid_argument("unknown preset '" + name + "' (expected dsv, ds1 or ds2)");
}

std::string config_to_json(const ScenarioConfig& cfg) {
    nlohmann::ordered_json j;
    j["n"] = cfg.n;
    j["dataset_id"] = cfg.dataset_id;
    auto objects = nlohmann::ordered_json::object();
    for (const auto& [name, spec] : cfg.objects) {
        objects[name] = {{"probability", spec.probability}, {"volume_m3", spec.volume_m3}};
    }
    j["objects"] = objects;
    auto surfaces = nlohmann::ordered_json::object();
    for (const auto& [name, spec] : cfg.surfaces) {
        surfaces[name] = {{"probability", spec.probability},
                          {"in_container", spec.in_container},
                          {"sliding", spec.sliding}};
    }
    j["surfaces"] = surfaces;
    j["treatment"] = cfg.treatment == TreatmentMechanism::Randomized ? "randomized" : "confounded";
    auto coeffs = [](const Coefficients& c) {
        nlohmann::ordered_json out;
        out["intercept"] = c.intercept;
        out["terms"] = c.terms;
        return out;
    };
    j["distance_coeffs"] = coeffs(cfg.distance_coeffs);
    j["distance_noise_sd"] = cfg.distance_noise_sd;
    if (cfg.effect.is_step) {
        j["effect"] = {{"kind", "step"},
                       {"threshold", cfg.effect.step.threshold},
                       {"low", cfg.effect.step.low},
                       {"high", cfg.effect.step.high}};
    } else {
        j["effect"] = {{"kind", "constant"}, {"tau", cfg.effect.constant}};
    }
    j["outcome_base"] = coeffs(cfg.outcome_base);
    j["link"] = cfg.link == Link::Logistic ? "logistic" : "linear";
    j["noise_seed"] = cfg.noise_seed;
    return j.dump(2);
}

ScenarioConfig config_from_json(const std::string& text) {
    const nlohmann::json j = nlohmann::json::parse(text);
    ScenarioConfig cfg;
    cfg.n = j.at("n").get<int>();
    cfg.dataset_id = j.value("dataset_id", std::string("synthetic"));
    for (const auto& [name, spec] : j.at("objects").items()) {
        cfg.objects[name] = {spec.at("probability").get<double>(), spec.at("volume_m3").get<double>()};
    }
    for (const auto& [name, spec] : j.at("surfaces").items()) {
        cfg.surfaces[name] = {spec.at("probability").get<double>(),
                              spec.at("in_container").get<bool>(), spec.at("sliding").get<bool>()};
    }
    const std::string mechanism = j.value("treatment", std::string("randomized"));
    cfg.treatment = mechanism == "confounded" ? TreatmentMechanism::Confounded
                                              : TreatmentMechanism::Randomized;
    auto coeffs = [](const nlohmann::json& c) {
        Coefficients out;
        out.intercept = c.value("intercept", 0.0);
        if (c.contains("terms")) {
            for (const auto& [key, value] : c.at("terms").items()) {
                out.terms[key] = value.get<double>();
            }
        }
        return out;
    };
    if (j.contains("distance_coeffs")) cfg.distance_coeffs = coeffs(j.at("distance_coeffs"));
    cfg.distance_noise_sd = j.value("distance_noise_sd", 1.0);
    if (j.contains("effect")) {
        const auto& e = j.at("effect");
        if (e.at("kind") == "step") {
            cfg.effect = EffectSpec::Step(e.at("threshold").get<double>(), e.at("low").get<double>(),
                                          e.at("high").get<double>());
        } else {
            cfg.effect = EffectSpec::Constant(e.at("tau").get<double>());
        }
    }
    if (j.contains("outcome_base")) cfg.outcome_base = coeffs(j.at("outcome_base"));
    cfg.link = j.value("link", std::string("logistic")) == "linear" ? Link::Linear : Link::Logistic;
    cfg.noise_seed = j.value("noise_seed", std::uint64_t{0});
    return cfg;
}

void write_outputs(const events::EventTable& table, const GroundTruth& truth,
                   const ScenarioConfig& cfg, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    events::write_csv_file(table, dir / "events.csv");

    nlohmann::ordered_json j;
    j["config"] = nlohmann::ordered_json::parse(config_to_json(cfg));
    j["ground_truth"] = {{"cate_mean", truth.cate_mean},
                         {"per_sample_cate", truth.per_sample_cate}};
    std::ofstream out(dir / "ground_truth.json");
    if (!out) throw std::runtime_error("cannot write " + (dir / "ground_truth.json").string());
    out << j.dump(2) << "\n";
}

}  // namespace graspcause::synth
