#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "graspcause/events.hpp"

namespace graspcause::synth {

struct ObjectSpec {
    double probability = 0.0;
    double volume_m3 = 0.0;
};

struct SurfaceSpec {
    double probability = 0.0;
    bool in_container = false;
    bool sliding = false;
};

/// Linear score over event covariates. Term keys: "object_volume",
/// "surface_in_container", "surface_sliding", "category:<name>",
/// "surface:<name>".
struct Coefficients {
    double intercept = 0.0;
    std::map<std::string, double> terms;

    double score(const events::GraspEvent& ev) const;
};

enum class TreatmentMechanism { Randomized, Confounded };
enum class Link { Logistic, Linear };

struct StepEffect {
    double threshold = 0.0;
    double low = 0.0;
    double high = 0.0;  // applies when object_volume > threshold
};

struct EffectSpec {
    bool is_step = false;
    double constant = 0.0;
    StepEffect step;

    static EffectSpec Constant(double tau);
    static EffectSpec Step(double threshold, double low, double high);
    double value(const events::GraspEvent& ev) const;
};

/// Structural model behind the synthesizer. The treatment is the median
/// split of a latent grasp distance: randomized draws make the distance
/// pure noise, confounded draws let the covariates shift it. Defining the
/// treatment through the same median split the encoder applies keeps the
/// generated ground truth aligned with what estimators actually see.
struct ScenarioConfig {
    int n = 137;
    std::map<std::string, ObjectSpec> objects;
    std::map<std::string, SurfaceSpec> surfaces;
    TreatmentMechanism treatment = TreatmentMechanism::Randomized;
    Coefficients distance_coeffs;    // covariate pressure on the latent distance
    double distance_noise_sd = 1.0;  // noise on the latent distance score
    EffectSpec effect;               // theta(X), the planted CATE
    Coefficients outcome_base;       // baseline hand-selection score
    Link link = Link::Logistic;
    std::uint64_t noise_seed = 0;
    std::string dataset_id = "synthetic";

    void validate() const;
};

struct GroundTruth {
    double cate_mean = 0.0;
    std::vector<double> per_sample_cate;
};

std::pair<events::EventTable, GroundTruth> generate(const ScenarioConfig& cfg);

struct OracleResult {
    double mean = 0.0;
    double std_error = 0.0;
};

/// Independent Monte-Carlo oracle for the population CATE mean: fresh
/// covariate draws, no events, no estimators. mc_n must be at least 1e5.
OracleResult oracle_cate_mean(const ScenarioConfig& cfg, std::int64_t mc_n,
                              std::uint64_t seed = 0x0c7a1eULL);

/// Marginals transcribed from the three recorded collections; "dsv" is the
/// randomized validation analog with a null effect, "ds1" and "ds2" are
/// confounded scenarios with positive and negative planted effects.
ScenarioConfig preset(const std::string& name);

std::string config_to_json(const ScenarioConfig& cfg);
ScenarioConfig config_from_json(const std::string& text);

/// events.csv plus ground_truth.json (config echo and per-sample CATE).
void write_outputs(const events::EventTable& table, const GroundTruth& truth,
                   const ScenarioConfig& cfg, const std::filesystem::path& dir);

}  // namespace graspcause::synth
