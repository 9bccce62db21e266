#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "graspcause/effects.hpp"

namespace graspcause::refute {

enum class Strategy { PlaceboTreatmentOutcome, RandomCommonCause, DataSubset };

const char* to_string(Strategy s);
Strategy strategy_from_string(const std::string& name);

struct RefutationReport {
    Strategy strategy = Strategy::PlaceboTreatmentOutcome;
    double original_effect = 0.0;
    double recomputed_effect = 0.0;  // averaged over reps
    double delta_abs = 0.0;
    int reps = 0;
    std::uint64_t seed = 0;
    std::vector<std::string> warnings;
};

/// Check 1: per rep, permute the treatment and outcome columns independently
/// (destroying every dependence), re-run the estimator, average. A healthy
/// setting recomputes an effect near zero.
RefutationReport refute_placebo(const events::DesignMatrix& dm, effects::EstimatorId id,
                                const effects::EstimatorConfig& cfg, int reps, std::uint64_t seed);

/// Check 2: add strength * u (u ~ N(0,1), shared) to both t and y as a
/// numeric perturbation without re-binarization; strength 0 reproduces the
/// original estimate bit for bit.
RefutationReport refute_random_common_cause(const events::DesignMatrix& dm,
                                            effects::EstimatorId id,
                                            const effects::EstimatorConfig& cfg, double strength,
                                            std::uint64_t seed);

/// Check 3: per rep, re-estimate on a random subset of floor(fraction * n)
/// rows without replacement; fraction 1.0 reproduces the original exactly.
RefutationReport refute_subset(const events::DesignMatrix& dm, effects::EstimatorId id,
                               const effects::EstimatorConfig& cfg, double fraction, int reps,
                               std::uint64_t seed);

}  // namespace graspcause::refute
