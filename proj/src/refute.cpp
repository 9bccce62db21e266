#include "graspcause/refute.hpp"

#include <cmath>
#include <stdexcept>

#include "graspcause/parallel.hpp"
#include "graspcause/rng.hpp"
#include "graspcause/stats.hpp"

namespace graspcause::refute {

namespace {

constexpr int kSubsetRedraws = 5;

struct RepOutcome {
    bool ok = false;
    double effect = 0.0;
    std::string error;
};

RefutationReport assemble(Strategy strategy, double original, const std::vector<RepOutcome>& reps,
                          std::uint64_t seed, std::vector<std::string> warnings) {
    std::vector<double> effects;
    for (std::size_t r = 0; r < reps.size(); ++r) {
        if (reps[r].ok) {
            effects.push_back(reps[r].effect);
        } else {
            warnings.push_back("rep " + std::to_string(r) + " skipped: " + reps[r].error);
        }
    }
    if (effects.empty()) {
        throw std::runtime_error("refutation: every repetition failed");
    }
    RefutationReport report;
    report.strategy = strategy;
    report.original_effect = original;
    report.recomputed_effect = effects.size() == 1 ? effects.front() : stable_mean(effects);
    report.delta_abs = std::abs(report.original_effect - report.recomputed_effect);
    report.reps = static_cast<int>(reps.size());
    report.seed = seed;
    report.warnings = std::move(warnings);
    return report;
}

Eigen::VectorXd permuted(const Eigen::VectorXd& v, Rng& rng) {
    std::vector<double> values(v.data(), v.data() + v.size());
    rng.shuffle(values);
    return Eigen::Map<const Eigen::VectorXd>(values.data(), v.size());
}

}  // namespace

const char* to_string(Strategy s) {
    switch (s) {
        case Strategy::PlaceboTreatmentOutcome: return "placebo";
        case Strategy::RandomCommonCause: return "common_cause";
        case Strategy::DataSubset: return "subset";
    }
    return "?";
}

Strategy strategy_from_string(const std::string& name) {
    if (name == "placebo") return Strategy::PlaceboTreatmentOutcome;
    if (name == "common_cause") return Strategy::RandomCommonCause;
    if (name == "subset") return Strategy::DataSubset;
    throw std::invalid_argument("unknown refutation strategy '" + name + "'");
}

RefutationReport refute_placebo(const events::DesignMatrix& dm, effects::EstimatorId id,
                                const effects::EstimatorConfig& cfg, int reps,
                                std::uint64_t seed) {
    if (reps < 1) throw std::invalid_argument("refute_placebo: reps must be at least 1");
    const double original = effects::estimate(dm, id, cfg).effect;

    std::vector<RepOutcome> outcomes(static_cast<std::size_t>(reps));
    parallel_for(static_cast<std::size_t>(reps), [&](std::size_t r) {
        Rng rng(derive_seed(seed, r));
        events::DesignMatrix perturbed = dm;
        perturbed.t = permuted(dm.t, rng);
        perturbed.y = permuted(dm.y, rng);
        try {
            outcomes[r].effect = effects::estimate(perturbed, id, cfg).effect;
            outcomes[r].ok = true;
        } catch (const std::exception& e) {
            outcomes[r].error = e.what();
        }
    });
    return assemble(Strategy::PlaceboTreatmentOutcome, original, outcomes, seed, {});
}

RefutationReport refute_random_common_cause(const events::DesignMatrix& dm,
                                            effects::EstimatorId id,
                                            const effects::EstimatorConfig& cfg, double strength,
                                            std::uint64_t seed) {
    if (strength < 0.0) throw std::invalid_argument("refute_random_common_cause: strength < 0");
    const double original = effects::estimate(dm, id, cfg).effect;

    Rng rng(derive_seed(seed, 0));
    events::DesignMatrix perturbed = dm;
    for (Eigen::Index i = 0; i < dm.n(); ++i) {
        const double u = rng.normal();
        perturbed.t[i] = dm.t[i] + strength * u;
        perturbed.y[i] = dm.y[i] + strength * u;
    }

    std::vector<RepOutcome> outcomes(1);
    try {
        outcomes[0].effect = effects::estimate(perturbed, id, cfg).effect;
        outcomes[0].ok = true;
    } catch (const std::exception& e) {
        outcomes[0].error = e.what();
    }
    return assemble(Strategy::RandomCommonCause, original, outcomes, seed, {});
}

RefutationReport refute_subset(const events::DesignMatrix& dm, effects::EstimatorId id,
                               const effects::EstimatorConfig& cfg, double fraction, int reps,
                               std::uint64_t seed) {
    if (reps < 1) throw std::invalid_argument("refute_subset: reps must be at least 1");
    if (!(fraction > 0.0 && fraction <= 1.0)) {
        throw std::invalid_argument("refute_subset: fraction must be in (0,1]");
    }
    const std::size_t n = static_cast<std::size_t>(dm.n());
    const std::size_t m = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n)));
    if (m < 20) {
        throw std::invalid_argument("refute_subset: subsample of " + std::to_string(m) +
                                    " rows is below the 20-row design minimum");
    }
    const double original = effects::estimate(dm, id, cfg).effect;

    auto subset = [&](const std::vector<std::size_t>& rows) {
        events::DesignMatrix out;
        out.y.resize(static_cast<Eigen::Index>(rows.size()));
        out.t.resize(static_cast<Eigen::Index>(rows.size()));
        out.x.resize(static_cast<Eigen::Index>(rows.size()), dm.x.cols());
        out.w.resize(static_cast<Eigen::Index>(rows.size()), dm.w.cols());
        for (std::size_t i = 0; i < rows.size(); ++i) {
            const auto src = static_cast<Eigen::Index>(rows[i]);
            const auto dst = static_cast<Eigen::Index>(i);
            out.y[dst] = dm.y[src];
            out.t[dst] = dm.t[src];
            out.x.row(dst) = dm.x.row(src);
            out.w.row(dst) = dm.w.row(src);
        }
        out.x_names = dm.x_names;
        out.w_names = dm.w_names;
        return out;
    };

    std::vector<RepOutcome> outcomes(static_cast<std::size_t>(reps));
    parallel_for(static_cast<std::size_t>(reps), [&](std::size_t r) {
        Rng rng(derive_seed(seed, r));
        bool drew_valid = false;
        events::DesignMatrix sub;
        for (int attempt = 0; attempt <= kSubsetRedraws; ++attempt) {
            sub = subset(rng.sample_without_replacement(n, m));
            const bool t_varies = sub.t.minCoeff() != sub.t.maxCoeff();
            const bool y_varies = sub.y.minCoeff() != sub.y.maxCoeff();
            if (t_varies && y_varies) {
                drew_valid = true;
                break;
            }
        }
        if (!drew_valid) {
            outcomes[r].error = "subsample lost treatment or outcome variation after " +
                                std::to_string(kSubsetRedraws) + " redraws";
            return;
        }
        try {
            outcomes[r].effect = effects::estimate(sub, id, cfg).effect;
            outcomes[r].ok = true;
        } catch (const std::exception& e) {
            outcomes[r].error = e.what();
        }
    });
    return assemble(Strategy::DataSubset, original, outcomes, seed, {});
}

}  // namespace graspcause::refute
