#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "graspcause/causal_graph.hpp"

namespace graspcause::events {

enum class Hand { Left, Right };

const char* to_string(Hand h);

struct GraspEvent {
    std::string object_category;
    double object_volume_m3 = 0.0;
    std::string surface_id;
    bool surface_in_container = false;  // SC
    bool surface_sliding = false;       // SS
    Hand hand = Hand::Left;             // H
    Hand dominant_hand = Hand::Right;   // DO, a subject attribute
    double head_hand_distance_m = 0.0;  // D, at grasp trigger
};

struct EventTable {
    std::vector<GraspEvent> events;
    std::string dataset_id;

    std::size_t size() const { return events.size(); }
};

/// Exact CSV header for grasp-event files; UTF-8, '.' decimal separator,
/// booleans true|false, hands Left|Right.
inline constexpr const char* kCsvHeader =
    "object_category,object_volume_m3,surface_id,surface_in_container,"
    "surface_sliding,hand,dominant_hand,head_hand_distance_m";

/// Parses the event CSV. Malformed rows are reported with their line number;
/// a header-only file is an error ("no events").
EventTable parse_events(std::istream& source, const std::string& dataset_id);
EventTable parse_events_file(const std::filesystem::path& path, const std::string& dataset_id);

void write_csv(const EventTable& table, std::ostream& out);
void write_csv_file(const EventTable& table, const std::filesystem::path& path);

struct SplitSpec {
    double threshold = 0.0;
    std::pair<double, double> close_range{0.0, 0.0};
    std::pair<double, double> far_range{0.0, 0.0};
    std::size_t n_close = 0;
    std::size_t n_far = 0;
};

/// Median split: threshold is the middle order statistic (odd n) or the mean
/// of the two middle ones (even n); values equal to the threshold fall in the
/// close bin. Errors when fewer than 2 values or when the far bin is empty.
SplitSpec median_split(const std::vector<double>& distances);

struct DesignMatrix {
    Eigen::VectorXd y;  // outcome, Right = 1
    Eigen::VectorXd t;  // treatment, far = 1
    Eigen::MatrixXd x;  // heterogeneity features
    Eigen::MatrixXd w;  // controls
    std::vector<std::string> x_names;
    std::vector<std::string> w_names;
    std::vector<std::string> warnings;

    Eigen::Index n() const { return y.size(); }
};

/// Encodes the table against an identified estimand: y from hand, t from the
/// median split of distances, x from the requested heterogeneity features
/// (default object_volume), w from the remaining adjustment variables with
/// categoricals expanded to full one-hot. Constant columns are dropped with a
/// warning.
DesignMatrix encode(const EventTable& table, const graph::Estimand& estimand,
                    const std::vector<std::string>& x_features = {"object_volume"});

enum class Sign { Negative, Zero, Positive };

const char* to_string(Sign s);

struct ReversalReport {
    Sign aggregate_sign = Sign::Zero;
    std::map<std::string, Sign> stratum_signs;
    bool reversal = false;
    std::vector<std::string> warnings;
};

/// One stratum of a treatment-by-outcome table; cells are weights or counts.
struct StratumCounts {
    std::string label;
    double control_neg = 0;  // t=0, y=0
    double control_pos = 0;  // t=0, y=1
    double treated_neg = 0;  // t=1, y=0
    double treated_pos = 0;  // t=1, y=1
};

/// Core reversal logic shared by reversal_report and Monte-Carlo studies:
/// reversal iff the aggregate sign is nonzero, at least one stratum sign is
/// nonzero, and every nonzero stratum sign opposes the aggregate.
ReversalReport reversal_from_counts(const std::vector<StratumCounts>& strata);

/// Simpson diagnostic on real events: treatment from the median split of
/// distances, outcome from hand selection, strata from the given
/// categorical/boolean field.
ReversalReport reversal_report(const EventTable& table, const std::string& segregate_by);

}  // namespace graspcause::events
