#include "graspcause/events.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace graspcause::events {

namespace {

constexpr double kSignEps = 1e-12;

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> fields;
    std::string current;
    for (char ch : line) {
        if (ch == ',') {
            fields.push_back(current);
            current.clear();
        } else {
            current.push_back(ch);
        }
    }
    fields.push_back(current);
    return fields;
}

double parse_double(const std::string& text, std::size_t line_no, const char* field) {
    double value = 0.0;
    const char* first = text.data();
    const char* last = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{} || ptr != last) {
        throw std::runtime_error("line " + std::to_string(line_no) + ": malformed " + field +
                                 " value '" + text + "'");
    }
    return value;
}

bool parse_bool(const std::string& text, std::size_t line_no, const char* field) {
    if (text == "true") return true;
    if (text == "false") return false;
    throw std::runtime_error("line " + std::to_string(line_no) + ": " + field +
                             " must be true or false, got '" + text + "'");
}

Hand parse_hand(const std::string& text, std::size_t line_no, const char* field) {
    if (text == "Left") return Hand::Left;
    if (text == "Right") return Hand::Right;
    throw std::runtime_error("line " + std::to_string(line_no) + ": " + field +
                             " must be Left or Right, got '" + text + "'");
}

std::string format_double(double v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc{}) throw std::runtime_error("format_double failed");
    return std::string(buf, ptr);
}

Sign sign_of(double diff) {
    if (diff > kSignEps) return Sign::Positive;
    if (diff < -kSignEps) return Sign::Negative;
    return Sign::Zero;
}

}  // namespace

const char* to_string(Hand h) { return h == Hand::Left ? "Left" : "Right"; }

const char* to_string(Sign s) {
    switch (s) {
        case Sign::Negative: return "neg";
        case Sign::Positive: return "pos";
        default: return "zero";
    }
}

EventTable parse_events(std::istream& source, const std::string& dataset_id) {
    std::string line;
    if (!std::getline(source, line)) throw std::runtime_error("empty input: no header");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kCsvHeader) {
        throw std::runtime_error("line 1: header mismatch, expected '" + std::string(kCsvHeader) +
                                 "'");
    }

    EventTable table;
    table.dataset_id = dataset_id;
    std::size_t line_no = 1;
    while (std::getline(source, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto fields = split_fields(line);
        if (fields.size() != 8) {
            throw std::runtime_error("line " + std::to_string(line_no) + ": expected 8 fields, got " +
                                     std::to_string(fields.size()));
        }
        GraspEvent ev;
        ev.object_category = fields[0];
        ev.object_volume_m3 = parse_double(fields[1], line_no, "object_volume_m3");
        ev.surface_id = fields[2];
        ev.surface_in_container = parse_bool(fields[3], line_no, "surface_in_container");
        ev.surface_sliding = parse_bool(fields[4], line_no, "surface_sliding");
        ev.hand = parse_hand(fields[5], line_no, "hand");
        ev.dominant_hand = parse_hand(fields[6], line_no, "dominant_hand");
        ev.head_hand_distance_m = parse_double(fields[7], line_no, "head_hand_distance_m");

        if (ev.object_category.empty()) {
            throw std::runtime_error("line " + std::to_string(line_no) + ": empty object_category");
        }
        if (ev.surface_id.empty()) {
            throw std::runtime_error("line " + std::to_string(line_no) + ": empty surface_id");
        }
        if (!(ev.object_volume_m3 > 0.0)) {
            throw std::runtime_error("line " + std::to_string(line_no) +
                                     ": object_volume_m3 must be positive");
        }
        if (!(ev.head_hand_distance_m > 0.0)) {
            throw std::runtime_error("line " + std::to_string(line_no) +
                                     ": head_hand_distance_m must be positive");
        }
        table.events.push_back(std::move(ev));
    }
    if (table.events.empty()) throw std::runtime_error("no events");
    return table;
}

EventTable parse_events_file(const std::filesystem::path& path, const std::string& dataset_id) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open event file: " + path.string());
    return parse_events(in, dataset_id);
}

void write_csv(const EventTable& table, std::ostream& out) {
    out << kCsvHeader << "\n";
    for (const GraspEvent& ev : table.events) {
        out << ev.object_category << ',' << format_double(ev.object_volume_m3) << ','
            << ev.surface_id << ',' << (ev.surface_in_container ? "true" : "false") << ','
            << (ev.surface_sliding ? "true" : "false") << ',' << to_string(ev.hand) << ','
            << to_string(ev.dominant_hand) << ',' << format_double(ev.head_hand_distance_m)
            << "\n";
    }
}

void write_csv_file(const EventTable& table, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write event file: " + path.string());
    write_csv(table, out);
}

SplitSpec median_split(const std::vector<double>& distances) {
    const std::size_t n = distances.size();
    if (n < 2) throw std::invalid_argument("median_split: need at least 2 values");

    std::vector<double> sorted = distances;
    std::sort(sorted.begin(), sorted.end());

    SplitSpec spec;
    spec.threshold = (n % 2 == 1) ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);

    for (double d : distances) {
        if (d <= spec.threshold) {
            ++spec.n_close;
        } else {
            ++spec.n_far;
        }
    }
    if (spec.n_far == 0) {
        throw std::invalid_argument("median_split: no values above the threshold (no variation)");
    }

    // bins are contiguous in sorted order: first n_close values are close
    spec.close_range = {sorted.front(), sorted[spec.n_close - 1]};
    spec.far_range = {sorted[spec.n_close], sorted.back()};
    return spec;
}

namespace {

// Graph symbols of the default model and the CSV field names are both
// accepted as feature identifiers.
enum class Field { ObjectCategory, ObjectVolume, SurfaceId, SurfaceInContainer, SurfaceSliding, DominantHand };

Field resolve_feature(const std::string& name) {
    if (name == "O" || name == "object_category") return Field::ObjectCategory;
    if (name == "OV" || name == "object_volume" || name == "object_volume_m3") return Field::ObjectVolume;
    if (name == "S" || name == "surface_id") return Field::SurfaceId;
    if (name == "SC" || name == "surface_in_container") return Field::SurfaceInContainer;
    if (name == "SS" || name == "surface_sliding") return Field::SurfaceSliding;
    if (name == "DO" || name == "dominant_hand") return Field::DominantHand;
    throw std::invalid_argument("encode: feature '" + name + "' is not an event field");
}

std::vector<std::string> sorted_levels(const EventTable& table, Field field) {
    std::set<std::string> levels;
    for (const GraspEvent& ev : table.events) {
        levels.insert(field == Field::ObjectCategory ? ev.object_category : ev.surface_id);
    }
    return {levels.begin(), levels.end()};
}

// Appends the encoded column block for one feature; returns column names.
void append_feature(const EventTable& table, Field field, std::vector<std::vector<double>>& cols,
                    std::vector<std::string>& names) {
    const std::size_t n = table.size();
    switch (field) {
        case Field::ObjectVolume: {
            std::vector<double> col(n);
            for (std::size_t i = 0; i < n; ++i) col[i] = table.events[i].object_volume_m3;
            cols.push_back(std::move(col));
            names.push_back("object_volume");
            break;
        }
        case Field::SurfaceInContainer:
        case Field::SurfaceSliding:
        case Field::DominantHand: {
            std::vector<double> col(n);
            for (std::size_t i = 0; i < n; ++i) {
                const GraspEvent& ev = table.events[i];
                if (field == Field::SurfaceInContainer) col[i] = ev.surface_in_container ? 1.0 : 0.0;
                if (field == Field::SurfaceSliding) col[i] = ev.surface_sliding ? 1.0 : 0.0;
                if (field == Field::DominantHand) col[i] = ev.dominant_hand == Hand::Right ? 1.0 : 0.0;
            }
            cols.push_back(std::move(col));
            names.push_back(field == Field::SurfaceInContainer ? "surface_in_container"
                            : field == Field::SurfaceSliding   ? "surface_sliding"
                                                               : "dominant_hand");
            break;
        }
        case Field::ObjectCategory:
        case Field::SurfaceId: {
            const bool is_object = field == Field::ObjectCategory;
            for (const std::string& level : sorted_levels(table, field)) {
                std::vector<double> col(n);
                for (std::size_t i = 0; i < n; ++i) {
                    const GraspEvent& ev = table.events[i];
                    const std::string& value = is_object ? ev.object_category : ev.surface_id;
                    col[i] = value == level ? 1.0 : 0.0;
                }
                cols.push_back(std::move(col));
                names.push_back((is_object ? std::string("object_category=") : std::string("surface_id=")) +
                                level);
            }
            break;
        }
    }
}

bool is_constant(const std::vector<double>& col) {
    return std::all_of(col.begin(), col.end(), [&](double v) { return v == col.front(); });
}

Eigen::MatrixXd to_matrix(const std::vector<std::vector<double>>& cols, std::size_t n) {
    Eigen::MatrixXd m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t j = 0; j < cols.size(); ++j) {
        for (std::size_t i = 0; i < n; ++i) {
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = cols[j][i];
        }
    }
    return m;
}

}  // namespace

DesignMatrix encode(const EventTable& table, const graph::Estimand& estimand,
                    const std::vector<std::string>& x_features) {
    const std::size_t n = table.size();
    if (n == 0) throw std::invalid_argument("encode: empty table");
    if (n < 20) throw std::invalid_argument("encode: need at least 20 events for cross-fitting");
    if (estimand.treatment != "D" || estimand.outcome != "H") {
        throw std::invalid_argument("encode: expects treatment D (distance) and outcome H (hand)");
    }

    DesignMatrix dm;

    dm.y.resize(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
        dm.y[static_cast<Eigen::Index>(i)] = table.events[i].hand == Hand::Right ? 1.0 : 0.0;
    }
    if (dm.y.minCoeff() == dm.y.maxCoeff()) {
        throw std::invalid_argument("encode: outcome has no variation");
    }

    std::vector<double> distances(n);
    for (std::size_t i = 0; i < n; ++i) distances[i] = table.events[i].head_hand_distance_m;
    SplitSpec split;
    try {
        split = median_split(distances);
    } catch (const std::invalid_argument&) {
        throw std::invalid_argument("encode: treatment has no variation (all distances equal)");
    }
    dm.t.resize(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
        dm.t[static_cast<Eigen::Index>(i)] = distances[i] > split.threshold ? 1.0 : 0.0;
    }

    // x block
    std::vector<std::vector<double>> x_cols;
    std::vector<Field> x_fields;
    for (const std::string& name : x_features) {
        const Field field = resolve_feature(name);
        x_fields.push_back(field);
        append_feature(table, field, x_cols, dm.x_names);
    }

    // w block: remaining adjustment variables, in schema order
    std::vector<Field> w_fields;
    for (const std::string& symbol : estimand.adjustment_set) {
        const Field field = resolve_feature(symbol);
        if (std::find(x_fields.begin(), x_fields.end(), field) == x_fields.end()) {
            w_fields.push_back(field);
        }
    }
    const Field schema_order[] = {Field::ObjectCategory, Field::ObjectVolume, Field::SurfaceId,
                                  Field::SurfaceInContainer, Field::SurfaceSliding,
                                  Field::DominantHand};
    std::vector<std::vector<double>> w_cols;
    for (Field field : schema_order) {
        if (std::find(w_fields.begin(), w_fields.end(), field) != w_fields.end()) {
            append_feature(table, field, w_cols, dm.w_names);
        }
    }

    // drop constant columns
    auto drop_constants = [&](std::vector<std::vector<double>>& cols,
                              std::vector<std::string>& names) {
        std::vector<std::vector<double>> kept_cols;
        std::vector<std::string> kept_names;
        for (std::size_t j = 0; j < cols.size(); ++j) {
            if (is_constant(cols[j])) {
                dm.warnings.push_back("dropped constant column '" + names[j] + "'");
            } else {
                kept_cols.push_back(std::move(cols[j]));
                kept_names.push_back(std::move(names[j]));
            }
        }
        cols = std::move(kept_cols);
        names = std::move(kept_names);
    };
    drop_constants(x_cols, dm.x_names);
    drop_constants(w_cols, dm.w_names);

    dm.x = to_matrix(x_cols, n);
    dm.w = to_matrix(w_cols, n);
    return dm;
}

ReversalReport reversal_from_counts(const std::vector<StratumCounts>& strata) {
    ReversalReport report;

    StratumCounts total{"", 0, 0, 0, 0};
    for (const StratumCounts& s : strata) {
        total.control_neg += s.control_neg;
        total.control_pos += s.control_pos;
        total.treated_neg += s.treated_neg;
        total.treated_pos += s.treated_pos;
    }

    auto arm_diff = [](const StratumCounts& s, bool& defined) {
        const double n_treated = s.treated_neg + s.treated_pos;
        const double n_control = s.control_neg + s.control_pos;
        if (n_treated <= 0.0 || n_control <= 0.0) {
            defined = false;
            return 0.0;
        }
        defined = true;
        return s.treated_pos / n_treated - s.control_pos / n_control;
    };

    bool defined = false;
    report.aggregate_sign = sign_of(arm_diff(total, defined));
    if (!defined) report.aggregate_sign = Sign::Zero;

    std::size_t opposing = 0;
    bool all_nonzero_oppose = true;
    for (const StratumCounts& s : strata) {
        bool stratum_defined = false;
        const double diff = arm_diff(s, stratum_defined);
        Sign sign = stratum_defined ? sign_of(diff) : Sign::Zero;
        if (!stratum_defined) {
            report.warnings.push_back("stratum '" + s.label + "' has a single treatment arm");
        }
        report.stratum_signs[s.label] = sign;
        if (sign == Sign::Zero) continue;
        if (sign != report.aggregate_sign) {
            ++opposing;
        } else {
            all_nonzero_oppose = false;
        }
    }

    report.reversal =
        report.aggregate_sign != Sign::Zero && opposing > 0 && all_nonzero_oppose;
    return report;
}

ReversalReport reversal_report(const EventTable& table, const std::string& segregate_by) {
    if (table.events.empty()) throw std::invalid_argument("reversal_report: empty table");
    const Field field = resolve_feature(segregate_by);
    if (field == Field::ObjectVolume) {
        throw std::invalid_argument("reversal_report: segregate_by must be categorical or boolean");
    }

    std::vector<double> distances;
    distances.reserve(table.size());
    for (const GraspEvent& ev : table.events) distances.push_back(ev.head_hand_distance_m);
    const SplitSpec split = median_split(distances);

    auto stratum_label = [&](const GraspEvent& ev) -> std::string {
        switch (field) {
            case Field::ObjectCategory: return ev.object_category;
            case Field::SurfaceId: return ev.surface_id;
            case Field::SurfaceInContainer: return ev.surface_in_container ? "true" : "false";
            case Field::SurfaceSliding: return ev.surface_sliding ? "true" : "false";
            case Field::DominantHand: return to_string(ev.dominant_hand);
            default: return "";
        }
    };

    std::map<std::string, StratumCounts> by_label;
    for (const GraspEvent& ev : table.events) {
        const std::string label = stratum_label(ev);
        StratumCounts& s = by_label[label];
        s.label = label;
        const bool treated = ev.head_hand_distance_m > split.threshold;
        const bool positive = ev.hand == Hand::Right;
        if (treated && positive) s.treated_pos += 1;
        if (treated && !positive) s.treated_neg += 1;
        if (!treated && positive) s.control_pos += 1;
        if (!treated && !positive) s.control_neg += 1;
    }

    std::vector<StratumCounts> strata;
    strata.reserve(by_label.size());
    for (auto& [label, counts] : by_label) strata.push_back(counts);
    return reversal_from_counts(strata);
}

}  // namespace graspcause::events
