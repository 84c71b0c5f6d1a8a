#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "vancorisk/types.hpp"

// The 19-feature schema used throughout: canonical column order groups
// features by source (chart, procedure, lab, admission). Group-conditional
// calibration statistics drive both the synthetic generator and the
// elevation-group sampling prior.

namespace vancorisk::schema {

enum class Source { chart, procedure, lab, admission };

struct FeatureDef {
    std::string id;
    std::string display_name;
    FeatureKind kind;
    std::string unit;
    Source source;
    // Physiologic support for generation / prior truncation; NaN = unbounded.
    double lower;
    double upper;
    // Group-conditional targets: mean/sd for continuous, rate for binary
    // (sd entries are ignored for binary features).
    double mean_neg, sd_neg;
    double mean_pos, sd_pos;
};

inline constexpr double kUnbounded = std::numeric_limits<double>::quiet_NaN();

inline const std::vector<FeatureDef>& features() {
    static const std::vector<FeatureDef> defs = {
        // chartevents
        {"richmond_ras_scale", "Richmond-RAS Scale", FeatureKind::continuous, "-",
         Source::chart, kUnbounded, kUnbounded, -1.17, 1.26, -1.65, 1.50},
        {"total_bilirubin", "Total Bilirubin", FeatureKind::continuous, "mg/dL",
         Source::chart, 0.0, kUnbounded, 1.99, 3.15, 3.28, 6.08},
        {"arterial_base_excess", "Arterial Base Excess", FeatureKind::continuous, "mmol/L",
         Source::chart, kUnbounded, kUnbounded, -0.99, 3.57, -2.21, 3.96},
        {"ast", "AST", FeatureKind::continuous, "U/L",
         Source::chart, 0.0, kUnbounded, 250.16, 758.82, 496.48, 1427.11},
        {"braden_mobility", "Braden Mobility", FeatureKind::continuous, "score",
         Source::chart, 0.0, kUnbounded, 2.44, 0.58, 2.25, 0.59},
        {"mean_airway_pressure", "Mean Airway Pressure", FeatureKind::continuous, "cmH2O",
         Source::chart, 0.0, kUnbounded, 10.24, 3.07, 11.17, 3.69},
        // procedureevents
        {"arterial_line", "Arterial Line", FeatureKind::binary, "binary",
         Source::procedure, 0.0, 1.0, 0.57, 0.0, 0.71, 0.0},
        // labevents
        {"phosphate", "Phosphate", FeatureKind::continuous, "mg/dL",
         Source::lab, 0.0, kUnbounded, 3.40, 1.07, 4.13, 1.31},
        {"anion_gap", "Anion Gap", FeatureKind::continuous, "mmol/L",
         Source::lab, 0.0, kUnbounded, 13.75, 3.34, 15.23, 3.96},
        {"magnesium", "Magnesium", FeatureKind::continuous, "mg/dL",
         Source::lab, 0.0, kUnbounded, 2.06, 0.28, 2.16, 0.32},
        {"lactate", "Lactate", FeatureKind::continuous, "mmol/L",
         Source::lab, 0.0, kUnbounded, 2.05, 1.26, 2.58, 1.83},
        {"ptt", "PTT", FeatureKind::continuous, "sec",
         Source::lab, 0.0, kUnbounded, 38.65, 15.22, 43.62, 17.64},
        {"platelet_count", "Platelet Count", FeatureKind::continuous, "x10^3/uL",
         Source::lab, 0.0, kUnbounded, 202.85, 106.86, 183.31, 110.30},
        {"white_blood_cells", "White Blood Cells", FeatureKind::continuous, "x10^3/uL",
         Source::lab, 0.0, kUnbounded, 12.83, 9.72, 13.52, 7.72},
        {"glucose", "Glucose", FeatureKind::continuous, "mg/dL",
         Source::lab, 0.0, kUnbounded, 142.96, 48.24, 149.55, 52.59},
        {"apsiii", "APS III", FeatureKind::continuous, "-",
         Source::admission, 0.0, kUnbounded, 48.66, 21.05, 60.44, 23.89},
        // admission
        {"age", "Age", FeatureKind::continuous, "years",
         Source::admission, 18.0, 80.0, 60.80, 14.53, 62.47, 13.55},
        {"ed_duration", "ED Duration", FeatureKind::continuous, "hours",
         Source::admission, 0.0, kUnbounded, 3.51, 4.09, 3.36, 5.68},
        {"charlson_index", "Charlson Comorbidity Index", FeatureKind::continuous, "score",
         Source::admission, 0.0, kUnbounded, 4.37, 2.72, 5.24, 2.75},
    };
    return defs;
}

inline const FeatureDef& feature(const std::string& id) {
    for (const auto& f : features())
        if (f.id == id) return f;
    fail("unknown-feature", "unknown feature id: " + id);
}

inline int feature_index(const std::string& id) {
    const auto& fs = features();
    for (std::size_t i = 0; i < fs.size(); ++i)
        if (fs[i].id == id) return static_cast<int>(i);
    return -1;
}

// Admission-level features bypass the selection stages and are appended to
// the selected set.
inline std::vector<std::string> admission_feature_ids() {
    return {"age", "ed_duration", "charlson_index", "apsiii"};
}

inline bool is_admission_feature(const std::string& id) {
    for (const auto& a : admission_feature_ids())
        if (a == id) return true;
    return false;
}

inline std::vector<FeatureMeta> feature_meta() {
    std::vector<FeatureMeta> out;
    out.reserve(features().size());
    for (const auto& f : features()) out.push_back({f.id, f.kind, f.unit});
    return out;
}

inline const std::string kCreatinineId = "creatinine";
inline const std::string kVancomycinId = "vancomycin";

}  // namespace vancorisk::schema
