#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vancorisk/common.hpp"

namespace vancorisk {

enum class EventKind { lab, chart, procedure, drug_dose };

inline const char* to_string(EventKind k) {
    switch (k) {
        case EventKind::lab: return "lab";
        case EventKind::chart: return "chart";
        case EventKind::procedure: return "procedure";
        case EventKind::drug_dose: return "drug_dose";
    }
    return "?";
}

inline EventKind event_kind_from_string(const std::string& s) {
    if (s == "lab") return EventKind::lab;
    if (s == "chart") return EventKind::chart;
    if (s == "procedure") return EventKind::procedure;
    if (s == "drug_dose") return EventKind::drug_dose;
    fail("bad-event-kind", "unknown event kind: " + s);
}

// One time-stamped observation in an ICU stay. Timestamps are hours since
// ICU admission.
struct ClinicalEvent {
    double timestamp = 0.0;
    EventKind kind = EventKind::lab;
    std::string item_id;
    double value = 0.0;
};

struct AdmissionFeatures {
    double age = 0.0;
    double ed_duration = 0.0;
    double charlson_index = 0.0;
    double apsiii = 0.0;
};

struct PatientTimeline {
    std::string patient_id;
    int stay_index = 1;  // 1 = first ICU stay
    double age = 0.0;
    bool has_active_malignancy = false;
    AdmissionFeatures admission;
    std::vector<ClinicalEvent> events;  // sorted nondecreasing by timestamp
    std::optional<double> first_vanco_time;
};

enum class Trigger { none, absolute_48h, relative_7d };

inline const char* to_string(Trigger t) {
    switch (t) {
        case Trigger::none: return "none";
        case Trigger::absolute_48h: return "absolute_48h";
        case Trigger::relative_7d: return "relative_7d";
    }
    return "?";
}

enum class DataQuality { ok, no_post_creatinine };

struct OutcomeLabel {
    bool positive = false;
    Trigger trigger = Trigger::none;
    std::optional<double> trigger_time;
    double baseline_creatinine = 0.0;
    std::optional<double> peak_post_creatinine;
    DataQuality data_quality_flag = DataQuality::ok;
};

struct AttritionStage {
    std::string name;
    std::size_t input = 0;
    std::size_t output = 0;
};

struct AttritionReport {
    std::vector<AttritionStage> stages;
    std::size_t final_count() const { return stages.empty() ? 0 : stages.back().output; }
};

enum class FeatureKind { continuous, binary };

struct FeatureMeta {
    std::string name;
    FeatureKind kind = FeatureKind::continuous;
    std::string unit;
};

// Per-patient snapshot: latest pre-dose value per feature (NaN = missing),
// with the contributing event time kept for temporal audits.
struct FeatureVector {
    std::vector<double> values;
    std::vector<double> source_times;  // NaN where value is missing or admission-level
};

// Dense feature matrix with missing values encoded as NaN.
struct Dataset {
    std::vector<FeatureMeta> feature_meta;
    std::vector<double> rows;       // row-major, n_rows x n_cols
    std::vector<std::uint8_t> labels;
    std::vector<std::string> row_ids;

    std::size_t n_rows() const { return labels.size(); }
    std::size_t n_cols() const { return feature_meta.size(); }

    double at(std::size_t r, std::size_t c) const { return rows[r * n_cols() + c]; }
    double& at(std::size_t r, std::size_t c) { return rows[r * n_cols() + c]; }

    std::span<const double> row(std::size_t r) const {
        return {rows.data() + r * n_cols(), n_cols()};
    }

    std::size_t count_label(int v) const {
        std::size_t c = 0;
        for (auto y : labels) c += (y == v);
        return c;
    }

    int column_index(const std::string& name) const {
        for (std::size_t j = 0; j < feature_meta.size(); ++j)
            if (feature_meta[j].name == name) return static_cast<int>(j);
        return -1;
    }

    void push_row(std::span<const double> values, std::uint8_t label, std::string id = {}) {
        require(values.size() == n_cols(), "row-width",
                "row width does not match feature count");
        rows.insert(rows.end(), values.begin(), values.end());
        labels.push_back(label);
        row_ids.push_back(std::move(id));
    }

    Dataset select_rows(std::span<const std::size_t> idx) const {
        Dataset out;
        out.feature_meta = feature_meta;
        out.rows.reserve(idx.size() * n_cols());
        out.labels.reserve(idx.size());
        for (std::size_t r : idx) {
            auto rw = row(r);
            out.rows.insert(out.rows.end(), rw.begin(), rw.end());
            out.labels.push_back(labels[r]);
            out.row_ids.push_back(r < row_ids.size() ? row_ids[r] : std::string{});
        }
        return out;
    }

    Dataset select_columns(std::span<const std::size_t> cols) const {
        Dataset out;
        for (std::size_t c : cols) out.feature_meta.push_back(feature_meta[c]);
        out.rows.reserve(n_rows() * cols.size());
        for (std::size_t r = 0; r < n_rows(); ++r)
            for (std::size_t c : cols) out.rows.push_back(at(r, c));
        out.labels = labels;
        out.row_ids = row_ids;
        return out;
    }
};

}  // namespace vancorisk
