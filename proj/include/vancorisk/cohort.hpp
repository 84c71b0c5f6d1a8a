#pragma once

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

#include "vancorisk/schema.hpp"
#include "vancorisk/types.hpp"

// Turns raw per-patient event timelines into a labeled cohort: stepwise
// inclusion filters, pre-dose baseline lookup, KDIGO-style outcome labeling
// and leak-free feature snapshots. Everything here is a pure function over
// immutable timelines.

namespace vancorisk::cohort {

constexpr double kAbsoluteRiseMgDl = 0.3;
constexpr double kAbsoluteWindowHours = 48.0;
constexpr double kRelativeFactor = 1.5;
constexpr double kRelativeWindowHours = 168.0;
constexpr double kMinAge = 18.0;
constexpr double kMaxAge = 80.0;

// Filters applied in order: vancomycin exposure -> age 18..80 (inclusive)
// -> no active malignancy -> first ICU stay.
inline std::pair<std::vector<PatientTimeline>, AttritionReport>
apply_inclusion_filters(std::vector<PatientTimeline> timelines) {
    AttritionReport report;
    auto run_stage = [&](const std::string& name, auto keep) {
        AttritionStage stage;
        stage.name = name;
        stage.input = timelines.size();
        std::vector<PatientTimeline> kept;
        kept.reserve(timelines.size());
        for (auto& t : timelines)
            if (keep(t)) kept.push_back(std::move(t));
        timelines = std::move(kept);
        stage.output = timelines.size();
        report.stages.push_back(stage);
    };

    run_stage("received_vancomycin",
              [](const PatientTimeline& t) { return t.first_vanco_time.has_value(); });
    run_stage("age_18_to_80", [](const PatientTimeline& t) {
        return t.age >= kMinAge && t.age <= kMaxAge;
    });
    run_stage("no_active_malignancy",
              [](const PatientTimeline& t) { return !t.has_active_malignancy; });
    run_stage("first_icu_stay",
              [](const PatientTimeline& t) { return t.stay_index == 1; });

    return {std::move(timelines), std::move(report)};
}

// Most recent creatinine strictly before the first vancomycin dose.
// Ties on timestamp resolve to the later event in timeline order.
inline std::optional<double> baseline_creatinine(const PatientTimeline& t) {
    require(t.first_vanco_time.has_value(), "missing-vanco-time",
            "patient " + t.patient_id + " has no vancomycin dose");
    const double tv = *t.first_vanco_time;
    std::optional<double> best;
    double best_time = -1.0;
    for (const auto& e : t.events) {
        if (e.kind != EventKind::lab || e.item_id != schema::kCreatinineId) continue;
        if (e.timestamp >= tv) break;  // events sorted
        if (!best || e.timestamp >= best_time) {
            best = e.value;
            best_time = e.timestamp;
        }
    }
    return best;
}

// KDIGO-style label: positive iff some post-dose creatinine rises >= 0.3
// within 48 h of the dose, or reaches 1.5x baseline within 7 days. The
// trigger is the earliest qualifying event; when both criteria fire at the
// same event the absolute criterion is reported.
inline OutcomeLabel label_kdigo(const PatientTimeline& t) {
    const auto baseline = baseline_creatinine(t);
    require(baseline.has_value(), "missing-baseline",
            "patient " + t.patient_id + " has no pre-dose creatinine");
    const double tv = *t.first_vanco_time;
    const double base = *baseline;

    OutcomeLabel label;
    label.baseline_creatinine = base;

    bool any_post = false;
    double peak = -std::numeric_limits<double>::infinity();
    for (const auto& e : t.events) {
        if (e.kind != EventKind::lab || e.item_id != schema::kCreatinineId) continue;
        const double dt = e.timestamp - tv;
        if (dt <= 0.0) continue;  // label triggers must follow the dose
        if (dt > kRelativeWindowHours) break;
        any_post = true;
        peak = std::max(peak, e.value);

        const bool absolute_hit =
            dt <= kAbsoluteWindowHours && e.value - base >= kAbsoluteRiseMgDl;
        const bool relative_hit = e.value >= kRelativeFactor * base;
        if ((absolute_hit || relative_hit) && !label.positive) {
            label.positive = true;
            label.trigger_time = e.timestamp;
            label.trigger = absolute_hit ? Trigger::absolute_48h : Trigger::relative_7d;
        }
    }

    if (any_post)
        label.peak_post_creatinine = peak;
    else
        label.data_quality_flag = DataQuality::no_post_creatinine;
    return label;
}

// Latest pre-dose value per feature; admission-level features are copied
// from the admission record. Events at or after the first dose never
// contribute.
inline FeatureVector extract_feature_snapshot(const PatientTimeline& t,
                                              const std::vector<std::string>& feature_ids) {
    require(t.first_vanco_time.has_value(), "missing-vanco-time",
            "patient " + t.patient_id + " has no vancomycin dose");
    const double tv = *t.first_vanco_time;

    FeatureVector out;
    out.values.assign(feature_ids.size(), kMissing);
    out.source_times.assign(feature_ids.size(), kMissing);

    std::vector<bool> from_admission(feature_ids.size(), false);
    for (std::size_t j = 0; j < feature_ids.size(); ++j) {
        const auto& id = feature_ids[j];
        if (id == "age") { out.values[j] = t.admission.age; from_admission[j] = true; }
        else if (id == "ed_duration") { out.values[j] = t.admission.ed_duration; from_admission[j] = true; }
        else if (id == "charlson_index") { out.values[j] = t.admission.charlson_index; from_admission[j] = true; }
        else if (id == "apsiii") { out.values[j] = t.admission.apsiii; from_admission[j] = true; }
    }

    for (const auto& e : t.events) {
        if (e.timestamp >= tv) break;
        if (e.kind == EventKind::drug_dose) continue;
        for (std::size_t j = 0; j < feature_ids.size(); ++j) {
            if (from_admission[j] || feature_ids[j] != e.item_id) continue;
            if (is_missing(out.source_times[j]) || e.timestamp >= out.source_times[j]) {
                out.values[j] = e.value;
                out.source_times[j] = e.timestamp;
            }
        }
    }
    return out;
}

struct LabeledCohort {
    Dataset data;                       // snapshot features, canonical schema order
    std::vector<OutcomeLabel> labels;   // aligned with data rows
    AttritionReport attrition;          // filters plus baseline-availability stage
};

// Full cohort construction: filters, per-patient baseline check (patients
// without a pre-dose creatinine are dropped and counted as their own
// attrition stage), labeling and snapshot extraction.
inline LabeledCohort build_labeled_cohort(std::vector<PatientTimeline> timelines) {
    auto [kept, report] = apply_inclusion_filters(std::move(timelines));

    AttritionStage baseline_stage;
    baseline_stage.name = "pre_dose_creatinine_available";
    baseline_stage.input = kept.size();

    std::vector<std::string> ids;
    for (const auto& f : schema::features()) ids.push_back(f.id);

    LabeledCohort out;
    out.data.feature_meta = schema::feature_meta();
    for (auto& t : kept) {
        if (!baseline_creatinine(t).has_value()) continue;
        const auto label = label_kdigo(t);
        const auto snap = extract_feature_snapshot(t, ids);
        out.data.push_row(snap.values, label.positive ? 1 : 0, t.patient_id);
        out.labels.push_back(label);
    }
    baseline_stage.output = out.labels.size();
    report.stages.push_back(baseline_stage);
    out.attrition = std::move(report);
    return out;
}

}  // namespace vancorisk::cohort
