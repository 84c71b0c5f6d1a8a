#pragma once

// Test-only helpers: random timeline generation plus brute-force oracles that
// deliberately re-implement labeling, snapshots and statistics by the most
// direct method available, independent of the library's code paths.

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "vancorisk/common.hpp"
#include "vancorisk/schema.hpp"
#include "vancorisk/types.hpp"

namespace testutil {

using namespace vancorisk;

// Random timeline with creatinine history around a random baseline plus a
// handful of feature events. Everything about it is adversarial to the
// labeler: values near thresholds, events before and after the dose, ties.
inline PatientTimeline random_timeline(Rng& rng, bool ensure_baseline = true) {
    PatientTimeline t;
    t.patient_id = "p" + std::to_string(rng.next_u64() % 100000);
    t.stay_index = 1;
    t.age = 20.0 + 55.0 * rng.uniform();
    t.admission.age = t.age;
    t.admission.ed_duration = 10.0 * rng.uniform();
    t.admission.charlson_index = 8.0 * rng.uniform();
    t.admission.apsiii = 30.0 + 60.0 * rng.uniform();

    const double tv = 10.0 + 60.0 * rng.uniform();
    t.first_vanco_time = tv;
    t.events.push_back({tv, EventKind::drug_dose, schema::kVancomycinId, 1.0});

    if (ensure_baseline)
        t.events.push_back({tv * rng.uniform() * 0.999, EventKind::lab,
                            schema::kCreatinineId, 0.5 + rng.uniform()});

    const int n_extra = static_cast<int>(rng.uniform_int(12));
    for (int i = 0; i < n_extra; ++i) {
        ClinicalEvent e;
        e.timestamp = 250.0 * rng.uniform();
        const double which = rng.uniform();
        if (which < 0.5) {
            e.kind = EventKind::lab;
            e.item_id = schema::kCreatinineId;
            // values that straddle both KDIGO thresholds
            e.value = 0.3 + 2.2 * rng.uniform();
        } else if (which < 0.8) {
            e.kind = EventKind::lab;
            e.item_id = "phosphate";
            e.value = 1.0 + 6.0 * rng.uniform();
        } else {
            e.kind = EventKind::chart;
            e.item_id = "lactate";
            e.value = 0.5 + 5.0 * rng.uniform();
        }
        t.events.push_back(e);
    }
    std::stable_sort(t.events.begin(), t.events.end(),
                     [](const ClinicalEvent& a, const ClinicalEvent& b) {
                         return a.timestamp < b.timestamp;
                     });
    return t;
}

// Oracle: most recent pre-dose creatinine by exhaustive scan.
inline std::optional<double> oracle_baseline(const PatientTimeline& t) {
    const double tv = *t.first_vanco_time;
    std::optional<double> best;
    double best_time = -1e300;
    for (const auto& e : t.events)
        if (e.kind == EventKind::lab && e.item_id == schema::kCreatinineId &&
            e.timestamp < tv && e.timestamp >= best_time) {
            best_time = e.timestamp;
            best = e.value;
        }
    return best;
}

// Oracle: double loop over the baseline and every post-dose creatinine,
// checking both KDIGO criteria directly.
struct OracleLabel {
    bool positive = false;
    double trigger_time = 0.0;
    bool absolute = false;
    bool any_post = false;
};

inline OracleLabel oracle_kdigo(const PatientTimeline& t) {
    const double tv = *t.first_vanco_time;
    const double base = *oracle_baseline(t);
    OracleLabel out;
    double best_time = 1e300;
    for (const auto& e : t.events) {
        if (e.kind != EventKind::lab || e.item_id != schema::kCreatinineId) continue;
        if (e.timestamp <= tv) continue;
        if (e.timestamp - tv > 168.0) continue;
        out.any_post = true;
        const bool abs_hit = e.timestamp - tv <= 48.0 && e.value - base >= 0.3;
        const bool rel_hit = e.value >= 1.5 * base;
        if (abs_hit || rel_hit) {
            out.positive = true;
            if (e.timestamp < best_time) {
                best_time = e.timestamp;
                out.trigger_time = e.timestamp;
                out.absolute = abs_hit;
            }
        }
    }
    return out;
}

// Oracle: per-feature argmax-timestamp scan over pre-dose events.
inline std::vector<double> oracle_snapshot(const PatientTimeline& t,
                                           const std::vector<std::string>& ids) {
    const double tv = *t.first_vanco_time;
    std::vector<double> out(ids.size(), kMissing);
    for (std::size_t j = 0; j < ids.size(); ++j) {
        if (ids[j] == "age") { out[j] = t.admission.age; continue; }
        if (ids[j] == "ed_duration") { out[j] = t.admission.ed_duration; continue; }
        if (ids[j] == "charlson_index") { out[j] = t.admission.charlson_index; continue; }
        if (ids[j] == "apsiii") { out[j] = t.admission.apsiii; continue; }
        double best_time = -1e300;
        for (const auto& e : t.events)
            if (e.kind != EventKind::drug_dose && e.item_id == ids[j] &&
                e.timestamp < tv && e.timestamp >= best_time) {
                best_time = e.timestamp;
                out[j] = e.value;
            }
    }
    return out;
}

// Small labeled dataset builder for model tests.
inline Dataset make_dataset(const std::vector<std::vector<double>>& rows,
                            const std::vector<int>& labels,
                            std::vector<FeatureMeta> meta = {}) {
    Dataset d;
    if (meta.empty())
        for (std::size_t j = 0; j < rows.front().size(); ++j)
            meta.push_back({"f" + std::to_string(j), FeatureKind::continuous, ""});
    d.feature_meta = std::move(meta);
    for (std::size_t i = 0; i < rows.size(); ++i)
        d.push_row(rows[i], labels[i] ? 1 : 0, "r" + std::to_string(i));
    return d;
}

// Two separable Gaussian blobs in `dim` dimensions.
inline Dataset gaussian_blobs(std::size_t n, std::size_t dim, double separation,
                              std::uint64_t seed) {
    Rng rng(seed);
    Dataset d;
    for (std::size_t j = 0; j < dim; ++j)
        d.feature_meta.push_back({"f" + std::to_string(j), FeatureKind::continuous, ""});
    std::vector<double> row(dim);
    for (std::size_t i = 0; i < n; ++i) {
        const int y = rng.bernoulli(0.5) ? 1 : 0;
        for (std::size_t j = 0; j < dim; ++j)
            row[j] = rng.normal() + (y ? separation : 0.0);
        d.push_row(row, static_cast<std::uint8_t>(y));
    }
    return d;
}

}  // namespace testutil
