#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "vancorisk/cohort.hpp"
#include "vancorisk/eval.hpp"
#include "vancorisk/schema.hpp"
#include "vancorisk/stats.hpp"
#include "vancorisk/types.hpp"

// Synthetic cohort generator calibrated to published group-conditional
// feature statistics. Continuous features are drawn from a Gaussian and
// clipped to physiologic bounds; the underlying Gaussian parameters are
// moment-matched so the *clipped* distribution hits the target mean/SD
// (naive clipping would bias heavy-tailed features like AST far off
// target). Outcome trajectories are constructed so the KDIGO labeler
// recovers the latent group exactly.

namespace vancorisk::synth {

struct FeatureGenSpec {
    std::string id;
    FeatureKind kind = FeatureKind::continuous;
    double lower = kMissing;  // NaN = unbounded
    double upper = kMissing;
    // index 0 = non-elevation group, 1 = elevation group.
    double mean[2] = {0.0, 0.0};  // rate for binary features
    double sd[2] = {1.0, 1.0};    // ignored for binary features
};

struct GeneratorSpec {
    std::size_t n_patients = 10288;
    double prevalence = 0.282;
    std::uint64_t seed = 1;
    std::vector<FeatureGenSpec> features;

    static GeneratorSpec defaults(std::size_t n = 10288, std::uint64_t seed = 1) {
        GeneratorSpec spec;
        spec.n_patients = n;
        spec.seed = seed;
        for (const auto& f : schema::features()) {
            FeatureGenSpec g;
            g.id = f.id;
            g.kind = f.kind;
            g.lower = f.lower;
            g.upper = f.upper;
            g.mean[0] = f.mean_neg;
            g.mean[1] = f.mean_pos;
            g.sd[0] = f.sd_neg;
            g.sd[1] = f.sd_pos;
            spec.features.push_back(g);
        }
        return spec;
    }

    void validate() const {
        require(prevalence > 0.0 && prevalence < 1.0, "invalid-spec",
                "prevalence must lie in (0,1)");
        require(features.size() == schema::features().size(), "invalid-spec",
                "generator spec must carry the full 19-feature schema");
        for (const auto& g : features) {
            require(schema::feature_index(g.id) >= 0, "invalid-spec",
                    "unknown feature in generator spec: " + g.id);
            if (g.kind == FeatureKind::continuous) {
                require(g.sd[0] > 0.0 && g.sd[1] > 0.0, "invalid-spec",
                        "feature " + g.id + " needs positive SDs");
            } else {
                require(g.mean[0] >= 0.0 && g.mean[0] <= 1.0 && g.mean[1] >= 0.0 &&
                            g.mean[1] <= 1.0,
                        "invalid-spec", "binary rates must lie in [0,1]");
            }
        }
    }
};

// ---------------------------------------------------------------------------
// Moment matching for clipped Gaussians.
// ---------------------------------------------------------------------------

namespace detail {

// Mean and SD of max(N(m,1), 0).
inline void clip_moments_lower(double m, double& mean, double& sd) {
    const double p = stats::normal_cdf(m);
    const double ph = stats::normal_pdf(m);
    mean = m * p + ph;
    const double e2 = (m * m + 1.0) * p + m * ph;
    sd = std::sqrt(std::max(e2 - mean * mean, 0.0));
}

// Mean and SD of min(max(N(mu, s), lo), hi).
inline void clip_moments_interval(double mu, double s, double lo, double hi,
                                  double& mean, double& sd) {
    const double a = (lo - mu) / s;
    const double b = (hi - mu) / s;
    const double fa = stats::normal_cdf(a), fb = stats::normal_cdf(b);
    const double pa = stats::normal_pdf(a), pb = stats::normal_pdf(b);
    mean = lo * fa + hi * (1.0 - fb) + mu * (fb - fa) + s * (pa - pb);
    const double e2 = lo * lo * fa + hi * hi * (1.0 - fb) + mu * mu * (fb - fa) +
                      2.0 * mu * s * (pa - pb) +
                      s * s * ((fb - fa) + a * pa - b * pb);
    sd = std::sqrt(std::max(e2 - mean * mean, 0.0));
}

}  // namespace detail

// Underlying Gaussian parameters whose clipped distribution matches the
// requested mean/SD.
struct ClipParams {
    double mu = 0.0;
    double sigma = 1.0;
    double lower = kMissing;
    double upper = kMissing;
};

inline ClipParams match_clipped_gaussian(double target_mean, double target_sd,
                                         double lower, double upper) {
    ClipParams out;
    out.lower = lower;
    out.upper = upper;
    require(target_sd > 0.0, "invalid-spec", "target SD must be positive");

    if (is_missing(lower) && is_missing(upper)) {
        out.mu = target_mean;
        out.sigma = target_sd;
        return out;
    }

    if (is_missing(upper)) {
        // One-sided: the clipped CV is decreasing in m = mu/sigma, so a
        // bisection on m separates the problem from the scale.
        const double shifted = target_mean - lower;
        require(shifted > 0.0, "invalid-spec", "target mean must exceed lower bound");
        const double cv_target = target_sd / shifted;
        double m_lo = -6.0, m_hi = 60.0;
        auto cv_at = [](double m) {
            double mm, ss;
            detail::clip_moments_lower(m, mm, ss);
            return ss / mm;
        };
        require(cv_target > cv_at(m_hi) && cv_target < cv_at(m_lo), "invalid-spec",
                "requested mean/SD is infeasible for a clipped Gaussian");
        for (int it = 0; it < 200; ++it) {
            const double mid = 0.5 * (m_lo + m_hi);
            (cv_at(mid) > cv_target ? m_lo : m_hi) = mid;
        }
        const double m = 0.5 * (m_lo + m_hi);
        double mm, ss;
        detail::clip_moments_lower(m, mm, ss);
        out.sigma = target_sd / ss;
        out.mu = lower + m * out.sigma;
        return out;
    }

    // Two-sided interval: damped Newton on (mu, sigma) with a numeric
    // Jacobian, seeded at the targets.
    require(target_mean > lower && target_mean < upper, "invalid-spec",
            "target mean must lie inside the clip interval");
    double mu = target_mean, s = target_sd;
    for (int it = 0; it < 200; ++it) {
        double m0, s0;
        detail::clip_moments_interval(mu, s, lower, upper, m0, s0);
        const double r0 = m0 - target_mean, r1 = s0 - target_sd;
        if (std::fabs(r0) < 1e-12 && std::fabs(r1) < 1e-12) break;
        const double h = 1e-6 * std::max(1.0, std::fabs(s));
        double ma, sa, mb, sb;
        detail::clip_moments_interval(mu + h, s, lower, upper, ma, sa);
        detail::clip_moments_interval(mu, s + h, lower, upper, mb, sb);
        const double j00 = (ma - m0) / h, j01 = (mb - m0) / h;
        const double j10 = (sa - s0) / h, j11 = (sb - s0) / h;
        const double det = j00 * j11 - j01 * j10;
        require(std::fabs(det) > 1e-14, "invalid-spec",
                "clip moment matching is singular; targets infeasible");
        double dmu = (r0 * j11 - r1 * j01) / det;
        double ds = (j00 * r1 - j10 * r0) / det;
        // keep sigma positive with step damping
        double lambda = 1.0;
        while (s - lambda * ds <= 1e-9) lambda *= 0.5;
        mu -= lambda * dmu;
        s -= lambda * ds;
    }
    double mf, sf;
    detail::clip_moments_interval(mu, s, lower, upper, mf, sf);
    require(std::fabs(mf - target_mean) < 1e-6 && std::fabs(sf - target_sd) < 1e-6,
            "invalid-spec", "clip moment matching failed to converge");
    out.mu = mu;
    out.sigma = s;
    return out;
}

inline double sample_clipped(Rng& rng, const ClipParams& p) {
    double x = rng.normal(p.mu, p.sigma);
    if (!is_missing(p.lower)) x = std::max(x, p.lower);
    if (!is_missing(p.upper)) x = std::min(x, p.upper);
    return x;
}

// ---------------------------------------------------------------------------
// Cohort generation.
// ---------------------------------------------------------------------------

inline std::vector<PatientTimeline> generate_cohort(const GeneratorSpec& spec) {
    spec.validate();
    const std::size_t n = spec.n_patients;
    std::vector<PatientTimeline> cohort;
    if (n == 0) return cohort;
    cohort.reserve(n);

    // Solve sampler parameters once per (feature, group).
    std::vector<std::array<ClipParams, 2>> params(spec.features.size());
    for (std::size_t j = 0; j < spec.features.size(); ++j) {
        const auto& g = spec.features[j];
        if (g.kind != FeatureKind::continuous) continue;
        for (int grp = 0; grp < 2; ++grp)
            params[j][grp] =
                match_clipped_gaussian(g.mean[grp], g.sd[grp], g.lower, g.upper);
    }

    // Exact positive count, randomly placed: keeps the labeled prevalence on
    // target for every seed while each patient is marginally Bernoulli-like.
    std::vector<std::uint8_t> group(n, 0);
    const std::size_t n_pos =
        static_cast<std::size_t>(std::llround(static_cast<double>(n) * spec.prevalence));
    for (std::size_t i = 0; i < std::min(n_pos, n); ++i) group[i] = 1;
    {
        Rng assign_rng(spec.seed, 0xA551C4EDULL);
        assign_rng.shuffle(group);
    }

    for (std::size_t i = 0; i < n; ++i) {
        Rng rng(spec.seed, i + 1);
        const int grp = group[i];

        PatientTimeline t;
        char buf[32];
        std::snprintf(buf, sizeof(buf), "synth-%06zu", i);
        t.patient_id = buf;
        t.stay_index = 1;
        t.has_active_malignancy = false;

        const double tv = 24.0 + 48.0 * rng.uniform();  // first dose 24..72 h in
        t.first_vanco_time = tv;

        std::vector<ClinicalEvent> events;
        events.push_back({tv, EventKind::drug_dose, schema::kVancomycinId, 1.0});
        if (rng.uniform() < 0.3)  // later repeat dose; only the first one matters
            events.push_back({tv + 12.0 + 84.0 * rng.uniform(), EventKind::drug_dose,
                              schema::kVancomycinId, 1.0});

        for (std::size_t j = 0; j < spec.features.size(); ++j) {
            const auto& g = spec.features[j];
            const double value = g.kind == FeatureKind::continuous
                                     ? sample_clipped(rng, params[j][grp])
                                     : (rng.bernoulli(g.mean[grp]) ? 1.0 : 0.0);
            if (g.id == "age") { t.age = value; t.admission.age = value; continue; }
            if (g.id == "ed_duration") { t.admission.ed_duration = value; continue; }
            if (g.id == "charlson_index") { t.admission.charlson_index = value; continue; }
            if (g.id == "apsiii") { t.admission.apsiii = value; continue; }

            const auto& def = schema::feature(g.id);
            const EventKind kind = def.source == schema::Source::chart   ? EventKind::chart
                                   : def.source == schema::Source::lab   ? EventKind::lab
                                                                         : EventKind::procedure;
            const double t_obs = tv * (0.05 + 0.9 * rng.uniform());
            events.push_back({t_obs, kind, g.id, value});
            if (g.kind == FeatureKind::continuous && rng.uniform() < 0.3) {
                // stale earlier measurement; must never win the snapshot
                const double t_old = t_obs * rng.uniform() * 0.95;
                events.push_back({t_old, kind, g.id, sample_clipped(rng, params[j][grp])});
            }
        }

        // Creatinine trajectory. Baselines sit in 0.6..1.4 mg/dL so the
        // absolute criterion is the binding one inside 48 h and the relative
        // one beyond (1.5x baseline >= baseline + 0.3 exactly when the
        // baseline is >= 0.6).
        const double base = 0.6 + 0.8 * rng.uniform();
        events.push_back({tv * (0.1 + 0.8 * rng.uniform()), EventKind::lab,
                          schema::kCreatinineId, base});
        if (rng.uniform() < 0.4)  // stale extra baseline draw
            events.push_back({tv * 0.05 * rng.uniform(), EventKind::lab,
                              schema::kCreatinineId, base + 0.1 * (rng.uniform() - 0.5)});

        auto negative_value = [&] {
            // strictly below both thresholds at any horizon
            const double cap = base + std::min(0.25, 0.5 * base - 0.05);
            const double lo = std::max(0.15, base - 0.2);
            return lo + (cap - lo) * rng.uniform();
        };

        if (grp == 1) {
            const bool absolute = rng.bernoulli(0.5);
            if (rng.uniform() < 0.5)  // benign wobble before the rise
                events.push_back({tv + 1.0 + 4.0 * rng.uniform(), EventKind::lab,
                                  schema::kCreatinineId, negative_value()});
            if (absolute) {
                const double t_hit = tv + 6.0 + 41.0 * rng.uniform();
                events.push_back({t_hit, EventKind::lab, schema::kCreatinineId,
                                  base + 0.3 + 0.4 * rng.uniform()});
            } else {
                const double t_hit = tv + 49.0 + 118.0 * rng.uniform();
                events.push_back({t_hit, EventKind::lab, schema::kCreatinineId,
                                  1.5 * base + 0.3 * rng.uniform()});
            }
        } else {
            const int n_post = 1 + static_cast<int>(rng.uniform_int(3));
            for (int k = 0; k < n_post; ++k)
                events.push_back({tv + 1.0 + 166.0 * rng.uniform(), EventKind::lab,
                                  schema::kCreatinineId, negative_value()});
        }

        std::stable_sort(events.begin(), events.end(),
                         [](const ClinicalEvent& a, const ClinicalEvent& b) {
                             return a.timestamp < b.timestamp;
                         });
        t.events = std::move(events);
        cohort.push_back(std::move(t));
    }
    return cohort;
}

// ---------------------------------------------------------------------------
// Group summary (Table 3 analog).
// ---------------------------------------------------------------------------

struct GroupStatRow {
    std::string feature;
    double mean_neg = 0.0, sd_neg = 0.0;
    double mean_pos = 0.0, sd_pos = 0.0;
    double t = 0.0;
    double p = 1.0;
};

inline std::vector<GroupStatRow> summarize_groups(const Dataset& data) {
    require(data.count_label(0) > 0 && data.count_label(1) > 0, "empty-group",
            "both outcome groups must be nonempty");
    std::vector<GroupStatRow> rows;
    for (std::size_t j = 0; j < data.n_cols(); ++j) {
        std::vector<double> neg, pos;
        for (std::size_t r = 0; r < data.n_rows(); ++r) {
            const double v = data.at(r, j);
            if (is_missing(v)) continue;
            (data.labels[r] ? pos : neg).push_back(v);
        }
        GroupStatRow row;
        row.feature = data.feature_meta[j].name;
        row.mean_neg = stats::mean(neg);
        row.sd_neg = stats::stddev(neg);
        row.mean_pos = stats::mean(pos);
        row.sd_pos = stats::stddev(pos);
        const auto tt = eval::welch_ttest(neg, pos);
        row.t = tt.t;
        row.p = tt.p;
        rows.push_back(row);
    }
    return rows;
}

}  // namespace vancorisk::synth
