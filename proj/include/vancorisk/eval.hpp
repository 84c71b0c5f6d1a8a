#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "vancorisk/models/model.hpp"
#include "vancorisk/preprocess.hpp"
#include "vancorisk/stats.hpp"
#include "vancorisk/types.hpp"

// Discrimination and threshold metrics, bootstrap confidence intervals,
// Welch t-tests and the stratified cross-validation harness (preprocessing
// and SMOTE fitted strictly inside each training fold).

namespace vancorisk::eval {

// AUROC as the Mann-Whitney statistic with midrank tie handling.
inline double auroc(std::span<const double> scores, std::span<const std::uint8_t> labels) {
    require(scores.size() == labels.size(), "length-mismatch",
            "scores and labels differ in length");
    std::size_t n_pos = 0;
    for (auto y : labels) n_pos += y;
    const std::size_t n_neg = labels.size() - n_pos;
    require(n_pos > 0 && n_neg > 0, "single-class", "AUROC needs both classes");

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return scores[a] < scores[b];
    });

    double rank_sum_pos = 0.0;
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() && scores[order[j + 1]] == scores[order[i]]) ++j;
        const double midrank = 0.5 * static_cast<double>(i + 1 + j + 1);
        for (std::size_t t = i; t <= j; ++t)
            if (labels[order[t]]) rank_sum_pos += midrank;
        i = j + 1;
    }
    const double n1 = static_cast<double>(n_pos), n0 = static_cast<double>(n_neg);
    return (rank_sum_pos - n1 * (n1 + 1.0) / 2.0) / (n1 * n0);
}

// Percentile bootstrap over (score,label) pairs; resamples that lose a class
// are redrawn from the same substream.
inline std::pair<double, double> bootstrap_ci(std::span<const double> scores,
                                              std::span<const std::uint8_t> labels,
                                              int n_boot = 2000, double alpha = 0.05,
                                              std::uint64_t seed = 1) {
    require(n_boot > 0, "bad-config", "n_boot must be positive");
    const std::size_t n = scores.size();
    std::vector<double> aucs(n_boot);
    parallel_for(static_cast<std::size_t>(n_boot), [&](std::size_t b) {
        Rng rng(seed, 0xB005 + b);
        std::vector<double> s(n);
        std::vector<std::uint8_t> y(n);
        while (true) {
            std::size_t n_pos = 0;
            for (std::size_t i = 0; i < n; ++i) {
                const auto idx = static_cast<std::size_t>(rng.uniform_int(n));
                s[i] = scores[idx];
                y[i] = labels[idx];
                n_pos += y[i];
            }
            if (n_pos > 0 && n_pos < n) break;
        }
        aucs[b] = auroc(s, y);
    });
    return {stats::percentile(aucs, alpha / 2.0),
            stats::percentile(aucs, 1.0 - alpha / 2.0)};
}

// Largest threshold with sensitivity >= target (score >= threshold counts as
// positive); thresholds are taken from the positive-score order statistics.
inline double threshold_at_sensitivity(std::span<const double> scores,
                                       std::span<const std::uint8_t> labels,
                                       double target = 0.800) {
    require(target > 0.0 && target <= 1.0, "bad-target",
            "target sensitivity must lie in (0,1]");
    std::vector<double> pos;
    for (std::size_t i = 0; i < scores.size(); ++i)
        if (labels[i]) pos.push_back(scores[i]);
    require(!pos.empty(), "single-class", "no positive labels");
    std::sort(pos.begin(), pos.end(), std::greater<>());
    const std::size_t need = static_cast<std::size_t>(
        std::ceil(target * static_cast<double>(pos.size()) - 1e-12));
    return pos[std::min(need, pos.size()) - 1];
}

struct ConfusionMetrics {
    std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
    std::optional<double> accuracy, f1, sensitivity, specificity, ppv, npv;
};

inline ConfusionMetrics confusion_metrics(std::span<const double> scores,
                                          std::span<const std::uint8_t> labels,
                                          double threshold) {
    ConfusionMetrics m;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const bool pred = scores[i] >= threshold;
        if (labels[i])
            pred ? ++m.tp : ++m.fn;
        else
            pred ? ++m.fp : ++m.tn;
    }
    const auto ratio = [](std::size_t num, std::size_t den) -> std::optional<double> {
        if (den == 0) return std::nullopt;
        return static_cast<double>(num) / static_cast<double>(den);
    };
    m.accuracy = ratio(m.tp + m.tn, m.tp + m.tn + m.fp + m.fn);
    m.sensitivity = ratio(m.tp, m.tp + m.fn);
    m.specificity = ratio(m.tn, m.tn + m.fp);
    m.ppv = ratio(m.tp, m.tp + m.fp);
    m.npv = ratio(m.tn, m.tn + m.fn);
    if (m.ppv && m.sensitivity && (*m.ppv + *m.sensitivity) > 0.0)
        m.f1 = 2.0 * *m.ppv * *m.sensitivity / (*m.ppv + *m.sensitivity);
    return m;
}

struct MetricsReport {
    double auroc = 0.0;
    std::optional<double> auroc_ci_low, auroc_ci_high;
    double threshold = 0.0;
    ConfusionMetrics confusion;
    std::size_t n_pos = 0, n_neg = 0;
};

// Point AUROC + bootstrap CI + fixed-sensitivity operating point.
inline MetricsReport evaluate_at_sensitivity(std::span<const double> scores,
                                             std::span<const std::uint8_t> labels,
                                             double target_sensitivity,
                                             int n_boot, std::uint64_t seed) {
    MetricsReport r;
    r.auroc = auroc(scores, labels);
    if (n_boot > 0) {
        const auto [lo, hi] = bootstrap_ci(scores, labels, n_boot, 0.05, seed);
        r.auroc_ci_low = lo;
        r.auroc_ci_high = hi;
    }
    r.threshold = threshold_at_sensitivity(scores, labels, target_sensitivity);
    r.confusion = confusion_metrics(scores, labels, r.threshold);
    for (auto y : labels) (y ? r.n_pos : r.n_neg)++;
    return r;
}

struct WelchResult {
    double t = 0.0;
    double p = 1.0;
    double df = 0.0;
};

inline WelchResult welch_ttest(std::span<const double> a, std::span<const double> b) {
    require(a.size() >= 2 && b.size() >= 2, "too-few-values",
            "welch t-test needs at least two values per sample");
    const double ma = stats::mean(a), mb = stats::mean(b);
    const double va = stats::variance(a), vb = stats::variance(b);
    const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
    const double se2 = va / na + vb / nb;
    WelchResult r;
    if (se2 == 0.0) {
        r.t = 0.0;
        r.p = 1.0;
        r.df = na + nb - 2.0;
        return r;
    }
    r.t = (ma - mb) / std::sqrt(se2);
    r.df = se2 * se2 /
           (va * va / (na * na * (na - 1.0)) + vb * vb / (nb * nb * (nb - 1.0)));
    r.p = stats::student_t_two_sided_p(r.t, r.df);
    return r;
}

// ROC polyline for plotting: (fpr, tpr) swept over score thresholds.
inline std::vector<std::pair<double, double>> roc_points(
    std::span<const double> scores, std::span<const std::uint8_t> labels) {
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return scores[a] > scores[b];
    });
    double n_pos = 0, n_neg = 0;
    for (auto y : labels) (y ? n_pos : n_neg) += 1.0;
    std::vector<std::pair<double, double>> pts{{0.0, 0.0}};
    double tp = 0, fp = 0;
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() && scores[order[j + 1]] == scores[order[i]]) ++j;
        for (std::size_t t = i; t <= j; ++t)
            (labels[order[t]] ? tp : fp) += 1.0;
        pts.push_back({fp / n_neg, tp / n_pos});
        i = j + 1;
    }
    return pts;
}

// ---------------------------------------------------------------------------
// Cross-validation.
// ---------------------------------------------------------------------------

struct SmoteSettings {
    bool enabled = true;
    int k = 5;
    double target_ratio = 1.0;
};

struct CvOptions {
    int n_folds = 5;
    std::uint64_t seed = 1;
    SmoteSettings smote;
    double target_sensitivity = 0.800;
    // Negative control: apply preprocessing + SMOTE once on the full
    // training set and fold the augmented rows. Deliberately leaky.
    bool leak_smote_outside_folds = false;
};

namespace cv_detail {

inline std::vector<std::vector<std::size_t>> stratified_folds(
    std::span<const std::uint8_t> labels, int n_folds, std::uint64_t seed) {
    std::vector<std::vector<std::size_t>> folds(n_folds);
    for (int cls = 0; cls < 2; ++cls) {
        std::vector<std::size_t> idx;
        for (std::size_t r = 0; r < labels.size(); ++r)
            if (labels[r] == cls) idx.push_back(r);
        Rng rng(seed, 0xF01D + static_cast<std::uint64_t>(cls));
        rng.shuffle(idx);
        for (std::size_t i = 0; i < idx.size(); ++i)
            folds[i % n_folds].push_back(idx[i]);
    }
    for (auto& f : folds) std::sort(f.begin(), f.end());
    return folds;
}

}  // namespace cv_detail

inline std::vector<MetricsReport> cross_validate(const Dataset& train_raw,
                                                 const models::ModelSpec& spec,
                                                 const CvOptions& opt) {
    const std::size_t n_pos = train_raw.count_label(1);
    const std::size_t n_neg = train_raw.count_label(0);
    require(static_cast<int>(std::min(n_pos, n_neg)) >= opt.n_folds, "too-few-samples",
            "each class must have at least n_folds rows");

    Dataset working = train_raw;
    preprocess::PreprocessParams outer_params;
    if (opt.leak_smote_outside_folds) {
        outer_params = preprocess::fit_params(train_raw);
        working = preprocess::transform(train_raw, outer_params);
        if (opt.smote.enabled)
            working = preprocess::smote(working, opt.smote.k, opt.smote.target_ratio,
                                        opt.seed)
                          .data;
    }

    const auto folds = cv_detail::stratified_folds(working.labels, opt.n_folds, opt.seed);
    std::vector<MetricsReport> reports(opt.n_folds);

    parallel_for(static_cast<std::size_t>(opt.n_folds), [&](std::size_t f) {
        std::vector<std::size_t> train_idx;
        for (std::size_t g = 0; g < folds.size(); ++g)
            if (g != f)
                train_idx.insert(train_idx.end(), folds[g].begin(), folds[g].end());
        std::sort(train_idx.begin(), train_idx.end());

        Dataset fold_train = working.select_rows(train_idx);
        Dataset fold_val = working.select_rows(folds[f]);

        if (!opt.leak_smote_outside_folds) {
            const auto params = preprocess::fit_params(fold_train);
            fold_train = preprocess::transform(fold_train, params);
            fold_val = preprocess::transform(fold_val, params);
            if (opt.smote.enabled)
                fold_train = preprocess::smote(fold_train, opt.smote.k,
                                               opt.smote.target_ratio,
                                               opt.seed + 17 * (f + 1))
                                 .data;
        }

        const auto model = models::train_model(fold_train, spec);
        const auto scores = models::predict_proba(model, fold_val);
        reports[f] = evaluate_at_sensitivity(scores, fold_val.labels,
                                             opt.target_sensitivity, 0, opt.seed);
    });
    return reports;
}

inline double mean_cv_auroc(const std::vector<MetricsReport>& reports) {
    double s = 0.0;
    for (const auto& r : reports) s += r.auroc;
    return reports.empty() ? 0.0 : s / static_cast<double>(reports.size());
}

// Per-feature Welch comparison of two datasets (train-vs-test table).
struct FeatureComparison {
    std::string feature;
    double mean_a = 0.0, sd_a = 0.0;
    double mean_b = 0.0, sd_b = 0.0;
    double t = 0.0, p = 1.0;
};

inline std::vector<FeatureComparison> compare_datasets(const Dataset& a,
                                                       const Dataset& b) {
    require(a.n_cols() == b.n_cols(), "width-mismatch",
            "datasets have different column counts");
    std::vector<FeatureComparison> rows;
    for (std::size_t j = 0; j < a.n_cols(); ++j) {
        std::vector<double> va, vb;
        for (std::size_t r = 0; r < a.n_rows(); ++r)
            if (!is_missing(a.at(r, j))) va.push_back(a.at(r, j));
        for (std::size_t r = 0; r < b.n_rows(); ++r)
            if (!is_missing(b.at(r, j))) vb.push_back(b.at(r, j));
        FeatureComparison c;
        c.feature = a.feature_meta[j].name;
        c.mean_a = stats::mean(va);
        c.sd_a = stats::stddev(va);
        c.mean_b = stats::mean(vb);
        c.sd_b = stats::stddev(vb);
        const auto w = welch_ttest(va, vb);
        c.t = w.t;
        c.p = w.p;
        rows.push_back(std::move(c));
    }
    return rows;
}

}  // namespace vancorisk::eval
