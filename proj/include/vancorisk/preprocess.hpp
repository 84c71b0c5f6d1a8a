#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "vancorisk/stats.hpp"
#include "vancorisk/types.hpp"

// Train-set-fitted preprocessing: median/mode imputation, min-max scaling of
// continuous columns, stratified splitting and SMOTE oversampling. Nothing
// here ever reads statistics from data it is applied to.

namespace vancorisk::preprocess {

struct ColumnParams {
    FeatureKind kind = FeatureKind::continuous;
    double median = 0.0;  // continuous imputation value
    double min = 0.0;
    double max = 0.0;
    double mode = 0.0;  // binary imputation value
    bool degenerate = false;  // max == min on training data
};

struct PreprocessParams {
    std::vector<std::string> feature_names;
    std::vector<ColumnParams> columns;
    std::vector<std::string> warnings;
    bool fitted = false;
};

// Stratified split: per class, a seeded shuffle and a rounded test
// allocation, so class prevalence on each side stays within one row of the
// overall rate.
inline std::pair<Dataset, Dataset> stratified_split(const Dataset& data,
                                                    double test_fraction,
                                                    std::uint64_t seed) {
    require(test_fraction > 0.0 && test_fraction < 1.0, "bad-fraction",
            "test_fraction must lie in (0,1)");
    require(data.count_label(0) > 0 && data.count_label(1) > 0, "single-class",
            "stratified split needs both classes present");

    std::vector<std::size_t> train_idx, test_idx;
    for (int cls = 0; cls < 2; ++cls) {
        std::vector<std::size_t> idx;
        for (std::size_t r = 0; r < data.n_rows(); ++r)
            if (data.labels[r] == cls) idx.push_back(r);
        Rng rng(seed, 0x5917u + static_cast<std::uint64_t>(cls));
        rng.shuffle(idx);
        const std::size_t n_test = static_cast<std::size_t>(
            std::llround(static_cast<double>(idx.size()) * test_fraction));
        for (std::size_t i = 0; i < idx.size(); ++i)
            (i < n_test ? test_idx : train_idx).push_back(idx[i]);
    }
    std::sort(train_idx.begin(), train_idx.end());
    std::sort(test_idx.begin(), test_idx.end());
    return {data.select_rows(train_idx), data.select_rows(test_idx)};
}

inline PreprocessParams fit_params(const Dataset& train) {
    PreprocessParams params;
    params.columns.resize(train.n_cols());
    for (std::size_t j = 0; j < train.n_cols(); ++j) {
        const auto& meta = train.feature_meta[j];
        params.feature_names.push_back(meta.name);
        auto& col = params.columns[j];
        col.kind = meta.kind;

        std::vector<double> vals;
        for (std::size_t r = 0; r < train.n_rows(); ++r) {
            const double v = train.at(r, j);
            if (!is_missing(v)) vals.push_back(v);
        }
        require(!vals.empty(), "all-missing-column",
                "column '" + meta.name + "' has no non-missing training values");

        if (meta.kind == FeatureKind::binary) {
            std::size_t ones = 0;
            for (double v : vals) ones += (v != 0.0);
            // tie -> 0, deterministic
            col.mode = (2 * ones > vals.size()) ? 1.0 : 0.0;
        } else {
            col.median = stats::median(vals);
            col.min = *std::min_element(vals.begin(), vals.end());
            col.max = *std::max_element(vals.begin(), vals.end());
            if (col.max == col.min) {
                col.degenerate = true;
                params.warnings.push_back("column '" + meta.name +
                                          "' is constant on training data; scaled to 0");
            }
        }
    }
    params.fitted = true;
    return params;
}

// Restriction of fitted params to a named column subset (order follows
// `names`).
inline PreprocessParams subset_params(const PreprocessParams& params,
                                      const std::vector<std::string>& names) {
    require(params.fitted, "params-not-fitted", "subset of unfitted params");
    PreprocessParams out;
    for (const auto& name : names) {
        bool found = false;
        for (std::size_t j = 0; j < params.feature_names.size(); ++j)
            if (params.feature_names[j] == name) {
                out.feature_names.push_back(name);
                out.columns.push_back(params.columns[j]);
                found = true;
                break;
            }
        require(found, "unknown-column", "no fitted params for column '" + name + "'");
    }
    out.fitted = true;
    return out;
}

// Impute then scale. Continuous: median fill, (x-min)/(max-min); values
// outside the training range are intentionally not clipped. Binary: mode
// fill, passed through as 0/1. Degenerate training columns map to 0.
inline Dataset transform(const Dataset& data, const PreprocessParams& params) {
    require(params.fitted, "params-not-fitted", "transform called before fit");
    require(params.columns.size() == data.n_cols(), "width-mismatch",
            "params fitted on a different column set");
    Dataset out = data;
    for (std::size_t j = 0; j < data.n_cols(); ++j) {
        const auto& col = params.columns[j];
        for (std::size_t r = 0; r < data.n_rows(); ++r) {
            double v = out.at(r, j);
            if (col.kind == FeatureKind::binary) {
                if (is_missing(v)) v = col.mode;
            } else {
                if (is_missing(v)) v = col.median;
                v = col.degenerate ? 0.0 : (v - col.min) / (col.max - col.min);
            }
            out.at(r, j) = v;
        }
    }
    return out;
}

struct SmoteRecord {
    std::size_t parent_a = 0;  // minority row index in the input dataset
    std::size_t parent_b = 0;  // chosen neighbor (minority row index)
    double delta = 0.0;
    std::vector<double> raw;  // interpolated row before binary rounding
};

struct SmoteResult {
    Dataset data;                      // originals followed by synthetic rows
    std::vector<SmoteRecord> records;  // one per synthetic row, for audits
};

// SMOTE: new minority rows interpolated between a minority row and one of
// its k nearest minority neighbors (Euclidean, scaled space), appended until
// minority/majority reaches target_ratio. Binary columns of synthetic rows
// are rounded to {0,1} afterwards.
inline SmoteResult smote(const Dataset& train, int k, double target_ratio,
                         std::uint64_t seed) {
    require(k >= 1, "bad-config", "smote k must be >= 1");
    require(target_ratio > 0.0, "bad-config", "smote target_ratio must be positive");
    for (double v : train.rows)
        require(!is_missing(v), "missing-values", "smote requires imputed data");

    const std::size_t n_pos = train.count_label(1);
    const std::size_t n_neg = train.count_label(0);
    const int minority_label = n_pos <= n_neg ? 1 : 0;
    const std::size_t n_min = std::min(n_pos, n_neg);
    const std::size_t n_maj = std::max(n_pos, n_neg);
    require(n_min >= static_cast<std::size_t>(k) + 1, "too-few-minority-samples",
            "smote needs at least k+1 minority rows");

    std::vector<std::size_t> minority;
    for (std::size_t r = 0; r < train.n_rows(); ++r)
        if (train.labels[r] == minority_label) minority.push_back(r);

    const std::size_t want =
        static_cast<std::size_t>(std::llround(target_ratio * static_cast<double>(n_maj)));
    const std::size_t n_new = want > n_min ? want - n_min : 0;

    SmoteResult result;
    result.data = train;
    if (n_new == 0) return result;

    const std::size_t d = train.n_cols();
    // k nearest minority neighbors per minority row (self excluded)
    std::vector<std::vector<std::size_t>> neighbors(minority.size());
    parallel_for(minority.size(), [&](std::size_t mi) {
        std::vector<std::pair<double, std::size_t>> dist;
        dist.reserve(minority.size() - 1);
        const auto a = train.row(minority[mi]);
        for (std::size_t mj = 0; mj < minority.size(); ++mj) {
            if (mj == mi) continue;
            const auto b = train.row(minority[mj]);
            double s = 0.0;
            for (std::size_t c = 0; c < d; ++c) {
                const double diff = a[c] - b[c];
                s += diff * diff;
            }
            dist.push_back({s, minority[mj]});
        }
        std::partial_sort(dist.begin(),
                          dist.begin() + std::min<std::size_t>(k, dist.size()),
                          dist.end());
        for (std::size_t t = 0; t < std::min<std::size_t>(k, dist.size()); ++t)
            neighbors[mi].push_back(dist[t].second);
    });

    Rng rng(seed, 0x5304EULL);
    std::vector<double> row(d);
    for (std::size_t s = 0; s < n_new; ++s) {
        const std::size_t mi = static_cast<std::size_t>(rng.uniform_int(minority.size()));
        const auto& nbrs = neighbors[mi];
        const std::size_t nb = nbrs[static_cast<std::size_t>(rng.uniform_int(nbrs.size()))];
        const double delta = rng.uniform();

        const auto pa = train.row(minority[mi]);
        const auto pb = train.row(nb);
        for (std::size_t c = 0; c < d; ++c) row[c] = pa[c] + delta * (pb[c] - pa[c]);

        SmoteRecord rec;
        rec.parent_a = minority[mi];
        rec.parent_b = nb;
        rec.delta = delta;
        rec.raw = row;
        result.records.push_back(std::move(rec));

        for (std::size_t c = 0; c < d; ++c)
            if (train.feature_meta[c].kind == FeatureKind::binary)
                row[c] = row[c] >= 0.5 ? 1.0 : 0.0;
        result.data.push_row(row, static_cast<std::uint8_t>(minority_label));
    }
    return result;
}

}  // namespace vancorisk::preprocess
