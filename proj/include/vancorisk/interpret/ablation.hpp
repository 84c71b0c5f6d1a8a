#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "vancorisk/eval.hpp"
#include "vancorisk/models/linear.hpp"
#include "vancorisk/types.hpp"

// Leave-one-feature-out ablation with an L2 logistic regression retrained
// from scratch per removal; bootstrap resamples of the training set give a
// spread per feature. Runs on preprocessed (scaled, imputed) data.

namespace vancorisk::interpret {

struct AblationRow {
    std::string feature;
    double delta_auc = 0.0;  // AUC_full - AUC_without_feature
    double boot_mean = 0.0;
    double boot_sd = 0.0;
};

struct AblationResult {
    double full_auc = 0.0;
    std::vector<AblationRow> rows;
};

namespace ablation_detail {

inline double auc_without(const Dataset& train, const Dataset& test,
                          int dropped_col, const models::LogRegConfig& cfg) {
    std::vector<std::size_t> cols;
    for (std::size_t j = 0; j < train.n_cols(); ++j)
        if (static_cast<int>(j) != dropped_col) cols.push_back(j);
    const Dataset tr = dropped_col < 0 ? train : train.select_columns(cols);
    const Dataset te = dropped_col < 0 ? test : test.select_columns(cols);
    const auto model = models::train_logreg(tr, cfg);
    std::vector<double> scores(te.n_rows());
    for (std::size_t i = 0; i < te.n_rows(); ++i)
        scores[i] = models::sigmoid(model.predict_raw(te.row(i)));
    return eval::auroc(scores, te.labels);
}

inline Dataset resample(const Dataset& data, Rng& rng) {
    const std::size_t n = data.n_rows();
    std::vector<std::size_t> idx(n);
    while (true) {
        std::size_t n_pos = 0;
        for (auto& i : idx) {
            i = static_cast<std::size_t>(rng.uniform_int(n));
            n_pos += data.labels[i];
        }
        if (n_pos > 0 && n_pos < n) break;
    }
    return data.select_rows(idx);
}

}  // namespace ablation_detail

inline AblationResult ablation(const Dataset& train, const Dataset& test,
                               int n_boot, std::uint64_t seed,
                               models::LogRegConfig cfg = {}) {
    require(train.n_cols() >= 2, "too-few-features",
            "ablation needs at least two features");

    AblationResult result;
    result.full_auc = ablation_detail::auc_without(train, test, -1, cfg);

    const std::size_t d = train.n_cols();
    result.rows.resize(d);
    parallel_for(d, [&](std::size_t j) {
        auto& row = result.rows[j];
        row.feature = train.feature_meta[j].name;
        row.delta_auc = result.full_auc -
                        ablation_detail::auc_without(train, test,
                                                     static_cast<int>(j), cfg);
    });

    if (n_boot > 0) {
        // per replicate: resample the training set, retrain full and
        // leave-one-out models, collect per-feature deltas
        std::vector<std::vector<double>> deltas(d, std::vector<double>(n_boot, 0.0));
        parallel_for(static_cast<std::size_t>(n_boot), [&](std::size_t b) {
            Rng rng(seed, 0xAB1A + b);
            const Dataset boot_train = ablation_detail::resample(train, rng);
            const double full = ablation_detail::auc_without(boot_train, test, -1, cfg);
            for (std::size_t j = 0; j < d; ++j)
                deltas[j][b] = full - ablation_detail::auc_without(
                                          boot_train, test, static_cast<int>(j), cfg);
        });
        for (std::size_t j = 0; j < d; ++j) {
            result.rows[j].boot_mean = stats::mean(deltas[j]);
            result.rows[j].boot_sd = stats::stddev(deltas[j]);
        }
    }
    return result;
}

}  // namespace vancorisk::interpret
