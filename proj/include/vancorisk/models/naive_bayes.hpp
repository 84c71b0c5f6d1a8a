#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "vancorisk/types.hpp"

// Gaussian naive Bayes: empirical class priors, per-class per-feature
// Gaussian likelihoods with an epsilon variance floor, Bayes rule in log
// space.

namespace vancorisk::models {

struct GnbModel {
    double log_prior[2] = {0.0, 0.0};
    std::vector<double> mean[2];
    std::vector<double> var[2];
    double var_floor = 1e-9;

    double predict_raw(std::span<const double> row) const {
        double ll[2];
        for (int c = 0; c < 2; ++c) {
            double s = log_prior[c];
            for (std::size_t j = 0; j < row.size(); ++j) {
                const double diff = row[j] - mean[c][j];
                s += -0.5 * std::log(2.0 * M_PI * var[c][j]) -
                     0.5 * diff * diff / var[c][j];
            }
            ll[c] = s;
        }
        return ll[1] - ll[0];  // log-odds
    }
};

inline GnbModel train_gnb(const Dataset& train, double var_floor = 1e-9) {
    const std::size_t n = train.n_rows(), d = train.n_cols();
    const std::size_t n1 = train.count_label(1), n0 = n - n1;
    require(n0 > 0 && n1 > 0, "empty-class", "both classes must be present");
    for (double v : train.rows)
        require(!is_missing(v), "missing-values", "gnb requires imputed data");

    GnbModel model;
    model.var_floor = var_floor;
    model.log_prior[0] = std::log(static_cast<double>(n0) / n);
    model.log_prior[1] = std::log(static_cast<double>(n1) / n);
    for (int c = 0; c < 2; ++c) {
        model.mean[c].assign(d, 0.0);
        model.var[c].assign(d, 0.0);
    }
    for (std::size_t i = 0; i < n; ++i) {
        const int c = train.labels[i] ? 1 : 0;
        for (std::size_t j = 0; j < d; ++j) model.mean[c][j] += train.at(i, j);
    }
    const double cnt[2] = {static_cast<double>(n0), static_cast<double>(n1)};
    for (int c = 0; c < 2; ++c)
        for (std::size_t j = 0; j < d; ++j) model.mean[c][j] /= cnt[c];
    for (std::size_t i = 0; i < n; ++i) {
        const int c = train.labels[i] ? 1 : 0;
        for (std::size_t j = 0; j < d; ++j) {
            const double diff = train.at(i, j) - model.mean[c][j];
            model.var[c][j] += diff * diff;
        }
    }
    for (int c = 0; c < 2; ++c)
        for (std::size_t j = 0; j < d; ++j)
            model.var[c][j] = std::max(model.var[c][j] / cnt[c], var_floor);
    return model;
}

}  // namespace vancorisk::models
