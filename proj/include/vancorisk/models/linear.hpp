#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "vancorisk/models/gbdt.hpp"  // sigmoid, mean_logloss
#include "vancorisk/types.hpp"

// Logistic regression minimizing mean BCE plus an L1 or L2 penalty on the
// weights (intercept unpenalized). Both penalties are handled proximally:
// backtracking gradient steps on the smooth BCE part, then soft thresholding
// (L1) or multiplicative shrinkage (L2). The proximal form keeps the step
// size governed by the data curvature alone, so extreme lambdas cannot stall
// the intercept.

namespace vancorisk::models {

enum class Penalty { l1, l2 };

struct LogRegConfig {
    Penalty penalty = Penalty::l2;
    double lambda = 1e-4;
    int max_iter = 500;
    double tol = 1e-8;
};

struct LogRegModel {
    LogRegConfig config;
    std::vector<double> weights;
    double bias = 0.0;
    bool converged = false;
    double final_grad_norm = 0.0;
    std::vector<double> loss_trace;

    double predict_raw(std::span<const double> row) const {
        double z = bias;
        for (std::size_t j = 0; j < weights.size(); ++j) z += weights[j] * row[j];
        return z;
    }
};

namespace linreg_detail {

// mean BCE gradient at (w, b); returns loss without the penalty term
inline double bce_and_grad(const Dataset& data, const std::vector<double>& w,
                           double b, std::vector<double>& gw, double& gb) {
    const std::size_t n = data.n_rows(), d = data.n_cols();
    std::fill(gw.begin(), gw.end(), 0.0);
    gb = 0.0;
    std::vector<double> raw(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto row = data.row(i);
        double z = b;
        for (std::size_t j = 0; j < d; ++j) z += w[j] * row[j];
        raw[i] = z;
        const double e = sigmoid(z) - static_cast<double>(data.labels[i]);
        for (std::size_t j = 0; j < d; ++j) gw[j] += e * row[j];
        gb += e;
    }
    const double inv_n = 1.0 / static_cast<double>(n);
    for (auto& g : gw) g *= inv_n;
    gb *= inv_n;
    return mean_logloss(raw, data.labels);
}

inline double soft_threshold(double x, double t) {
    if (x > t) return x - t;
    if (x < -t) return x + t;
    return 0.0;
}

}  // namespace linreg_detail

inline LogRegModel train_logreg(const Dataset& train, const LogRegConfig& cfg) {
    require(cfg.lambda >= 0.0, "bad-config", "lambda must be >= 0");
    require(cfg.max_iter > 0, "bad-config", "max_iter must be positive");
    for (double v : train.rows)
        require(!is_missing(v), "missing-values", "logreg requires imputed data");

    const std::size_t d = train.n_cols();
    LogRegModel model;
    model.config = cfg;
    model.weights.assign(d, 0.0);
    model.bias = 0.0;

    std::vector<double> gw(d);
    double gb = 0.0;
    double step = 1.0;
    constexpr double kMaxStep = 1e8;  // keeps separable-data weights finite

    for (int it = 0; it < cfg.max_iter; ++it) {
        const double loss = linreg_detail::bce_and_grad(train, model.weights,
                                                        model.bias, gw, gb);
        double penalty = 0.0;
        for (double w : model.weights)
            penalty += cfg.penalty == Penalty::l2 ? 0.5 * cfg.lambda * w * w
                                                  : cfg.lambda * std::fabs(w);
        model.loss_trace.push_back(loss + penalty);

        double gnorm = gb * gb;
        for (double g : gw) gnorm += g * g;
        gnorm = std::sqrt(gnorm);
        model.final_grad_norm = gnorm;

        // backtracking step on the smooth part, then the penalty prox
        std::vector<double> w_new(d);
        double b_new = 0.0;
        for (int half = 0; half < 40; ++half) {
            for (std::size_t j = 0; j < d; ++j) {
                double wj = model.weights[j] - step * gw[j];
                wj = cfg.penalty == Penalty::l1
                         ? linreg_detail::soft_threshold(wj, step * cfg.lambda)
                         : wj / (1.0 + step * cfg.lambda);
                w_new[j] = wj;
            }
            b_new = model.bias - step * gb;
            std::vector<double> tmp(d);
            double tmpb;
            const double new_loss =
                linreg_detail::bce_and_grad(train, w_new, b_new, tmp, tmpb);
            double new_pen = 0.0;
            for (double w : w_new)
                new_pen += cfg.penalty == Penalty::l2 ? 0.5 * cfg.lambda * w * w
                                                      : cfg.lambda * std::fabs(w);
            if (new_loss + new_pen <= loss + penalty + 1e-15) {
                step = std::min(step * 1.25, kMaxStep);
                break;
            }
            step *= 0.5;
        }

        double delta = std::fabs(b_new - model.bias);
        for (std::size_t j = 0; j < d; ++j)
            delta = std::max(delta, std::fabs(w_new[j] - model.weights[j]));
        model.weights.swap(w_new);
        model.bias = b_new;
        if (delta < cfg.tol) {
            model.converged = true;
            break;
        }
    }
    return model;
}

}  // namespace vancorisk::models
