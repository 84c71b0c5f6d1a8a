#pragma once

#include <cmath>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "vancorisk/models/gbdt.hpp"  // sigmoid
#include "vancorisk/types.hpp"

// Shallow feedforward net: one ReLU hidden layer into a sigmoid output,
// trained with Adam on binary cross-entropy. Inverted dropout is active only
// during training. hidden_units == 0 degenerates to a plain logistic model.

namespace vancorisk::models {

struct MlpConfig {
    int hidden_units = 16;
    double dropout = 0.0;
    double learning_rate = 1e-2;
    int batch_size = 64;
    int epochs = 50;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    std::uint64_t seed = 1;
};

struct MlpModel {
    MlpConfig config;
    // w1: hidden x input, b1: hidden, w2: hidden, b2 scalar
    std::vector<double> w1, b1, w2;
    double b2 = 0.0;
    std::vector<double> loss_trace;  // per-epoch training BCE

    double predict_raw(std::span<const double> row) const {
        const int h = config.hidden_units;
        const std::size_t d = row.size();
        if (h == 0) {
            double z = b2;
            for (std::size_t j = 0; j < d; ++j) z += w2[j] * row[j];
            return z;
        }
        double z = b2;
        for (int u = 0; u < h; ++u) {
            double a = b1[u];
            for (std::size_t j = 0; j < d; ++j) a += w1[u * d + j] * row[j];
            if (a > 0.0) z += w2[u] * a;
        }
        return z;
    }
};

namespace mlp_detail {

struct Adam {
    std::vector<double> m, v;
    double beta1, beta2, eps;
    double b1t = 1.0, b2t = 1.0;

    Adam(std::size_t n, const MlpConfig& cfg)
        : m(n, 0.0), v(n, 0.0), beta1(cfg.adam_beta1), beta2(cfg.adam_beta2),
          eps(cfg.adam_eps) {}

    void begin_step() {
        b1t *= beta1;
        b2t *= beta2;
    }

    void update(std::span<double> params, std::span<const double> grad, double lr) {
        for (std::size_t i = 0; i < params.size(); ++i) {
            m[i] = beta1 * m[i] + (1.0 - beta1) * grad[i];
            v[i] = beta2 * v[i] + (1.0 - beta2) * grad[i] * grad[i];
            const double mhat = m[i] / (1.0 - b1t);
            const double vhat = v[i] / (1.0 - b2t);
            params[i] -= lr * mhat / (std::sqrt(vhat) + eps);
        }
    }
};

}  // namespace mlp_detail

// Forward/backward over one batch; fills grads (same layout as params:
// w1 | b1 | w2 | b2) and returns mean BCE. Exposed for gradient checking.
inline double mlp_batch_gradient(const MlpModel& model, const Dataset& data,
                                 std::span<const std::size_t> batch,
                                 std::span<const double> dropout_mask,
                                 std::vector<double>& grad) {
    const int h = model.config.hidden_units;
    const std::size_t d = data.n_cols();
    const std::size_t nw1 = static_cast<std::size_t>(h) * d;
    grad.assign(nw1 + h + (h == 0 ? d : h) + 1, 0.0);
    double loss = 0.0;

    std::vector<double> act(std::max(h, 1));
    for (std::size_t bi = 0; bi < batch.size(); ++bi) {
        const auto row = data.row(batch[bi]);
        const double y = data.labels[batch[bi]];
        double z = model.b2;
        if (h == 0) {
            for (std::size_t j = 0; j < d; ++j) z += model.w2[j] * row[j];
        } else {
            for (int u = 0; u < h; ++u) {
                double a = model.b1[u];
                for (std::size_t j = 0; j < d; ++j) a += model.w1[u * d + j] * row[j];
                a = a > 0.0 ? a : 0.0;
                if (!dropout_mask.empty()) a *= dropout_mask[bi * h + u];
                act[u] = a;
                z += model.w2[u] * a;
            }
        }
        const double p = sigmoid(z);
        loss += y != 0.0 ? softplus(-z) : softplus(z);
        const double dz = p - y;

        if (h == 0) {
            for (std::size_t j = 0; j < d; ++j) grad[j] += dz * row[j];
            grad[d] += dz;
        } else {
            for (int u = 0; u < h; ++u) {
                grad[nw1 + h + u] += dz * act[u];
                double da = dz * model.w2[u];
                if (!dropout_mask.empty()) da *= dropout_mask[bi * h + u];
                if (act[u] > 0.0) {
                    for (std::size_t j = 0; j < d; ++j)
                        grad[u * d + j] += da * row[j];
                    grad[nw1 + u] += da;
                }
            }
            grad[nw1 + h + h] += dz;
        }
    }
    const double inv = 1.0 / static_cast<double>(batch.size());
    for (auto& g : grad) g *= inv;
    return loss * inv;
}

inline MlpModel train_mlp(const Dataset& train, const MlpConfig& cfg) {
    require(cfg.hidden_units >= 0, "bad-config", "hidden_units must be >= 0");
    require(cfg.epochs > 0 && cfg.batch_size > 0, "bad-config",
            "epochs and batch_size must be positive");
    require(cfg.dropout >= 0.0 && cfg.dropout < 1.0, "bad-config",
            "dropout must lie in [0,1)");
    for (double v : train.rows)
        require(!is_missing(v), "missing-values", "mlp requires imputed data");

    const std::size_t n = train.n_rows(), d = train.n_cols();
    const int h = cfg.hidden_units;
    MlpModel model;
    model.config = cfg;

    Rng rng(cfg.seed, 0x317A9ULL);
    const double scale1 = std::sqrt(2.0 / static_cast<double>(d));
    const double scale2 = h > 0 ? std::sqrt(1.0 / static_cast<double>(h)) : 0.1;
    model.w1.assign(static_cast<std::size_t>(h) * d, 0.0);
    model.b1.assign(h, 0.0);
    model.w2.assign(h == 0 ? d : h, 0.0);
    for (auto& w : model.w1) w = scale1 * rng.normal();
    for (auto& w : model.w2) w = scale2 * rng.normal();

    const std::size_t nw1 = model.w1.size();
    const std::size_t n_params = nw1 + model.b1.size() + model.w2.size() + 1;
    mlp_detail::Adam adam(n_params, cfg);

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);

    std::vector<double> grad, params(n_params);
    auto gather = [&] {
        std::size_t o = 0;
        for (double w : model.w1) params[o++] = w;
        for (double b : model.b1) params[o++] = b;
        for (double w : model.w2) params[o++] = w;
        params[o] = model.b2;
    };
    auto scatter = [&] {
        std::size_t o = 0;
        for (auto& w : model.w1) w = params[o++];
        for (auto& b : model.b1) b = params[o++];
        for (auto& w : model.w2) w = params[o++];
        model.b2 = params[o];
    };

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        rng.shuffle(order);
        double epoch_loss = 0.0;
        std::size_t seen = 0;
        for (std::size_t start = 0; start < n; start += cfg.batch_size) {
            const std::size_t len = std::min<std::size_t>(cfg.batch_size, n - start);
            std::span<const std::size_t> batch(order.data() + start, len);

            std::vector<double> mask;
            if (cfg.dropout > 0.0 && h > 0) {
                mask.resize(len * h);
                const double keep = 1.0 - cfg.dropout;
                for (auto& m : mask) m = rng.uniform() < keep ? 1.0 / keep : 0.0;
            }

            const double loss = mlp_batch_gradient(model, train, batch, mask, grad);
            epoch_loss += loss * static_cast<double>(len);
            seen += len;

            gather();
            adam.begin_step();
            adam.update(params, grad, cfg.learning_rate);
            scatter();
        }
        epoch_loss /= static_cast<double>(seen);
        require(std::isfinite(epoch_loss), "divergence",
                "mlp training diverged (loss is not finite) at epoch " +
                    std::to_string(epoch));
        model.loss_trace.push_back(epoch_loss);
    }
    return model;
}

}  // namespace vancorisk::models
