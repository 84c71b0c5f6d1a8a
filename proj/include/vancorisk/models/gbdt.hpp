#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <numeric>
#include <span>
#include <vector>

#include "vancorisk/types.hpp"

// Gradient-boosted trees over histogram bins with logistic loss. One tree
// engine serves three growth flavors:
//   levelwise - expand every node depth by depth (depth budget)
//   leafwise  - expand the best-gain node first (leaf budget)
//   ordered   - levelwise structure, but gradient targets come from
//               prefix-only leaf estimates along a fixed permutation, so a
//               sample's own target never sees its own residual
// Zero-gain splits are allowed when the node still mixes gradients; that is
// what lets depth-2 trees carve XOR-like interactions whose first split is
// uninformative on its own.

namespace vancorisk::models {

enum class GbdtVariant { ordered, leafwise, levelwise };

inline const char* to_string(GbdtVariant v) {
    switch (v) {
        case GbdtVariant::ordered: return "ordered";
        case GbdtVariant::leafwise: return "leafwise";
        case GbdtVariant::levelwise: return "levelwise";
    }
    return "?";
}

struct GbdtConfig {
    GbdtVariant variant = GbdtVariant::ordered;
    int n_rounds = 200;
    double learning_rate = 0.1;
    int max_depth = 6;    // levelwise / ordered
    int max_leaves = 31;  // leafwise
    double l2_reg = 1.0;
    int n_bins = 64;
    int min_child_rows = 1;
    std::uint64_t seed = 1;
};

struct TreeNode {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;  // leaf value, learning rate already applied
    double cover = 0.0;  // training rows that reached this node

    bool is_leaf() const { return feature < 0; }
};

struct Tree {
    std::vector<TreeNode> nodes;

    double predict(std::span<const double> row) const {
        int idx = 0;
        while (!nodes[idx].is_leaf())
            idx = row[nodes[idx].feature] <= nodes[idx].threshold ? nodes[idx].left
                                                                  : nodes[idx].right;
        return nodes[idx].value;
    }
};

struct GbdtModel {
    GbdtConfig config;
    double base_score = 0.0;  // log-odds offset
    std::vector<Tree> trees;
    std::vector<double> loss_trace;  // training logloss after each round

    double predict_raw(std::span<const double> row) const {
        double f = base_score;
        for (const auto& t : trees) f += t.predict(row);
        return f;
    }
};

inline double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

inline double softplus(double x) {
    return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

// mean of log(1 + e^F) - y*F; branch on the label so infinite raw scores on
// the correct side contribute exactly zero instead of 0 * inf
inline double mean_logloss(std::span<const double> raw, std::span<const std::uint8_t> y) {
    double s = 0.0;
    for (std::size_t i = 0; i < raw.size(); ++i)
        s += y[i] ? softplus(-raw[i]) : softplus(raw[i]);
    return s / static_cast<double>(raw.size());
}

namespace gbdt_detail {

inline std::vector<std::vector<double>> quantile_edges(const Dataset& data, int n_bins) {
    std::vector<std::vector<double>> edges(data.n_cols());
    for (std::size_t j = 0; j < data.n_cols(); ++j) {
        std::vector<double> v;
        v.reserve(data.n_rows());
        for (std::size_t r = 0; r < data.n_rows(); ++r) v.push_back(data.at(r, j));
        std::sort(v.begin(), v.end());
        v.erase(std::unique(v.begin(), v.end()), v.end());
        if (v.size() <= 1) continue;
        if (static_cast<int>(v.size()) <= n_bins) {
            for (std::size_t t = 0; t + 1 < v.size(); ++t)
                edges[j].push_back(0.5 * (v[t] + v[t + 1]));
        } else {
            for (int b = 1; b < n_bins; ++b) {
                const std::size_t pos = b * v.size() / n_bins;
                const double e = 0.5 * (v[pos - 1] + v[pos]);
                if (edges[j].empty() || e > edges[j].back()) edges[j].push_back(e);
            }
        }
    }
    return edges;
}

struct SplitChoice {
    int feature = -1;
    int bin = -1;
    double gain = -1.0;
    double sum_g_left = 0.0, sum_h_left = 0.0;
    std::size_t count_left = 0;
};

struct NodeStats {
    double sum_g = 0.0, sum_h = 0.0;
    double min_g = 0.0, max_g = 0.0;
};

class TreeBuilder {
public:
    TreeBuilder(const Dataset& data, const std::vector<std::vector<double>>& edges,
                const GbdtConfig& cfg)
        : data_(data), edges_(edges), cfg_(cfg) {
        // cache per-row bin ids once; trees later evaluate raw thresholds
        bins_.resize(data.n_rows() * data.n_cols());
        for (std::size_t r = 0; r < data.n_rows(); ++r)
            for (std::size_t j = 0; j < data.n_cols(); ++j) {
                const auto& e = edges_[j];
                bins_[r * data.n_cols() + j] = static_cast<std::uint16_t>(
                    std::upper_bound(e.begin(), e.end(), data.at(r, j)) - e.begin());
            }
    }

    Tree build(std::span<const double> grad, std::span<const double> hess,
               std::vector<std::vector<std::size_t>>* leaf_rows_out) {
        grad_ = grad;
        hess_ = hess;
        Tree tree;
        if (leaf_rows_out) leaf_rows_out->clear();

        std::vector<std::size_t> all(data_.n_rows());
        std::iota(all.begin(), all.end(), 0);

        struct Work {
            int node = 0;
            int depth = 0;
            std::vector<std::size_t> rows;
            SplitChoice split;
        };

        auto node_stats = [&](const std::vector<std::size_t>& rows) {
            NodeStats s;
            s.min_g = std::numeric_limits<double>::infinity();
            s.max_g = -s.min_g;
            for (auto r : rows) {
                s.sum_g += grad_[r];
                s.sum_h += hess_[r];
                s.min_g = std::min(s.min_g, grad_[r]);
                s.max_g = std::max(s.max_g, grad_[r]);
            }
            return s;
        };

        auto make_leaf = [&](int node, const std::vector<std::size_t>& rows,
                             const NodeStats& s) {
            tree.nodes[node].feature = -1;
            tree.nodes[node].value =
                cfg_.learning_rate * (-s.sum_g / (s.sum_h + cfg_.l2_reg));
            if (leaf_rows_out) {
                tree.nodes[node].left = static_cast<int>(leaf_rows_out->size());
                leaf_rows_out->push_back(rows);
            }
        };

        tree.nodes.push_back({});
        tree.nodes[0].cover = static_cast<double>(all.size());

        if (cfg_.variant == GbdtVariant::leafwise) {
            // best-first growth under a leaf budget
            auto cmp = [](const Work* a, const Work* b) {
                if (a->split.gain != b->split.gain) return a->split.gain < b->split.gain;
                return a->node > b->node;  // deterministic tie order
            };
            std::vector<Work*> heap;
            std::vector<std::unique_ptr<Work>> owned;
            auto push_candidate = [&](int node, int depth, std::vector<std::size_t> rows) {
                const auto s = node_stats(rows);
                owned.push_back(std::make_unique<Work>(Work{node, depth, std::move(rows), {}}));
                Work* w = owned.back().get();
                w->split = find_best_split(w->rows, s);
                if (w->split.feature >= 0) {
                    heap.push_back(w);
                    std::push_heap(heap.begin(), heap.end(), cmp);
                } else {
                    make_leaf(node, w->rows, s);
                }
            };
            push_candidate(0, 0, std::move(all));
            int n_leaves = 1;
            while (!heap.empty() && n_leaves < cfg_.max_leaves) {
                std::pop_heap(heap.begin(), heap.end(), cmp);
                Work* w = heap.back();
                heap.pop_back();
                auto [lrows, rrows] = apply_split(tree, w->node, w->rows, w->split);
                n_leaves += 1;  // one node became two
                push_candidate(tree.nodes[w->node].left, w->depth + 1, std::move(lrows));
                push_candidate(tree.nodes[w->node].right, w->depth + 1, std::move(rrows));
            }
            // budget exhausted: remaining candidates become leaves
            for (Work* w : heap) make_leaf(w->node, w->rows, node_stats(w->rows));
        } else {
            // depth-first expansion to max_depth (levelwise / ordered)
            std::vector<Work> stack;
            stack.push_back({0, 0, std::move(all), {}});
            while (!stack.empty()) {
                Work w = std::move(stack.back());
                stack.pop_back();
                const auto s = node_stats(w.rows);
                if (w.depth >= cfg_.max_depth) {
                    make_leaf(w.node, w.rows, s);
                    continue;
                }
                w.split = find_best_split(w.rows, s);
                if (w.split.feature < 0) {
                    make_leaf(w.node, w.rows, s);
                    continue;
                }
                auto [lrows, rrows] = apply_split(tree, w.node, w.rows, w.split);
                stack.push_back({tree.nodes[w.node].right, w.depth + 1, std::move(rrows), {}});
                stack.push_back({tree.nodes[w.node].left, w.depth + 1, std::move(lrows), {}});
            }
        }
        return tree;
    }

private:
    SplitChoice find_best_split(const std::vector<std::size_t>& rows,
                                const NodeStats& stats) {
        SplitChoice best;
        if (rows.size() < 2 * static_cast<std::size_t>(cfg_.min_child_rows)) return best;
        // all-equal gradients: nothing to separate
        if (stats.max_g - stats.min_g < 1e-12) return best;

        const double parent_score =
            stats.sum_g * stats.sum_g / (stats.sum_h + cfg_.l2_reg);
        const std::size_t d = data_.n_cols();

        std::vector<SplitChoice> per_feature(d);
        parallel_for(d, [&](std::size_t j) {
            const auto& e = edges_[j];
            if (e.empty()) return;
            std::vector<double> bin_g(e.size() + 1, 0.0), bin_h(e.size() + 1, 0.0);
            std::vector<std::size_t> bin_n(e.size() + 1, 0);
            for (auto r : rows) {
                const auto b = bins_[r * d + j];
                bin_g[b] += grad_[r];
                bin_h[b] += hess_[r];
                bin_n[b]++;
            }
            double gl = 0.0, hl = 0.0;
            std::size_t nl = 0;
            SplitChoice cand;
            for (std::size_t b = 0; b < e.size(); ++b) {
                gl += bin_g[b];
                hl += bin_h[b];
                nl += bin_n[b];
                const std::size_t nr = rows.size() - nl;
                if (nl < static_cast<std::size_t>(cfg_.min_child_rows) ||
                    nr < static_cast<std::size_t>(cfg_.min_child_rows))
                    continue;
                const double gr = stats.sum_g - gl;
                const double hr = stats.sum_h - hl;
                const double gain = 0.5 * (gl * gl / (hl + cfg_.l2_reg) +
                                           gr * gr / (hr + cfg_.l2_reg) - parent_score);
                if (gain > cand.gain) {
                    cand.feature = static_cast<int>(j);
                    cand.bin = static_cast<int>(b);
                    cand.gain = gain;
                    cand.sum_g_left = gl;
                    cand.sum_h_left = hl;
                    cand.count_left = nl;
                }
            }
            per_feature[j] = cand;
        });
        for (const auto& cand : per_feature)
            if (cand.feature >= 0 && cand.gain > best.gain) best = cand;
        if (best.feature >= 0 && best.gain < 0.0) best.feature = -1;
        return best;
    }

    std::pair<std::vector<std::size_t>, std::vector<std::size_t>> apply_split(
        Tree& tree, int node_id, const std::vector<std::size_t>& rows,
        const SplitChoice& split) {
        const int left = static_cast<int>(tree.nodes.size());
        const int right = left + 1;
        tree.nodes.push_back({});
        tree.nodes.push_back({});
        auto& node = tree.nodes[node_id];
        node.feature = split.feature;
        node.threshold = edges_[split.feature][split.bin];
        node.left = left;
        node.right = right;

        std::vector<std::size_t> lrows, rrows;
        lrows.reserve(split.count_left);
        rrows.reserve(rows.size() - split.count_left);
        const std::size_t d = data_.n_cols();
        for (auto r : rows)
            (bins_[r * d + split.feature] <= static_cast<std::size_t>(split.bin)
                 ? lrows
                 : rrows)
                .push_back(r);
        tree.nodes[left].cover = static_cast<double>(lrows.size());
        tree.nodes[right].cover = static_cast<double>(rrows.size());
        return {std::move(lrows), std::move(rrows)};
    }

    const Dataset& data_;
    const std::vector<std::vector<double>>& edges_;
    const GbdtConfig& cfg_;
    std::vector<std::uint16_t> bins_;
    std::span<const double> grad_;
    std::span<const double> hess_;
};

}  // namespace gbdt_detail

inline GbdtModel train_gbdt(const Dataset& train, const GbdtConfig& cfg) {
    require(cfg.n_rounds > 0, "bad-config", "n_rounds must be positive");
    require(cfg.learning_rate >= 0.0, "bad-config", "learning_rate must be >= 0");
    require(cfg.max_depth >= 1 && cfg.max_leaves >= 2, "bad-config",
            "tree size limits must be positive");
    const std::size_t n = train.n_rows();
    require(train.count_label(0) > 0 && train.count_label(1) > 0, "single-class",
            "training requires both classes");
    for (double v : train.rows)
        require(!is_missing(v), "missing-values", "gbdt requires imputed data");

    GbdtModel model;
    model.config = cfg;
    const double pos_rate = static_cast<double>(train.count_label(1)) / n;
    model.base_score = std::log(pos_rate / (1.0 - pos_rate));

    const auto edges = gbdt_detail::quantile_edges(train, cfg.n_bins);
    gbdt_detail::TreeBuilder builder(train, edges, cfg);

    // committed-model raw scores; the ordered variant keeps a second vector
    // of prefix-only scores that feed gradient computation
    std::vector<double> f_model(n, model.base_score);
    std::vector<double> f_target = f_model;
    const bool ordered = cfg.variant == GbdtVariant::ordered;

    std::vector<std::size_t> perm_pos(n);
    if (ordered) {
        std::vector<std::size_t> perm(n);
        std::iota(perm.begin(), perm.end(), 0);
        Rng rng(cfg.seed, 0x02DE2EDULL);
        rng.shuffle(perm);
        for (std::size_t p = 0; p < n; ++p) perm_pos[perm[p]] = p;
    }

    std::vector<double> grad(n), hess(n);
    std::vector<std::vector<std::size_t>> leaf_rows;
    double prev_loss = mean_logloss(f_model, train.labels);

    for (int round = 0; round < cfg.n_rounds; ++round) {
        const auto& f_for_grad = ordered ? f_target : f_model;
        for (std::size_t i = 0; i < n; ++i) {
            const double p = sigmoid(f_for_grad[i]);
            grad[i] = p - static_cast<double>(train.labels[i]);
            hess[i] = std::max(p * (1.0 - p), 1e-16);
        }

        Tree tree = builder.build(grad, hess, &leaf_rows);

        // Monotone-loss safeguard: a Newton leaf step can overshoot on tiny
        // hessians; halve the tree's contribution until the committed train
        // loss does not increase (zeroing it in the worst case).
        double scale = 1.0;
        std::vector<double> f_new(n);
        for (int attempt = 0;; ++attempt) {
            for (std::size_t i = 0; i < n; ++i) f_new[i] = f_model[i];
            for (auto& node : tree.nodes)
                if (node.is_leaf())
                    for (auto r : leaf_rows[node.left])
                        f_new[r] += scale * node.value;
            const double loss = mean_logloss(f_new, train.labels);
            if (loss <= prev_loss + 1e-15) {
                prev_loss = std::min(loss, prev_loss);
                break;
            }
            if (attempt >= 20) {
                scale = 0.0;
                for (std::size_t i = 0; i < n; ++i) f_new[i] = f_model[i];
                break;
            }
            scale *= 0.5;
        }
        if (scale != 1.0)
            for (auto& node : tree.nodes)
                if (node.is_leaf()) node.value *= scale;
        f_model.swap(f_new);

        if (ordered) {
            // prefix-only leaf estimates: a row's target update uses only
            // rows that precede it in the permutation within the same leaf
            for (auto& node : tree.nodes) {
                if (!node.is_leaf()) continue;
                auto rows = leaf_rows[node.left];
                std::sort(rows.begin(), rows.end(), [&](std::size_t a, std::size_t b) {
                    return perm_pos[a] < perm_pos[b];
                });
                double pg = 0.0, ph = 0.0;
                for (auto r : rows) {
                    if (ph > 0.0)
                        f_target[r] += scale * cfg.learning_rate *
                                       (-pg / (ph + cfg.l2_reg));
                    pg += grad[r];
                    ph += hess[r];
                }
            }
        }

        // leaf bookkeeping index is internal; clear it before storing
        for (auto& node : tree.nodes)
            if (node.is_leaf()) node.left = node.right = -1;
        model.trees.push_back(std::move(tree));
        model.loss_trace.push_back(prev_loss);
    }
    return model;
}

}  // namespace vancorisk::models
