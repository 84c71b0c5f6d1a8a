#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "vancorisk/stats.hpp"
#include "vancorisk/types.hpp"

// Two-stage feature selection: a univariate ANOVA F filter down to 30
// candidates, then random-forest Gini importance down to the final 15,
// always completed by the four admission-level features.

namespace vancorisk::feature_select {

struct FeatureScore {
    std::string name;
    double f_statistic = 0.0;
    double p_value = 1.0;
    double gini_importance = kMissing;  // absent before stage 2
    int rank = 0;
    bool selected = false;
};

// Two-group ANOVA F per feature. Constant features score F=0, p=1; zero
// within-group variance with distinct means scores +inf, p=0.
inline std::vector<FeatureScore> anova_f_scores(const Dataset& data) {
    const std::size_t n0 = data.count_label(0), n1 = data.count_label(1);
    require(n0 >= 2 && n1 >= 2, "too-few-samples",
            "ANOVA needs at least two rows per class");
    for (double v : data.rows)
        require(!is_missing(v), "missing-values", "ANOVA requires imputed data");

    const double n = static_cast<double>(n0 + n1);
    std::vector<FeatureScore> out;
    out.reserve(data.n_cols());
    for (std::size_t j = 0; j < data.n_cols(); ++j) {
        double sum[2] = {0, 0}, sumsq[2] = {0, 0};
        for (std::size_t r = 0; r < data.n_rows(); ++r) {
            const double v = data.at(r, j);
            const int g = data.labels[r] ? 1 : 0;
            sum[g] += v;
            sumsq[g] += v * v;
        }
        const double cnt[2] = {static_cast<double>(n0), static_cast<double>(n1)};
        const double mean[2] = {sum[0] / cnt[0], sum[1] / cnt[1]};
        const double grand = (sum[0] + sum[1]) / n;
        double ss_between = 0.0, ss_within = 0.0;
        for (int g = 0; g < 2; ++g) {
            ss_between += cnt[g] * (mean[g] - grand) * (mean[g] - grand);
            ss_within += sumsq[g] - cnt[g] * mean[g] * mean[g];
        }
        ss_within = std::max(ss_within, 0.0);
        const double ms_between = ss_between / 1.0;        // k - 1 = 1
        const double ms_within = ss_within / (n - 2.0);    // N - k

        FeatureScore s;
        s.name = data.feature_meta[j].name;
        if (ms_between <= 0.0) {
            s.f_statistic = 0.0;
            s.p_value = 1.0;
        } else if (ms_within <= 0.0) {
            s.f_statistic = std::numeric_limits<double>::infinity();
            s.p_value = 0.0;
        } else {
            s.f_statistic = ms_between / ms_within;
            s.p_value = stats::f_sf(s.f_statistic, 1.0, n - 2.0);
        }
        out.push_back(std::move(s));
    }
    return out;
}

// Highest-F features; ties resolve to the lexicographically smaller name.
inline std::vector<std::string> select_top_k(std::vector<FeatureScore> scores,
                                             std::size_t k) {
    require(k <= scores.size(), "k-too-large",
            "requested more features than were scored");
    std::sort(scores.begin(), scores.end(),
              [](const FeatureScore& a, const FeatureScore& b) {
                  if (a.f_statistic != b.f_statistic)
                      return a.f_statistic > b.f_statistic;
                  return a.name < b.name;
              });
    std::vector<std::string> out;
    out.reserve(k);
    for (std::size_t i = 0; i < k; ++i) out.push_back(scores[i].name);
    return out;
}

// ---------------------------------------------------------------------------
// Random forest with Gini splits over binned features.
// ---------------------------------------------------------------------------

struct ForestConfig {
    int n_trees = 200;
    int max_depth = 8;
    int n_bins = 64;
    int min_samples_split = 2;
};

namespace detail {

// Quantile-style bin upper edges per feature (split candidates).
inline std::vector<std::vector<double>> bin_edges(const Dataset& data, int n_bins) {
    std::vector<std::vector<double>> edges(data.n_cols());
    for (std::size_t j = 0; j < data.n_cols(); ++j) {
        std::vector<double> v;
        v.reserve(data.n_rows());
        for (std::size_t r = 0; r < data.n_rows(); ++r) v.push_back(data.at(r, j));
        std::sort(v.begin(), v.end());
        v.erase(std::unique(v.begin(), v.end()), v.end());
        if (v.size() <= 1) continue;  // constant feature: no candidates
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

struct GiniSplit {
    int feature = -1;
    double threshold = 0.0;
    double gain = 0.0;  // p(v) * impurity decrease, already tree-weighted
    double raw_decrease = 0.0;
};

}  // namespace detail

// Gini importance: weighted impurity decrease summed over nodes splitting on
// each feature, averaged over trees, normalized to sum 1.
inline std::vector<FeatureScore> rf_importance(const Dataset& data,
                                               const ForestConfig& cfg,
                                               std::uint64_t seed) {
    const std::size_t n = data.n_rows(), d = data.n_cols();
    require(data.count_label(0) > 0 && data.count_label(1) > 0, "single-class",
            "forest needs both classes");
    for (double v : data.rows)
        require(!is_missing(v), "missing-values", "forest requires imputed data");
    {
        bool all_same = true;
        for (std::size_t r = 1; r < n && all_same; ++r)
            for (std::size_t c = 0; c < d; ++c)
                if (data.at(r, c) != data.at(0, c)) { all_same = false; break; }
        require(!all_same, "degenerate-data", "all rows are identical");
    }

    const auto edges = detail::bin_edges(data, cfg.n_bins);
    const std::size_t mtry = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::sqrt(static_cast<double>(d))));

    std::vector<std::vector<double>> per_tree(cfg.n_trees,
                                              std::vector<double>(d, 0.0));
    parallel_for(static_cast<std::size_t>(cfg.n_trees), [&](std::size_t t) {
        Rng rng(seed, 0xF0515 + t);
        std::vector<std::size_t> sample(n);
        for (auto& s : sample) s = static_cast<std::size_t>(rng.uniform_int(n));

        auto& importance = per_tree[t];
        const double n_root = static_cast<double>(sample.size());

        struct NodeWork {
            std::vector<std::size_t> rows;
            int depth;
        };
        std::vector<NodeWork> stack;
        stack.push_back({std::move(sample), 0});
        while (!stack.empty()) {
            NodeWork node = std::move(stack.back());
            stack.pop_back();
            const double n_node = static_cast<double>(node.rows.size());
            std::size_t pos = 0;
            for (auto r : node.rows) pos += data.labels[r];
            const std::size_t neg = node.rows.size() - pos;
            if (node.depth >= cfg.max_depth || pos == 0 || neg == 0 ||
                node.rows.size() < static_cast<std::size_t>(cfg.min_samples_split))
                continue;

            const double p1 = static_cast<double>(pos) / n_node;
            const double gini_node = 2.0 * p1 * (1.0 - p1);

            // feature subsample without replacement
            std::vector<std::size_t> feats(d);
            std::iota(feats.begin(), feats.end(), 0);
            for (std::size_t i = 0; i < mtry && i + 1 < d; ++i) {
                const std::size_t j =
                    i + static_cast<std::size_t>(rng.uniform_int(d - i));
                std::swap(feats[i], feats[j]);
            }
            feats.resize(std::min(mtry, d));
            std::sort(feats.begin(), feats.end());  // deterministic scan order

            detail::GiniSplit best;
            for (std::size_t j : feats) {
                if (edges[j].empty()) continue;
                // class counts per candidate threshold via cumulative scan
                std::vector<std::size_t> cnt_pos(edges[j].size() + 1, 0),
                    cnt_all(edges[j].size() + 1, 0);
                for (auto r : node.rows) {
                    const double v = data.at(r, j);
                    const std::size_t b =
                        std::upper_bound(edges[j].begin(), edges[j].end(), v) -
                        edges[j].begin();
                    cnt_all[b]++;
                    cnt_pos[b] += data.labels[r];
                }
                double left_all = 0, left_pos = 0;
                for (std::size_t b = 0; b < edges[j].size(); ++b) {
                    left_all += static_cast<double>(cnt_all[b]);
                    left_pos += static_cast<double>(cnt_pos[b]);
                    const double right_all = n_node - left_all;
                    if (left_all == 0 || right_all == 0) continue;
                    const double right_pos = static_cast<double>(pos) - left_pos;
                    const double pl = left_pos / left_all;
                    const double pr = right_pos / right_all;
                    const double gini_children =
                        (left_all / n_node) * 2.0 * pl * (1.0 - pl) +
                        (right_all / n_node) * 2.0 * pr * (1.0 - pr);
                    const double decrease = gini_node - gini_children;
                    if (decrease > best.raw_decrease + 1e-15) {
                        best.feature = static_cast<int>(j);
                        best.threshold = edges[j][b];
                        best.raw_decrease = decrease;
                    }
                }
            }
            if (best.feature < 0 || best.raw_decrease <= 0.0) continue;

            importance[best.feature] += (n_node / n_root) * best.raw_decrease;

            NodeWork left;
            NodeWork right;
            left.depth = right.depth = node.depth + 1;
            for (auto r : node.rows)
                (data.at(r, best.feature) <= best.threshold ? left.rows : right.rows)
                    .push_back(r);
            stack.push_back(std::move(left));
            stack.push_back(std::move(right));
        }
    });

    std::vector<double> importance(d, 0.0);
    for (const auto& tree_imp : per_tree)
        for (std::size_t j = 0; j < d; ++j) importance[j] += tree_imp[j];
    for (auto& v : importance) v /= static_cast<double>(cfg.n_trees);
    const double total = std::accumulate(importance.begin(), importance.end(), 0.0);
    if (total > 0.0)
        for (auto& v : importance) v /= total;

    std::vector<FeatureScore> out(d);
    for (std::size_t j = 0; j < d; ++j) {
        out[j].name = data.feature_meta[j].name;
        out[j].gini_importance = importance[j];
    }
    return out;
}

// ---------------------------------------------------------------------------

struct SelectionConfig {
    std::size_t stage1_top_k = 30;
    std::size_t stage2_top_k = 15;
    double p_threshold = kMissing;  // optional filter, off by default
    ForestConfig forest;
};

struct SelectionResult {
    std::vector<std::string> final_features;  // selected + admission, data order
    std::vector<FeatureScore> scores;         // one row per input feature
};

inline SelectionResult two_stage_select(const Dataset& data,
                                        const std::vector<std::string>& admission_features,
                                        const SelectionConfig& cfg,
                                        std::uint64_t seed) {
    for (const auto& a : admission_features)
        require(data.column_index(a) >= 0, "missing-admission-feature",
                "dataset lacks admission feature '" + a + "'");
    auto is_admission = [&](const std::string& name) {
        return std::find(admission_features.begin(), admission_features.end(), name) !=
               admission_features.end();
    };

    std::vector<std::size_t> candidate_cols;
    for (std::size_t j = 0; j < data.n_cols(); ++j)
        if (!is_admission(data.feature_meta[j].name)) candidate_cols.push_back(j);
    const Dataset candidates = data.select_columns(candidate_cols);

    auto f_scores = anova_f_scores(candidates);
    std::vector<FeatureScore> stage1_pool = f_scores;
    if (!is_missing(cfg.p_threshold)) {
        std::erase_if(stage1_pool, [&](const FeatureScore& s) {
            return s.p_value > cfg.p_threshold;
        });
    }
    const std::size_t k1 = std::min(cfg.stage1_top_k, stage1_pool.size());
    const auto stage1 = select_top_k(stage1_pool, k1);

    std::vector<std::size_t> stage1_cols;
    for (const auto& name : stage1)
        stage1_cols.push_back(static_cast<std::size_t>(data.column_index(name)));
    std::sort(stage1_cols.begin(), stage1_cols.end());
    const Dataset stage1_data = data.select_columns(stage1_cols);

    const auto gini = rf_importance(stage1_data, cfg.forest, seed);
    std::vector<FeatureScore> ranked = gini;
    std::sort(ranked.begin(), ranked.end(),
              [](const FeatureScore& a, const FeatureScore& b) {
                  if (a.gini_importance != b.gini_importance)
                      return a.gini_importance > b.gini_importance;
                  return a.name < b.name;
              });
    const std::size_t k2 = std::min(cfg.stage2_top_k, ranked.size());

    std::vector<std::string> chosen;
    for (std::size_t i = 0; i < k2; ++i) chosen.push_back(ranked[i].name);
    for (const auto& a : admission_features) chosen.push_back(a);

    SelectionResult result;
    // final order follows the input dataset's column order
    for (std::size_t j = 0; j < data.n_cols(); ++j) {
        const auto& name = data.feature_meta[j].name;
        if (std::find(chosen.begin(), chosen.end(), name) != chosen.end())
            result.final_features.push_back(name);
    }

    // merged score table
    for (std::size_t j = 0; j < data.n_cols(); ++j) {
        const auto& name = data.feature_meta[j].name;
        FeatureScore row;
        row.name = name;
        for (const auto& s : f_scores)
            if (s.name == name) { row.f_statistic = s.f_statistic; row.p_value = s.p_value; }
        for (const auto& s : gini)
            if (s.name == name) row.gini_importance = s.gini_importance;
        row.selected = std::find(result.final_features.begin(),
                                 result.final_features.end(),
                                 name) != result.final_features.end();
        result.scores.push_back(std::move(row));
    }
    std::vector<std::size_t> order(result.scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const auto fa = result.scores[a].f_statistic, fb = result.scores[b].f_statistic;
        if (fa != fb) return fa > fb;
        return result.scores[a].name < result.scores[b].name;
    });
    for (std::size_t r = 0; r < order.size(); ++r)
        result.scores[order[r]].rank = static_cast<int>(r) + 1;
    return result;
}

}  // namespace vancorisk::feature_select
