#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <vector>

#include "vancorisk/models/model.hpp"
#include "vancorisk/types.hpp"

// Exact Shapley values for tree ensembles in raw (log-odds) space via the
// polynomial-time path-weighting recursion with cover-weighted conditional
// expectations. Additive across trees; satisfies local accuracy exactly.

namespace vancorisk::interpret {

struct ShapExplanation {
    double base_value = 0.0;
    std::vector<double> phi;
    double prediction = 0.0;  // raw-score space
};

namespace shap_detail {

struct PathElement {
    int feature_index = -1;
    double zero_fraction = 0.0;
    double one_fraction = 0.0;
    double pweight = 0.0;
};

inline void extend_path(PathElement* path, unsigned depth, double zero_fraction,
                        double one_fraction, int feature_index) {
    path[depth].feature_index = feature_index;
    path[depth].zero_fraction = zero_fraction;
    path[depth].one_fraction = one_fraction;
    path[depth].pweight = depth == 0 ? 1.0 : 0.0;
    for (int i = static_cast<int>(depth) - 1; i >= 0; --i) {
        path[i + 1].pweight +=
            one_fraction * path[i].pweight * (i + 1.0) / (depth + 1.0);
        path[i].pweight =
            zero_fraction * path[i].pweight * (depth - i) / (depth + 1.0);
    }
}

inline void unwind_path(PathElement* path, unsigned depth, unsigned index) {
    const double one_fraction = path[index].one_fraction;
    const double zero_fraction = path[index].zero_fraction;
    double next_one = path[depth].pweight;
    for (int i = static_cast<int>(depth) - 1; i >= 0; --i) {
        if (one_fraction != 0.0) {
            const double tmp = path[i].pweight;
            path[i].pweight = next_one * (depth + 1.0) / ((i + 1.0) * one_fraction);
            next_one = tmp - path[i].pweight * zero_fraction * (depth - i) / (depth + 1.0);
        } else {
            path[i].pweight =
                path[i].pweight * (depth + 1.0) / (zero_fraction * (depth - i));
        }
    }
    for (unsigned i = index; i < depth; ++i) {
        path[i].feature_index = path[i + 1].feature_index;
        path[i].zero_fraction = path[i + 1].zero_fraction;
        path[i].one_fraction = path[i + 1].one_fraction;
    }
}

inline double unwound_path_sum(const PathElement* path, unsigned depth, unsigned index) {
    const double one_fraction = path[index].one_fraction;
    const double zero_fraction = path[index].zero_fraction;
    double next_one = path[depth].pweight;
    double total = 0.0;
    for (int i = static_cast<int>(depth) - 1; i >= 0; --i) {
        if (one_fraction != 0.0) {
            const double tmp = next_one * (depth + 1.0) / ((i + 1.0) * one_fraction);
            total += tmp;
            next_one = path[i].pweight - tmp * zero_fraction * (depth - i) / (depth + 1.0);
        } else {
            total += path[i].pweight / zero_fraction * (depth + 1.0) / (depth - i);
        }
    }
    return total;
}

inline void tree_shap_recurse(const models::Tree& tree, std::span<const double> row,
                              std::vector<double>& phi, int node_index,
                              unsigned depth, PathElement* parent_path,
                              double parent_zero_fraction,
                              double parent_one_fraction, int parent_feature) {
    PathElement* path = parent_path + depth + 1;
    std::copy(parent_path, parent_path + depth + 1, path);
    extend_path(path, depth, parent_zero_fraction, parent_one_fraction, parent_feature);

    const auto& node = tree.nodes[node_index];
    if (node.is_leaf()) {
        for (unsigned i = 1; i <= depth; ++i) {
            const double w = unwound_path_sum(path, depth, i);
            const auto& el = path[i];
            phi[el.feature_index] +=
                w * (el.one_fraction - el.zero_fraction) * node.value;
        }
        return;
    }

    const bool go_left = row[node.feature] <= node.threshold;
    const int hot = go_left ? node.left : node.right;
    const int cold = go_left ? node.right : node.left;

    double incoming_zero = 1.0, incoming_one = 1.0;
    unsigned path_index = 0;
    for (; path_index <= depth; ++path_index)
        if (path[path_index].feature_index == node.feature) break;
    if (path_index != depth + 1) {
        incoming_zero = path[path_index].zero_fraction;
        incoming_one = path[path_index].one_fraction;
        unwind_path(path, depth, path_index);
        depth -= 1;
    }

    const double hot_fraction = tree.nodes[hot].cover / node.cover;
    const double cold_fraction = tree.nodes[cold].cover / node.cover;
    tree_shap_recurse(tree, row, phi, hot, depth + 1, path,
                      incoming_zero * hot_fraction, incoming_one, node.feature);
    tree_shap_recurse(tree, row, phi, cold, depth + 1, path,
                      incoming_zero * cold_fraction, 0.0, node.feature);
}

inline unsigned tree_depth(const models::Tree& tree, int node = 0) {
    const auto& n = tree.nodes[node];
    if (n.is_leaf()) return 0;
    return 1 + std::max(tree_depth(tree, n.left), tree_depth(tree, n.right));
}

// cover-weighted expectation of the tree output with no features known
inline double tree_expected_value(const models::Tree& tree, int node = 0) {
    const auto& n = tree.nodes[node];
    if (n.is_leaf()) return n.value;
    return (tree.nodes[n.left].cover * tree_expected_value(tree, n.left) +
            tree.nodes[n.right].cover * tree_expected_value(tree, n.right)) /
           n.cover;
}

}  // namespace shap_detail

inline ShapExplanation shap_tree(const models::TrainedModel& model,
                                 std::span<const double> row) {
    const auto* gbdt = std::get_if<models::GbdtModel>(&model.impl);
    require(gbdt != nullptr, "unsupported-family",
            "tree SHAP requires a gbdt model");
    require(row.size() == model.n_features, "width-mismatch",
            "row width does not match model input width");

    ShapExplanation out;
    out.phi.assign(row.size(), 0.0);
    out.base_value = gbdt->base_score;
    out.prediction = gbdt->predict_raw(row);

    for (const auto& tree : gbdt->trees) {
        out.base_value += shap_detail::tree_expected_value(tree);
        const unsigned max_depth = shap_detail::tree_depth(tree) + 2;
        std::vector<shap_detail::PathElement> buffer(
            static_cast<std::size_t>(max_depth + 1) * (max_depth + 2) / 2 + max_depth + 2);
        shap_detail::tree_shap_recurse(tree, row, out.phi, 0, 0, buffer.data(),
                                       1.0, 1.0, -1);
    }
    return out;
}

struct ShapSummary {
    std::vector<std::string> feature_names;
    std::vector<double> mean_abs_phi;         // per feature
    std::vector<std::size_t> ranking;          // feature indices, best first
    std::vector<std::vector<double>> phi_matrix;  // row-per-explained-sample
    std::vector<std::vector<double>> value_matrix;  // feature values for coloring
};

inline ShapSummary shap_summary(const models::TrainedModel& model,
                                const Dataset& data, std::size_t max_rows) {
    const std::size_t n = std::min(max_rows, data.n_rows());
    require(n > 0, "empty-dataset", "no rows to explain");

    ShapSummary summary;
    for (const auto& m : data.feature_meta) summary.feature_names.push_back(m.name);
    summary.phi_matrix.resize(n);
    summary.value_matrix.resize(n);
    parallel_for(n, [&](std::size_t i) {
        const auto row = data.row(i);
        summary.phi_matrix[i] = shap_tree(model, row).phi;
        summary.value_matrix[i].assign(row.begin(), row.end());
    });

    summary.mean_abs_phi.assign(data.n_cols(), 0.0);
    for (const auto& phi : summary.phi_matrix)
        for (std::size_t j = 0; j < phi.size(); ++j)
            summary.mean_abs_phi[j] += std::fabs(phi[j]);
    for (auto& v : summary.mean_abs_phi) v /= static_cast<double>(n);

    summary.ranking.resize(data.n_cols());
    std::iota(summary.ranking.begin(), summary.ranking.end(), 0);
    std::sort(summary.ranking.begin(), summary.ranking.end(),
              [&](std::size_t a, std::size_t b) {
                  if (summary.mean_abs_phi[a] != summary.mean_abs_phi[b])
                      return summary.mean_abs_phi[a] > summary.mean_abs_phi[b];
                  return summary.feature_names[a] < summary.feature_names[b];
              });
    return summary;
}

}  // namespace vancorisk::interpret
