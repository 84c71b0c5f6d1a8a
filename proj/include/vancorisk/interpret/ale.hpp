#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <vector>

#include "vancorisk/models/model.hpp"
#include "vancorisk/types.hpp"

// Accumulated local effects over quantile bins: per-bin mean prediction
// difference between the bin edges (other features held at observed values),
// accumulated across bins and centered to count-weighted mean zero.

namespace vancorisk::interpret {

struct AleCurve {
    std::string feature;
    std::vector<double> edges;          // n_bins + 1 strictly increasing edges
    std::vector<double> effects;        // centered accumulated value per edge
    std::vector<std::size_t> bin_counts;  // rows per bin
};

using ModelFn = std::function<double(std::span<const double>)>;

inline AleCurve ale_curve(const ModelFn& f, const Dataset& data,
                          std::size_t feature, int n_bins) {
    require(n_bins >= 2, "bad-config", "ALE needs at least 2 bins");
    require(data.n_rows() > 0, "empty-dataset", "ALE needs data");
    require(feature < data.n_cols(), "bad-feature", "feature index out of range");
    require(data.feature_meta[feature].kind == FeatureKind::continuous,
            "bad-feature", "ALE is defined for continuous features");

    std::vector<double> values;
    values.reserve(data.n_rows());
    for (std::size_t r = 0; r < data.n_rows(); ++r) values.push_back(data.at(r, feature));
    std::sort(values.begin(), values.end());
    require(values.front() != values.back(), "constant-feature",
            "feature '" + data.feature_meta[feature].name + "' is constant");

    // quantile edges, deduplicated to stay strictly increasing
    std::vector<double> edges{values.front()};
    for (int k = 1; k <= n_bins; ++k) {
        const std::size_t pos = std::min<std::size_t>(
            values.size() - 1,
            static_cast<std::size_t>(std::llround(
                static_cast<double>(k) * static_cast<double>(values.size() - 1) /
                static_cast<double>(n_bins))));
        const double e = values[pos];
        if (e > edges.back()) edges.push_back(e);
    }
    require(edges.size() >= 2, "constant-feature", "not enough distinct values");
    const std::size_t n_eff_bins = edges.size() - 1;

    std::vector<double> bin_sum(n_eff_bins, 0.0);
    std::vector<std::size_t> bin_count(n_eff_bins, 0);
    std::vector<double> row(data.n_cols());
    for (std::size_t r = 0; r < data.n_rows(); ++r) {
        const double x = data.at(r, feature);
        // bin k spans (edges[k], edges[k+1]]; lowest value maps to bin 0
        std::size_t k =
            std::upper_bound(edges.begin(), edges.end(), x) - edges.begin();
        k = k == 0 ? 0 : k - 1;
        k = std::min(k, n_eff_bins - 1);

        const auto src = data.row(r);
        std::copy(src.begin(), src.end(), row.begin());
        row[feature] = edges[k + 1];
        const double hi = f(row);
        row[feature] = edges[k];
        const double lo = f(row);
        bin_sum[k] += hi - lo;
        bin_count[k] += 1;
    }

    AleCurve curve;
    curve.feature = data.feature_meta[feature].name;
    curve.edges = edges;
    curve.bin_counts = bin_count;
    curve.effects.assign(edges.size(), 0.0);
    double acc = 0.0;
    for (std::size_t k = 0; k < n_eff_bins; ++k) {
        if (bin_count[k] > 0) acc += bin_sum[k] / static_cast<double>(bin_count[k]);
        curve.effects[k + 1] = acc;
    }

    // count-weighted centering over upper-edge values
    double weighted = 0.0;
    std::size_t total = 0;
    for (std::size_t k = 0; k < n_eff_bins; ++k) {
        weighted += static_cast<double>(bin_count[k]) * curve.effects[k + 1];
        total += bin_count[k];
    }
    const double center = weighted / static_cast<double>(total);
    for (auto& e : curve.effects) e -= center;
    return curve;
}

inline AleCurve ale_curve(const models::TrainedModel& model, const Dataset& data,
                          std::size_t feature, int n_bins) {
    return ale_curve(
        [&](std::span<const double> row) { return model.predict_raw(row); }, data,
        feature, n_bins);
}

}  // namespace vancorisk::interpret
