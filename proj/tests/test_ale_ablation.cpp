#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "helpers.hpp"
#include "vancorisk/interpret/ablation.hpp"
#include "vancorisk/interpret/ale.hpp"

using namespace vancorisk;

namespace {

Dataset uniform_data(std::size_t n, std::size_t d, std::uint64_t seed) {
    Rng rng(seed);
    Dataset out;
    for (std::size_t j = 0; j < d; ++j)
        out.feature_meta.push_back({"f" + std::to_string(j), FeatureKind::continuous, ""});
    std::vector<double> row(d);
    for (std::size_t i = 0; i < n; ++i) {
        for (auto& v : row) v = rng.uniform();
        out.push_row(row, rng.bernoulli(0.5));
    }
    return out;
}

double weighted_mean_effect(const interpret::AleCurve& c) {
    double acc = 0.0;
    std::size_t n = 0;
    for (std::size_t k = 0; k < c.bin_counts.size(); ++k) {
        acc += static_cast<double>(c.bin_counts[k]) * c.effects[k + 1];
        n += c.bin_counts[k];
    }
    return acc / static_cast<double>(n);
}

}  // namespace

TEST_CASE("ale of an additive linear model is linear with the right slope") {
    const auto data = uniform_data(4000, 3, 5);
    const std::vector<double> w{2.0, -1.5, 0.7};
    const auto f = [&](std::span<const double> row) {
        double s = 0.0;
        for (std::size_t j = 0; j < 3; ++j) s += w[j] * row[j];
        return s;
    };
    for (std::size_t target = 0; target < 3; ++target) {
        const auto curve = interpret::ale_curve(f, data, target, 16);
        // the un-centered accumulated value at edge k is w*(z_k - z_0), so the
        // centered curve must lie within 1e-6 of the straight line through
        // the first point with slope w
        for (std::size_t k = 0; k < curve.edges.size(); ++k) {
            const double expect = curve.effects[0] +
                                  w[target] * (curve.edges[k] - curve.edges[0]);
            CHECK_THAT(curve.effects[k], Catch::Matchers::WithinAbs(expect, 1e-6));
        }
        const double slope = (curve.effects.back() - curve.effects.front()) /
                             (curve.edges.back() - curve.edges.front());
        CHECK_THAT(slope, Catch::Matchers::WithinAbs(w[target], 1e-6));
    }
}

TEST_CASE("ale of an ignored feature is identically zero") {
    const auto data = uniform_data(1000, 2, 7);
    const auto f = [](std::span<const double> row) { return 3.0 * row[0]; };
    const auto curve = interpret::ale_curve(f, data, 1, 8);
    for (double e : curve.effects) CHECK_THAT(e, Catch::Matchers::WithinAbs(0.0, 1e-12));
}

TEST_CASE("ale centering: count-weighted mean effect vanishes") {
    const auto data = uniform_data(3000, 2, 9);
    const auto f = [](std::span<const double> row) {
        return std::sin(6.0 * row[0]) + row[0] * row[0];
    };
    const auto curve = interpret::ale_curve(f, data, 0, 32);
    CHECK(std::fabs(weighted_mean_effect(curve)) < 1e-9);
}

TEST_CASE("ale recovers each additive component up to a constant") {
    const auto data = uniform_data(10000, 2, 11);
    auto g = [](double x) { return x * x; };
    auto h = [](double x) { return std::sin(5.0 * x); };
    const auto f = [&](std::span<const double> row) {
        return g(row[0]) + h(row[1]);
    };

    const auto c0 = interpret::ale_curve(f, data, 0, 32);
    double worst = 0.0;
    // compare shapes: both centered over the data distribution
    double gmean = 0.0;
    for (std::size_t r = 0; r < data.n_rows(); ++r) gmean += g(data.at(r, 0));
    gmean /= static_cast<double>(data.n_rows());
    for (std::size_t k = 0; k < c0.edges.size(); ++k)
        worst = std::max(worst,
                         std::fabs(c0.effects[k] - (g(c0.edges[k]) - gmean)));
    CHECK(worst < 0.02);

    const auto c1 = interpret::ale_curve(f, data, 1, 32);
    double hmean = 0.0;
    for (std::size_t r = 0; r < data.n_rows(); ++r) hmean += h(data.at(r, 1));
    hmean /= static_cast<double>(data.n_rows());
    worst = 0.0;
    for (std::size_t k = 0; k < c1.edges.size(); ++k)
        worst = std::max(worst,
                         std::fabs(c1.effects[k] - (h(c1.edges[k]) - hmean)));
    CHECK(worst < 0.02);
}

TEST_CASE("ale rejects constant features and bad configs") {
    Dataset d;
    d.feature_meta = {{"x", FeatureKind::continuous, ""}};
    for (int i = 0; i < 10; ++i) d.push_row(std::vector<double>{2.0}, i % 2);
    const auto f = [](std::span<const double>) { return 0.0; };
    CHECK_THROWS_AS(interpret::ale_curve(f, d, 0, 8), Error);

    const auto ok = uniform_data(50, 1, 3);
    CHECK_THROWS_AS(interpret::ale_curve(f, ok, 0, 1), Error);
}

// ---------------------------------------------------------------------------
// Ablation
// ---------------------------------------------------------------------------

TEST_CASE("duplicated feature has near-zero ablation effect") {
    Rng rng(13);
    Dataset train, test;
    for (const char* name : {"signal", "copy", "noise"})
        train.feature_meta.push_back({name, FeatureKind::continuous, ""});
    test.feature_meta = train.feature_meta;
    for (int i = 0; i < 3000; ++i) {
        const int y = rng.bernoulli(0.4) ? 1 : 0;
        const double s = rng.normal() + (y ? 1.2 : 0.0);
        std::vector<double> row{s, s, rng.normal()};
        (i % 3 == 0 ? test : train).push_row(row, static_cast<std::uint8_t>(y));
    }
    const auto result = interpret::ablation(train, test, 0, 1);
    CHECK(std::fabs(result.rows[0].delta_auc) < 0.01);  // copy substitutes
    CHECK(std::fabs(result.rows[1].delta_auc) < 0.01);
}

TEST_CASE("pure-noise feature has ablation effect below 0.01 at n=5000") {
    Rng rng(17);
    Dataset train, test;
    for (const char* name : {"signal", "noise"})
        train.feature_meta.push_back({name, FeatureKind::continuous, ""});
    test.feature_meta = train.feature_meta;
    for (int i = 0; i < 5000; ++i) {
        const int y = rng.bernoulli(0.35) ? 1 : 0;
        std::vector<double> row{rng.normal() + (y ? 1.0 : 0.0), rng.normal()};
        (i % 3 == 0 ? test : train).push_row(row, static_cast<std::uint8_t>(y));
    }
    const auto result = interpret::ablation(train, test, 0, 1);
    CHECK(std::fabs(result.rows[1].delta_auc) < 0.01);
    CHECK(result.rows[0].delta_auc > 0.05);  // removing signal hurts
}

TEST_CASE("ablation bootstrap spread is reported per feature") {
    Rng rng(21);
    Dataset train, test;
    for (const char* name : {"a", "b"})
        train.feature_meta.push_back({name, FeatureKind::continuous, ""});
    test.feature_meta = train.feature_meta;
    for (int i = 0; i < 600; ++i) {
        const int y = rng.bernoulli(0.4) ? 1 : 0;
        std::vector<double> row{rng.normal() + 0.8 * y, rng.normal() + 0.3 * y};
        (i % 3 == 0 ? test : train).push_row(row, static_cast<std::uint8_t>(y));
    }
    const auto result = interpret::ablation(train, test, 8, 5);
    for (const auto& row : result.rows) {
        CHECK(row.boot_sd >= 0.0);
        CHECK(std::isfinite(row.boot_mean));
    }

    SECTION("deterministic per seed") {
        const auto again = interpret::ablation(train, test, 8, 5);
        for (std::size_t j = 0; j < result.rows.size(); ++j) {
            CHECK(result.rows[j].delta_auc == again.rows[j].delta_auc);
            CHECK(result.rows[j].boot_mean == again.rows[j].boot_mean);
        }
    }
}

TEST_CASE("ablation requires at least two features") {
    Dataset d = testutil::make_dataset({{1}, {2}, {3}, {4}}, {0, 1, 0, 1});
    CHECK_THROWS_AS(interpret::ablation(d, d, 0, 1), Error);
}
