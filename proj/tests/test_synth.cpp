#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "helpers.hpp"
#include "vancorisk/cohort.hpp"
#include "vancorisk/io.hpp"
#include "vancorisk/synth.hpp"

using namespace vancorisk;

TEST_CASE("clipped-gaussian moment matching hits targets") {
    Rng rng(1);
    struct Case {
        double mean, sd, lo, hi;
    };
    // includes the heavy-tail AST-like case where naive clipping would be
    // hundreds of units off target
    const Case cases[] = {{3.40, 1.07, 0.0, kMissing},
                          {250.16, 758.82, 0.0, kMissing},
                          {1.99, 3.15, 0.0, kMissing},
                          {60.80, 14.53, 18.0, 80.0},
                          {-1.17, 1.26, kMissing, kMissing}};
    for (const auto& c : cases) {
        const auto p = synth::match_clipped_gaussian(c.mean, c.sd, c.lo, c.hi);
        const int n = 400000;
        double s = 0.0, s2 = 0.0;
        for (int i = 0; i < n; ++i) {
            const double x = synth::sample_clipped(rng, p);
            s += x;
            s2 += x * x;
            if (!is_missing(c.lo)) REQUIRE(x >= c.lo);
            if (!is_missing(c.hi)) REQUIRE(x <= c.hi);
        }
        const double mean = s / n;
        const double sd = std::sqrt(s2 / n - mean * mean);
        const double se = c.sd / std::sqrt(static_cast<double>(n));
        CHECK_THAT(mean, Catch::Matchers::WithinAbs(c.mean, 4.0 * se));
        CHECK_THAT(sd, Catch::Matchers::WithinRel(c.sd, 0.02));
    }
}

TEST_CASE("infeasible moment targets are rejected") {
    // CV too high even for a clipped gaussian at this bound arrangement
    CHECK_THROWS_AS(synth::match_clipped_gaussian(-1.0, 1.0, 0.0, kMissing), Error);
    CHECK_THROWS_AS(synth::match_clipped_gaussian(3.0, -1.0, 0.0, kMissing), Error);
}

TEST_CASE("generated cohort size, determinism and labels") {
    auto spec = synth::GeneratorSpec::defaults(500, 7);
    const auto cohort = synth::generate_cohort(spec);
    REQUIRE(cohort.size() == 500);

    SECTION("n = 0 gives empty list") {
        auto empty_spec = synth::GeneratorSpec::defaults(0, 7);
        CHECK(synth::generate_cohort(empty_spec).empty());
    }

    SECTION("same seed is byte-identical, different seed differs") {
        const auto again = synth::generate_cohort(spec);
        CHECK(io::events_csv(cohort) == io::events_csv(again));
        CHECK(io::admissions_csv(cohort) == io::admissions_csv(again));
        auto other_spec = synth::GeneratorSpec::defaults(500, 8);
        const auto other = synth::generate_cohort(other_spec);
        CHECK(io::events_csv(cohort) != io::events_csv(other));
    }

    SECTION("every patient passes the inclusion filters") {
        auto [kept, report] = cohort::apply_inclusion_filters(cohort);
        CHECK(kept.size() == cohort.size());
    }

    SECTION("invalid prevalence is rejected") {
        auto bad = synth::GeneratorSpec::defaults(10, 1);
        bad.prevalence = 1.5;
        CHECK_THROWS_AS(synth::generate_cohort(bad), Error);
    }
}

TEST_CASE("round-trip labeling recovers the latent group exactly") {
    auto spec = synth::GeneratorSpec::defaults(3000, 11);
    const auto timelines = synth::generate_cohort(spec);
    const auto labeled = cohort::build_labeled_cohort(timelines);
    REQUIRE(labeled.data.n_rows() == 3000);

    const std::size_t n_pos = labeled.data.count_label(1);
    const std::size_t expect =
        static_cast<std::size_t>(std::llround(3000 * spec.prevalence));
    CHECK(n_pos == expect);
}

TEST_CASE("positive count lands within 2 percent of the published rate at full scale") {
    auto spec = synth::GeneratorSpec::defaults(10288, 1);
    spec.prevalence = 0.282;
    const auto timelines = synth::generate_cohort(spec);
    std::size_t n_pos = 0;
    for (const auto& t : timelines)
        n_pos += cohort::label_kdigo(t).positive ? 1 : 0;
    CHECK(static_cast<double>(n_pos) >= 2903.0 * 0.98);
    CHECK(static_cast<double>(n_pos) <= 2903.0 * 1.02);
}

TEST_CASE("group means calibrate to the published targets within 3 SE") {
    auto spec = synth::GeneratorSpec::defaults(10288, 3);
    const auto labeled = cohort::build_labeled_cohort(synth::generate_cohort(spec));
    const auto rows = synth::summarize_groups(labeled.data);
    const std::size_t n_pos = labeled.data.count_label(1);
    const std::size_t n_neg = labeled.data.count_label(0);

    for (const auto& f : spec.features) {
        const auto it = std::find_if(rows.begin(), rows.end(),
                                     [&](const synth::GroupStatRow& r) {
                                         return r.feature == f.id;
                                     });
        REQUIRE(it != rows.end());
        if (f.kind == FeatureKind::binary) {
            // rates: binomial SE
            for (int g = 0; g < 2; ++g) {
                const double n = g ? n_pos : n_neg;
                const double se = std::sqrt(f.mean[g] * (1 - f.mean[g]) / n);
                const double got = g ? it->mean_pos : it->mean_neg;
                CHECK_THAT(got, Catch::Matchers::WithinAbs(f.mean[g], 3.0 * se));
            }
            continue;
        }
        for (int g = 0; g < 2; ++g) {
            const double n = g ? n_pos : n_neg;
            const double se = f.sd[g] / std::sqrt(n);
            const double got = g ? it->mean_pos : it->mean_neg;
            INFO(f.id << " group " << g);
            CHECK_THAT(got, Catch::Matchers::WithinAbs(f.mean[g], 3.0 * se));
        }
    }

    SECTION("phosphate example from the published table") {
        const auto it = std::find_if(rows.begin(), rows.end(),
                                     [](const synth::GroupStatRow& r) {
                                         return r.feature == "phosphate";
                                     });
        const double se_neg = 1.07 / std::sqrt(static_cast<double>(n_neg));
        const double se_pos = 1.31 / std::sqrt(static_cast<double>(n_pos));
        CHECK_THAT(it->mean_neg, Catch::Matchers::WithinAbs(3.40, 3 * se_neg));
        CHECK_THAT(it->mean_pos, Catch::Matchers::WithinAbs(4.13, 3 * se_pos));
    }
}

TEST_CASE("summarize_groups on a six-patient hand example") {
    Dataset d = testutil::make_dataset(
        {{1.0}, {2.0}, {3.0}, {10.0}, {12.0}, {14.0}},
        {0, 0, 0, 1, 1, 1});
    const auto rows = synth::summarize_groups(d);
    REQUIRE(rows.size() == 1);
    CHECK_THAT(rows[0].mean_neg, Catch::Matchers::WithinAbs(2.0, 1e-12));
    CHECK_THAT(rows[0].sd_neg, Catch::Matchers::WithinAbs(1.0, 1e-12));
    CHECK_THAT(rows[0].mean_pos, Catch::Matchers::WithinAbs(12.0, 1e-12));
    CHECK_THAT(rows[0].sd_pos, Catch::Matchers::WithinAbs(2.0, 1e-12));

    Dataset single = testutil::make_dataset({{1.0}, {2.0}}, {0, 0});
    CHECK_THROWS_AS(synth::summarize_groups(single), Error);
}

TEST_CASE("null feature: identical group distributions give p > 0.001 in nearly all seeds") {
    int ok = 0;
    const int n_seeds = 100;
    for (int s = 0; s < n_seeds; ++s) {
        Rng rng(1000 + s);
        Dataset d;
        d.feature_meta.push_back({"x", FeatureKind::continuous, ""});
        for (int i = 0; i < 400; ++i) {
            const double v = rng.normal();
            d.push_row(std::vector<double>{v}, rng.bernoulli(0.3) ? 1 : 0);
        }
        const auto rows = synth::summarize_groups(d);
        if (rows[0].p > 0.001) ++ok;
    }
    CHECK(ok >= 99);
}
