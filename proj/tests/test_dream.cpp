#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "helpers.hpp"
#include "vancorisk/dream.hpp"

using namespace vancorisk;

namespace {

std::vector<std::vector<double>> gaussian_inits(int n_chains, std::size_t dim,
                                                std::uint64_t seed) {
    std::vector<std::vector<double>> states(n_chains);
    for (int c = 0; c < n_chains; ++c) {
        Rng rng(seed, 9000 + c);
        states[c].resize(dim);
        for (auto& v : states[c]) v = rng.normal();
    }
    return states;
}

}  // namespace

TEST_CASE("1-D gaussian mean and variance recovered within 2 percent") {
    const auto ld = [](std::span<const double> x) { return -0.5 * x[0] * x[0]; };
    dream::SamplerConfig cfg;
    cfg.n_chains = 38;
    cfg.n_iterations = 2000;
    cfg.seed = 5;
    const auto result = dream::dream_sample(ld, gaussian_inits(38, 1, 5), cfg);

    double s = 0.0, s2 = 0.0;
    std::size_t n = 0;
    for (int c = 0; c < result.n_chains; ++c)
        for (int t = 0; t < result.retained_per_chain; ++t) {
            const double v = result.sample(c, t)[0];
            s += v;
            s2 += v * v;
            ++n;
        }
    const double mean = s / n;
    const double var = s2 / n - mean * mean;
    CHECK(std::fabs(mean) < 0.02);
    CHECK(std::fabs(var - 1.0) < 0.02);
    CHECK(result.rhat[0] < 1.05);
    CHECK(result.acceptance_rate > 0.2);
}

TEST_CASE("narrow target collapses the chains") {
    const double sd = 1e-3;
    const auto ld = [&](std::span<const double> x) {
        return -0.5 * (x[0] * x[0]) / (sd * sd);
    };
    dream::SamplerConfig cfg;
    cfg.n_chains = 10;
    cfg.n_iterations = 1500;
    cfg.seed = 8;
    // start dispersed: the mode must pull everything in
    auto inits = gaussian_inits(10, 1, 2);
    const auto result = dream::dream_sample(ld, inits, cfg);
    double s2 = 0.0;
    std::size_t n = 0;
    for (int c = 0; c < result.n_chains; ++c)
        for (int t = result.retained_per_chain / 2; t < result.retained_per_chain; ++t) {
            const double v = result.sample(c, t)[0];
            s2 += v * v;
            ++n;
        }
    CHECK(s2 / n < 0.5);  // far below the unit prior variance of the inits
}

TEST_CASE("two seeds agree within monte-carlo error on the mean") {
    const auto ld = [](std::span<const double> x) {
        double s = 0.0;
        for (double v : x) s += v * v;
        return -0.5 * s;
    };
    dream::SamplerConfig cfg;
    cfg.n_chains = 20;
    cfg.n_iterations = 1200;

    auto run = [&](std::uint64_t seed) {
        cfg.seed = seed;
        const auto r = dream::dream_sample(ld, gaussian_inits(20, 3, seed), cfg);
        std::vector<double> mean(3, 0.0);
        std::size_t n = 0;
        for (int c = 0; c < r.n_chains; ++c)
            for (int t = 0; t < r.retained_per_chain; ++t) {
                const auto x = r.sample(c, t);
                for (int j = 0; j < 3; ++j) mean[j] += x[j];
                ++n;
            }
        for (auto& m : mean) m /= static_cast<double>(n);
        std::vector<double> ess = r.ess;
        return std::pair{mean, ess};
    };
    const auto [m1, ess1] = run(31);
    const auto [m2, ess2] = run(32);
    for (int j = 0; j < 3; ++j) {
        const double se = std::sqrt(1.0 / ess1[j] + 1.0 / ess2[j]);
        CHECK(std::fabs(m1[j] - m2[j]) < 3.0 * se);
    }
}

TEST_CASE("chain exchangeability: permuting chains leaves pooled summaries unchanged") {
    const auto ld = [](std::span<const double> x) { return -0.5 * x[0] * x[0]; };
    dream::SamplerConfig cfg;
    cfg.n_chains = 8;
    cfg.n_iterations = 400;
    cfg.seed = 3;
    const auto r = dream::dream_sample(ld, gaussian_inits(8, 1, 3), cfg);

    std::vector<double> pooled;
    for (int c = 0; c < r.n_chains; ++c)
        for (int t = 0; t < r.retained_per_chain; ++t)
            pooled.push_back(r.sample(c, t)[0]);
    auto shuffled_chains = pooled;
    // permute chain blocks (reverse order) and re-pool
    std::vector<double> permuted;
    for (int c = r.n_chains - 1; c >= 0; --c)
        for (int t = 0; t < r.retained_per_chain; ++t)
            permuted.push_back(r.sample(c, t)[0]);
    CHECK_THAT(stats::mean(pooled), Catch::Matchers::WithinAbs(stats::mean(permuted), 1e-15));
    CHECK_THAT(stats::percentile(pooled, 0.975),
               Catch::Matchers::WithinAbs(stats::percentile(permuted, 0.975), 1e-15));
}

TEST_CASE("sampler config validation and warnings") {
    const auto ld = [](std::span<const double> x) { return -0.5 * x[0] * x[0]; };
    dream::SamplerConfig cfg;
    cfg.n_chains = 2;
    CHECK_THROWS_AS(dream::dream_sample(ld, gaussian_inits(2, 1, 1), cfg), Error);

    cfg.n_chains = 4;
    cfg.n_iterations = 100;
    cfg.seed = 1;
    // dim 6 > n_chains/2: expect the under-provisioned warning
    const auto r = dream::dream_sample(
        [](std::span<const double> x) {
            double s = 0;
            for (double v : x) s += v * v;
            return -0.5 * s;
        },
        gaussian_inits(4, 6, 1), cfg);
    REQUIRE(!r.warnings.empty());
    CHECK(r.warnings[0].find("2 x dimension") != std::string::npos);

    const auto bad_init = [](std::span<const double>) {
        return -std::numeric_limits<double>::infinity();
    };
    CHECK_THROWS_AS(dream::dream_sample(bad_init, gaussian_inits(4, 1, 1), cfg), Error);
}

TEST_CASE("posterior risk: constant model is a point mass") {
    models::TrainedModel constant;
    constant.family = models::Family::logreg;
    constant.n_features = 2;
    models::LogRegModel lr;
    lr.weights = {0.0, 0.0};
    lr.bias = 0.0;  // sigmoid(0) = 0.5 everywhere
    constant.impl = lr;

    dream::GaussianPrior prior;
    prior.feature_names = {"a", "b"};
    prior.mean = {1.0, 2.0};
    prior.sd = {0.5, 0.5};
    prior.lower = {kMissing, kMissing};
    prior.upper = {kMissing, kMissing};

    dream::SamplerConfig cfg;
    cfg.n_chains = 6;
    cfg.n_iterations = 300;
    cfg.seed = 4;
    const auto summary = dream::posterior_risk(constant, nullptr, prior, cfg);
    CHECK(summary.mean_risk == 0.5);
    CHECK(summary.cri_low == 0.5);
    CHECK(summary.cri_high == 0.5);
}

TEST_CASE("posterior risks stay in [0,1] and CrI brackets the mean") {
    Rng rng(7);
    const auto data = testutil::gaussian_blobs(400, 2, 1.0, 6);
    models::ModelSpec spec;
    spec.family = models::Family::logreg;
    const auto model = models::train_model(data, spec);

    dream::GaussianPrior prior;
    prior.feature_names = {"f0", "f1"};
    prior.mean = {1.0, 1.0};
    prior.sd = {1.0, 1.0};
    prior.lower = {kMissing, kMissing};
    prior.upper = {kMissing, kMissing};

    dream::SamplerConfig cfg;
    cfg.n_chains = 8;
    cfg.n_iterations = 500;
    cfg.seed = 12;
    const auto s = dream::posterior_risk(model, nullptr, prior, cfg);
    CHECK(s.cri_low <= s.mean_risk);
    CHECK(s.mean_risk <= s.cri_high);
    CHECK(s.cri_low >= 0.0);
    CHECK(s.cri_high <= 1.0);
    std::size_t total = 0;
    for (auto c : s.hist_counts) total += c;
    CHECK(total == s.n_retained);
}

TEST_CASE("prior truncation respects bounds") {
    // tight truncation box: every retained draw must stay inside
    const auto ld_dim = 2;
    dream::GaussianPrior prior;
    prior.feature_names = {"a", "b"};
    prior.mean = {0.5, 0.5};
    prior.sd = {1.0, 1.0};
    prior.lower = {0.0, 0.0};
    prior.upper = {1.0, kMissing};

    const auto ld = [&](std::span<const double> x) { return prior.log_density(x); };
    dream::SamplerConfig cfg;
    cfg.n_chains = 8;
    cfg.n_iterations = 400;
    cfg.seed = 9;
    const auto r = dream::dream_sample(ld, prior.initial_states(8, 9), cfg);
    for (int c = 0; c < r.n_chains; ++c)
        for (int t = 0; t < r.retained_per_chain; ++t) {
            const auto x = r.sample(c, t);
            CHECK(x[0] >= 0.0);
            CHECK(x[0] <= 1.0);
            CHECK(x[1] >= 0.0);
        }
    (void)ld_dim;
}

TEST_CASE("widening the prior cannot shrink the credible interval") {
    Rng rng(3);
    const auto data = testutil::gaussian_blobs(500, 2, 0.8, 19);
    models::ModelSpec spec;
    spec.family = models::Family::logreg;
    const auto model = models::train_model(data, spec);

    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        dream::GaussianPrior narrow;
        narrow.feature_names = {"f0", "f1"};
        narrow.mean = {0.5, 0.5};
        narrow.sd = {0.4, 0.4};
        narrow.lower = {kMissing, kMissing};
        narrow.upper = {kMissing, kMissing};
        auto wide = narrow;
        wide.sd = {0.8, 0.8};

        dream::SamplerConfig cfg;
        cfg.n_chains = 10;
        cfg.n_iterations = 800;
        cfg.seed = seed;
        const auto s_narrow = dream::posterior_risk(model, nullptr, narrow, cfg);
        const auto s_wide = dream::posterior_risk(model, nullptr, wide, cfg);
        CHECK(s_wide.cri_high - s_wide.cri_low >=
              s_narrow.cri_high - s_narrow.cri_low - 0.02);
    }
}
