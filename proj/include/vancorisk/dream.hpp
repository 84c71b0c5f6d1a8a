#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "vancorisk/models/model.hpp"
#include "vancorisk/preprocess.hpp"
#include "vancorisk/stats.hpp"
#include "vancorisk/types.hpp"

// DREAM-style multi-chain MCMC: differential-evolution proposals built from
// the difference of two other chains over a crossover-selected subspace,
// gamma = 2.38/sqrt(2 d') with periodic gamma = 1 jumps, Metropolis
// accept/reject. Chains advance in synchronized generations (proposals read
// the previous generation's states), so per-generation chain updates are
// order-free and deterministic per seed.

namespace vancorisk::dream {

struct SamplerConfig {
    int n_chains = 38;
    int n_iterations = 2000;
    double burn_in_fraction = 0.5;
    double crossover_probability = 0.9;
    double jump_scale = 1.0;          // multiplies 2.38/sqrt(2 d')
    int gamma_one_every = 5;          // every k-th generation proposes gamma = 1
    double noise_sd = 1e-6;           // small additive proposal noise
    std::uint64_t seed = 1;
};

using LogDensity = std::function<double(std::span<const double>)>;

struct DreamResult {
    std::size_t dim = 0;
    int n_chains = 0;
    int retained_per_chain = 0;
    // retained samples, chain-major: sample s of chain c lives at
    // samples[(c * retained_per_chain + s) * dim ...]
    std::vector<double> samples;
    double acceptance_rate = 0.0;  // post burn-in
    std::vector<double> rhat;      // per dimension
    std::vector<double> ess;       // per dimension
    std::vector<std::string> warnings;

    std::span<const double> sample(int chain, int s) const {
        return {samples.data() + (static_cast<std::size_t>(chain) * retained_per_chain +
                                  static_cast<std::size_t>(s)) *
                                     dim,
                dim};
    }
};

namespace detail {

// Gelman-Rubin across chains for one scalar series per chain.
inline double rhat_scalar(const std::vector<std::vector<double>>& chains) {
    const std::size_t m = chains.size();
    const std::size_t n = chains.front().size();
    if (n < 2 || m < 2) return 1.0;
    std::vector<double> chain_means(m);
    double grand = 0.0;
    for (std::size_t c = 0; c < m; ++c) {
        chain_means[c] = stats::mean(chains[c]);
        grand += chain_means[c];
    }
    grand /= static_cast<double>(m);
    double b = 0.0, w = 0.0;
    for (std::size_t c = 0; c < m; ++c) {
        b += (chain_means[c] - grand) * (chain_means[c] - grand);
        w += stats::variance(chains[c]);
    }
    b *= static_cast<double>(n) / static_cast<double>(m - 1);
    w /= static_cast<double>(m);
    if (w <= 0.0) return 1.0;
    const double var_plus =
        (static_cast<double>(n - 1) / n) * w + b / static_cast<double>(n);
    return std::sqrt(var_plus / w);
}

// effective sample size from chain-averaged autocorrelations (initial
// positive sequence cutoff)
inline double ess_scalar(const std::vector<std::vector<double>>& chains) {
    const std::size_t m = chains.size();
    const std::size_t n = chains.front().size();
    if (n < 4) return static_cast<double>(m * n);
    double tau = 1.0;
    for (std::size_t lag = 1; lag < n / 2; ++lag) {
        double rho = 0.0;
        int used = 0;
        for (const auto& ch : chains) {
            const double mu = stats::mean(ch);
            double num = 0.0, den = 0.0;
            for (std::size_t t = 0; t < n; ++t) den += (ch[t] - mu) * (ch[t] - mu);
            for (std::size_t t = 0; t + lag < n; ++t)
                num += (ch[t] - mu) * (ch[t + lag] - mu);
            if (den > 0.0) {
                rho += num / den;
                ++used;
            }
        }
        if (used == 0) break;
        rho /= static_cast<double>(used);
        if (rho < 0.05) break;
        tau += 2.0 * rho;
    }
    return static_cast<double>(m * n) / tau;
}

}  // namespace detail

inline DreamResult dream_sample(const LogDensity& log_density,
                                const std::vector<std::vector<double>>& initial_states,
                                const SamplerConfig& cfg) {
    require(cfg.n_chains >= 3, "bad-config",
            "differential evolution needs at least 3 chains");
    require(static_cast<int>(initial_states.size()) == cfg.n_chains, "bad-config",
            "need one initial state per chain");
    require(cfg.n_iterations > 0, "bad-config", "n_iterations must be positive");
    require(cfg.burn_in_fraction >= 0.0 && cfg.burn_in_fraction < 1.0, "bad-config",
            "burn_in_fraction must lie in [0,1)");
    require(cfg.crossover_probability > 0.0 && cfg.crossover_probability <= 1.0,
            "bad-config", "crossover probability must lie in (0,1]");

    const std::size_t dim = initial_states.front().size();
    const int n_chains = cfg.n_chains;

    DreamResult result;
    result.dim = dim;
    result.n_chains = n_chains;
    if (n_chains < static_cast<int>(2 * dim))
        result.warnings.push_back(
            "n_chains < 2 x dimension; posterior exploration may be slow");

    std::vector<std::vector<double>> state = initial_states;
    std::vector<double> logp(n_chains);
    for (int c = 0; c < n_chains; ++c) {
        require(state[c].size() == dim, "bad-config",
                "initial states must share one dimension");
        logp[c] = log_density(state[c]);
        require(std::isfinite(logp[c]), "bad-init",
                "log density must be finite at every initial state");
    }

    const int burn = static_cast<int>(cfg.burn_in_fraction * cfg.n_iterations);
    result.retained_per_chain = cfg.n_iterations - burn;
    result.samples.assign(
        static_cast<std::size_t>(n_chains) * result.retained_per_chain * dim, 0.0);

    std::vector<std::vector<double>> prev = state;
    std::vector<std::size_t> accepted(n_chains, 0), proposed(n_chains, 0);
    std::vector<bool> mask(dim);

    for (int gen = 0; gen < cfg.n_iterations; ++gen) {
        prev = state;  // proposals read generation g-1
        const bool unit_gamma =
            cfg.gamma_one_every > 0 && (gen + 1) % cfg.gamma_one_every == 0;

        for (int c = 0; c < n_chains; ++c) {
            Rng rng(cfg.seed,
                    0xD2EA000ULL + static_cast<std::uint64_t>(gen) * n_chains + c);

            int a, b;
            do { a = static_cast<int>(rng.uniform_int(n_chains)); } while (a == c);
            do {
                b = static_cast<int>(rng.uniform_int(n_chains));
            } while (b == c || b == a);

            std::size_t d_prime = 0;
            for (std::size_t j = 0; j < dim; ++j) {
                mask[j] = rng.uniform() < cfg.crossover_probability;
                d_prime += mask[j];
            }
            if (d_prime == 0) {
                const std::size_t j = static_cast<std::size_t>(rng.uniform_int(dim));
                mask[j] = true;
                d_prime = 1;
            }

            const double gamma =
                unit_gamma ? 1.0
                           : cfg.jump_scale * 2.38 /
                                 std::sqrt(2.0 * static_cast<double>(d_prime));

            std::vector<double> cand = state[c];
            for (std::size_t j = 0; j < dim; ++j)
                if (mask[j])
                    cand[j] += gamma * (prev[a][j] - prev[b][j]) +
                               cfg.noise_sd * rng.normal();

            const double lp = log_density(cand);
            const bool accept =
                std::isfinite(lp) && std::log(rng.uniform() + 1e-300) < lp - logp[c];
            if (gen >= burn) ++proposed[c];
            if (accept) {
                state[c] = std::move(cand);
                logp[c] = lp;
                if (gen >= burn) ++accepted[c];
            }

            if (gen >= burn) {
                const int s = gen - burn;
                double* dst = result.samples.data() +
                              (static_cast<std::size_t>(c) * result.retained_per_chain +
                               static_cast<std::size_t>(s)) *
                                  dim;
                std::copy(state[c].begin(), state[c].end(), dst);
            }
        }
    }

    std::size_t acc = 0, prop = 0;
    for (int c = 0; c < n_chains; ++c) {
        acc += accepted[c];
        prop += proposed[c];
    }
    result.acceptance_rate = prop > 0 ? static_cast<double>(acc) / prop : 0.0;
    if (result.acceptance_rate < 0.01)
        result.warnings.push_back("post burn-in acceptance rate below 1%; "
                                  "chains may be stagnant");

    // per-dimension diagnostics
    result.rhat.resize(dim);
    result.ess.resize(dim);
    std::vector<std::vector<double>> series(n_chains,
                                            std::vector<double>(result.retained_per_chain));
    for (std::size_t j = 0; j < dim; ++j) {
        for (int c = 0; c < n_chains; ++c)
            for (int s = 0; s < result.retained_per_chain; ++s)
                series[c][s] = result.sample(c, s)[j];
        result.rhat[j] = detail::rhat_scalar(series);
        result.ess[j] = detail::ess_scalar(series);
    }
    return result;
}

// ---------------------------------------------------------------------------
// Posterior risk pushforward.
// ---------------------------------------------------------------------------

// Independent Gaussians truncated at physiologic bounds (NaN = unbounded).
struct GaussianPrior {
    std::vector<std::string> feature_names;
    std::vector<double> mean;
    std::vector<double> sd;
    std::vector<double> lower;
    std::vector<double> upper;

    std::size_t dim() const { return mean.size(); }

    double log_density(std::span<const double> x) const {
        double s = 0.0;
        for (std::size_t j = 0; j < mean.size(); ++j) {
            if (!is_missing(lower[j]) && x[j] < lower[j])
                return -std::numeric_limits<double>::infinity();
            if (!is_missing(upper[j]) && x[j] > upper[j])
                return -std::numeric_limits<double>::infinity();
            const double z = (x[j] - mean[j]) / sd[j];
            s += -0.5 * z * z - std::log(sd[j]);
        }
        return s;
    }

    // jittered prior means, kept strictly inside the truncation box
    std::vector<std::vector<double>> initial_states(int n_chains,
                                                    std::uint64_t seed) const {
        std::vector<std::vector<double>> states(n_chains);
        for (int c = 0; c < n_chains; ++c) {
            Rng rng(seed, 0x1417ULL + c);
            auto& x = states[c];
            x.resize(dim());
            for (std::size_t j = 0; j < dim(); ++j) {
                double v = mean[j] + 0.5 * sd[j] * rng.normal();
                if (!is_missing(lower[j])) v = std::max(v, lower[j] + 1e-9 * sd[j]);
                if (!is_missing(upper[j])) v = std::min(v, upper[j] - 1e-9 * sd[j]);
                x[j] = v;
            }
        }
        return states;
    }
};

struct PosteriorSummary {
    double mean_risk = 0.0;
    double cri_low = 0.0;   // 2.5th percentile
    double cri_high = 0.0;  // 97.5th percentile
    std::vector<double> hist_edges;
    std::vector<std::size_t> hist_counts;
    double risk_rhat = 1.0;
    double ess = 0.0;
    double acceptance_rate = 0.0;
    std::size_t n_retained = 0;
    std::vector<std::string> warnings;
};

// Samples feature profiles from the prior, pushes each retained draw through
// the model (after the training-time preprocessing transform, when given)
// and summarizes the resulting risk distribution.
inline PosteriorSummary posterior_risk(const models::TrainedModel& model,
                                       const preprocess::PreprocessParams* params,
                                       const GaussianPrior& prior,
                                       const SamplerConfig& cfg) {
    require(prior.dim() == model.n_features, "width-mismatch",
            "prior dimension does not match model input width");

    const auto ld = [&](std::span<const double> x) { return prior.log_density(x); };
    const auto result =
        dream_sample(ld, prior.initial_states(cfg.n_chains, cfg.seed), cfg);

    Dataset probe;
    for (std::size_t j = 0; j < prior.dim(); ++j)
        probe.feature_meta.push_back({prior.feature_names[j],
                                      FeatureKind::continuous, ""});
    if (params != nullptr)
        for (std::size_t j = 0; j < prior.dim(); ++j)
            probe.feature_meta[j].kind = params->columns[j].kind;

    std::vector<std::vector<double>> risk_series(
        result.n_chains, std::vector<double>(result.retained_per_chain));
    std::vector<double> risks;
    risks.reserve(static_cast<std::size_t>(result.n_chains) *
                  result.retained_per_chain);

    std::vector<double> row(prior.dim());
    for (int c = 0; c < result.n_chains; ++c)
        for (int s = 0; s < result.retained_per_chain; ++s) {
            const auto x = result.sample(c, s);
            std::copy(x.begin(), x.end(), row.begin());
            if (params != nullptr) {
                Dataset one;
                one.feature_meta = probe.feature_meta;
                one.rows = row;
                one.labels = {0};
                one.row_ids = {""};
                const auto scaled = preprocess::transform(one, *params);
                risk_series[c][s] = model.predict_proba_one(scaled.row(0));
            } else {
                risk_series[c][s] = model.predict_proba_one(row);
            }
            risks.push_back(risk_series[c][s]);
        }

    PosteriorSummary summary;
    summary.warnings = result.warnings;
    summary.acceptance_rate = result.acceptance_rate;
    summary.n_retained = risks.size();
    summary.mean_risk = stats::mean(risks);
    summary.cri_low = stats::percentile(risks, 0.025);
    summary.cri_high = stats::percentile(risks, 0.975);
    summary.risk_rhat = detail::rhat_scalar(risk_series);
    summary.ess = detail::ess_scalar(risk_series);

    constexpr int kHistBins = 40;
    summary.hist_edges.resize(kHistBins + 1);
    summary.hist_counts.assign(kHistBins, 0);
    for (int b = 0; b <= kHistBins; ++b)
        summary.hist_edges[b] = static_cast<double>(b) / kHistBins;
    for (double r : risks) {
        int b = static_cast<int>(r * kHistBins);
        b = std::clamp(b, 0, kHistBins - 1);
        summary.hist_counts[b]++;
    }
    return summary;
}

}  // namespace vancorisk::dream
