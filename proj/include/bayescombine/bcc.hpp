#pragma once

// Bayesian classifier combination for binary detectors.
//
// Generative model (J = 2 classes, diagonal confusion parameterization):
//   nu_i          ~ Beta(delta_i, gamma_i)
//   t_i | nu_i    ~ Bernoulli(nu_i)
//   pi_{j,j}^(k)  ~ Beta(alpha_{k,j}, beta_{k,j})
//   c_i^(k) | t_i = t_i with probability pi_{t_i,t_i}^(k), else 1 - t_i
//
// Inference is Metropolis-within-Gibbs. Each (t_i, nu_i) pair is drawn as a
// block: t_i from its conditional with nu_i integrated out (prior odds
// delta_i : gamma_i), then nu_i from its conjugate Beta(delta_i + t_i,
// gamma_i + 1 - t_i). Every pi entry gets a Gaussian random-walk step in
// logit space with a Metropolis-Hastings correction.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include <spdlog/spdlog.h>

#include "bayescombine/error.hpp"
#include "bayescombine/priors.hpp"
#include "bayescombine/types.hpp"
#include "bayescombine/verdict_matrix.hpp"

namespace bayescombine {

inline constexpr double kProbabilityFloor = 1e-9;

struct ModelState {
    std::vector<Label> t;                     // [i]
    std::vector<std::array<double, 2>> pi;    // [k][j] = pi_{j,j}^(k)
    std::vector<double> nu;                   // [i]
};

// Probability that detector k emits `c` for a point of class `t`.
inline double emission_probability(double pi_tt, Label c, Label t) { return c == t ? pi_tt : 1.0 - pi_tt; }

// Log of the unnormalized joint posterior. Returns -inf when any pi or nu
// sits on the boundary of (0,1) and the corresponding term vanishes.
inline double log_posterior(const ModelState& state, const VerdictMatrix& verdicts, const PriorSet& priors) {
    constexpr double neg_inf = -std::numeric_limits<double>::infinity();
    const std::size_t I = verdicts.points();
    const std::size_t K = verdicts.detectors();
    if (state.t.size() != I || state.nu.size() != I || state.pi.size() != K)
        throw ConfigError("model state does not match verdict matrix shape");
    priors.validate(I, K);

    for (const auto& row : state.pi)
        for (double p : row)
            if (!(p > 0.0 && p < 1.0)) return neg_inf;
    for (double v : state.nu)
        if (!(v > 0.0 && v < 1.0)) return neg_inf;

    double lp = 0.0;
    for (std::size_t i = 0; i < I; ++i) {
        const Label t = state.t[i];
        lp += t == kAnomaly ? std::log(state.nu[i]) : std::log1p(-state.nu[i]);
        for (std::size_t k = 0; k < K; ++k)
            lp += std::log(emission_probability(state.pi[k][t], verdicts.label(i, k), t));
        lp += beta_log_pdf(state.nu[i], priors.label[i]);
    }
    for (std::size_t k = 0; k < K; ++k)
        for (Label j : {kNormal, kAnomaly}) lp += beta_log_pdf(state.pi[k][j], priors.confusion[k][j]);
    return lp;
}

// Full conditional P(t_i = 1 | pi, nu, c).
inline double label_conditional(std::size_t i, const ModelState& state, const VerdictMatrix& verdicts) {
    double log1 = std::log(state.nu[i]);
    double log0 = std::log1p(-state.nu[i]);
    for (std::size_t k = 0; k < verdicts.detectors(); ++k) {
        const Label c = verdicts.label(i, k);
        log1 += std::log(emission_probability(state.pi[k][kAnomaly], c, kAnomaly));
        log0 += std::log(emission_probability(state.pi[k][kNormal], c, kNormal));
    }
    return 1.0 / (1.0 + std::exp(log0 - log1));
}

// P(t_i = 1 | pi, c) with nu_i integrated against its Beta prior.
inline double collapsed_label_conditional(std::size_t i, const ModelState& state, const VerdictMatrix& verdicts,
                                          const PriorSet& priors) {
    const BetaParams& prior = priors.label[i];
    double log1 = std::log(prior.alpha);
    double log0 = std::log(prior.beta);
    for (std::size_t k = 0; k < verdicts.detectors(); ++k) {
        const Label c = verdicts.label(i, k);
        log1 += std::log(emission_probability(state.pi[k][kAnomaly], c, kAnomaly));
        log0 += std::log(emission_probability(state.pi[k][kNormal], c, kNormal));
    }
    return 1.0 / (1.0 + std::exp(log0 - log1));
}

struct SamplerConfig {
    std::size_t iterations = 5000;
    std::size_t burn_in = 1000;
    std::size_t thin = 2;
    std::uint64_t seed = 1;
    double proposal_scale = 0.1; // logit-space random-walk standard deviation

    std::size_t retained_samples() const noexcept {
        return iterations > burn_in && thin > 0 ? (iterations - burn_in) / thin : 0;
    }

    void validate() const {
        if (iterations < 1) throw ConfigError("sampler iterations must be positive");
        if (thin < 1) throw ConfigError("sampler thin must be positive");
        if (!(proposal_scale > 0.0) || !std::isfinite(proposal_scale))
            throw ConfigError("sampler proposal scale must be positive");
        if (burn_in >= iterations || retained_samples() == 0)
            throw ConfigError("empty chain: no samples retained after burn-in and thinning");
    }
};

struct PosteriorSummary {
    std::vector<std::string> detector_names;
    std::vector<double> p_anomaly;                         // posterior mean of t_i
    std::vector<std::array<double, 2>> confusion_mean;     // [k][j]
    std::vector<std::array<double, 2>> confusion_variance; // [k][j]
    std::vector<double> nu_mean;
    double acceptance_rate = 0.0; // Metropolis proposals for pi
    std::size_t n_samples = 0;

    bool operator==(const PosteriorSummary&) const = default;
};

// Thinned post-burn-in draws of the confusion diagonals.
struct ChainTrace {
    std::vector<std::size_t> iteration;
    std::vector<std::vector<std::array<double, 2>>> pi;
    std::vector<double> anomaly_count;
};

namespace detail {

inline double logistic(double u) { return 1.0 / (1.0 + std::exp(-u)); }
inline double logit(double p) { return std::log(p) - std::log1p(-p); }
inline double clamp_probability(double p) { return std::clamp(p, kProbabilityFloor, 1.0 - kProbabilityFloor); }

// log of the logit-to-probability Jacobian, dp/du = p(1-p).
inline double log_jacobian(double p) { return std::log(p) + std::log1p(-p); }

} // namespace detail

// Initial state: t from the thresholded prior mean of nu, pi and nu at their
// prior means.
inline ModelState initial_state(const PriorSet& priors) {
    ModelState s;
    s.t.resize(priors.points());
    s.nu.resize(priors.points());
    for (std::size_t i = 0; i < priors.points(); ++i) {
        s.nu[i] = detail::clamp_probability(priors.label[i].mean());
        s.t[i] = estimate_t_hat(priors.label[i].mean());
    }
    s.pi.resize(priors.detectors());
    for (std::size_t k = 0; k < priors.detectors(); ++k)
        for (Label j : {kNormal, kAnomaly}) s.pi[k][j] = detail::clamp_probability(priors.confusion[k][j].mean());
    return s;
}

inline PosteriorSummary run_sampler(const VerdictMatrix& verdicts, const PriorSet& priors,
                                    const SamplerConfig& config, ChainTrace* trace = nullptr) {
    config.validate();
    verdicts.validate();
    const std::size_t I = verdicts.points();
    const std::size_t K = verdicts.detectors();
    priors.validate(I, K);

    ModelState state = initial_state(priors);
    if (!std::isfinite(log_posterior(state, verdicts, priors)))
        throw Error("sampler initialization has zero posterior density");

    std::mt19937_64 rng(config.seed);
    std::normal_distribution<double> step(0.0, config.proposal_scale);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    // agree[k][j] / disagree[k][j]: points with t_i = j whose label from
    // detector k equals / differs from j. Sufficient statistics for pi.
    std::vector<std::array<double, 2>> agree(K), disagree(K);
    std::vector<std::array<double, 2>> log_pi(K), log_not_pi(K);

    PosteriorSummary summary;
    summary.detector_names = verdicts.names();
    summary.p_anomaly.assign(I, 0.0);
    summary.nu_mean.assign(I, 0.0);
    summary.confusion_mean.assign(K, {0.0, 0.0});
    summary.confusion_variance.assign(K, {0.0, 0.0});

    std::vector<double> log_alpha(I), log_beta(I);
    for (std::size_t i = 0; i < I; ++i) {
        log_alpha[i] = std::log(priors.label[i].alpha);
        log_beta[i] = std::log(priors.label[i].beta);
    }

    // Beta draw via two gammas; tiny shape parameters can underflow, hence the clamp.
    auto draw_beta = [&](double a, double b) {
        const double x = std::gamma_distribution<double>(a, 1.0)(rng);
        const double y = std::gamma_distribution<double>(b, 1.0)(rng);
        const double s = x + y;
        return detail::clamp_probability(s > 0.0 ? x / s : a / (a + b));
    };

    std::size_t pi_proposed = 0, pi_accepted = 0;
    std::size_t retained = 0;

    // Metropolis step for a probability parameter with local log target
    // `log_target(p)`; proposals are symmetric in logit space.
    auto mh_step = [&](double& p, auto&& log_target, std::size_t& proposed, std::size_t& accepted) {
        const double candidate = detail::clamp_probability(detail::logistic(detail::logit(p) + step(rng)));
        const double log_ratio =
            log_target(candidate) + detail::log_jacobian(candidate) - log_target(p) - detail::log_jacobian(p);
        ++proposed;
        if (std::log(unif(rng)) < log_ratio) {
            p = candidate;
            ++accepted;
        }
    };

    for (std::size_t iter = 0; iter < config.iterations; ++iter) {
        // Gibbs sweep over labels.
        for (std::size_t k = 0; k < K; ++k) {
            for (Label j : {kNormal, kAnomaly}) {
                log_pi[k][j] = std::log(state.pi[k][j]);
                log_not_pi[k][j] = std::log1p(-state.pi[k][j]);
            }
            agree[k] = {0.0, 0.0};
            disagree[k] = {0.0, 0.0};
        }
        for (std::size_t i = 0; i < I; ++i) {
            const BetaParams& prior = priors.label[i];
            double log1 = log_alpha[i];
            double log0 = log_beta[i];
            const auto labels = verdicts.labels_at(i);
            for (std::size_t k = 0; k < K; ++k) {
                log1 += labels[k] == kAnomaly ? log_pi[k][kAnomaly] : log_not_pi[k][kAnomaly];
                log0 += labels[k] == kNormal ? log_pi[k][kNormal] : log_not_pi[k][kNormal];
            }
            const double p1 = 1.0 / (1.0 + std::exp(log0 - log1));
            const Label t = unif(rng) < p1 ? kAnomaly : kNormal;
            state.t[i] = t;
            state.nu[i] = draw_beta(prior.alpha + t, prior.beta + (1.0 - t));
            for (std::size_t k = 0; k < K; ++k) {
                if (labels[k] == t)
                    agree[k][t] += 1.0;
                else
                    disagree[k][t] += 1.0;
            }
        }

        // Confusion diagonals.
        for (std::size_t k = 0; k < K; ++k) {
            for (Label j : {kNormal, kAnomaly}) {
                const double a = agree[k][j], d = disagree[k][j];
                const BetaParams& prior = priors.confusion[k][j];
                auto target = [&](double p) {
                    return a * std::log(p) + d * std::log1p(-p) + (prior.alpha - 1.0) * std::log(p) +
                           (prior.beta - 1.0) * std::log1p(-p);
                };
                mh_step(state.pi[k][j], target, pi_proposed, pi_accepted);
            }
        }

        if (iter < config.burn_in || (iter - config.burn_in + 1) % config.thin != 0) continue;
        ++retained;
        double anomalies = 0.0;
        for (std::size_t i = 0; i < I; ++i) {
            summary.p_anomaly[i] += state.t[i];
            summary.nu_mean[i] += state.nu[i];
            anomalies += state.t[i];
        }
        for (std::size_t k = 0; k < K; ++k) {
            for (Label j : {kNormal, kAnomaly}) {
                summary.confusion_mean[k][j] += state.pi[k][j];
                summary.confusion_variance[k][j] += state.pi[k][j] * state.pi[k][j];
            }
        }
        if (trace) {
            trace->iteration.push_back(iter);
            trace->pi.push_back(state.pi);
            trace->anomaly_count.push_back(anomalies);
        }
    }

    const double n = static_cast<double>(retained);
    for (std::size_t i = 0; i < I; ++i) {
        summary.p_anomaly[i] /= n;
        summary.nu_mean[i] /= n;
    }
    for (std::size_t k = 0; k < K; ++k) {
        for (Label j : {kNormal, kAnomaly}) {
            const double mean = summary.confusion_mean[k][j] / n;
            summary.confusion_mean[k][j] = mean;
            summary.confusion_variance[k][j] = std::max(0.0, summary.confusion_variance[k][j] / n - mean * mean);
        }
    }
    summary.n_samples = retained;
    summary.acceptance_rate =
        pi_proposed ? static_cast<double>(pi_accepted) / static_cast<double>(pi_proposed) : 0.0;
    return summary;
}

// Anomaly iff the posterior probability strictly exceeds the cutoff.
inline std::vector<Label> classify(const PosteriorSummary& summary, double cutoff = 0.5) {
    if (!(cutoff > 0.0 && cutoff < 1.0)) throw ConfigError("classification cutoff must lie in (0,1)");
    std::vector<Label> out(summary.p_anomaly.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = summary.p_anomaly[i] > cutoff ? kAnomaly : kNormal;
    return out;
}

// Anomaly iff strictly more than half the detectors say so; ties are normal.
inline std::vector<Label> majority_vote(const VerdictMatrix& verdicts) {
    std::vector<Label> out(verdicts.points());
    const std::size_t K = verdicts.detectors();
    for (std::size_t i = 0; i < out.size(); ++i) {
        std::size_t ones = 0;
        for (Label l : verdicts.labels_at(i)) ones += l;
        out[i] = 2 * ones > K ? kAnomaly : kNormal;
    }
    return out;
}

struct EnsembleConfig {
    ElicitationOptions elicitation;
    SamplerConfig sampler;
    double cutoff = 0.5;
};

struct EnsembleResult {
    PriorSet priors;
    PosteriorSummary posterior;
    std::vector<Label> labels;
};

// Elicit priors, sample, classify.
inline EnsembleResult run_ensemble(const VerdictMatrix& verdicts, const EnsembleConfig& config,
                                   ChainTrace* trace = nullptr) {
    if (verdicts.detectors() < 2)
        spdlog::warn("ensemble with a single detector: its confusion diagonals are not identifiable");
    EnsembleResult r;
    r.priors = elicit_priors(verdicts, config.elicitation);
    r.posterior = run_sampler(verdicts, r.priors, config.sampler, trace);
    r.labels = classify(r.posterior, config.cutoff);
    return r;
}

} // namespace bayescombine
