#pragma once

// Poisson-binomial machinery and moment-matched Beta hyperparameters for the
// Bayesian combiner.
//
// For one point the detectors' confidences z_1..z_K are treated as
// independent Bernoulli success probabilities. The number of correct
// detectors W is then Poisson-binomial, and Z = P(W > floor(K/2)) is the
// probability that the majority is right. Point estimates pi_hat = Z * z_k
// and t_hat = [Z > 0.5] are turned into Beta priors by matching the first two
// moments.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <spdlog/spdlog.h>

#include "bayescombine/error.hpp"
#include "bayescombine/types.hpp"
#include "bayescombine/verdict_matrix.hpp"

namespace bayescombine {

struct BetaParams {
    double alpha = 1.0;
    double beta = 1.0;

    double mean() const noexcept { return alpha / (alpha + beta); }
    double variance() const noexcept {
        const double s = alpha + beta;
        return alpha * beta / (s * s * (s + 1.0));
    }
    bool valid() const noexcept { return alpha > 0.0 && beta > 0.0 && std::isfinite(alpha) && std::isfinite(beta); }

    bool operator==(const BetaParams&) const = default;
};

// Log density of Beta(a, b) at x in (0,1).
inline double beta_log_pdf(double x, const BetaParams& p) {
    return (p.alpha - 1.0) * std::log(x) + (p.beta - 1.0) * std::log1p(-x) -
           (std::lgamma(p.alpha) + std::lgamma(p.beta) - std::lgamma(p.alpha + p.beta));
}

// O(K^2) convolution: after processing detector k, pmf[w] = P(w of the
// first k are correct).
inline std::vector<double> poisson_binomial_pmf(std::span<const double> z) {
    if (z.empty()) throw ConfigError("poisson_binomial_pmf: empty confidence vector");
    std::vector<double> pmf(z.size() + 1, 0.0);
    pmf[0] = 1.0;
    for (std::size_t k = 0; k < z.size(); ++k) {
        const double p = z[k];
        if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("poisson_binomial_pmf: entry outside [0,1]");
        for (std::size_t w = k + 1; w > 0; --w) pmf[w] = pmf[w] * (1.0 - p) + pmf[w - 1] * p;
        pmf[0] *= 1.0 - p;
    }
    return pmf;
}

inline double majority_probability(std::span<const double> z) {
    const auto pmf = poisson_binomial_pmf(z);
    const std::size_t half = z.size() / 2;
    double tail = 0.0;
    for (std::size_t w = half + 1; w < pmf.size(); ++w) tail += pmf[w];
    return std::clamp(tail, 0.0, 1.0);
}

// Majority probability of the anomaly class: each detector's confidence is
// reflected (z -> 1 - z) when it votes normal, so the result is the
// probability that a strict majority believes "anomaly".
inline double directional_majority_probability(std::span<const Label> labels, std::span<const double> z) {
    if (labels.size() != z.size()) throw ConfigError("labels and confidences differ in length");
    std::vector<double> q(z.size());
    for (std::size_t k = 0; k < z.size(); ++k) q[k] = labels[k] == kAnomaly ? z[k] : 1.0 - z[k];
    return majority_probability(q);
}

inline double estimate_pi_hat(double majority, double confidence) {
    if (!(majority >= 0.0 && majority <= 1.0) || !(confidence >= 0.0 && confidence <= 1.0))
        throw ConfigError("estimate_pi_hat: arguments must lie in [0,1]");
    return majority * confidence;
}

// Strict inequality: Z = 0.5 is not a majority.
inline Label estimate_t_hat(double majority) { return majority > 0.5 ? kAnomaly : kNormal; }

// (alpha, beta) = (m nu, (1-m) nu) with nu = m(1-m)/v - 1.
inline BetaParams beta_from_moments(double mean, double variance) {
    if (!(mean > 0.0 && mean < 1.0)) throw ConfigError("beta_from_moments: mean must lie in (0,1)");
    if (!(variance > 0.0)) throw ConfigError("beta_from_moments: variance must be positive");
    const double bound = mean * (1.0 - mean);
    if (!(variance < bound))
        throw ConfigError("beta_from_moments: infeasible variance (must be < m(1-m) = " +
                          std::to_string(bound) + ")");
    const double concentration = bound / variance - 1.0;
    return {mean * concentration, (1.0 - mean) * concentration};
}

// Diagonal confusion priors per (detector, class) and one label prior per point.
struct PriorSet {
    std::vector<std::array<BetaParams, 2>> confusion; // [k][j] prior on pi_{j,j}^(k)
    std::vector<BetaParams> label;                    // [i] prior on nu_i
    std::vector<double> majority;                     // Z_i
    std::vector<double> anomaly_majority;             // Z'_i
    std::vector<std::string> warnings;

    std::size_t detectors() const noexcept { return confusion.size(); }
    std::size_t points() const noexcept { return label.size(); }

    void validate(std::size_t points, std::size_t detectors) const {
        if (confusion.size() != detectors || label.size() != points)
            throw ConfigError("prior set does not match verdict matrix shape");
        for (const auto& row : confusion)
            for (const auto& b : row)
                if (!b.valid()) throw ConfigError("invalid confusion prior");
        for (const auto& b : label)
            if (!b.valid()) throw ConfigError("invalid label prior");
    }
};

struct ElicitationOptions {
    double kappa = 0.9; // variance shrinkage factor in (0,1)
    // Upper bound on alpha + beta of a confusion prior. Populations of
    // near-identical point estimates otherwise match to an arbitrarily
    // concentrated Beta.
    double max_concentration = 10.0;
};

// Means are kept off {0,1} so the matched Beta stays proper.
inline constexpr double kPriorMeanMargin = 1e-9;

// Beta matching the shrunk moments of a population, with the variance
// clamped to kappa * m(1-m) when the shrunk value is not strictly inside
// (0, m(1-m)).
inline BetaParams shrunk_beta(double mean, double variance, double kappa,
                              double max_concentration = std::numeric_limits<double>::infinity()) {
    const double m = std::clamp(mean, kPriorMeanMargin, 1.0 - kPriorMeanMargin);
    const double bound = m * (1.0 - m);
    double v = kappa * variance;
    if (!(v > 0.0 && v < bound)) v = kappa * bound;
    v = std::max(v, bound / (1.0 + max_concentration));
    return beta_from_moments(m, v);
}

inline PriorSet elicit_priors(const VerdictMatrix& verdicts, const ElicitationOptions& options = {}) {
    verdicts.validate();
    if (!(options.kappa > 0.0 && options.kappa < 1.0)) throw ConfigError("kappa must lie in (0,1)");
    if (!(options.max_concentration > 0.0)) throw ConfigError("max_concentration must be positive");
    const std::size_t I = verdicts.points();
    const std::size_t K = verdicts.detectors();
    if (I < 2) throw InsufficientDataError("prior elicitation needs at least 2 points");

    PriorSet priors;
    priors.majority.resize(I);
    priors.anomaly_majority.resize(I);
    priors.label.resize(I);
    priors.confusion.resize(K);

    for (std::size_t i = 0; i < I; ++i) {
        priors.majority[i] = majority_probability(verdicts.confidences_at(i));
        priors.anomaly_majority[i] =
            directional_majority_probability(verdicts.labels_at(i), verdicts.confidences_at(i));
        const double m = priors.anomaly_majority[i];
        priors.label[i] = shrunk_beta(m, m * (1.0 - m), options.kappa);
    }

    for (std::size_t k = 0; k < K; ++k) {
        for (Label j : {kNormal, kAnomaly}) {
            std::vector<double> population;
            for (std::size_t i = 0; i < I; ++i)
                if (verdicts.label(i, k) == j)
                    population.push_back(estimate_pi_hat(priors.majority[i], verdicts.confidence(i, k)));
            if (population.empty()) {
                priors.confusion[k][j] = {1.0, 1.0};
                priors.warnings.push_back("detector '" + verdicts.names()[k] + "' never outputs class " +
                                          std::to_string(j) + "; using Beta(1,1)");
                spdlog::warn(priors.warnings.back());
                continue;
            }
            double mean = 0.0;
            for (double v : population) mean += v;
            mean /= static_cast<double>(population.size());
            double var = 0.0;
            if (population.size() > 1) {
                for (double v : population) var += (v - mean) * (v - mean);
                var /= static_cast<double>(population.size() - 1);
            }
            priors.confusion[k][j] = shrunk_beta(mean, var, options.kappa, options.max_concentration);
        }
    }
    return priors;
}

} // namespace bayescombine
