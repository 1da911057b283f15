#pragma once

// Confusion counts and error rate, a synthetic generator following the
// combiner's generative model, and the random-detector robustness protocol.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "bayescombine/bcc.hpp"
#include "bayescombine/detectors.hpp"
#include "bayescombine/error.hpp"
#include "bayescombine/types.hpp"
#include "bayescombine/verdict_matrix.hpp"

namespace bayescombine {

struct ConfusionCounts {
    std::uint64_t tp = 0;
    std::uint64_t fp = 0;
    std::uint64_t tn = 0;
    std::uint64_t fn = 0;

    std::uint64_t total() const noexcept { return tp + fp + tn + fn; }

    ConfusionCounts& operator+=(const ConfusionCounts& o) noexcept {
        tp += o.tp;
        fp += o.fp;
        tn += o.tn;
        fn += o.fn;
        return *this;
    }
    bool operator==(const ConfusionCounts&) const = default;
};

// Positive class = anomaly = 1.
inline ConfusionCounts confusion(std::span<const Label> predicted, std::span<const Label> truth) {
    if (predicted.size() != truth.size())
        throw ConfigError("confusion: predicted has " + std::to_string(predicted.size()) +
                          " labels, truth has " + std::to_string(truth.size()));
    ConfusionCounts c;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const bool p = predicted[i] == kAnomaly, t = truth[i] == kAnomaly;
        if (p && t)
            ++c.tp;
        else if (p)
            ++c.fp;
        else if (t)
            ++c.fn;
        else
            ++c.tn;
    }
    return c;
}

inline double error_rate(const ConfusionCounts& c) {
    if (c.total() == 0) throw ConfigError("error_rate: no evaluated points");
    return static_cast<double>(c.fp + c.fn) / static_cast<double>(c.total());
}

// Relative change (after - before) / before; infinite when before is 0 and
// after is not.
inline double relative_change(double before, double after) {
    if (before == 0.0) return after == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    return (after - before) / before;
}

struct MethodMetrics {
    std::string name;
    ConfusionCounts counts;
    double error_rate = 0.0;
};

// ---------------------------------------------------------------------------
// Synthetic benchmark

struct SyntheticDetector {
    std::string name;
    std::array<double, 2> diagonal{0.5, 0.5}; // [j] = P(label = j | truth = j)
};

struct SyntheticSpec {
    std::size_t points = 2000;
    double anomaly_rate = 0.05;
    std::vector<SyntheticDetector> detectors;
    std::uint64_t seed = 1;

    // Every violated field, one message each.
    std::vector<std::string> validation_errors() const {
        std::vector<std::string> errs;
        if (points < 2) errs.push_back("points: must be >= 2");
        if (!(anomaly_rate > 0.0 && anomaly_rate < 1.0)) errs.push_back("anomaly_rate: must lie in (0,1)");
        if (detectors.empty()) errs.push_back("detectors: at least one detector required");
        for (std::size_t k = 0; k < detectors.size(); ++k)
            for (int j = 0; j < 2; ++j)
                if (!(detectors[k].diagonal[j] > 0.0 && detectors[k].diagonal[j] <= 1.0))
                    errs.push_back("detectors[" + std::to_string(k) + "]." + (j == 0 ? "normal" : "anomaly") +
                                   ": must lie in (0,1]");
        return errs;
    }

    void validate() const {
        const auto errs = validation_errors();
        if (errs.empty()) return;
        std::string msg = "invalid synthetic spec:";
        for (const auto& e : errs) msg += "\n  " + e;
        throw ConfigError(msg);
    }
};

struct SyntheticData {
    VerdictMatrix verdicts;
    std::vector<Label> truth;
};

// Truth ~ Bernoulli(anomaly_rate); detector k copies the truth with
// probability diagonal[truth]. Confidence is the calibrated probability that
// the predicted class is the true one, P(t = c | c), from the diagonals and
// the anomaly rate, clamped to [0.5, 1 - 1e-9].
inline SyntheticData generate_synthetic(const SyntheticSpec& spec) {
    spec.validate();
    std::mt19937_64 rng(spec.seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<std::string> names;
    for (std::size_t k = 0; k < spec.detectors.size(); ++k)
        names.push_back(spec.detectors[k].name.empty() ? "d" + std::to_string(k) : spec.detectors[k].name);

    const std::array<double, 2> prior{1.0 - spec.anomaly_rate, spec.anomaly_rate};
    std::vector<std::array<double, 2>> precision(spec.detectors.size());
    for (std::size_t k = 0; k < spec.detectors.size(); ++k) {
        const auto& d = spec.detectors[k].diagonal;
        for (int c = 0; c < 2; ++c) {
            const double right = prior[c] * d[c];
            const double wrong = prior[1 - c] * (1.0 - d[1 - c]);
            precision[k][c] = right / (right + wrong);
        }
    }

    SyntheticData out{VerdictMatrix(spec.points, std::move(names)), std::vector<Label>(spec.points)};
    for (std::size_t i = 0; i < spec.points; ++i) {
        const Label t = unif(rng) < spec.anomaly_rate ? kAnomaly : kNormal;
        out.truth[i] = t;
        for (std::size_t k = 0; k < spec.detectors.size(); ++k) {
            const auto& d = spec.detectors[k];
            const Label c = unif(rng) < d.diagonal[t] ? t : static_cast<Label>(1 - t);
            const double z = std::clamp(precision[k][c], kUninformativeConfidence, kConfidenceCeiling);
            out.verdicts.set(i, k, c, z);
        }
    }
    return out;
}

// Empirical P(label = j | truth = j) per detector.
inline std::vector<std::array<double, 2>> empirical_diagonals(const VerdictMatrix& v, std::span<const Label> truth) {
    std::vector<std::array<double, 2>> out(v.detectors(), {0.0, 0.0});
    std::array<double, 2> n{0.0, 0.0};
    for (std::size_t i = 0; i < v.points(); ++i) {
        n[truth[i]] += 1.0;
        for (std::size_t k = 0; k < v.detectors(); ++k)
            if (v.label(i, k) == truth[i]) out[k][truth[i]] += 1.0;
    }
    for (auto& row : out)
        for (int j = 0; j < 2; ++j) row[j] = n[j] > 0 ? row[j] / n[j] : 0.0;
    return out;
}

// ---------------------------------------------------------------------------
// Robustness to an uninformative detector

struct RobustnessReport {
    MethodMetrics majority_before, majority_after;
    MethodMetrics bayes_before, bayes_after;
    double majority_relative_change = 0.0;
    double bayes_relative_change = 0.0;
    std::array<double, 2> random_confusion_mean{0.0, 0.0};
    std::array<double, 2> random_confusion_variance{0.0, 0.0};
};

inline constexpr const char* kRandomDetectorName = "Random";

inline MethodMetrics score_method(std::string name, std::span<const Label> predicted, std::span<const Label> truth) {
    MethodMetrics m{std::move(name), confusion(predicted, truth), 0.0};
    m.error_rate = error_rate(m.counts);
    return m;
}

// Appends a coin-flip detector with near-certain confidence, then reruns
// majority vote and the Bayesian ensemble (priors re-elicited).
inline RobustnessReport robustness_experiment(const VerdictMatrix& base, std::span<const Label> truth,
                                              std::uint64_t random_seed, const EnsembleConfig& config) {
    if (truth.size() != base.points()) throw ConfigError("truth length does not match verdict matrix");
    RobustnessReport r;
    r.majority_before = score_method("MajVote", majority_vote(base), truth);
    r.bayes_before = score_method("Bayes", run_ensemble(base, config).labels, truth);

    const auto augmented = base.with_column(random_detector(base.points(), random_seed), kRandomDetectorName);
    r.majority_after = score_method("MajVote", majority_vote(augmented), truth);
    const auto after = run_ensemble(augmented, config);
    r.bayes_after = score_method("Bayes", after.labels, truth);
    r.random_confusion_mean = after.posterior.confusion_mean.back();
    r.random_confusion_variance = after.posterior.confusion_variance.back();

    r.majority_relative_change = relative_change(r.majority_before.error_rate, r.majority_after.error_rate);
    r.bayes_relative_change = relative_change(r.bayes_before.error_rate, r.bayes_after.error_rate);
    return r;
}

} // namespace bayescombine
