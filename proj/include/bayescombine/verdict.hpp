#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "bayescombine/error.hpp"
#include "bayescombine/normalization.hpp"
#include "bayescombine/timeseries.hpp"
#include "bayescombine/types.hpp"

namespace bayescombine {

// One detector's output for one point.
struct DetectorVerdict {
    Label label = kNormal;
    double raw_score = 0.0;   // detector units: delta or forecast residual
    double probability = 0.5; // Gaussian-scaled raw score
    double confidence = 0.5;  // predicted-class confidence z in [0.5, 1)

    bool operator==(const DetectorVerdict&) const = default;
};

// Anomaly iff score >= mean + sigma_multiplier * stddev over the detector's
// score population. An absolute threshold, when set, replaces the sigma rule
// for labelling (probabilities are still Gaussian-scaled).
struct ThresholdPolicy {
    double sigma_multiplier = 3.0;
    std::optional<double> absolute_threshold;

    static ThresholdPolicy absolute(double epsilon) { return {3.0, epsilon}; }

    void validate() const {
        if (!(sigma_multiplier > 0.0) || !std::isfinite(sigma_multiplier))
            throw ConfigError("sigma multiplier must be positive");
        if (absolute_threshold && !std::isfinite(*absolute_threshold))
            throw ConfigError("absolute threshold must be finite");
    }
};

// Relative tolerance under which a residual population counts as round-off.
inline constexpr double kResidualDegenerateTolerance = 1e-10;

// Turns raw scores into verdicts. The first `warmup` points carry no
// evidence: normal, p = z = 0.5, and they are excluded from the population.
// `scale_reference` is the magnitude of the underlying series, used to tell
// round-off residuals from real ones.
inline std::vector<DetectorVerdict> score_verdicts(std::span<const double> raw_scores,
                                                   std::size_t warmup,
                                                   const ThresholdPolicy& policy,
                                                   double scale_reference = 0.0) {
    policy.validate();
    std::vector<DetectorVerdict> out(raw_scores.size());
    for (std::size_t i = 0; i < raw_scores.size(); ++i) out[i].raw_score = raw_scores[i];
    if (warmup >= raw_scores.size()) return out;

    const auto population = raw_scores.subspan(warmup);
    bool degenerate = population.size() < 2;
    Moments m;
    if (!degenerate) {
        m = sample_moments(population);
        double max_abs = std::abs(scale_reference);
        for (double s : population) max_abs = std::max(max_abs, std::abs(s));
        degenerate = !(m.stddev > kResidualDegenerateTolerance * max_abs);
    }

    for (std::size_t i = warmup; i < raw_scores.size(); ++i) {
        auto& v = out[i];
        const double zscore = degenerate ? 0.0 : (v.raw_score - m.mean) / m.stddev;
        if (policy.absolute_threshold)
            v.label = v.raw_score >= *policy.absolute_threshold ? kAnomaly : kNormal;
        else
            v.label = !degenerate && zscore >= policy.sigma_multiplier ? kAnomaly : kNormal;
        v.probability = degenerate ? 0.5 : std_normal_cdf(zscore);
        v.confidence = to_confidence(v.probability, v.label);
    }
    return out;
}

inline double max_abs_value(std::span<const double> values) {
    double m = 0.0;
    for (double v : values) m = std::max(m, std::abs(v));
    return m;
}

} // namespace bayescombine
