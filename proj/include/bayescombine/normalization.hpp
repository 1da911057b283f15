#pragma once

// Gaussian scaling of raw detector scores into probabilities, and the
// predicted-class confidence consumed by the combiner.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <vector>

#include <spdlog/spdlog.h>

#include "bayescombine/error.hpp"
#include "bayescombine/timeseries.hpp"
#include "bayescombine/types.hpp"

namespace bayescombine {

struct NormalizedScore {
    double probability = 0.5; // belief the point is anomalous
    double confidence = 0.5;  // belief in the predicted label
};

// Standard normal CDF. erfc keeps full relative precision in the lower tail.
inline double std_normal_cdf(double x) {
    if (!std::isfinite(x)) throw ConfigError("std_normal_cdf: non-finite argument");
    return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

struct GaussianNormalization {
    std::vector<double> probabilities;
    bool degenerate = false; // constant scores; every probability is 0.5
};

inline GaussianNormalization gaussian_normalize(std::span<const double> raw_scores) {
    GaussianNormalization out;
    const Moments m = sample_moments(raw_scores);
    if (is_degenerate_scale(m, raw_scores)) {
        out.probabilities.assign(raw_scores.size(), 0.5);
        out.degenerate = true;
        spdlog::warn("gaussian_normalize: constant scores, every probability set to 0.5");
        return out;
    }
    out.probabilities.reserve(raw_scores.size());
    for (double s : raw_scores) out.probabilities.push_back(std_normal_cdf((s - m.mean) / m.stddev));
    return out;
}

// z = p for an anomaly label, 1 - p for a normal label, clamped into
// [0.5, kConfidenceCeiling].
inline double to_confidence(double p, Label label) {
    if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("to_confidence: probability outside [0,1]");
    const double z = label == kAnomaly ? p : 1.0 - p;
    return std::clamp(z, kUninformativeConfidence, kConfidenceCeiling);
}

inline NormalizedScore normalized_score(double p, Label label) {
    return {p, to_confidence(p, label)};
}

} // namespace bayescombine
