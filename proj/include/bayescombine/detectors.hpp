#pragma once

// Base anomaly detectors: first-difference (variance), multiplicative
// Holt-Winters, Goldilocks NNLS regression and the coin-flip random detector.
// The ARMA detector lives in arma.hpp.
//
// All forecast detectors score a point by its residual y_t - forecast_t, so
// upward excursions produce large positive scores and trip the one-sided
// threshold rule.

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bayescombine/error.hpp"
#include "bayescombine/nnls.hpp"
#include "bayescombine/timeseries.hpp"
#include "bayescombine/types.hpp"
#include "bayescombine/verdict.hpp"

namespace bayescombine {

// ---------------------------------------------------------------------------
// Variance (first-difference) detector

inline std::vector<double> first_differences(std::span<const double> values) {
    std::vector<double> delta(values.size(), 0.0);
    for (std::size_t t = 1; t < values.size(); ++t) delta[t] = values[t] - values[t - 1];
    return delta;
}

// Point 0 has no predecessor; it gets delta 0 and is treated as warm-up.
inline std::vector<DetectorVerdict> variance_detector(std::span<const double> values,
                                                      const ThresholdPolicy& policy = {}) {
    if (values.size() < 3)
        throw InsufficientDataError("variance detector needs at least 3 points");
    const auto delta = first_differences(values);
    return score_verdicts(delta, 1, policy, max_abs_value(values));
}

inline std::vector<DetectorVerdict> variance_detector(const LabeledSeries& series,
                                                      const ThresholdPolicy& policy = {}) {
    return variance_detector(series.values(), policy);
}

// ---------------------------------------------------------------------------
// Multiplicative Holt-Winters

struct HoltWintersParams {
    std::size_t season_length = 24;
    double level_weight = 0.2;
    double trend_weight = 0.05;
    double seasonal_weight = 0.1;

    void validate() const {
        if (season_length < 1) throw ConfigError("season length must be >= 1");
        for (double w : {level_weight, trend_weight, seasonal_weight})
            if (!(w > 0.0 && w < 1.0)) throw ConfigError("Holt-Winters weights must lie in (0,1)");
    }
};

class HoltWintersState {
public:
    // Level = mean of the first season, trend = difference of the first two
    // season means divided by L, seasonal index i = y_i / level.
    static HoltWintersState initialize(std::span<const double> values, const HoltWintersParams& params) {
        params.validate();
        const std::size_t L = params.season_length;
        if (values.size() < 2 * L)
            throw InsufficientDataError("Holt-Winters needs at least two full seasons (" +
                                        std::to_string(2 * L) + " points), got " +
                                        std::to_string(values.size()));
        for (double v : values)
            if (!(v > 0.0))
                throw ModelInapplicableError("multiplicative Holt-Winters requires positive values");

        double first = 0.0, second = 0.0;
        for (std::size_t i = 0; i < L; ++i) {
            first += values[i];
            second += values[L + i];
        }
        first /= static_cast<double>(L);
        second /= static_cast<double>(L);

        HoltWintersState s;
        s.params_ = params;
        s.level_ = first;
        s.trend_ = (second - first) / static_cast<double>(L);
        s.seasonal_.resize(L);
        for (std::size_t i = 0; i < L; ++i) s.seasonal_[i] = values[i] / first;
        s.next_ = L;
        return s;
    }

    // One-step forecast of the next point: (R + G) * S_{t-L}.
    double forecast() const { return (level_ + trend_) * seasonal_[next_ % params_.season_length]; }

    void update(double y) {
        const std::size_t slot = next_ % params_.season_length;
        const double a = params_.level_weight;
        const double b = params_.trend_weight;
        const double g = params_.seasonal_weight;
        const double prev_level = level_;
        level_ = a * (y / seasonal_[slot]) + (1.0 - a) * (level_ + trend_);
        if (!(level_ > 0.0))
            throw ModelInapplicableError("Holt-Winters level became nonpositive at index " +
                                         std::to_string(next_));
        trend_ = b * (level_ - prev_level) + (1.0 - b) * trend_;
        seasonal_[slot] = g * (y / level_) + (1.0 - g) * seasonal_[slot];
        ++next_;
    }

    double level() const noexcept { return level_; }
    double trend() const noexcept { return trend_; }
    const std::vector<double>& seasonal() const noexcept { return seasonal_; }
    std::size_t season_length() const noexcept { return params_.season_length; }
    std::size_t next_index() const noexcept { return next_; }

private:
    HoltWintersParams params_;
    double level_ = 0.0;
    double trend_ = 0.0;
    std::vector<double> seasonal_;
    std::size_t next_ = 0;
};

// Residuals y_t - forecast_t from index L on; the first season is warm-up.
inline std::vector<double> holt_winters_residuals(std::span<const double> values,
                                                  const HoltWintersParams& params) {
    auto state = HoltWintersState::initialize(values, params);
    std::vector<double> residuals(values.size(), 0.0);
    for (std::size_t t = params.season_length; t < values.size(); ++t) {
        residuals[t] = values[t] - state.forecast();
        state.update(values[t]);
    }
    return residuals;
}

inline std::vector<DetectorVerdict> holt_winters_detector(std::span<const double> values,
                                                          const HoltWintersParams& params = {},
                                                          const ThresholdPolicy& policy = {}) {
    const auto residuals = holt_winters_residuals(values, params);
    return score_verdicts(residuals, params.season_length, policy, max_abs_value(values));
}

inline std::vector<DetectorVerdict> holt_winters_detector(const LabeledSeries& series,
                                                          const HoltWintersParams& params = {},
                                                          const ThresholdPolicy& policy = {}) {
    return holt_winters_detector(series.values(), params, policy);
}

// ---------------------------------------------------------------------------
// Goldilocks NNLS regression detector

struct GoldilocksParams {
    std::size_t window = 30;
};

// Features for relative time tau in [0,1]: [1, -1, tau, -tau]. Nonnegative
// weights over this basis span every affine function of tau.
inline Eigen::MatrixXd goldilocks_design(std::size_t window) {
    Eigen::MatrixXd a(static_cast<Eigen::Index>(window), 4);
    for (std::size_t j = 0; j < window; ++j) {
        const double tau = static_cast<double>(j) / static_cast<double>(window);
        a.row(static_cast<Eigen::Index>(j)) << 1.0, -1.0, tau, -tau;
    }
    return a;
}

// NNLS fit on the n preceding points, evaluated at tau = 1 (the next point).
inline double goldilocks_predict(const Eigen::MatrixXd& design, std::span<const double> window) {
    const Eigen::Map<const Eigen::VectorXd> y(window.data(), static_cast<Eigen::Index>(window.size()));
    const auto fit = nnls(design, y);
    return (fit.weights[0] - fit.weights[1]) + (fit.weights[2] - fit.weights[3]);
}

inline std::vector<double> goldilocks_residuals(std::span<const double> values,
                                                const GoldilocksParams& params) {
    const std::size_t n = params.window;
    if (n < 3) throw ConfigError("Goldilocks window must be >= 3");
    if (values.size() < n + 1)
        throw InsufficientDataError("Goldilocks needs window + 1 = " + std::to_string(n + 1) +
                                    " points, got " + std::to_string(values.size()));
    const auto design = goldilocks_design(n);
    std::vector<double> residuals(values.size(), 0.0);
    for (std::size_t t = n; t < values.size(); ++t)
        residuals[t] = values[t] - goldilocks_predict(design, values.subspan(t - n, n));
    return residuals;
}

inline std::vector<DetectorVerdict> goldilocks_detector(std::span<const double> values,
                                                        const GoldilocksParams& params = {},
                                                        const ThresholdPolicy& policy = {}) {
    const auto residuals = goldilocks_residuals(values, params);
    return score_verdicts(residuals, params.window, policy, max_abs_value(values));
}

inline std::vector<DetectorVerdict> goldilocks_detector(const LabeledSeries& series,
                                                        const GoldilocksParams& params = {},
                                                        const ThresholdPolicy& policy = {}) {
    return goldilocks_detector(series.values(), params, policy);
}

// ---------------------------------------------------------------------------
// Random detector

// Fair coin per point; always reports near-certain confidence.
inline std::vector<DetectorVerdict> random_detector(std::size_t length, std::uint64_t seed) {
    if (length < 1) throw ConfigError("random detector length must be >= 1");
    std::mt19937_64 rng(seed);
    std::vector<DetectorVerdict> out(length);
    for (auto& v : out) {
        v.label = static_cast<Label>(rng() >> 63);
        v.raw_score = static_cast<double>(v.label);
        v.probability = v.label == kAnomaly ? kConfidenceCeiling : 1.0 - kConfidenceCeiling;
        v.confidence = kConfidenceCeiling;
    }
    return out;
}

} // namespace bayescombine
