#pragma once

#include <cstdint>

namespace bayescombine {

// Binary label used by every module: 0 = normal, 1 = anomaly.
using Label = std::uint8_t;

inline constexpr Label kNormal = 0;
inline constexpr Label kAnomaly = 1;

// Largest confidence any detector may report. A confidence of exactly 1
// makes the combiner's likelihood degenerate.
inline constexpr double kConfidenceCeiling = 1.0 - 1e-9;

// Confidence that carries no evidence (warm-up points, degenerate scales).
inline constexpr double kUninformativeConfidence = 0.5;

} // namespace bayescombine
