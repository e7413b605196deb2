#pragma once

#include <limits>

namespace limip {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Solver tolerances. Fixed, not per-call: feature thresholds depend on them.
inline constexpr double kFeasTol = 1e-7;
inline constexpr double kOptTol = 1e-7;
inline constexpr double kZeroPivotTol = 1e-10;

// A variable counts as fractional when min(f, 1-f) exceeds this.
inline constexpr double kIntTol = 1e-6;

// Sentinel for +/- infinity in text files.
inline constexpr double kFileInf = 1e20;

}  // namespace limip
