#pragma once

#include <span>

namespace duraflow {

// Linear interpolation between order statistics at 1-based position 1+(n-1)q
// (the R-7 / numpy "linear" definition). sorted must be ascending and non-empty;
// q in [0, 1].
double quantile_sorted(std::span<const double> sorted, double q);

// Copies and sorts before delegating to quantile_sorted.
double quantile(std::span<const double> values, double q);

}  // namespace duraflow
