#pragma once

#include <span>
#include <vector>

namespace adept {

// Linear-interpolated percentile (p in [0, 100]); 0 for empty input.
double percentile(std::span<const double> values, double p);
double median(std::span<const double> values);
// p75 - p25.
double iqr(std::span<const double> values);
double mean(std::span<const double> values);
// Population standard deviation.
double stddev(std::span<const double> values);

}  // namespace adept
