// Sample moment summaries shared by the window and density-fitting code.

#pragma once

#include <cstddef>
#include <optional>
#include <span>

namespace windmix {

struct SampleMoments {
  std::size_t count = 0;
  double mean = 0.0;
  double stddev = 0.0;  // n-1 denominator
  double m2 = 0.0;      // central moments with 1/n denominators
  double m3 = 0.0;
  double m4 = 0.0;
  // Standardized shape moments; empty when the variance vanishes.
  std::optional<double> skewness;
  std::optional<double> ex_kurtosis;  // Gaussian data gives 0
};

// Two-pass central moments. Requires at least 2 samples.
SampleMoments sample_moments(std::span<const double> xs);

}  // namespace windmix
