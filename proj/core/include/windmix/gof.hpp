// One-sample two-sided Kolmogorov-Smirnov goodness of fit.

#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <vector>

namespace windmix {

struct KsResult {
  double statistic = 0.0;  // D in [0, 1]
  std::size_t n = 0;
  double p_value = std::numeric_limits<double>::quiet_NaN();
};

using CdfFn = std::function<double(double)>;

// D = max_i max(i/n - F(x_(i)), F(x_(i)) - (i-1)/n) over the sorted sample.
// p_value is left NaN; use ks_test or ks_pvalue. Throws on an empty or
// non-finite sample.
KsResult ks_statistic(std::vector<double> samples, const CdfFn& cdf);

// Asymptotic p-value: Kolmogorov tail at
// lambda = (sqrt(n) + 0.12 + 0.11/sqrt(n)) * D, clamped to [0, 1].
double ks_pvalue(double d, std::size_t n);

// ks_statistic with the p-value filled in.
KsResult ks_test(std::vector<double> samples, const CdfFn& cdf);

// Variant for integer-supported distributions (e.g. run lengths). Both the
// ECDF and the model CDF are step functions jumping only at integers, so the
// sup distance is the max over the integer grid of |ECDF(v) - F(v)|; the
// continuous-sample formula above would register the model's own jumps as
// discrepancy. The asymptotic p-value is conservative here.
KsResult ks_test_integer(std::span<const std::size_t> samples,
                         const std::function<double(std::size_t)>& cdf);

}  // namespace windmix
