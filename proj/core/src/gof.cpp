#include "windmix/gof.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "windmix/math.hpp"

namespace windmix {

KsResult ks_statistic(std::vector<double> samples, const CdfFn& cdf) {
  if (samples.empty())
    throw std::invalid_argument("ks_statistic: empty sample");
  for (double x : samples)
    if (!std::isfinite(x))
      throw std::invalid_argument("ks_statistic: non-finite sample value");
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double f = cdf(samples[i]);
    const double hi = static_cast<double>(i + 1) / n - f;
    const double lo = f - static_cast<double>(i) / n;
    d = std::max({d, hi, lo});
  }
  KsResult r;
  r.statistic = d;
  r.n = samples.size();
  return r;
}

double ks_pvalue(double d, std::size_t n) {
  if (n < 1) throw std::invalid_argument("ks_pvalue: n must be >= 1");
  if (d <= 0.0) return 1.0;
  const double sqrt_n = std::sqrt(static_cast<double>(n));
  const double lambda = (sqrt_n + 0.12 + 0.11 / sqrt_n) * d;
  return math::kolmogorov_q(lambda);
}

KsResult ks_test(std::vector<double> samples, const CdfFn& cdf) {
  KsResult r = ks_statistic(std::move(samples), cdf);
  r.p_value = ks_pvalue(r.statistic, r.n);
  return r;
}

KsResult ks_test_integer(std::span<const std::size_t> samples,
                         const std::function<double(std::size_t)>& cdf) {
  if (samples.empty())
    throw std::invalid_argument("ks_test_integer: empty sample");
  const std::size_t top = *std::max_element(samples.begin(), samples.end());
  std::vector<std::size_t> counts(top + 1, 0);
  for (std::size_t v : samples) ++counts[v];
  const double n = static_cast<double>(samples.size());
  double d = 0.0;
  double cum = 0.0;
  for (std::size_t v = 0; v <= top; ++v) {
    cum += static_cast<double>(counts[v]);
    d = std::max(d, std::abs(cum / n - cdf(v)));
  }
  KsResult r;
  r.statistic = d;
  r.n = samples.size();
  r.p_value = ks_pvalue(d, r.n);
  return r;
}

}  // namespace windmix
