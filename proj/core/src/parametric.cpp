#include "windmix/parametric.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "windmix/error.hpp"
#include "windmix/math.hpp"
#include "windmix/stats.hpp"

namespace windmix {

double hermite(int degree, double u) {
  switch (degree) {
    case 0:
      return 1.0;
    case 1:
      return u;
    case 2:
      return u * u - 1.0;
    case 3:
      return u * (u * u - 3.0);
    case 4:
      return u * u * (u * u - 6.0) + 3.0;
    default:
      throw std::invalid_argument("hermite: degree must be in 0..4");
  }
}

namespace {

double gc_polynomial(const GramCharlierParams& p, double z) {
  return 1.0 + p.skewness / 6.0 * hermite(3, z) +
         p.ex_kurtosis / 24.0 * hermite(4, z);
}

void require_positive_sigma(const GramCharlierParams& p) {
  if (!(p.stddev > 0.0))
    throw std::invalid_argument("gram_charlier: stddev must be > 0");
}

}  // namespace

double gram_charlier_pdf(const GramCharlierParams& p, double u) {
  require_positive_sigma(p);
  const double z = (u - p.mean) / p.stddev;
  return gc_polynomial(p, z) * math::normal_pdf(z) / p.stddev;
}

double gram_charlier_cdf(const GramCharlierParams& p, double u) {
  require_positive_sigma(p);
  const double z = (u - p.mean) / p.stddev;
  const double correction = p.skewness / 6.0 * hermite(2, z) +
                            p.ex_kurtosis / 24.0 * hermite(3, z);
  return math::normal_cdf(z) - math::normal_pdf(z) * correction;
}

GridEval gram_charlier_pdf_grid(const GramCharlierParams& p,
                                std::span<const double> us) {
  GridEval out;
  out.values.reserve(us.size());
  for (double u : us) {
    const double v = gram_charlier_pdf(p, u);
    if (v < 0.0) out.has_negative = true;
    out.values.push_back(v);
  }
  return out;
}

GramCharlierParams fit_gram_charlier(std::span<const double> samples) {
  if (samples.size() < 4)
    throw std::invalid_argument("fit_gram_charlier: need at least 4 samples");
  const SampleMoments m = sample_moments(samples);
  // Constant inputs can carry rounding dust in m2; compare against the scale
  // of the data rather than exact zero.
  const double floor = 1e-12 * (1.0 + std::abs(m.mean));
  if (!(m.m2 > floor * floor))
    throw Error("fit_gram_charlier: degenerate input (zero variance)");
  GramCharlierParams p;
  p.mean = m.mean;
  p.stddev = m.stddev;
  p.skewness = *m.skewness;
  p.ex_kurtosis = *m.ex_kurtosis;
  return p;
}

std::pair<double, double> weibull_moments(double scale, double shape) {
  if (!(scale > 0.0) || !(shape > 0.0))
    throw std::invalid_argument("weibull_moments: scale and shape must be > 0");
  const double g1 = std::exp(math::log_gamma(1.0 + 1.0 / shape));
  const double g2 = std::exp(math::log_gamma(1.0 + 2.0 / shape));
  const double mean = scale * g1;
  const double variance = scale * scale * (g2 - g1 * g1);
  return {mean, variance};
}

namespace {

// Squared coefficient of variation as a function of the shape; strictly
// decreasing on (0, inf).
double weibull_cv2(double shape) {
  return std::exp(math::log_gamma(1.0 + 2.0 / shape) -
                  2.0 * math::log_gamma(1.0 + 1.0 / shape)) -
         1.0;
}

}  // namespace

std::pair<double, double> solve_weibull(double mean, double variance) {
  if (!(mean > 0.0) || !(variance > 0.0))
    throw std::invalid_argument("solve_weibull: mean and variance must be > 0");
  constexpr double kLo = 0.1, kHi = 50.0;
  const double target = variance / (mean * mean);
  const double cv2_hi = weibull_cv2(kLo);  // large CV at small shape
  const double cv2_lo = weibull_cv2(kHi);
  if (target > cv2_hi || target < cv2_lo)
    throw NoSolutionError(
        "solve_weibull: coefficient of variation " +
            std::to_string(std::sqrt(target)) + " outside attainable [" +
            std::to_string(std::sqrt(cv2_lo)) + ", " +
            std::to_string(std::sqrt(cv2_hi)) + "] for shape in [0.1, 50]",
        std::sqrt(cv2_lo), std::sqrt(cv2_hi));
  double lo = kLo, hi = kHi;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (weibull_cv2(mid) > target)
      lo = mid;
    else
      hi = mid;
    if (hi - lo < 1e-14 * hi) break;
  }
  const double shape = 0.5 * (lo + hi);
  const double scale = mean / std::exp(math::log_gamma(1.0 + 1.0 / shape));
  return {scale, shape};
}

double weibull_pdf(double u, double scale, double shape) {
  if (u < 0.0) throw std::invalid_argument("weibull_pdf: u must be >= 0");
  if (u == 0.0) {
    if (shape > 1.0) return 0.0;
    if (shape == 1.0) return 1.0 / scale;
    return std::numeric_limits<double>::infinity();
  }
  const double t = u / scale;
  return shape / scale * std::pow(t, shape - 1.0) * std::exp(-std::pow(t, shape));
}

double weibull_cdf(double u, double scale, double shape) {
  if (u < 0.0) throw std::invalid_argument("weibull_cdf: u must be >= 0");
  return -std::expm1(-std::pow(u / scale, shape));
}

double biweibull_pdf(const BiWeibullParams& p, double u) {
  return p.weight_left * weibull_pdf(u, p.scale1, p.shape1) +
         (1.0 - p.weight_left) * weibull_pdf(u, p.scale2, p.shape2);
}

double biweibull_cdf(const BiWeibullParams& p, double u) {
  return p.weight_left * weibull_cdf(u, p.scale1, p.shape1) +
         (1.0 - p.weight_left) * weibull_cdf(u, p.scale2, p.shape2);
}

namespace {

struct SideMoments {
  double mean = 0.0;
  double variance = 0.0;  // n-1 denominator
  std::size_t count = 0;
};

SideMoments side_moments(std::span<const double> xs) {
  SideMoments m;
  m.count = xs.size();
  for (double x : xs) m.mean += x;
  m.mean /= static_cast<double>(xs.size());
  for (double x : xs) m.variance += (x - m.mean) * (x - m.mean);
  m.variance /= static_cast<double>(xs.size() - 1);
  return m;
}

}  // namespace

BiWeibullFit fit_biweibull(std::span<const double> samples,
                           const BiWeibullFitOptions& options) {
  if (samples.size() < 20)
    throw std::invalid_argument("fit_biweibull: need at least 20 samples");
  if (options.hist_bins < 5 || options.smooth_width < 1)
    throw std::invalid_argument("fit_biweibull: bad options");

  const auto [min_it, max_it] =
      std::minmax_element(samples.begin(), samples.end());
  if (!(*max_it > *min_it))
    throw UnimodalError("fit_biweibull: constant sample");

  // Smoothed counts over an equal-width histogram.
  const std::size_t bins = options.hist_bins;
  const double lo = *min_it, width = (*max_it - *min_it) / static_cast<double>(bins);
  std::vector<double> counts(bins, 0.0);
  for (double x : samples) {
    auto b = static_cast<std::size_t>((x - lo) / width);
    if (b >= bins) b = bins - 1;
    counts[b] += 1.0;
  }
  std::vector<double> smooth(bins, 0.0);
  const int half = options.smooth_width / 2;
  for (std::size_t b = 0; b < bins; ++b) {
    double acc = 0.0;
    int used = 0;
    for (int o = -half; o <= half; ++o) {
      const auto j = static_cast<std::ptrdiff_t>(b) + o;
      if (j < 0 || j >= static_cast<std::ptrdiff_t>(bins)) continue;
      acc += counts[static_cast<std::size_t>(j)];
      ++used;
    }
    smooth[b] = acc / used;
  }

  // Two largest local maxima, then the minimum strictly between them.
  std::vector<std::size_t> maxima;
  for (std::size_t b = 0; b < bins; ++b) {
    const double left = b > 0 ? smooth[b - 1] : -1.0;
    const double right = b + 1 < bins ? smooth[b + 1] : -1.0;
    if (smooth[b] > left && smooth[b] >= right) maxima.push_back(b);
  }
  if (maxima.size() < 2)
    throw UnimodalError("fit_biweibull: no antimode (fewer than two modes)");
  std::sort(maxima.begin(), maxima.end(), [&](std::size_t a, std::size_t b) {
    return smooth[a] > smooth[b];
  });
  std::size_t m1 = maxima[0], m2 = maxima[1];
  if (m1 > m2) std::swap(m1, m2);
  if (m2 - m1 < 2)
    throw UnimodalError("fit_biweibull: modes are adjacent, no antimode between");
  std::size_t antimode = m1 + 1;
  for (std::size_t b = m1 + 1; b < m2; ++b)
    if (smooth[b] < smooth[antimode]) antimode = b;

  BiWeibullFit fit;
  fit.split_speed = lo + (static_cast<double>(antimode) + 0.5) * width;

  std::vector<double> left, right;
  for (double x : samples)
    (x < fit.split_speed ? left : right).push_back(x);
  if (left.size() < 5 || right.size() < 5)
    throw UnimodalError("fit_biweibull: antimode split left a degenerate side");

  const SideMoments ml = side_moments(left);
  const SideMoments mr = side_moments(right);
  const SideMoments pooled = side_moments(samples);

  const double p = (pooled.mean - mr.mean) / (ml.mean - mr.mean);
  if (!(p > 0.0) || !(p < 1.0))
    throw Error("fit_biweibull: recovered weight " + std::to_string(p) +
                " outside (0, 1)");

  const auto [c1, k1] = solve_weibull(ml.mean, ml.variance);
  const auto [c2, k2] = solve_weibull(mr.mean, mr.variance);
  fit.params = {p, c1, k1, c2, k2};

  const double delta = ml.mean - mr.mean;
  const double reconstructed =
      p * (ml.variance - (p - 1.0) * delta * delta) - (p - 1.0) * mr.variance;
  fit.variance_identity_residual = std::abs(pooled.variance - reconstructed);
  return fit;
}

}  // namespace windmix
