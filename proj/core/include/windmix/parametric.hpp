// Per-class parametric densities: Gaussian, Gram-Charlier type A, and the
// two-component (bi-)Weibull mixture, with moment-based fitting.

#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

namespace windmix {

struct GramCharlierParams {
  double mean = 0.0;
  double stddev = 1.0;
  double skewness = 0.0;
  double ex_kurtosis = 0.0;  // excess form: Gaussian data gives 0
};

struct BiWeibullParams {
  double weight_left = 0.5;  // p in (0, 1)
  double scale1 = 1.0, shape1 = 1.0;  // left component
  double scale2 = 1.0, shape2 = 1.0;  // right component
};

// Probabilists' Hermite polynomial He_n(u), n in 0..4.
double hermite(int degree, double u);

// (1/sigma) * [1 + s/6 He3(z) + k/24 He4(z)] * phi(z), z = (u - mean)/sigma.
// Can go negative for large |s|, |k|; batch evaluation reports a flag.
double gram_charlier_pdf(const GramCharlierParams& p, double u);

// Closed form: Phi(z) - phi(z) [s/6 He2(z) + k/24 He3(z)].
double gram_charlier_cdf(const GramCharlierParams& p, double u);

struct GridEval {
  std::vector<double> values;
  bool has_negative = false;
};
GridEval gram_charlier_pdf_grid(const GramCharlierParams& p,
                                std::span<const double> us);

// Method of moments on the first four sample moments. Needs >= 4 samples;
// zero variance raises windmix::Error.
GramCharlierParams fit_gram_charlier(std::span<const double> samples);

// (mean, variance) of Weibull(scale, shape):
//   mean = c Gamma(1 + 1/k),  var = c^2 [Gamma(1 + 2/k) - Gamma^2(1 + 1/k)].
std::pair<double, double> weibull_moments(double scale, double shape);

// Inverts weibull_moments: bracketed root find for the shape on [0.1, 50],
// then scale = mean / Gamma(1 + 1/k). Throws NoSolutionError (carrying the
// attainable coefficient-of-variation range) when no shape matches.
std::pair<double, double> solve_weibull(double mean, double variance);

double weibull_pdf(double u, double scale, double shape);
double weibull_cdf(double u, double scale, double shape);

double biweibull_pdf(const BiWeibullParams& p, double u);
double biweibull_cdf(const BiWeibullParams& p, double u);

struct BiWeibullFitOptions {
  std::size_t hist_bins = 24;  // histogram used for antimode detection
  int smooth_width = 3;        // moving-average width in bins
};

struct BiWeibullFit {
  BiWeibullParams params;
  double split_speed = 0.0;  // antimode the sample was partitioned at
  // |pooled variance - the mixture variance identity evaluated on the two
  // sides|; shrinks as the sample grows.
  double variance_identity_residual = 0.0;
};

// Splits the sample at the antimode of a smoothed histogram, moment-matches
// a Weibull on each side, and recovers the weight from the pooled mean.
// Throws UnimodalError when no antimode exists between two modes, Error when
// the recovered weight leaves (0, 1).
BiWeibullFit fit_biweibull(std::span<const double> samples,
                           const BiWeibullFitOptions& options = {});

}  // namespace windmix
