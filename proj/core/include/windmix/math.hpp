// Scalar special functions used by the distribution code.

#pragma once

#include <span>

namespace windmix::math {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kEulerGamma = 0.57721566490153286061;

// log Gamma(x) for x > 0.
double log_gamma(double x);

// Digamma psi(x) for x > 0. Recurrence shift into x >= 10 followed by the
// Bernoulli asymptotic series; relative error below 1e-12 on (0, 1e4].
double digamma(double x);

// Trigamma psi'(x) for x > 0.
double trigamma(double x);

// Solves digamma(x) = y for x > 0. Two-branch initial guess
// (exp(y) + 0.5 for y >= -2.22, -1/(y + gamma) otherwise) plus Newton steps.
double inv_digamma(double y);

// log(sum(exp(v))) guarded against overflow; -inf for an empty span.
double log_sum_exp(std::span<const double> v);

double normal_pdf(double z);
double normal_cdf(double z);

// Regularized incomplete beta I_x(a, b) via Lentz's continued fraction.
double reg_incomplete_beta(double a, double b, double x);

// Kolmogorov tail Q(lambda) = 2 sum_{j>=1} (-1)^(j-1) exp(-2 j^2 lambda^2),
// clamped to [0, 1]. Small lambda is evaluated through the theta-dual form.
double kolmogorov_q(double lambda);

}  // namespace windmix::math
