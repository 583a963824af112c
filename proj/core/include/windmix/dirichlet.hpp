// Dirichlet distribution: density, gamma-normalization sampling, beta
// marginals, moments, conjugate update, and maximum likelihood from
// sufficient statistics.

#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "windmix/rng.hpp"

namespace windmix {

// Parameter vector alpha with every entry > 0. The mass A = sum(alpha) and
// the log normalization constant are cached at construction.
class DirichletComponent {
 public:
  explicit DirichletComponent(std::vector<double> alpha);

  std::size_t dims() const { return alpha_.size(); }
  const std::vector<double>& alpha() const { return alpha_; }
  double mass() const { return mass_; }
  // log Gamma(A) - sum_l log Gamma(alpha_l)
  double log_norm() const { return log_norm_; }

 private:
  std::vector<double> alpha_;
  double mass_;
  double log_norm_;
};

// Weighted averages of log(x_l) over the histograms assigned to a component;
// the Dirichlet's natural sufficient statistic.
struct SufficientStats {
  std::vector<double> mean_log;  // each entry <= 0 for simplex-valued data
  double weight = 0.0;           // total assigned mass
};

struct DirichletMoments {
  std::vector<double> means;      // alpha_l / A
  std::vector<double> variances;  // alpha_l (A - alpha_l) / (A^2 (A + 1))
};

// log density at a strictly positive simplex point. Throws std::domain_error
// naming the offending bin when some x_l <= 0 (smooth histograms first).
double log_density(const DirichletComponent& c, std::span<const double> x);

// Normalization construction: Z_l ~ Gamma(alpha_l, 1), return Z / sum(Z).
// If every draw underflows to zero (tiny alpha), resamples up to
// kSampleRetryCap times and then throws.
inline constexpr int kSampleRetryCap = 100;
std::vector<double> sample(const DirichletComponent& c, Rng& rng);

// Marginal of coordinate l (0-based): Beta(alpha_l, A - alpha_l).
std::pair<double, double> marginal_beta(const DirichletComponent& c,
                                        std::size_t l);

DirichletMoments moments(const DirichletComponent& c);

// Conjugate update for multinomial counts: alpha_l' = alpha_l + counts_l.
DirichletComponent posterior_update(const DirichletComponent& c,
                                    std::span<const double> counts);

struct MleOptions {
  double tol = 1e-10;       // on the max per-coordinate update
  int max_iter = 500;
  double alpha_min = 1e-8;  // clamp bounds during iteration
  double alpha_max = 1e8;
};

struct MleResult {
  std::vector<double> alpha;
  int iterations = 0;
  double residual = 0.0;  // max_l |psi(alpha_l) - psi(A) - mean_log_l|
  int clamp_events = 0;
};

// Solves psi(alpha_l) - psi(sum alpha) = mean_log_l for all l. Fixed-point
// sweeps (digamma inversion) followed by damped Newton steps on the full
// system. Throws ConvergenceError with the last iterate when the budget runs
// out, std::domain_error on non-finite statistics.
MleResult mle_from_stats(const SufficientStats& stats,
                         const DirichletComponent& init,
                         const MleOptions& options = {});

}  // namespace windmix
