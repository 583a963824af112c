#include "windmix/dirichlet.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "windmix/error.hpp"
#include "windmix/math.hpp"

namespace windmix {

DirichletComponent::DirichletComponent(std::vector<double> alpha)
    : alpha_(std::move(alpha)) {
  if (alpha_.size() < 2)
    throw std::invalid_argument("DirichletComponent: need at least 2 bins");
  mass_ = 0.0;
  for (std::size_t l = 0; l < alpha_.size(); ++l) {
    if (!(alpha_[l] > 0.0) || !std::isfinite(alpha_[l]))
      throw std::invalid_argument("DirichletComponent: alpha[" +
                                  std::to_string(l) + "] must be finite > 0");
    mass_ += alpha_[l];
  }
  double lg = 0.0;
  for (double a : alpha_) lg += math::log_gamma(a);
  log_norm_ = math::log_gamma(mass_) - lg;
}

double log_density(const DirichletComponent& c, std::span<const double> x) {
  if (x.size() != c.dims())
    throw std::invalid_argument("log_density: dimension mismatch");
  double acc = c.log_norm();
  for (std::size_t l = 0; l < x.size(); ++l) {
    if (!(x[l] > 0.0))
      throw std::domain_error("log_density: bin " + std::to_string(l) +
                              " is not strictly positive; smooth first");
    acc += (c.alpha()[l] - 1.0) * std::log(x[l]);
  }
  return acc;
}

std::vector<double> sample(const DirichletComponent& c, Rng& rng) {
  std::vector<double> z(c.dims());
  for (int attempt = 0; attempt < kSampleRetryCap; ++attempt) {
    double total = 0.0;
    for (std::size_t l = 0; l < z.size(); ++l) {
      z[l] = rng.gamma(c.alpha()[l]);
      total += z[l];
    }
    if (total > 0.0) {
      for (double& v : z) v /= total;
      return z;
    }
  }
  throw Error("dirichlet sample: gamma draws underflowed to zero " +
              std::to_string(kSampleRetryCap) + " times (alpha too small)");
}

std::pair<double, double> marginal_beta(const DirichletComponent& c,
                                        std::size_t l) {
  if (l >= c.dims())
    throw std::out_of_range("marginal_beta: bin index out of range");
  return {c.alpha()[l], c.mass() - c.alpha()[l]};
}

DirichletMoments moments(const DirichletComponent& c) {
  DirichletMoments m;
  const double a_sum = c.mass();
  m.means.reserve(c.dims());
  m.variances.reserve(c.dims());
  for (double a : c.alpha()) {
    m.means.push_back(a / a_sum);
    m.variances.push_back(a * (a_sum - a) / (a_sum * a_sum * (a_sum + 1.0)));
  }
  return m;
}

DirichletComponent posterior_update(const DirichletComponent& c,
                                    std::span<const double> counts) {
  if (counts.size() != c.dims())
    throw std::invalid_argument("posterior_update: dimension mismatch");
  std::vector<double> next = c.alpha();
  for (std::size_t l = 0; l < counts.size(); ++l) {
    if (counts[l] < 0.0)
      throw std::invalid_argument("posterior_update: negative count at bin " +
                                  std::to_string(l));
    next[l] += counts[l];
  }
  return DirichletComponent(std::move(next));
}

namespace {

double mle_residual(const std::vector<double>& alpha,
                    const std::vector<double>& mean_log) {
  double total = 0.0;
  for (double a : alpha) total += a;
  const double psi_total = math::digamma(total);
  double worst = 0.0;
  for (std::size_t l = 0; l < alpha.size(); ++l)
    worst = std::max(worst,
                     std::abs(math::digamma(alpha[l]) - psi_total - mean_log[l]));
  return worst;
}

}  // namespace

MleResult mle_from_stats(const SufficientStats& stats,
                         const DirichletComponent& init,
                         const MleOptions& options) {
  const std::size_t dims = stats.mean_log.size();
  if (dims != init.dims())
    throw std::invalid_argument("mle_from_stats: dimension mismatch");
  if (!(stats.weight > 0.0))
    throw std::invalid_argument("mle_from_stats: weight must be > 0");
  for (std::size_t l = 0; l < dims; ++l)
    if (!std::isfinite(stats.mean_log[l]))
      throw std::domain_error(
          "mle_from_stats: mean_log[" + std::to_string(l) +
          "] is not finite; histograms must be smoothed first");

  MleResult result;
  result.alpha = init.alpha();
  auto clamp_alpha = [&](double v) {
    if (v < options.alpha_min) {
      ++result.clamp_events;
      return options.alpha_min;
    }
    if (v > options.alpha_max) {
      ++result.clamp_events;
      return options.alpha_max;
    }
    return v;
  };
  for (double& a : result.alpha) a = clamp_alpha(a);

  std::vector<double> next(dims);
  bool converged = false;
  int it = 0;

  // Phase 1: fixed-point sweeps psi(alpha_l) <- psi(A) + mean_log_l.
  // Globally reliable but linearly convergent, so only run until the iterate
  // is in Newton's basin.
  const int fixed_point_budget = options.max_iter * 3 / 5;
  for (; it < fixed_point_budget; ++it) {
    double total = 0.0;
    for (double a : result.alpha) total += a;
    const double psi_total = math::digamma(total);
    double max_update = 0.0;
    for (std::size_t l = 0; l < dims; ++l) {
      next[l] = clamp_alpha(math::inv_digamma(psi_total + stats.mean_log[l]));
      max_update = std::max(max_update, std::abs(next[l] - result.alpha[l]));
    }
    result.alpha = next;
    if (max_update < options.tol) {
      converged = true;
      ++it;
      break;
    }
    if (max_update < 1e-4) {
      ++it;
      break;  // hand over to Newton
    }
  }

  // Phase 2: Newton on g_l = psi(alpha_l) - psi(A) - mean_log_l with the
  // Jacobian diag(psi'(alpha)) - psi'(A) 1 1^T inverted by Sherman-Morrison.
  std::vector<double> grad(dims), inv_diag(dims);
  while (!converged && it < options.max_iter) {
    ++it;
    double total = 0.0;
    for (double a : result.alpha) total += a;
    const double psi_total = math::digamma(total);
    const double tri_total = math::trigamma(total);
    double inv_sum = 0.0, grad_inv_sum = 0.0;
    for (std::size_t l = 0; l < dims; ++l) {
      grad[l] = math::digamma(result.alpha[l]) - psi_total - stats.mean_log[l];
      inv_diag[l] = 1.0 / math::trigamma(result.alpha[l]);
      inv_sum += inv_diag[l];
      grad_inv_sum += grad[l] * inv_diag[l];
    }
    const double denom = 1.0 - tri_total * inv_sum;
    const double shared = tri_total * grad_inv_sum / denom;

    double scale = 1.0;
    for (int backtrack = 0; backtrack < 40; ++backtrack) {
      bool positive = true;
      double max_update = 0.0;
      for (std::size_t l = 0; l < dims; ++l) {
        const double step = inv_diag[l] * (grad[l] + shared);
        next[l] = result.alpha[l] - scale * step;
        max_update = std::max(max_update, std::abs(scale * step));
        if (!(next[l] > 0.0)) {
          positive = false;
          break;
        }
      }
      if (positive) {
        for (std::size_t l = 0; l < dims; ++l) next[l] = clamp_alpha(next[l]);
        result.alpha = next;
        if (max_update < options.tol) converged = true;
        break;
      }
      scale *= 0.5;
    }
  }

  result.iterations = it;
  result.residual = mle_residual(result.alpha, stats.mean_log);
  // Statistics exactly on the attainable frontier (mean_log = log of a
  // simplex point) have their supremum at infinite mass; the iterate then
  // rides the alpha_max clamp with a small but nonzero residual. That is the
  // clamp doing its job, not a failure, so only a genuinely bad residual
  // raises.
  if (!converged && result.residual > 1e-7)
    throw ConvergenceError("mle_from_stats: no convergence after " +
                               std::to_string(it) + " iterations (residual " +
                               std::to_string(result.residual) + ")",
                           result.alpha, result.residual);
  return result;
}

}  // namespace windmix
