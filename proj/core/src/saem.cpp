#include "windmix/saem.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "windmix/error.hpp"
#include "windmix/math.hpp"
#include "windmix/parallel.hpp"

namespace windmix {

namespace {

// Stream tags for deriving independent sub-streams from the root seed.
constexpr std::uint64_t kInitPhase = 0x1000000000000000ULL;
constexpr std::uint64_t kStochasticPhase = 0x2000000000000000ULL;

void check_inputs(const MixtureModel& model,
                  std::span<const Histogram> histograms) {
  if (model.k() == 0) throw std::invalid_argument("mixture model has no components");
  for (std::size_t i = 0; i < histograms.size(); ++i) {
    if (histograms[i].proportions.size() != model.dims())
      throw std::invalid_argument("histogram " + std::to_string(i) +
                                  " bin count mismatches the model");
  }
}

// Shared E-step worker: fills per-histogram posterior rows and the
// log-sum-exp values. Reductions over the lse buffer happen sequentially in
// the caller, so the thread count never changes the result. Histogram logs
// are taken once per row rather than once per component.
void posterior_rows(const MixtureModel& model,
                    std::span<const Histogram> histograms, Responsibilities& t,
                    std::vector<double>& lse) {
  const std::size_t k = model.k();
  const std::size_t dims = model.dims();
  std::vector<double> log_weights(k);
  for (std::size_t c = 0; c < k; ++c)
    log_weights[c] =
        model.weights[c] > 0.0 ? std::log(model.weights[c])
                               : -std::numeric_limits<double>::infinity();
  parallel_for(histograms.size(), [&](std::size_t i) {
    std::vector<double> log_x(dims);
    for (std::size_t l = 0; l < dims; ++l)
      log_x[l] = std::log(histograms[i].proportions[l]);
    std::vector<double> terms(k);
    for (std::size_t c = 0; c < k; ++c) {
      const DirichletComponent& comp = model.components[c];
      double acc = comp.log_norm();
      for (std::size_t l = 0; l < dims; ++l)
        acc += (comp.alpha()[l] - 1.0) * log_x[l];
      terms[c] = log_weights[c] + acc;
    }
    const double m = math::log_sum_exp(terms);
    if (!std::isfinite(m))
      throw std::domain_error("responsibilities: non-finite likelihood for histogram " +
                              std::to_string(i));
    for (std::size_t c = 0; c < k; ++c) t.at(i, c) = std::exp(terms[c] - m);
    lse[i] = m;
  });
}

}  // namespace

double GammaSchedule::value(int q) const {
  if (pure_em) return 0.0;
  if (q < burn_in) return 1.0;
  return std::pow(static_cast<double>(q - burn_in + 1), -exponent);
}

double SaemConfig::effective_restart_threshold(std::size_t n) const {
  if (restart_threshold >= 0.0) return restart_threshold;
  return std::min(0.005, 2.0 * static_cast<double>(classes) /
                             static_cast<double>(n));
}

Responsibilities responsibilities(const MixtureModel& model,
                                  std::span<const Histogram> histograms) {
  check_inputs(model, histograms);
  Responsibilities t(histograms.size(), model.k());
  std::vector<double> lse(histograms.size());
  posterior_rows(model, histograms, t, lse);
  return t;
}

std::size_t stochastic_assign(std::span<const double> t_row, Rng& rng) {
  const double u = rng.uniform();
  std::vector<std::size_t> order(t_row.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (t_row[a] != t_row[b]) return t_row[a] > t_row[b];
    return a < b;
  });
  double cum = 0.0;
  for (std::size_t idx : order) {
    cum += t_row[idx];
    if (u < cum) return idx;
  }
  return order.back();  // u landed in the rounding slack past the last class
}

bool degeneracy_check(std::span<const std::size_t> assignments, std::size_t k,
                      double threshold) {
  if (assignments.empty())
    throw std::invalid_argument("degeneracy_check: no assignments");
  std::vector<std::size_t> counts(k, 0);
  for (std::size_t a : assignments) ++counts.at(a);
  const double n = static_cast<double>(assignments.size());
  for (std::size_t c = 0; c < k; ++c)
    if (static_cast<double>(counts[c]) / n < threshold) return false;
  return true;
}

MixtureModel m_step(std::span<const Histogram> histograms,
                    const Responsibilities& t,
                    std::span<const std::size_t> assignments, double gamma,
                    const MixtureModel& prev, std::size_t* clamp_events) {
  const std::size_t n = histograms.size();
  const std::size_t k = prev.k();
  const std::size_t dims = prev.dims();
  if (t.rows() != n || t.cols() != k)
    throw std::invalid_argument("m_step: responsibility shape mismatch");
  if (gamma > 0.0 && assignments.size() != n)
    throw std::invalid_argument("m_step: assignment count mismatch");
  if (!(gamma >= 0.0 && gamma <= 1.0))
    throw std::invalid_argument("m_step: gamma must be in [0, 1]");

  // Soft and hard accumulators per class: total mass and sums of log h.
  std::vector<double> soft_mass(k, 0.0), hard_mass(k, 0.0);
  std::vector<double> soft_log(k * dims, 0.0), hard_log(k * dims, 0.0);
  std::vector<double> log_h(dims);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t l = 0; l < dims; ++l) {
      const double x = histograms[i].proportions[l];
      if (!(x > 0.0))
        throw std::domain_error("m_step: histogram " + std::to_string(i) +
                                " has a non-positive bin; smooth first");
      log_h[l] = std::log(x);
    }
    for (std::size_t c = 0; c < k; ++c) {
      const double w = t.at(i, c);
      soft_mass[c] += w;
      for (std::size_t l = 0; l < dims; ++l) soft_log[c * dims + l] += w * log_h[l];
    }
    if (gamma > 0.0) {
      const std::size_t c = assignments[i];
      hard_mass[c] += 1.0;
      for (std::size_t l = 0; l < dims; ++l) hard_log[c * dims + l] += log_h[l];
    }
  }

  MixtureModel next;
  next.bins = prev.bins;
  next.epsilon = prev.epsilon;
  next.meta = prev.meta;
  next.weights.resize(k);
  next.components.reserve(k);
  for (std::size_t c = 0; c < k; ++c) {
    const double interp_mass =
        (1.0 - gamma) * soft_mass[c] + gamma * hard_mass[c];
    next.weights[c] = interp_mass / static_cast<double>(n);
    if (!(interp_mass > 0.0))
      throw DegenerateClassError(
          "m_step: class " + std::to_string(c + 1) + " has no mass", c);

    SufficientStats stats;
    stats.mean_log.resize(dims);
    stats.weight = interp_mass;
    for (std::size_t l = 0; l < dims; ++l) {
      const double soft_term =
          soft_mass[c] > 0.0 ? soft_log[c * dims + l] / soft_mass[c] : 0.0;
      const double hard_term =
          hard_mass[c] > 0.0 ? hard_log[c * dims + l] / hard_mass[c] : 0.0;
      if (gamma >= 1.0)
        stats.mean_log[l] = hard_term;
      else if (gamma <= 0.0)
        stats.mean_log[l] = soft_term;
      else if (soft_mass[c] > 0.0 && hard_mass[c] > 0.0)
        stats.mean_log[l] = (1.0 - gamma) * soft_term + gamma * hard_term;
      else  // one side empty: fall back to whichever carries mass
        stats.mean_log[l] = soft_mass[c] > 0.0 ? soft_term : hard_term;
    }
    MleResult mle = mle_from_stats(stats, prev.components[c]);
    if (clamp_events) *clamp_events += static_cast<std::size_t>(mle.clamp_events);
    next.components.emplace_back(std::move(mle.alpha));
  }

  // Guard the weight simplex against rounding drift.
  double weight_total = 0.0;
  for (double w : next.weights) weight_total += w;
  for (double& w : next.weights) w /= weight_total;
  return next;
}

double log_likelihood(const MixtureModel& model,
                      std::span<const Histogram> histograms) {
  check_inputs(model, histograms);
  const std::size_t k = model.k();
  std::vector<double> log_weights(k);
  for (std::size_t c = 0; c < k; ++c)
    log_weights[c] =
        model.weights[c] > 0.0 ? std::log(model.weights[c])
                               : -std::numeric_limits<double>::infinity();
  std::vector<double> lse(histograms.size());
  parallel_for(histograms.size(), [&](std::size_t i) {
    std::vector<double> terms(k);
    for (std::size_t c = 0; c < k; ++c)
      terms[c] = log_weights[c] +
                 log_density(model.components[c], histograms[i].proportions);
    lse[i] = math::log_sum_exp(terms);
  });
  double total = 0.0;
  for (double v : lse) total += v;
  if (!std::isfinite(total))
    throw std::domain_error("log_likelihood: non-finite value");
  return total;
}

std::vector<int> assign_classes(const Responsibilities& t) {
  std::vector<int> labels(t.rows());
  for (std::size_t i = 0; i < t.rows(); ++i) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < t.cols(); ++c)
      if (t.at(i, c) > t.at(i, best)) best = c;
    labels[i] = static_cast<int>(best) + 1;
  }
  return labels;
}

namespace {

std::vector<std::size_t> random_assignment(std::size_t n, std::size_t k,
                                           std::uint64_t seed, int restart) {
  std::vector<std::size_t> labels(n);
  parallel_for(n, [&](std::size_t i) {
    Rng rng(Rng::derive_seed(seed, kInitPhase,
                             static_cast<std::uint64_t>(restart), i));
    labels[i] = rng.uniform_below(k);
  });
  return labels;
}

double l1_distance(const Histogram& a, const Histogram& b) {
  double d = 0.0;
  for (std::size_t l = 0; l < a.proportions.size(); ++l)
    d += std::abs(a.proportions[l] - b.proportions[l]);
  return d;
}

// Seeded farthest-point assignment over histograms (L1 metric); optional
// alternative to the random start for tiny populations.
std::vector<std::size_t> farthest_point_assignment(
    std::span<const Histogram> histograms, std::size_t k, std::uint64_t seed) {
  const std::size_t n = histograms.size();
  Rng rng(Rng::derive_seed(seed, kInitPhase, 0xfa, 0));
  std::vector<std::size_t> centers{rng.uniform_below(n)};
  std::vector<double> nearest(n, std::numeric_limits<double>::infinity());
  while (centers.size() < k) {
    std::size_t best = 0;
    double best_dist = -1.0;
    for (std::size_t i = 0; i < n; ++i) {
      nearest[i] = std::min(nearest[i],
                            l1_distance(histograms[i], histograms[centers.back()]));
      if (nearest[i] > best_dist) {
        best_dist = nearest[i];
        best = i;
      }
    }
    centers.push_back(best);
  }
  std::vector<std::size_t> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < k; ++c)
      if (l1_distance(histograms[i], histograms[centers[c]]) <
          l1_distance(histograms[i], histograms[centers[best]]))
        best = c;
    labels[i] = best;
  }
  return labels;
}

Responsibilities one_hot(std::span<const std::size_t> labels, std::size_t k) {
  Responsibilities t(labels.size(), k);
  for (std::size_t i = 0; i < labels.size(); ++i) t.at(i, labels[i]) = 1.0;
  return t;
}

}  // namespace

SaemFit fit(std::span<const Histogram> histograms, const SaemConfig& config) {
  const std::size_t n = histograms.size();
  const std::size_t k = config.classes;
  if (k < 1) throw std::invalid_argument("fit: need at least one class");
  if (n < k)
    throw std::invalid_argument("fit: fewer histograms than classes");
  const std::size_t dims = histograms[0].proportions.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (histograms[i].proportions.size() != dims)
      throw std::invalid_argument("fit: histogram " + std::to_string(i) +
                                  " has a different bin count");
    for (double p : histograms[i].proportions)
      if (!(p > 0.0))
        throw std::domain_error("fit: histogram " + std::to_string(i) +
                                " has an empty bin; smooth first");
  }
  if (config.max_iter < 1)
    throw std::invalid_argument("fit: need an iteration budget of at least 1");
  if (config.max_restarts < 0)
    throw std::invalid_argument("fit: max_restarts must be >= 0");
  if (!config.gamma.pure_em &&
      !(config.gamma.exponent > 0.5 && config.gamma.exponent <= 1.0))
    throw std::invalid_argument("fit: gamma exponent must lie in (0.5, 1]");
  const double c_n = config.effective_restart_threshold(n);
  if (!(c_n >= 0.0 && c_n < 1.0))
    throw std::invalid_argument("fit: restart threshold must lie in [0, 1)");

  SaemFit out;
  out.model.epsilon = config.epsilon;
  out.model.meta.seed = config.seed;

  for (int restart = 0;; ++restart) {
    if (restart > config.max_restarts)
      throw RestartLimitError("fit: exceeded " +
                                  std::to_string(config.max_restarts) +
                                  " restarts (threshold " + std::to_string(c_n) +
                                  ")",
                              restart - 1);
    out.diagnostics.trace.clear();
    out.diagnostics.restarts = restart;

    std::vector<std::size_t> init_labels;
    if (restart == 0 && !config.initial_labels.empty()) {
      if (config.initial_labels.size() != n)
        throw std::invalid_argument("fit: initial_labels size mismatch");
      init_labels = config.initial_labels;
      for (std::size_t lab : init_labels)
        if (lab >= k) throw std::invalid_argument("fit: initial label out of range");
    } else if (restart == 0 && config.farthest_point_init) {
      init_labels = farthest_point_assignment(histograms, k, config.seed);
    } else {
      init_labels = random_assignment(n, k, config.seed, restart);
    }
    // Every class must start inhabited; re-roll a degenerate random draw.
    if (!degeneracy_check(init_labels, k, std::numeric_limits<double>::min())) {
      if (restart == config.max_restarts)
        throw RestartLimitError("fit: empty class in initial assignment", restart);
      continue;
    }

    Responsibilities t = one_hot(init_labels, k);
    MixtureModel model;
    model.bins = out.model.bins;
    model.epsilon = config.epsilon;
    model.meta.seed = config.seed;
    model.weights.assign(k, 1.0 / static_cast<double>(k));
    model.components.assign(k, DirichletComponent(std::vector<double>(dims, 1.0)));

    std::vector<std::size_t> hard(n, 0);
    std::vector<double> lse(n);
    bool restart_requested = false;
    bool converged = false;
    double best_ll = -std::numeric_limits<double>::infinity();
    MixtureModel best_model = model;
    Responsibilities best_t = t;
    int plateau_run = 0;
    double prev_ll = std::numeric_limits<double>::quiet_NaN();

    for (int q = 0; q < config.max_iter; ++q) {
      const double gamma = config.gamma.value(q);

      if (!config.gamma.pure_em) {
        parallel_for(n, [&](std::size_t i) {
          Rng rng(Rng::derive_seed(config.seed, kStochasticPhase,
                                   (static_cast<std::uint64_t>(restart) << 32) |
                                       static_cast<std::uint64_t>(q),
                                   i));
          hard[i] = stochastic_assign(t.row(i), rng);
        });
        if (!degeneracy_check(hard, k, c_n)) {
          restart_requested = true;
          break;
        }
      }

      try {
        model = m_step(histograms, t, hard, gamma, model,
                       &out.diagnostics.clamp_events);
      } catch (const DegenerateClassError&) {
        restart_requested = true;
        break;
      }

      // Estimation step; the row-wise log-sum-exp values double as the
      // log-likelihood monitor.
      posterior_rows(model, histograms, t, lse);
      double ll = 0.0;
      for (double v : lse) ll += v;

      out.diagnostics.trace.push_back({q, gamma, ll, model.weights});
      out.diagnostics.iterations = q + 1;
      if (ll > best_ll) {
        best_ll = ll;
        best_model = model;
        best_t = t;
      }

      if (q > 0 && std::abs(ll - prev_ll) < config.tol && gamma < 0.05) {
        if (++plateau_run >= config.plateau_window) {
          converged = true;
          prev_ll = ll;
          break;
        }
      } else {
        plateau_run = 0;
      }
      prev_ll = ll;
    }

    if (restart_requested) continue;

    out.diagnostics.converged = converged;
    if (converged) {
      out.model = std::move(model);
      out.responsibilities = std::move(t);
      out.model.meta.final_log_likelihood = prev_ll;
    } else {
      // Budget exhausted: return the best iterate seen, flagged via
      // diagnostics.converged == false.
      out.model = std::move(best_model);
      out.responsibilities = std::move(best_t);
      out.model.meta.final_log_likelihood = best_ll;
    }
    out.model.meta.seed = config.seed;
    out.model.meta.iterations = out.diagnostics.iterations;
    out.model.meta.gamma = config.gamma;
    out.model.epsilon = config.epsilon;
    return out;
  }
}

}  // namespace windmix
