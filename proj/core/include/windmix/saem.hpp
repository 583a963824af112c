// Finite Dirichlet mixture estimation by stochastic-approximation EM:
// a randomized hard-assignment step whose influence decays along a gamma
// schedule, interleaved with exponential-family maximization and posterior
// updates.

#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "windmix/dirichlet.hpp"
#include "windmix/rng.hpp"
#include "windmix/windows.hpp"

namespace windmix {

// gamma_q = 1 through the burn-in, then (q - burn_in + 1)^(-exponent).
// pure_em pins gamma to 0 and disables the stochastic step entirely.
struct GammaSchedule {
  int burn_in = 20;
  double exponent = 0.6;  // must lie in (0.5, 1]
  bool pure_em = false;

  double value(int q) const;
};

struct ModelMeta {
  std::uint64_t seed = 0;
  int iterations = 0;
  double final_log_likelihood = std::numeric_limits<double>::quiet_NaN();
  GammaSchedule gamma;  // schedule the model was fitted under
};

// K Dirichlet components plus mixing weights on the simplex.
struct MixtureModel {
  std::vector<DirichletComponent> components;
  std::vector<double> weights;
  BinSpec bins;           // set when the model is tied to a bin partition
  double epsilon = 1e-6;  // histogram smoothing expected by this model
  ModelMeta meta;

  std::size_t k() const { return components.size(); }
  std::size_t dims() const { return components.empty() ? 0 : components[0].dims(); }
};

// n x K matrix of posterior class-membership probabilities; rows sum to 1.
class Responsibilities {
 public:
  Responsibilities() = default;
  Responsibilities(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), t_(rows * cols, 0.0) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double at(std::size_t i, std::size_t k) const { return t_[i * cols_ + k]; }
  double& at(std::size_t i, std::size_t k) { return t_[i * cols_ + k]; }
  std::span<const double> row(std::size_t i) const {
    return {t_.data() + i * cols_, cols_};
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> t_;
};

struct SaemConfig {
  std::size_t classes = 2;
  int max_iter = 500;
  GammaSchedule gamma;
  // Minimum class fraction c(n) before a restart; negative selects the
  // default min(0.005, 2K/n).
  double restart_threshold = -1.0;
  double epsilon = 1e-6;  // recorded in the model; inputs arrive pre-smoothed
  double tol = 1e-7;      // log-likelihood plateau tolerance
  int plateau_window = 10;
  int max_restarts = 20;
  std::uint64_t seed = 0;
  // Optional explicit initial assignment (0-based class per histogram);
  // overrides the random initialization on the first attempt.
  std::vector<std::size_t> initial_labels;
  bool farthest_point_init = false;

  double effective_restart_threshold(std::size_t n) const;
};

struct IterationStat {
  int iteration = 0;
  double gamma = 0.0;
  double log_likelihood = 0.0;
  std::vector<double> weights;
};

struct SaemDiagnostics {
  std::vector<IterationStat> trace;  // cleared on every restart
  int restarts = 0;
  int iterations = 0;
  bool converged = false;
  std::size_t clamp_events = 0;
};

struct SaemFit {
  MixtureModel model;
  Responsibilities responsibilities;
  SaemDiagnostics diagnostics;
};

// Posterior membership via log-sum-exp:
//   t_ik = p_k D_k(h_i) / sum_r p_r D_r(h_i).
// Histograms must be strictly positive and match the model's bin count.
Responsibilities responsibilities(const MixtureModel& model,
                                  std::span<const Histogram> histograms);

// One multinomial draw from a responsibility row; returns the 0-based class.
// The inverse CDF walks classes in decreasing-probability order so that a
// relabeling of the classes permutes the outcome rather than changing it.
std::size_t stochastic_assign(std::span<const double> t_row, Rng& rng);

// Pass/fail of the minimum-class-fraction rule: restart (false) iff some
// class holds strictly less than threshold * n of the hard assignments.
bool degeneracy_check(std::span<const std::size_t> assignments, std::size_t k,
                      double threshold);

// Interpolated maximization step:
//   p_k    = (1/n) [(1-gamma) sum_i t_ik + gamma sum_i e_ik]
//   s_kl   = (1-gamma) weighted-mean(log h_l | t_k) + gamma mean(log h_l | e_k)
// followed by digamma inversion per class (initialized from prev). Throws
// DegenerateClassError when a class has zero soft and hard mass.
MixtureModel m_step(std::span<const Histogram> histograms,
                    const Responsibilities& t,
                    std::span<const std::size_t> assignments, double gamma,
                    const MixtureModel& prev,
                    std::size_t* clamp_events = nullptr);

// sum_i log sum_k p_k D_k(h_i)
double log_likelihood(const MixtureModel& model,
                      std::span<const Histogram> histograms);

// Full fitting loop: random initialization, stochastic / maximization /
// estimation steps, restart rule, and the plateau stopping criterion.
// Deterministic given the seed, including under parallel evaluation.
SaemFit fit(std::span<const Histogram> histograms, const SaemConfig& config);

// argmax_k t_ik as 1-based labels; ties resolve to the lowest class index.
std::vector<int> assign_classes(const Responsibilities& t);

}  // namespace windmix
