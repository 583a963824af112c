// Synthetic series and histogram populations with known ground truth; the
// test fixtures realizing the three regime shapes (symmetric mono-modal,
// skewed mono-modal, bimodal) and a Markov-switching scenario.

#pragma once

#include <cstddef>
#include <cstdint>
#include <variant>
#include <vector>

#include "windmix/rng.hpp"
#include "windmix/saem.hpp"
#include "windmix/windows.hpp"

namespace windmix {

struct GaussianRegime {
  double mean = 8.0;
  double sigma = 0.67;
};

// shift + Weibull(scale, shape); a true probability law standing in for a
// skewed mono-modal regime (the Gram-Charlier form is a fit model only, it
// can go negative and cannot be sampled).
struct SkewedRegime {
  double shift = 8.2;
  double scale = 1.45;
  double shape = 1.5;
};

struct BimodalRegime {
  double weight_left = 0.5;
  double scale1 = 6.2, shape1 = 8.0;
  double scale2 = 10.5, shape2 = 9.0;
};

struct RegimeSpec {
  std::variant<GaussianRegime, SkewedRegime, BimodalRegime> family =
      GaussianRegime{};
  std::size_t window_len = 600;
};

struct ScenarioSpec {
  std::vector<RegimeSpec> regimes;
  std::vector<double> transition;  // row-major K x K, rows sum to 1
  std::size_t windows = 0;
  std::uint64_t seed = 0;

  std::size_t k() const { return regimes.size(); }
};

struct RegimeSampleInfo {
  std::size_t clamped = 0;  // negative Gaussian draws clamped to 0 m/s
};

// One window of samples from the regime. Deterministic given the generator
// state.
std::vector<double> sample_regime(const RegimeSpec& spec, Rng& rng,
                                  RegimeSampleInfo* info = nullptr);

struct DirichletPopulation {
  std::vector<Histogram> histograms;
  std::vector<int> labels;  // 1-based ground truth
};

// label_i ~ Categorical(weights), histogram_i ~ components[label_i].
DirichletPopulation sample_dirichlet_population(const MixtureModel& model,
                                                std::size_t n, Rng& rng);

struct Scenario {
  TimeSeries series;
  std::vector<int> labels;  // per window, 1-based
  std::size_t window_len = 600;
  std::size_t clamped_samples = 0;
};

// Markov chain over regimes (uniform initial state), one window per step;
// per-window sample sub-streams are derived from the seed so the output is
// reproducible and order-independent.
Scenario sample_scenario(const ScenarioSpec& spec);

// The built-in three-regime scenario: a calm symmetric regime, a skewed
// strong-wind regime, and a rare bimodal gusty regime with persistent
// switching dynamics.
ScenarioSpec default_scenario(std::size_t windows, std::uint64_t seed,
                              std::size_t window_len = 600);

}  // namespace windmix
