#include "windmix/synth.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "windmix/parallel.hpp"

namespace windmix {

namespace {

constexpr std::uint64_t kScenarioChain = 0x5c5c5c5c00000001ULL;
constexpr std::uint64_t kScenarioWindow = 0x5c5c5c5c00000002ULL;

std::size_t draw_categorical(std::span<const double> probs, Rng& rng) {
  const double u = rng.uniform();
  double cum = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    cum += probs[i];
    if (u < cum) return i;
  }
  return probs.size() - 1;
}

void validate_scenario(const ScenarioSpec& spec) {
  const std::size_t k = spec.k();
  if (k == 0) throw std::invalid_argument("scenario: no regimes");
  if (spec.windows < 1) throw std::invalid_argument("scenario: need windows >= 1");
  if (spec.transition.size() != k * k)
    throw std::invalid_argument("scenario: transition matrix must be K x K");
  for (std::size_t r = 0; r < k; ++r) {
    double row = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
      const double p = spec.transition[r * k + c];
      if (p < 0.0) throw std::invalid_argument("scenario: negative transition");
      row += p;
    }
    if (std::abs(row - 1.0) > 1e-9)
      throw std::invalid_argument("scenario: transition row " +
                                  std::to_string(r + 1) + " does not sum to 1");
  }
}

}  // namespace

std::vector<double> sample_regime(const RegimeSpec& spec, Rng& rng,
                                  RegimeSampleInfo* info) {
  if (spec.window_len < 2)
    throw std::invalid_argument("sample_regime: window_len must be >= 2");
  std::vector<double> out(spec.window_len);
  if (const auto* g = std::get_if<GaussianRegime>(&spec.family)) {
    for (double& x : out) {
      x = g->mean + g->sigma * rng.normal();
      if (x < 0.0) {
        x = 0.0;
        if (info) ++info->clamped;
      }
    }
  } else if (const auto* s = std::get_if<SkewedRegime>(&spec.family)) {
    for (double& x : out) x = s->shift + rng.weibull(s->scale, s->shape);
  } else {
    const auto& b = std::get<BimodalRegime>(spec.family);
    for (double& x : out) {
      if (rng.uniform() < b.weight_left)
        x = rng.weibull(b.scale1, b.shape1);
      else
        x = rng.weibull(b.scale2, b.shape2);
    }
  }
  return out;
}

DirichletPopulation sample_dirichlet_population(const MixtureModel& model,
                                                std::size_t n, Rng& rng) {
  if (model.k() == 0)
    throw std::invalid_argument("sample_dirichlet_population: empty model");
  DirichletPopulation pop;
  pop.histograms.reserve(n);
  pop.labels.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t cls = draw_categorical(model.weights, rng);
    Histogram h;
    h.proportions = sample(model.components[cls], rng);
    h.count = 0;  // synthetic simplex point, no underlying sample count
    pop.histograms.push_back(std::move(h));
    pop.labels.push_back(static_cast<int>(cls) + 1);
  }
  return pop;
}

Scenario sample_scenario(const ScenarioSpec& spec) {
  validate_scenario(spec);
  const std::size_t k = spec.k();
  const std::size_t window_len = spec.regimes[0].window_len;
  for (const auto& r : spec.regimes)
    if (r.window_len != window_len)
      throw std::invalid_argument("scenario: regimes disagree on window_len");

  Scenario out;
  out.window_len = window_len;
  out.labels.resize(spec.windows);

  // Regime path first (cheap, sequential), then per-window samples in
  // parallel with window-keyed sub-streams.
  Rng chain(Rng::derive_seed(spec.seed, kScenarioChain));
  std::size_t state = chain.uniform_below(k);
  for (std::size_t w = 0; w < spec.windows; ++w) {
    out.labels[w] = static_cast<int>(state) + 1;
    state = draw_categorical(
        std::span<const double>(spec.transition).subspan(state * k, k), chain);
  }

  out.series.values.assign(spec.windows * window_len, 0.0);
  out.series.timestamps.resize(spec.windows * window_len);
  for (std::size_t i = 0; i < out.series.timestamps.size(); ++i)
    out.series.timestamps[i] = static_cast<double>(i);

  std::vector<std::size_t> clamped(spec.windows, 0);
  parallel_for(spec.windows, [&](std::size_t w) {
    Rng rng(Rng::derive_seed(spec.seed, kScenarioWindow, w));
    RegimeSampleInfo info;
    const auto cls = static_cast<std::size_t>(out.labels[w] - 1);
    const std::vector<double> samples = sample_regime(spec.regimes[cls], rng, &info);
    std::copy(samples.begin(), samples.end(),
              out.series.values.begin() +
                  static_cast<std::ptrdiff_t>(w * window_len));
    clamped[w] = info.clamped;
  });
  for (std::size_t c : clamped) out.clamped_samples += c;
  return out;
}

ScenarioSpec default_scenario(std::size_t windows, std::uint64_t seed,
                              std::size_t window_len) {
  ScenarioSpec spec;
  spec.windows = windows;
  spec.seed = seed;
  spec.regimes = {
      RegimeSpec{GaussianRegime{8.0, 0.67}, window_len},
      RegimeSpec{SkewedRegime{8.2, 1.45, 1.5}, window_len},
      RegimeSpec{BimodalRegime{0.5, 6.2, 8.0, 10.5, 9.0}, window_len},
  };
  spec.transition = {
      0.90, 0.07, 0.03,  //
      0.15, 0.80, 0.05,  //
      0.20, 0.10, 0.70,
  };
  return spec;
}

}  // namespace windmix
