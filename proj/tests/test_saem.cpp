#include <doctest.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <vector>

#include "testutil.hpp"
#include "windmix/error.hpp"
#include "windmix/math.hpp"
#include "windmix/rng.hpp"
#include "windmix/saem.hpp"
#include "windmix/synth.hpp"

using namespace windmix;

namespace {

MixtureModel two_component_model() {
  MixtureModel m;
  m.components = {DirichletComponent({20.0, 5.0, 2.0, 1.0}),
                  DirichletComponent({1.0, 2.0, 5.0, 20.0})};
  m.weights = {0.5, 0.5};
  return m;
}

std::vector<Histogram> population(const MixtureModel& model, std::size_t n,
                                  std::uint64_t seed,
                                  std::vector<int>* labels = nullptr) {
  Rng rng(seed);
  DirichletPopulation pop = sample_dirichlet_population(model, n, rng);
  if (labels) *labels = pop.labels;
  return std::move(pop.histograms);
}

}  // namespace

TEST_CASE("responsibilities: single class and symmetric components") {
  MixtureModel single;
  single.components = {DirichletComponent({3.0, 3.0, 3.0})};
  single.weights = {1.0};
  const auto hists = population(single, 20, 1);
  const Responsibilities t = responsibilities(single, hists);
  for (std::size_t i = 0; i < t.rows(); ++i) CHECK(t.at(i, 0) == 1.0);

  MixtureModel twin;
  twin.components = {DirichletComponent({4.0, 2.0, 3.0}),
                     DirichletComponent({4.0, 2.0, 3.0})};
  twin.weights = {0.5, 0.5};
  const Responsibilities tt = responsibilities(twin, hists);
  for (std::size_t i = 0; i < tt.rows(); ++i) {
    CHECK(tt.at(i, 0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(tt.at(i, 1) == doctest::Approx(0.5).epsilon(1e-12));
  }
}

TEST_CASE("responsibility rows sum to 1") {
  const MixtureModel m = two_component_model();
  const auto hists = population(m, 500, 7);
  const Responsibilities t = responsibilities(m, hists);
  for (std::size_t i = 0; i < t.rows(); ++i) {
    double row = 0.0;
    for (std::size_t c = 0; c < t.cols(); ++c) {
      row += t.at(i, c);
      CHECK(t.at(i, c) >= 0.0);
      CHECK(t.at(i, c) <= 1.0);
    }
    CHECK(std::abs(row - 1.0) <= 1e-10);
  }
}

TEST_CASE("well-separated components give confident posteriors") {
  const MixtureModel m = two_component_model();
  Rng rng(42);
  std::size_t confident = 0;
  const std::size_t n = 1000;
  for (std::size_t i = 0; i < n; ++i) {
    Histogram h;
    h.proportions = sample(m.components[0], rng);
    const Responsibilities t =
        responsibilities(m, std::vector<Histogram>{h});
    if (t.at(0, 0) > 0.99) ++confident;
  }
  CHECK(confident >= 950);
}

TEST_CASE("stochastic_assign degenerate, frequency, determinism") {
  Rng rng(3);
  const std::vector<double> sure{1.0, 0.0, 0.0};
  for (int i = 0; i < 50; ++i) CHECK(stochastic_assign(sure, rng) == 0);

  const std::vector<double> even{0.5, 0.5};
  std::size_t first = 0;
  const int draws = 10000;
  for (int i = 0; i < draws; ++i)
    if (stochastic_assign(even, rng) == 0) ++first;
  CHECK(std::abs(static_cast<double>(first) / draws - 0.5) <= 0.015);

  Rng a(77), b(77);
  const std::vector<double> row{0.3, 0.5, 0.2};
  for (int i = 0; i < 200; ++i)
    CHECK(stochastic_assign(row, a) == stochastic_assign(row, b));
}

TEST_CASE("degeneracy_check boundary uses a strict interior") {
  // 1 member of 100 at threshold 0.01: fraction equals the threshold, pass.
  std::vector<std::size_t> assignments(100, 0);
  assignments[0] = 1;
  CHECK(degeneracy_check(assignments, 2, 0.01));
  CHECK_FALSE(degeneracy_check(assignments, 2, 0.02));

  std::vector<std::size_t> balanced(99);
  for (std::size_t i = 0; i < balanced.size(); ++i) balanced[i] = i % 3;
  CHECK(degeneracy_check(balanced, 3, 1.0 / 3.0 - 1e-9));
}

TEST_CASE("m_step endpoints: pure EM and classification updates") {
  const MixtureModel prev = two_component_model();
  const auto hists = population(prev, 400, 11);
  const Responsibilities t = responsibilities(prev, hists);
  std::vector<std::size_t> hard(hists.size());
  for (std::size_t i = 0; i < hists.size(); ++i)
    hard[i] = t.at(i, 0) >= t.at(i, 1) ? 0 : 1;

  // gamma = 0: weights are the responsibility means.
  const MixtureModel em = m_step(hists, t, hard, 0.0, prev);
  double soft0 = 0.0;
  for (std::size_t i = 0; i < hists.size(); ++i) soft0 += t.at(i, 0);
  CHECK(em.weights[0] ==
        doctest::Approx(soft0 / static_cast<double>(hists.size()))
            .epsilon(1e-12));

  // gamma = 1: weights are the hard-assignment fractions.
  const MixtureModel cem = m_step(hists, t, hard, 1.0, prev);
  const double hard0 =
      static_cast<double>(std::count(hard.begin(), hard.end(), 0u));
  CHECK(cem.weights[0] ==
        doctest::Approx(hard0 / static_cast<double>(hists.size()))
            .epsilon(1e-12));

  // Weight simplex preserved in both.
  CHECK(std::abs(em.weights[0] + em.weights[1] - 1.0) <= 1e-12);
  CHECK(std::abs(cem.weights[0] + cem.weights[1] - 1.0) <= 1e-12);
}

TEST_CASE("m_step on identical histograms solves the single-point MLE") {
  Histogram h;
  h.proportions = {0.5, 0.3, 0.2};
  const std::vector<Histogram> hists(50, h);
  MixtureModel prev;
  prev.components = {DirichletComponent({1.0, 1.0, 1.0})};
  prev.weights = {1.0};
  Responsibilities t(hists.size(), 1);
  for (std::size_t i = 0; i < hists.size(); ++i) t.at(i, 0) = 1.0;
  const std::vector<std::size_t> hard(hists.size(), 0);

  const MixtureModel next = m_step(hists, t, hard, 0.0, prev);
  const auto& alpha = next.components[0].alpha();
  double mass = 0.0;
  for (double a : alpha) mass += a;
  // Identical histograms put the statistics exactly on the attainable
  // frontier, so the solution runs to the alpha_max clamp: the digamma
  // residual bottoms out near 1/(2 alpha_min) while the component mean
  // matches the histogram to full precision.
  for (std::size_t l = 0; l < 3; ++l) {
    CHECK(std::abs(math::digamma(alpha[l]) - math::digamma(mass) -
                   std::log(h.proportions[l])) < 1e-7);
    CHECK(std::abs(alpha[l] / mass - h.proportions[l]) < 1e-6);
  }
  CHECK(mass > 1e6);  // rode the clamp upward, as designed
}

TEST_CASE("m_step propagates the restart signal for an empty class") {
  const MixtureModel prev = two_component_model();
  const auto hists = population(prev, 50, 13);
  Responsibilities t(hists.size(), 2);
  for (std::size_t i = 0; i < hists.size(); ++i) t.at(i, 0) = 1.0;  // class 2 empty
  const std::vector<std::size_t> hard(hists.size(), 0);
  CHECK_THROWS_AS((void)m_step(hists, t, hard, 0.0, prev),
                  DegenerateClassError);
}

TEST_CASE("log_likelihood closed form, additivity, and brute force") {
  // K = 1 with uniform alpha: every histogram scores log Gamma(L).
  MixtureModel uniform;
  uniform.components = {DirichletComponent({1.0, 1.0, 1.0, 1.0})};
  uniform.weights = {1.0};
  const auto hists = population(uniform, 25, 3);
  const double expected =
      25.0 * math::log_gamma(4.0);
  CHECK(log_likelihood(uniform, hists) ==
        doctest::Approx(expected).epsilon(1e-12));

  // Duplicating the inputs doubles the value.
  const MixtureModel m = two_component_model();
  const auto small = population(m, 10, 5);
  std::vector<Histogram> doubled = small;
  doubled.insert(doubled.end(), small.begin(), small.end());
  CHECK(log_likelihood(m, doubled) ==
        doctest::Approx(2.0 * log_likelihood(m, small)).epsilon(1e-12));

  // Naive direct summation oracle.
  double naive = 0.0;
  for (const auto& h : small) {
    double mix = 0.0;
    for (std::size_t c = 0; c < m.k(); ++c)
      mix += m.weights[c] *
             std::exp(log_density(m.components[c], h.proportions));
    naive += std::log(mix);
  }
  CHECK(std::abs(log_likelihood(m, small) - naive) < 1e-9);
}

TEST_CASE("fit recovers a 2-component mixture with a 90/10 split") {
  MixtureModel truth = two_component_model();
  truth.weights = {0.9, 0.1};
  std::vector<int> labels;
  const auto hists = population(truth, 2000, 2024, &labels);

  SaemConfig cfg;
  cfg.classes = 2;
  cfg.seed = 1;
  cfg.max_iter = 300;
  const SaemFit result = fit(hists, cfg);

  // Match recovered classes to the truth by weight ordering.
  std::vector<std::size_t> order{0, 1};
  if (result.model.weights[0] < result.model.weights[1])
    std::swap(order[0], order[1]);
  CHECK(std::abs(result.model.weights[order[0]] - 0.9) <= 0.03);
  CHECK(std::abs(result.model.weights[order[1]] - 0.1) <= 0.03);

  for (std::size_t c = 0; c < 2; ++c) {
    const DirichletMoments got = moments(result.model.components[order[c]]);
    const DirichletMoments want = moments(truth.components[c]);
    double l1 = 0.0;
    for (std::size_t l = 0; l < got.means.size(); ++l)
      l1 += std::abs(got.means[l] - want.means[l]);
    CHECK(l1 <= 0.05);
  }

  const std::vector<int> assigned = assign_classes(result.responsibilities);
  CHECK(testutil::matched_accuracy(labels, assigned, 2) >= 0.95);
}

TEST_CASE("fit with K = 1 collapses to the pooled MLE") {
  const MixtureModel truth = two_component_model();
  const auto hists = population(truth, 300, 8);

  SaemConfig cfg;
  cfg.classes = 1;
  cfg.seed = 5;
  const SaemFit result = fit(hists, cfg);

  SufficientStats pooled;
  pooled.mean_log.assign(4, 0.0);
  pooled.weight = static_cast<double>(hists.size());
  for (const auto& h : hists)
    for (std::size_t l = 0; l < 4; ++l)
      pooled.mean_log[l] += std::log(h.proportions[l]);
  for (double& v : pooled.mean_log) v /= static_cast<double>(hists.size());
  const MleResult mle = mle_from_stats(
      pooled, DirichletComponent(std::vector<double>(4, 1.0)));
  for (std::size_t l = 0; l < 4; ++l)
    CHECK(result.model.components[0].alpha()[l] ==
          doctest::Approx(mle.alpha[l]).epsilon(1e-9));
  CHECK(result.model.weights[0] == 1.0);
}

TEST_CASE("EM mode: log-likelihood is monotone") {
  Rng seeder(1000);
  for (int run = 0; run < 20; ++run) {
    MixtureModel truth = two_component_model();
    truth.weights = {0.6, 0.4};
    const auto hists = population(truth, 200, seeder.next_u64());
    SaemConfig cfg;
    cfg.classes = 2;
    cfg.seed = seeder.next_u64();
    cfg.max_iter = 40;
    cfg.gamma.pure_em = true;
    const SaemFit result = fit(hists, cfg);
    REQUIRE(result.diagnostics.trace.size() >= 2);
    for (std::size_t q = 1; q < result.diagnostics.trace.size(); ++q)
      CHECK(result.diagnostics.trace[q].log_likelihood -
                result.diagnostics.trace[q - 1].log_likelihood >=
            -1e-9);
  }
}

TEST_CASE("weights stay on the simplex through every iteration") {
  MixtureModel truth = two_component_model();
  const auto hists = population(truth, 300, 77);
  SaemConfig cfg;
  cfg.classes = 2;
  cfg.seed = 3;
  cfg.max_iter = 60;
  const SaemFit result = fit(hists, cfg);
  for (const auto& stat : result.diagnostics.trace) {
    double total = 0.0;
    for (double w : stat.weights) {
      CHECK(w >= 0.0);
      total += w;
    }
    CHECK(std::abs(total - 1.0) <= 1e-12);
  }
}

TEST_CASE("identical seed and data give a bitwise-identical weights trace") {
  const MixtureModel truth = two_component_model();
  const auto hists = population(truth, 400, 15);
  SaemConfig cfg;
  cfg.classes = 2;
  cfg.seed = 31415;
  cfg.max_iter = 80;
  const SaemFit a = fit(hists, cfg);
  const SaemFit b = fit(hists, cfg);
  REQUIRE(a.diagnostics.trace.size() == b.diagnostics.trace.size());
  for (std::size_t q = 0; q < a.diagnostics.trace.size(); ++q) {
    CHECK(a.diagnostics.trace[q].log_likelihood ==
          b.diagnostics.trace[q].log_likelihood);
    CHECK(a.diagnostics.trace[q].weights == b.diagnostics.trace[q].weights);
  }

  SaemConfig other = cfg;
  other.seed = 31416;
  const SaemFit c = fit(hists, other);
  bool same = a.diagnostics.trace.size() == c.diagnostics.trace.size();
  if (same)
    for (std::size_t q = 0; q < a.diagnostics.trace.size(); ++q)
      same = same && a.diagnostics.trace[q].weights ==
                         c.diagnostics.trace[q].weights;
  CHECK_FALSE(same);
}

TEST_CASE("thread budget does not change the fit (parallel path engaged)") {
  // Large enough to cross the internal serial cutoff so worker threads
  // really run the E-step and the stochastic draws.
  const MixtureModel truth = two_component_model();
  const auto hists = population(truth, 1500, 33);
  SaemConfig cfg;
  cfg.classes = 2;
  cfg.seed = 77;
  cfg.max_iter = 60;

  const auto run_with = [&](const char* threads) {
    setenv("WINDMIX_THREADS", threads, 1);
    SaemFit out = fit(hists, cfg);
    unsetenv("WINDMIX_THREADS");
    return out;
  };
  const SaemFit serial = run_with("1");
  const SaemFit threaded = run_with("4");
  REQUIRE(serial.diagnostics.trace.size() == threaded.diagnostics.trace.size());
  for (std::size_t q = 0; q < serial.diagnostics.trace.size(); ++q) {
    CHECK(serial.diagnostics.trace[q].log_likelihood ==
          threaded.diagnostics.trace[q].log_likelihood);
    CHECK(serial.diagnostics.trace[q].weights ==
          threaded.diagnostics.trace[q].weights);
  }
  for (std::size_t c = 0; c < 2; ++c)
    CHECK(serial.model.components[c].alpha() ==
          threaded.model.components[c].alpha());
}

TEST_CASE("label-permutation equivariance of the whole fit") {
  MixtureModel truth;
  truth.components = {DirichletComponent({18.0, 6.0, 2.0, 1.0}),
                      DirichletComponent({1.0, 6.0, 18.0, 4.0}),
                      DirichletComponent({4.0, 1.0, 2.0, 20.0})};
  truth.weights = {0.4, 0.35, 0.25};
  const auto hists = population(truth, 300, 999);

  // Balanced explicit initial assignment, then the same assignment with
  // classes relabeled by sigma = (2 0 1).
  std::vector<std::size_t> init(hists.size());
  for (std::size_t i = 0; i < init.size(); ++i) init[i] = i % 3;
  const std::array<std::size_t, 3> sigma{2, 0, 1};
  std::vector<std::size_t> permuted(init.size());
  for (std::size_t i = 0; i < init.size(); ++i) permuted[i] = sigma[init[i]];

  SaemConfig cfg;
  cfg.classes = 3;
  cfg.seed = 1234;
  cfg.max_iter = 60;
  cfg.restart_threshold = 0.0;  // keep the run restart-free
  cfg.initial_labels = init;
  const SaemFit base = fit(hists, cfg);

  cfg.initial_labels = permuted;
  const SaemFit relabeled = fit(hists, cfg);

  for (std::size_t c = 0; c < 3; ++c) {
    CHECK(std::abs(base.model.weights[c] -
                   relabeled.model.weights[sigma[c]]) <= 1e-9);
    const auto& a = base.model.components[c].alpha();
    const auto& b = relabeled.model.components[sigma[c]].alpha();
    for (std::size_t l = 0; l < a.size(); ++l)
      CHECK(std::abs(a[l] - b[l]) <= 1e-9 * std::max(1.0, std::abs(a[l])));
  }
}

TEST_CASE("assign_classes argmax and tie rule") {
  Responsibilities t(3, 3);
  t.at(0, 0) = 0.2; t.at(0, 1) = 0.7; t.at(0, 2) = 0.1;
  t.at(1, 0) = 0.5; t.at(1, 1) = 0.5; t.at(1, 2) = 0.0;
  t.at(2, 0) = 0.0; t.at(2, 1) = 0.0; t.at(2, 2) = 1.0;
  const std::vector<int> labels = assign_classes(t);
  CHECK(labels[0] == 2);
  CHECK(labels[1] == 1);  // exact tie resolves to the lowest class index
  CHECK(labels[2] == 3);
}

TEST_CASE("fit input validation and restart exhaustion") {
  const MixtureModel truth = two_component_model();
  const auto hists = population(truth, 30, 21);

  SaemConfig too_many;
  too_many.classes = 31;
  CHECK_THROWS_AS((void)fit(hists, too_many), std::invalid_argument);

  // Unsmoothed input: zero bins must be rejected.
  std::vector<Histogram> raw = hists;
  raw[0].proportions[0] = 0.0;
  SaemConfig cfg;
  cfg.classes = 2;
  CHECK_THROWS_AS((void)fit(raw, cfg), std::domain_error);

  // An impossible restart threshold exhausts the restart budget.
  SaemConfig doomed;
  doomed.classes = 2;
  doomed.seed = 1;
  doomed.restart_threshold = 0.9;
  doomed.max_restarts = 3;
  CHECK_THROWS_AS((void)fit(hists, doomed), RestartLimitError);
}

TEST_CASE("three-class recovery with rare-class weights") {
  // Heavily imbalanced mixtures can trap a cold random start in a
  // duplicate-component minimum; the seeded farthest-point start targets
  // exactly this regime.
  MixtureModel truth;
  truth.components = {DirichletComponent({30.0, 10.0, 4.0, 2.0, 1.0}),
                      DirichletComponent({1.0, 4.0, 30.0, 8.0, 2.0}),
                      DirichletComponent({1.0, 1.0, 3.0, 12.0, 30.0})};
  truth.weights = {0.75, 0.2, 0.05};
  std::vector<int> labels;
  const auto hists = population(truth, 1500, 4242, &labels);

  SaemConfig cfg;
  cfg.classes = 3;
  cfg.seed = 7;
  cfg.max_iter = 300;
  cfg.farthest_point_init = true;
  const SaemFit result = fit(hists, cfg);
  const std::vector<int> assigned = assign_classes(result.responsibilities);
  CHECK(testutil::matched_accuracy(labels, assigned, 3) >= 0.95);
}

TEST_CASE("three-class recovery from a random start at moderate balance") {
  MixtureModel truth;
  truth.components = {DirichletComponent({30.0, 10.0, 4.0, 2.0, 1.0}),
                      DirichletComponent({1.0, 4.0, 30.0, 8.0, 2.0}),
                      DirichletComponent({1.0, 1.0, 3.0, 12.0, 30.0})};
  truth.weights = {0.5, 0.3, 0.2};
  std::vector<int> labels;
  const auto hists = population(truth, 1500, 515, &labels);

  SaemConfig cfg;
  cfg.classes = 3;
  cfg.seed = 2;
  cfg.max_iter = 300;
  const SaemFit result = fit(hists, cfg);
  const std::vector<int> assigned = assign_classes(result.responsibilities);
  CHECK(testutil::matched_accuracy(labels, assigned, 3) >= 0.95);
}
