#include <doctest.h>

#include <cmath>
#include <vector>

#include "testutil.hpp"
#include "windmix/rng.hpp"
#include "windmix/sequence.hpp"

using namespace windmix;

namespace {

ClassSequence seq_of(std::vector<int> labels) {
  ClassSequence s;
  s.labels = std::move(labels);
  return s;
}

// Markov chain simulator used as the recovery oracle.
std::vector<int> simulate_chain(const std::vector<std::vector<double>>& p,
                                std::size_t steps, Rng& rng) {
  const std::size_t k = p.size();
  std::vector<int> labels(steps);
  std::size_t state = rng.uniform_below(k);
  for (std::size_t t = 0; t < steps; ++t) {
    labels[t] = static_cast<int>(state) + 1;
    const double u = rng.uniform();
    double cum = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      cum += p[state][j];
      if (u < cum) {
        state = j;
        break;
      }
    }
  }
  return labels;
}

}  // namespace

TEST_CASE("transition_matrix hand cases") {
  const TransitionMatrix constant = transition_matrix(seq_of({1, 1, 1, 1}));
  CHECK(constant.k == 1);
  CHECK(constant.count(0, 0) == 3);
  CHECK(constant.prob(0, 0) == 1.0);

  const TransitionMatrix m = transition_matrix(seq_of({1, 1, 2, 2, 1}), 2);
  CHECK(m.count(0, 0) == 1);
  CHECK(m.count(0, 1) == 1);
  CHECK(m.count(1, 0) == 1);
  CHECK(m.count(1, 1) == 1);
  for (std::size_t a = 0; a < 2; ++a)
    for (std::size_t b = 0; b < 2; ++b) CHECK(m.prob(a, b) == 0.5);

  // A class that never appears leaves a flagged zero row.
  const TransitionMatrix z = transition_matrix(seq_of({1, 1, 1}), 3);
  CHECK(z.row_observed[0]);
  CHECK_FALSE(z.row_observed[1]);
  CHECK_FALSE(z.row_observed[2]);
  CHECK(z.prob(1, 0) == 0.0);

  CHECK_THROWS_AS(transition_matrix(seq_of({1})), std::invalid_argument);
  CHECK_THROWS_AS(transition_matrix(seq_of({1, 0})), std::invalid_argument);
}

TEST_CASE("row-stochastic within 1e-12 on random sequences") {
  Rng rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<int> labels(500);
    for (int& l : labels) l = 1 + static_cast<int>(rng.uniform_below(4));
    const TransitionMatrix m = transition_matrix(seq_of(labels));
    for (std::size_t a = 0; a < m.k; ++a) {
      if (!m.row_observed[a]) continue;
      double row = 0.0;
      for (std::size_t b = 0; b < m.k; ++b) row += m.prob(a, b);
      CHECK(std::abs(row - 1.0) <= 1e-12);
    }
  }
}

TEST_CASE("transition recovery from a simulated chain") {
  const std::vector<std::vector<double>> truth{{0.80, 0.15, 0.05},
                                               {0.10, 0.70, 0.20},
                                               {0.25, 0.25, 0.50}};
  Rng rng(13);
  const auto labels = simulate_chain(truth, 100000, rng);
  const TransitionMatrix m = transition_matrix(seq_of(labels));
  for (std::size_t a = 0; a < 3; ++a)
    for (std::size_t b = 0; b < 3; ++b)
      CHECK(std::abs(m.prob(a, b) - truth[a][b]) <= 0.01);
}

TEST_CASE("residence_times run extraction") {
  const ResidenceSummary s = residence_times(seq_of({1, 1, 1, 2, 2, 3}));
  REQUIRE(s.k == 3);
  REQUIRE(s.runs[0].size() == 1);
  CHECK(s.runs[0][0] == 3);
  CHECK(s.runs[1][0] == 2);
  CHECK(s.runs[2][0] == 1);

  const ResidenceSummary single = residence_times(seq_of({2, 2, 2, 2}), 2);
  CHECK(single.runs[1].size() == 1);
  CHECK(single.runs[1][0] == 4);
  CHECK(single.runs[0].empty());

  const ResidenceSummary alt = residence_times(seq_of({1, 2, 1, 2}));
  CHECK(alt.runs[0].size() == 2);
  CHECK(alt.runs[1].size() == 2);
  for (const auto& runs : alt.runs)
    for (std::size_t r : runs) CHECK(r == 1);
}

TEST_CASE("run lengths sum to the sequence length") {
  Rng rng(21);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<int> labels(1 + rng.uniform_below(300));
    for (int& l : labels) l = 1 + static_cast<int>(rng.uniform_below(3));
    const ResidenceSummary s = residence_times(seq_of(labels));
    std::size_t total = 0;
    for (const auto& runs : s.runs)
      for (std::size_t r : runs) total += r;
    CHECK(total == labels.size());
  }
}

TEST_CASE("fit_residence on degenerate and simulated inputs") {
  // Alternating labels: every run is 1, geometric parameter 1.
  ClassSequence alt;
  for (int i = 0; i < 40; ++i) {
    alt.labels.push_back(1);
    alt.labels.push_back(2);
  }
  const auto fits = fit_residence(residence_times(alt), 600.0);
  REQUIRE(fits.size() == 2);
  for (const auto& f : fits) {
    CHECK(f.fitted);
    CHECK(f.geometric_p == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(f.mean_run == doctest::Approx(1.0));
    CHECK(f.exit_rate_per_second == doctest::Approx(1.0 / 600.0));
  }

  // Fewer than 5 runs: skipped with flag.
  const auto skipped =
      fit_residence(residence_times(seq_of({1, 1, 2, 2, 2})), 600.0);
  CHECK_FALSE(skipped[0].fitted);
  CHECK(skipped[0].run_count == 1);
}

TEST_CASE("geometric parameter recovery from a sticky chain") {
  // Self-transition 0.9: mean run 10, parameter 0.1. Collect at least 1e4
  // runs per class.
  const std::vector<std::vector<double>> truth{{0.9, 0.1}, {0.1, 0.9}};
  Rng rng(37);
  const auto labels = simulate_chain(truth, 220000, rng);
  ClassSequence seq = seq_of(labels);
  const ResidenceSummary res = residence_times(seq);
  REQUIRE(res.runs[0].size() > 10000);
  const auto fits = fit_residence(res, 600.0);
  for (const auto& f : fits) {
    REQUIRE(f.fitted);
    CHECK(std::abs(f.geometric_p - 0.1) <= 0.01);
    CHECK(std::abs(f.mean_run - 10.0) <= 1.0);
  }
}

TEST_CASE("residence KS is self-consistent on Markov data") {
  // Runs of a Markov chain are exactly geometric; the fit should look good
  // in at least 90% of trials.
  Rng rng(4100);
  int good = 0;
  const int trials = 100;
  for (int t = 0; t < trials; ++t) {
    const std::vector<std::vector<double>> p{{0.85, 0.15}, {0.25, 0.75}};
    const auto labels = simulate_chain(p, 4000, rng);
    const auto fits = fit_residence(residence_times(seq_of(labels)), 600.0);
    bool ok = true;
    for (const auto& f : fits)
      if (f.fitted) ok = ok && f.ks.p_value > 0.05;
    if (ok) ++good;
  }
  CHECK(good >= 90);
}

TEST_CASE("mean residence of a sticky chain matches 1/(1-q)") {
  const double q = 0.8;
  const std::vector<std::vector<double>> p{{q, 1.0 - q}, {1.0 - q, q}};
  Rng rng(55);
  const auto labels = simulate_chain(p, 100000, rng);
  const ResidenceSummary res = residence_times(seq_of(labels));
  for (const auto& runs : res.runs) {
    double mean = 0.0;
    for (std::size_t r : runs) mean += static_cast<double>(r);
    mean /= static_cast<double>(runs.size());
    // Geometric sd is sqrt(q)/(1-q).
    const double se =
        std::sqrt(q) / (1.0 - q) / std::sqrt(static_cast<double>(runs.size()));
    CHECK(std::abs(mean - 1.0 / (1.0 - q)) <= 3.0 * se);
  }
}
