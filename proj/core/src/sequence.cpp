#include "windmix/sequence.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace windmix {

namespace {

std::size_t checked_class_count(const ClassSequence& seq, std::size_t k) {
  if (seq.labels.empty())
    throw std::invalid_argument("sequence: empty label sequence");
  int top = 0;
  for (int label : seq.labels) {
    if (label < 1)
      throw std::invalid_argument("sequence: labels must be >= 1");
    top = std::max(top, label);
  }
  if (k == 0) return static_cast<std::size_t>(top);
  if (static_cast<std::size_t>(top) > k)
    throw std::invalid_argument("sequence: label " + std::to_string(top) +
                                " exceeds the declared class count");
  return k;
}

}  // namespace

TransitionMatrix transition_matrix(const ClassSequence& seq, std::size_t k) {
  if (seq.labels.size() < 2)
    throw std::invalid_argument("transition_matrix: need at least 2 labels");
  const std::size_t classes = checked_class_count(seq, k);
  TransitionMatrix m;
  m.k = classes;
  m.counts.assign(classes * classes, 0);
  m.probs.assign(classes * classes, 0.0);
  m.row_observed.assign(classes, false);
  for (std::size_t t = 0; t + 1 < seq.labels.size(); ++t) {
    const auto a = static_cast<std::size_t>(seq.labels[t] - 1);
    const auto b = static_cast<std::size_t>(seq.labels[t + 1] - 1);
    ++m.counts[a * classes + b];
  }
  for (std::size_t a = 0; a < classes; ++a) {
    std::size_t row_total = 0;
    for (std::size_t b = 0; b < classes; ++b) row_total += m.counts[a * classes + b];
    if (row_total == 0) continue;
    m.row_observed[a] = true;
    for (std::size_t b = 0; b < classes; ++b)
      m.probs[a * classes + b] = static_cast<double>(m.counts[a * classes + b]) /
                                 static_cast<double>(row_total);
  }
  return m;
}

ResidenceSummary residence_times(const ClassSequence& seq, std::size_t k) {
  const std::size_t classes = checked_class_count(seq, k);
  ResidenceSummary s;
  s.k = classes;
  s.window_len = seq.window_len;
  s.stride = seq.stride;
  s.runs.assign(classes, {});
  std::size_t run_start = 0;
  for (std::size_t t = 1; t <= seq.labels.size(); ++t) {
    if (t == seq.labels.size() || seq.labels[t] != seq.labels[run_start]) {
      const auto cls = static_cast<std::size_t>(seq.labels[run_start] - 1);
      s.runs[cls].push_back(t - run_start);
      run_start = t;
    }
  }
  return s;
}

std::vector<ResidenceFit> fit_residence(const ResidenceSummary& summary,
                                        double window_seconds) {
  if (!(window_seconds > 0.0))
    throw std::invalid_argument("fit_residence: window_seconds must be > 0");
  std::vector<ResidenceFit> fits(summary.k);
  for (std::size_t cls = 0; cls < summary.k; ++cls) {
    const auto& runs = summary.runs[cls];
    ResidenceFit& f = fits[cls];
    f.run_count = runs.size();
    if (runs.size() < 5) continue;  // skipped, flagged by fitted == false
    double total = 0.0;
    for (std::size_t r : runs) total += static_cast<double>(r);
    f.mean_run = total / static_cast<double>(runs.size());
    f.geometric_p = 1.0 / f.mean_run;
    f.exit_rate_per_second = 1.0 / (f.mean_run * window_seconds);
    const double q = f.geometric_p;
    f.ks = ks_test_integer(runs, [q](std::size_t v) {
      // P(run <= v) for a geometric on {1, 2, ...}
      return v == 0 ? 0.0 : 1.0 - std::pow(1.0 - q, static_cast<double>(v));
    });
    f.fitted = true;
  }
  return fits;
}

}  // namespace windmix
