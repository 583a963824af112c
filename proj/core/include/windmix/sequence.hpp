// Analysis of the time-ordered class labels: transition structure and
// residence (run-length) distributions.

#pragma once

#include <cstddef>
#include <vector>

#include "windmix/gof.hpp"

namespace windmix {

// Time-ordered hard class labels, 1-based (class ids 1..K). Window geometry
// is carried along so residence times can be reported in seconds.
struct ClassSequence {
  std::vector<int> labels;
  std::size_t window_len = 600;  // samples per window (seconds at 1 Hz)
  std::size_t stride = 600;      // stride < window_len means overlap
};

struct TransitionMatrix {
  std::size_t k = 0;
  std::vector<std::size_t> counts;  // row-major K x K
  std::vector<double> probs;        // rows normalized; zero-count rows left 0
  std::vector<bool> row_observed;   // false flags a zero-count row

  std::size_t count(std::size_t from, std::size_t to) const {
    return counts[from * k + to];
  }
  double prob(std::size_t from, std::size_t to) const {
    return probs[from * k + to];
  }
};

struct ResidenceSummary {
  std::size_t k = 0;
  std::size_t window_len = 600;
  std::size_t stride = 600;
  std::vector<std::vector<std::size_t>> runs;  // run lengths per class, in windows
};

struct ResidenceFit {
  bool fitted = false;       // classes with < 5 runs are skipped
  std::size_t run_count = 0;
  double mean_run = 0.0;            // windows
  double geometric_p = 0.0;         // per-window leave probability, 1/mean_run
  double exit_rate_per_second = 0.0;  // continuous-time reading of the same fit
  KsResult ks;  // discrete sup-distance against the fitted geometric CDF
};

// count[a][b] = #{t : label_t = a+1, label_{t+1} = b+1}. Rows with no
// observations are flagged rather than normalized. k = 0 infers K from the
// largest label.
TransitionMatrix transition_matrix(const ClassSequence& seq, std::size_t k = 0);

// Maximal runs of identical labels; the run lengths sum to the sequence
// length.
ResidenceSummary residence_times(const ClassSequence& seq, std::size_t k = 0);

// Geometric fit per class (success probability 1 / mean run length) with a
// Kolmogorov-Smirnov check on the integer grid.
std::vector<ResidenceFit> fit_residence(const ResidenceSummary& summary,
                                        double window_seconds);

}  // namespace windmix
