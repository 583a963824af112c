// Windowing of a raw speed series: fixed-length windows, per-window summary
// statistics, and normalized histograms on a fixed bin partition.

#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "windmix/stats.hpp"

namespace windmix {

// Raw sampled series. Timestamps are seconds, non-decreasing; values are
// speeds in m/s, finite and non-negative. Both sequences have equal length.
struct TimeSeries {
  std::vector<double> timestamps;
  std::vector<double> values;
};

// Throws std::invalid_argument when a TimeSeries invariant is violated.
void validate_series(const TimeSeries& series);

// Contiguous bin partition defined by strictly increasing speed breakpoints.
// A default-constructed BinSpec is "unset" (valid() == false); models loaded
// from disk always carry a set one.
class BinSpec {
 public:
  BinSpec() = default;
  explicit BinSpec(std::vector<double> edges);

  // L equal-width bins spanning [lo, hi].
  static BinSpec equal_width(double lo, double hi, std::size_t bins);

  bool valid() const { return edges_.size() >= 2; }
  std::size_t bins() const { return valid() ? edges_.size() - 1 : 0; }
  const std::vector<double>& edges() const { return edges_; }

  // Bin index of x in [0, bins). Out-of-range samples clamp to the extreme
  // bins so that scoring stays total across campaigns.
  std::size_t bin_of(double x) const;

 private:
  std::vector<double> edges_;
};

struct Window {
  std::size_t start = 0;   // index of the first sample in the source series
  std::size_t stride = 0;  // distance between window starts, in samples
  std::vector<double> samples;
};

// Point on the simplex: per-bin proportions summing to 1.
struct Histogram {
  std::vector<double> proportions;
  std::size_t count = 0;  // number of samples binned
};

struct WindowStats {
  double mean = 0.0;    // m/s
  double stddev = 0.0;  // m/s, n-1 denominator
  // sigma / mean; only defined for mean > 0.
  std::optional<double> turbulence_intensity;
  std::optional<double> skewness;
  std::optional<double> ex_kurtosis;
};

// Number of windows produced by the given slicing, without materializing
// them. Zero when the series is shorter than one window.
std::size_t window_count(std::size_t n_samples, std::size_t window_len,
                         std::size_t stride);

// Windows at starts 0, stride, 2*stride, ..., each fully inside the series.
// Throws std::invalid_argument when the series is shorter than window_len.
std::vector<Window> slice_windows(const TimeSeries& series,
                                  std::size_t window_len, std::size_t stride);

// Streaming variant: calls fn(window_index, samples) without copying. Used on
// large sliding censuses where materializing every window is not an option.
void for_each_window(
    std::span<const double> values, std::size_t window_len, std::size_t stride,
    const std::function<void(std::size_t, std::span<const double>)>& fn);

Histogram build_histogram(std::span<const double> samples, const BinSpec& bins);
Histogram build_histogram(const Window& window, const BinSpec& bins);

// (p + eps) / (1 + L*eps): removes empty bins ahead of likelihood
// evaluation. Requires eps > 0.
Histogram smooth_histogram(const Histogram& h, double epsilon);

WindowStats window_stats(std::span<const double> samples);
WindowStats window_stats(const Window& window);

}  // namespace windmix
