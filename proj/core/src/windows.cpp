#include "windmix/windows.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace windmix {

SampleMoments sample_moments(std::span<const double> xs) {
  if (xs.size() < 2)
    throw std::invalid_argument("sample_moments: need at least 2 samples");
  const double n = static_cast<double>(xs.size());
  double sum = 0.0;
  for (double x : xs) sum += x;
  const double mean = sum / n;
  double m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (double x : xs) {
    const double d = x - mean;
    const double d2 = d * d;
    m2 += d2;
    m3 += d2 * d;
    m4 += d2 * d2;
  }
  m2 /= n;
  m3 /= n;
  m4 /= n;

  SampleMoments out;
  out.count = xs.size();
  out.mean = mean;
  out.m2 = m2;
  out.m3 = m3;
  out.m4 = m4;
  out.stddev = std::sqrt(m2 * n / (n - 1.0));
  if (m2 > 0.0) {
    out.skewness = m3 / std::pow(m2, 1.5);
    out.ex_kurtosis = m4 / (m2 * m2) - 3.0;
  }
  return out;
}

void validate_series(const TimeSeries& series) {
  if (series.timestamps.size() != series.values.size())
    throw std::invalid_argument(
        "TimeSeries: timestamp and value sequences differ in length");
  for (std::size_t i = 0; i < series.values.size(); ++i) {
    const double v = series.values[i];
    if (!std::isfinite(v) || v < 0.0)
      throw std::invalid_argument("TimeSeries: sample " + std::to_string(i) +
                                  " is negative or not finite");
    if (i > 0 && series.timestamps[i] < series.timestamps[i - 1])
      throw std::invalid_argument("TimeSeries: timestamps decrease at index " +
                                  std::to_string(i));
  }
}

BinSpec::BinSpec(std::vector<double> edges) : edges_(std::move(edges)) {
  if (edges_.size() < 2)
    throw std::invalid_argument("BinSpec: need at least 2 edges");
  for (std::size_t i = 1; i < edges_.size(); ++i)
    if (!(edges_[i] > edges_[i - 1]))
      throw std::invalid_argument(
          "BinSpec: edges must be strictly increasing (violation at index " +
          std::to_string(i) + ")");
}

BinSpec BinSpec::equal_width(double lo, double hi, std::size_t bins) {
  if (!(hi > lo))
    throw std::invalid_argument("BinSpec::equal_width: need hi > lo");
  if (bins < 2)
    throw std::invalid_argument("BinSpec::equal_width: need at least 2 bins");
  std::vector<double> edges(bins + 1);
  const double width = (hi - lo) / static_cast<double>(bins);
  for (std::size_t i = 0; i <= bins; ++i)
    edges[i] = lo + width * static_cast<double>(i);
  edges.back() = hi;  // avoid drift on the last edge
  return BinSpec(std::move(edges));
}

std::size_t BinSpec::bin_of(double x) const {
  const auto it = std::upper_bound(edges_.begin(), edges_.end(), x);
  const auto idx = static_cast<std::ptrdiff_t>(it - edges_.begin()) - 1;
  const auto last = static_cast<std::ptrdiff_t>(bins()) - 1;
  return static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(idx, 0, last));
}

std::size_t window_count(std::size_t n_samples, std::size_t window_len,
                         std::size_t stride) {
  if (window_len < 2 || stride < 1 || n_samples < window_len) return 0;
  return (n_samples - window_len) / stride + 1;
}

std::vector<Window> slice_windows(const TimeSeries& series,
                                  std::size_t window_len, std::size_t stride) {
  if (window_len < 2)
    throw std::invalid_argument("slice_windows: window_len must be >= 2");
  if (stride < 1)
    throw std::invalid_argument("slice_windows: stride must be >= 1");
  const std::size_t n = series.values.size();
  if (n < window_len)
    throw std::invalid_argument("slice_windows: series shorter than one window");
  std::vector<Window> out;
  out.reserve(window_count(n, window_len, stride));
  for (std::size_t start = 0; start + window_len <= n; start += stride) {
    Window w;
    w.start = start;
    w.stride = stride;
    w.samples.assign(series.values.begin() + static_cast<std::ptrdiff_t>(start),
                     series.values.begin() +
                         static_cast<std::ptrdiff_t>(start + window_len));
    out.push_back(std::move(w));
  }
  return out;
}

void for_each_window(
    std::span<const double> values, std::size_t window_len, std::size_t stride,
    const std::function<void(std::size_t, std::span<const double>)>& fn) {
  if (window_len < 2)
    throw std::invalid_argument("for_each_window: window_len must be >= 2");
  if (stride < 1)
    throw std::invalid_argument("for_each_window: stride must be >= 1");
  if (values.size() < window_len)
    throw std::invalid_argument(
        "for_each_window: series shorter than one window");
  std::size_t index = 0;
  for (std::size_t start = 0; start + window_len <= values.size();
       start += stride, ++index)
    fn(index, values.subspan(start, window_len));
}

Histogram build_histogram(std::span<const double> samples,
                          const BinSpec& bins) {
  if (samples.empty())
    throw std::invalid_argument("build_histogram: empty window");
  if (!bins.valid())
    throw std::invalid_argument("build_histogram: unset bin partition");
  Histogram h;
  h.proportions.assign(bins.bins(), 0.0);
  for (double x : samples) h.proportions[bins.bin_of(x)] += 1.0;
  const double n = static_cast<double>(samples.size());
  for (double& p : h.proportions) p /= n;
  h.count = samples.size();
  return h;
}

Histogram build_histogram(const Window& window, const BinSpec& bins) {
  return build_histogram(std::span<const double>(window.samples), bins);
}

Histogram smooth_histogram(const Histogram& h, double epsilon) {
  if (!(epsilon > 0.0))
    throw std::invalid_argument("smooth_histogram: epsilon must be > 0");
  Histogram out;
  out.count = h.count;
  out.proportions.reserve(h.proportions.size());
  const double denom =
      1.0 + static_cast<double>(h.proportions.size()) * epsilon;
  for (double p : h.proportions) out.proportions.push_back((p + epsilon) / denom);
  return out;
}

WindowStats window_stats(std::span<const double> samples) {
  const SampleMoments m = sample_moments(samples);
  WindowStats s;
  s.mean = m.mean;
  s.stddev = m.stddev;
  if (m.mean > 0.0) s.turbulence_intensity = m.stddev / m.mean;
  s.skewness = m.skewness;
  s.ex_kurtosis = m.ex_kurtosis;
  return s;
}

WindowStats window_stats(const Window& window) {
  return window_stats(std::span<const double>(window.samples));
}

}  // namespace windmix
