#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

namespace idex {

/// Median with the even-size convention: midpoint of the two central order
/// statistics. Uses nth_element rather than a full sort.
inline double median(std::span<const double> values) {
  if (values.empty())
    throw std::invalid_argument("median: empty input");
  std::vector<double> buf(values.begin(), values.end());
  const std::size_t n = buf.size();
  const std::size_t k = n / 2;
  std::nth_element(buf.begin(), buf.begin() + static_cast<std::ptrdiff_t>(k),
                   buf.end());
  const double upper = buf[k];
  if (n % 2 == 1) return upper;
  const double lower =
      *std::max_element(buf.begin(), buf.begin() + static_cast<std::ptrdiff_t>(k));
  return 0.5 * (lower + upper);
}

/// Median absolute deviation from the median. Zero for a single element.
inline double median_abs_deviation(std::span<const double> values) {
  const double center = median(values);
  std::vector<double> dev;
  dev.reserve(values.size());
  for (double v : values) dev.push_back(std::abs(v - center));
  return median(dev);
}

inline double mean(std::span<const double> values) {
  if (values.empty())
    throw std::invalid_argument("mean: empty input");
  double s = 0.0;
  for (double v : values) s += v;
  return s / static_cast<double>(values.size());
}

/// Population standard deviation (spread counterpart of the mean consensus).
inline double stddev(std::span<const double> values) {
  const double m = mean(values);
  double s = 0.0;
  for (double v : values) s += (v - m) * (v - m);
  return std::sqrt(s / static_cast<double>(values.size()));
}

}  // namespace idex
