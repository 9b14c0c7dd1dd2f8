#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "weatherflow/grid.hpp"
#include "weatherflow/rng.hpp"

namespace wf {

inline constexpr int kFeatureChannels = 3; // luminance, Ix, Iy

// Per-channel affine encoder parameters: gains then biases.
struct ParamVector {
  std::vector<double> values;

  ParamVector() : values{1.0, 1.0, 1.0, 0.0, 0.0, 0.0} {}
  explicit ParamVector(std::vector<double> v) : values(std::move(v)) {}

  static ParamVector identity() { return ParamVector{}; }

  double gain(int c) const { return values[static_cast<std::size_t>(c)]; }
  double bias(int c) const {
    return values[static_cast<std::size_t>(c) + kFeatureChannels];
  }

  void validate() const {
    if (values.size() != 2 * kFeatureChannels)
      throw std::invalid_argument("ParamVector: wrong length");
    for (double v : values)
      if (!std::isfinite(v))
        throw std::invalid_argument("ParamVector: non-finite entry");
    for (int c = 0; c < kFeatureChannels; ++c)
      if (!(gain(c) > 0.0))
        throw std::invalid_argument("ParamVector: gains must be > 0");
  }
};

struct FeatureMap {
  int height = 0;
  int width = 0;
  int channels = kFeatureChannels;
  std::vector<double> data;

  FeatureMap() = default;
  FeatureMap(int h, int w)
      : height(h), width(w),
        data(static_cast<std::size_t>(h) * w * kFeatureChannels, 0.0) {}

  double &at(int y, int x, int c) {
    return data[(static_cast<std::size_t>(y) * width + x) * kFeatureChannels +
                c];
  }
  double at(int y, int x, int c) const {
    return data[(static_cast<std::size_t>(y) * width + x) * kFeatureChannels +
                c];
  }
};

// Analytic stand-in encoder: channels [luminance, Ix, Iy], each mapped
// through the per-channel affine parameters.
inline FeatureMap encode_features(const ImageGrid &img,
                                  const ParamVector &theta) {
  theta.validate();
  const ImageGrid lum = to_luminance(img);
  FeatureMap f(img.height, img.width);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      const int xm = detail::clamp_idx(x - 1, img.width);
      const int xp = detail::clamp_idx(x + 1, img.width);
      const int ym = detail::clamp_idx(y - 1, img.height);
      const int yp = detail::clamp_idx(y + 1, img.height);
      const double raw[kFeatureChannels] = {
          lum.at(y, x), 0.5 * (lum.at(y, xp) - lum.at(y, xm)),
          0.5 * (lum.at(yp, x) - lum.at(ym, x))};
      for (int c = 0; c < kFeatureChannels; ++c)
        f.at(y, x, c) = raw[c] * theta.gain(c) + theta.bias(c);
    }
  return f;
}

// Per-pixel correlation over a (2r+1)^2 displacement window, cosine
// similarity mapped to [0,1] via (c+1)/2. Out-of-bounds neighbors get 0.
struct CostVolume {
  int height = 0;
  int width = 0;
  int radius = 0;
  std::vector<double> corr;

  int window() const { return 2 * radius + 1; }
  int displacements() const { return window() * window(); }

  double at(int y, int x, int k) const {
    return corr[(static_cast<std::size_t>(y) * width + x) * displacements() +
                k];
  }
  double &at(int y, int x, int k) {
    return corr[(static_cast<std::size_t>(y) * width + x) * displacements() +
                k];
  }
  // Displacement index k covers dy = k / window() - radius,
  // dx = k % window() - radius.
};

inline CostVolume cost_volume(const FeatureMap &f1, const FeatureMap &f2,
                              int radius) {
  if (f1.height != f2.height || f1.width != f2.width)
    throw std::invalid_argument("cost_volume: dimension mismatch");
  if (radius < 1) throw std::invalid_argument("cost_volume: radius must be >= 1");
  CostVolume cv;
  cv.height = f1.height;
  cv.width = f1.width;
  cv.radius = radius;
  cv.corr.assign(static_cast<std::size_t>(cv.height) * cv.width *
                     cv.displacements(),
                 0.0);
  const int win = cv.window();
  for (int y = 0; y < cv.height; ++y)
    for (int x = 0; x < cv.width; ++x) {
      double n1 = 0.0;
      for (int c = 0; c < kFeatureChannels; ++c)
        n1 += f1.at(y, x, c) * f1.at(y, x, c);
      n1 = std::sqrt(n1);
      for (int dy = -radius; dy <= radius; ++dy)
        for (int dx = -radius; dx <= radius; ++dx) {
          const int k = (dy + radius) * win + (dx + radius);
          const int yy = y + dy, xx = x + dx;
          if (yy < 0 || yy >= cv.height || xx < 0 || xx >= cv.width) continue;
          double n2 = 0.0, dot = 0.0;
          for (int c = 0; c < kFeatureChannels; ++c) {
            n2 += f2.at(yy, xx, c) * f2.at(yy, xx, c);
            dot += f1.at(y, x, c) * f2.at(yy, xx, c);
          }
          n2 = std::sqrt(n2);
          const double cosine =
              (n1 < 1e-12 || n2 < 1e-12) ? 0.0 : dot / (n1 * n2);
          cv.at(y, x, k) = 0.5 * (cosine + 1.0);
        }
    }
  return cv;
}

// Smoothed k-bin distribution of M seeded correlation samples:
// p_i = (m_i + 1) / (M + k).
struct CorrelationHistogram {
  int bins = 0;
  std::vector<double> thresholds;    // k-1 ascending cut points
  std::vector<std::int64_t> counts;  // per bin, sums to M
  std::vector<double> probabilities; // (m+1)/(M+k), strictly positive
};

namespace detail {

// Neumaier-compensated summation: the result is the correctly rounded sum
// for the magnitudes involved here.
inline double compensated_sum(const std::vector<double> &values) {
  double sum = 0.0, comp = 0.0;
  for (double v : values) {
    const double t = sum + v;
    comp += std::abs(sum) >= std::abs(v) ? (sum - t) + v : (v - t) + sum;
    sum = t;
  }
  return sum + comp;
}

} // namespace detail

inline CorrelationHistogram correlation_histogram(const CostVolume &cv, int m,
                                                  int k, std::uint64_t seed) {
  if (m < 1 || k < 2)
    throw std::invalid_argument("correlation_histogram: bad M or k");
  if (cv.corr.empty())
    throw std::invalid_argument("correlation_histogram: empty cost volume");
  CorrelationHistogram h;
  h.bins = k;
  for (int i = 1; i < k; ++i)
    h.thresholds.push_back(static_cast<double>(i) / k);
  h.counts.assign(k, 0);
  SplitMix64 rng(seed);
  for (int i = 0; i < m; ++i) {
    const double v = cv.corr[rng.below(cv.corr.size())];
    // Bin i covers [i/k, (i+1)/k), last bin closed at 1.
    const int bin = std::min(k - 1, static_cast<int>(v * k));
    ++h.counts[bin];
  }
  h.probabilities.resize(k);
  for (int i = 0; i < k; ++i)
    h.probabilities[i] =
        static_cast<double>(h.counts[i] + 1) / static_cast<double>(m + k);
  // Close the distribution on the fullest bin so the probabilities sum to
  // exactly 1 under compensated summation; the correction is at most one ulp
  // and preserves the (count+1)/(M+k) values of every other bin.
  int fullest = 0;
  for (int i = 1; i < k; ++i)
    if (h.counts[i] > h.counts[fullest]) fullest = i;
  std::vector<double> others;
  others.reserve(static_cast<std::size_t>(k) - 1);
  for (int i = 0; i < k; ++i)
    if (i != fullest) others.push_back(h.probabilities[i]);
  h.probabilities[fullest] = 1.0 - detail::compensated_sum(others);
  return h;
}

// theta_r <- theta_r * lambda + theta_s * (1 - lambda).
inline ParamVector ema_update(const ParamVector &theta_r,
                              const ParamVector &theta_s, double lambda) {
  if (theta_r.values.size() != theta_s.values.size())
    throw std::invalid_argument("ema_update: length mismatch");
  if (!(lambda >= 0.0 && lambda <= 1.0))
    throw std::invalid_argument("ema_update: lambda outside [0,1]");
  ParamVector out = theta_r;
  for (std::size_t i = 0; i < out.values.size(); ++i)
    out.values[i] =
        theta_r.values[i] * lambda + theta_s.values[i] * (1.0 - lambda);
  return out;
}

} // namespace wf
