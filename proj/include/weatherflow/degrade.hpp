#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "weatherflow/geometry.hpp"
#include "weatherflow/grid.hpp"
#include "weatherflow/rng.hpp"

namespace wf {

// Atmospheric scattering parameters: J = I*t(D) + A*(1 - t(D)) with
// t(D) = exp(-beta*D).
struct FogParams {
  std::vector<double> atmospheric_light{0.8}; // size 1 (shared) or per channel
  double beta = 0.7;

  void validate() const {
    if (atmospheric_light.empty())
      throw std::invalid_argument("FogParams: atmospheric light empty");
    for (double a : atmospheric_light)
      if (!(a >= 0.0 && a <= 1.0))
        throw std::invalid_argument("FogParams: A outside [0,1]");
    if (!(beta >= 0.0))
      throw std::invalid_argument("FogParams: beta must be >= 0");
  }

  double light(int channel) const {
    return atmospheric_light[atmospheric_light.size() == 1
                                 ? 0
                                 : static_cast<std::size_t>(channel)];
  }
};

// Additive rain streak layer parameters. All per-streak draws come from the
// seeded stream, so the first k streaks of a (seed, count=k) render are a
// prefix of the (seed, count=k+n) render.
struct RainParams {
  int streak_count = 40;
  double length_min = 8.0, length_max = 20.0;   // px
  double angle_min = -80.0, angle_max = -70.0;  // degrees from horizontal
  double intensity_min = 0.15, intensity_max = 0.5;
  double width_min = 1.0, width_max = 2.0;      // px
  std::uint64_t seed = 0;

  void validate() const {
    if (streak_count < 0)
      throw std::invalid_argument("RainParams: negative streak count");
    if (length_max < length_min || angle_max < angle_min ||
        intensity_max < intensity_min || width_max < width_min)
      throw std::invalid_argument("RainParams: empty range");
    if (intensity_min < 0.0 || intensity_max > 1.0)
      throw std::invalid_argument("RainParams: intensity outside [0,1]");
  }
};

// J = I*t + A*(1-t) with t = exp(-beta*D). Clipped to [0,1] unless the input
// is in linear mode.
inline ImageGrid synth_fog(const ImageGrid &img, const DepthMap &depth,
                           const FogParams &p) {
  p.validate();
  if (img.height != depth.height || img.width != depth.width)
    throw std::invalid_argument("synth_fog: dimension mismatch");
  depth.validate();
  ImageGrid out(img.height, img.width, img.channels, 0.0, img.linear_mode);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      const double t = std::exp(-p.beta * depth.at(y, x));
      for (int c = 0; c < img.channels; ++c) {
        double v = img.at(y, x, c) * t + p.light(c) * (1.0 - t);
        if (!img.linear_mode) v = std::clamp(v, 0.0, 1.0);
        out.at(y, x, c) = v;
      }
    }
  return out;
}

namespace detail {

// Accumulates one anti-aliased line segment into a single-channel layer.
inline void draw_streak(ImageGrid &layer, double cx, double cy, double length,
                        double angle_deg, double intensity, double width) {
  const double a = angle_deg * M_PI / 180.0;
  const double dx = std::cos(a), dy = std::sin(a);
  const double x0 = cx - 0.5 * length * dx, y0 = cy - 0.5 * length * dy;
  const double x1 = cx + 0.5 * length * dx, y1 = cy + 0.5 * length * dy;
  const double pad = 0.5 * width + 1.0;
  const int xs = std::max(0, static_cast<int>(std::floor(std::min(x0, x1) - pad)));
  const int xe = std::min(layer.width - 1,
                          static_cast<int>(std::ceil(std::max(x0, x1) + pad)));
  const int ys = std::max(0, static_cast<int>(std::floor(std::min(y0, y1) - pad)));
  const int ye = std::min(layer.height - 1,
                          static_cast<int>(std::ceil(std::max(y0, y1) + pad)));
  const double len2 = length * length;
  for (int y = ys; y <= ye; ++y)
    for (int x = xs; x <= xe; ++x) {
      // Distance from pixel center to the segment.
      const double px = x - x0, py = y - y0;
      double t = len2 > 0.0 ? ((x1 - x0) * px + (y1 - y0) * py) / len2 : 0.0;
      t = std::clamp(t, 0.0, 1.0);
      const double qx = x0 + t * (x1 - x0) - x, qy = y0 + t * (y1 - y0) - y;
      const double dist = std::sqrt(qx * qx + qy * qy);
      const double cover = std::clamp(0.5 * width + 0.5 - dist, 0.0, 1.0);
      if (cover > 0.0) layer.at(y, x) += intensity * cover;
    }
}

} // namespace detail

// Renders a seeded streak layer D and returns (Y = X + D, D). Y is clipped
// to [0,1] unless X is in linear mode; D is always returned unclipped so the
// additive identity Y - X = D can be checked in linear mode.
inline std::pair<ImageGrid, ImageGrid> synth_rain(const ImageGrid &img,
                                                  const RainParams &p) {
  p.validate();
  ImageGrid layer(img.height, img.width, 1, 0.0, true);
  SplitMix64 rng(p.seed);
  for (int i = 0; i < p.streak_count; ++i) {
    const double cx = rng.uniform(0.0, img.width);
    const double cy = rng.uniform(0.0, img.height);
    const double length = rng.uniform(p.length_min, p.length_max);
    const double angle = rng.uniform(p.angle_min, p.angle_max);
    const double intensity = rng.uniform(p.intensity_min, p.intensity_max);
    const double width = rng.uniform(p.width_min, p.width_max);
    detail::draw_streak(layer, cx, cy, length, angle, intensity, width);
  }
  ImageGrid streaks(img.height, img.width, img.channels, 0.0, true);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < img.channels; ++c)
        streaks.at(y, x, c) = layer.at(y, x);
  ImageGrid out(img.height, img.width, img.channels, 0.0, img.linear_mode);
  for (std::size_t i = 0; i < out.data.size(); ++i) {
    double v = img.data[i] + streaks.data[i];
    if (!img.linear_mode) v = std::clamp(v, 0.0, 1.0);
    out.data[i] = v;
  }
  return {std::move(out), std::move(streaks)};
}

// Full degradation mechanism: J = t*(I + R) + (1-t)*A, with a per-pixel
// transmission grid t in [0,1].
inline ImageGrid synth_composite(const ImageGrid &img, const ImageGrid &rain,
                                 const ImageGrid &trans, double light) {
  if (!img.same_dims(rain) || img.height != trans.height ||
      img.width != trans.width || trans.channels != 1)
    throw std::invalid_argument("synth_composite: dimension mismatch");
  ImageGrid out(img.height, img.width, img.channels, 0.0, img.linear_mode);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      const double t = trans.at(y, x);
      if (t < 0.0 || t > 1.0)
        throw std::invalid_argument("synth_composite: t outside [0,1]");
      for (int c = 0; c < img.channels; ++c) {
        double v = t * (img.at(y, x, c) + rain.at(y, x, c)) + (1.0 - t) * light;
        if (!img.linear_mode) v = std::clamp(v, 0.0, 1.0);
        out.at(y, x, c) = v;
      }
    }
  return out;
}

} // namespace wf
