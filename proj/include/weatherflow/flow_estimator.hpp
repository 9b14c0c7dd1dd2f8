#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "weatherflow/correlation.hpp"
#include "weatherflow/grid.hpp"

namespace wf {

struct EstimatorConfig {
  int levels = 3;
  int radius = 4;
  int median_window = 3;
  ParamVector theta = ParamVector::identity();

  void validate() const {
    if (levels < 1) throw std::invalid_argument("EstimatorConfig: levels < 1");
    if (radius < 1) throw std::invalid_argument("EstimatorConfig: radius < 1");
    if (median_window < 1 || median_window % 2 == 0)
      throw std::invalid_argument("EstimatorConfig: median window must be odd");
    theta.validate();
  }
};

namespace detail {

inline ImageGrid feature_as_grid(const FeatureMap &f) {
  ImageGrid g(f.height, f.width, kFeatureChannels, 0.0, true);
  g.data = f.data;
  return g;
}

inline FeatureMap warp_features(const FeatureMap &f, const FlowField &flow) {
  const ImageGrid grid = feature_as_grid(f);
  FeatureMap out(f.height, f.width);
  for (int y = 0; y < f.height; ++y)
    for (int x = 0; x < f.width; ++x) {
      const SampleResult s =
          bilinear_sample(grid, x + flow.u(y, x), y + flow.v(y, x));
      for (int c = 0; c < kFeatureChannels; ++c) out.at(y, x, c) = s.value[c];
    }
  return out;
}

inline FlowField median_filter(const FlowField &flow, int window) {
  if (window <= 1) return flow;
  const int half = window / 2;
  FlowField out(flow.height, flow.width);
  std::vector<double> vals;
  vals.reserve(static_cast<std::size_t>(window) * window);
  for (int comp = 0; comp < 2; ++comp)
    for (int y = 0; y < flow.height; ++y)
      for (int x = 0; x < flow.width; ++x) {
        vals.clear();
        for (int dy = -half; dy <= half; ++dy)
          for (int dx = -half; dx <= half; ++dx) {
            const int yy = clamp_idx(y + dy, flow.height);
            const int xx = clamp_idx(x + dx, flow.width);
            vals.push_back(comp == 0 ? flow.u(yy, xx) : flow.v(yy, xx));
          }
        std::nth_element(vals.begin(), vals.begin() + vals.size() / 2,
                         vals.end());
        (comp == 0 ? out.u(y, x) : out.v(y, x)) = vals[vals.size() / 2];
      }
  return out;
}

// Bilinear resize to (th, tw) with components scaled by the width ratio
// (pyramid levels differ by a factor of 2).
inline FlowField upsample_flow(const FlowField &flow, int th, int tw) {
  FlowField out(th, tw);
  const double sy = static_cast<double>(flow.height) / th;
  const double sx = static_cast<double>(flow.width) / tw;
  ImageGrid grid(flow.height, flow.width, 2, 0.0, true);
  grid.data = flow.uv;
  for (int y = 0; y < th; ++y)
    for (int x = 0; x < tw; ++x) {
      const SampleResult s = bilinear_sample(grid, (x + 0.5) * sx - 0.5,
                                             (y + 0.5) * sy - 0.5);
      out.u(y, x) = s.value[0] / sx;
      out.v(y, x) = s.value[1] / sy;
    }
  return out;
}

// Box-average every displacement slice over a (2*half+1)^2 neighborhood.
// Pointwise three-channel cosines are too noisy to rank displacements on
// their own; pooling them turns the volume into patch-level evidence.
inline CostVolume aggregate_cost(const CostVolume &cv, int half) {
  if (half < 1) return cv;
  CostVolume out = cv;
  const int disp = cv.displacements();
  const double norm = static_cast<double>(2 * half + 1) * (2 * half + 1);
  for (int y = 0; y < cv.height; ++y)
    for (int x = 0; x < cv.width; ++x)
      for (int k = 0; k < disp; ++k) {
        double s = 0.0;
        for (int dy = -half; dy <= half; ++dy)
          for (int dx = -half; dx <= half; ++dx)
            s += cv.at(clamp_idx(y + dy, cv.height),
                       clamp_idx(x + dx, cv.width), k);
        out.at(y, x, k) = s / norm;
      }
  return out;
}

// 1D parabola fit through (c_m, c0, c_p); offset clamped to [-0.5, 0.5].
inline double parabola_offset(double cm, double c0, double cp) {
  const double denom = cm - 2.0 * c0 + cp;
  if (denom >= -1e-12) return 0.0;
  return std::clamp(0.5 * (cm - cp) / denom, -0.5, 0.5);
}

} // namespace detail

// Classical coarse-to-fine estimator: per level, encode both frames, warp
// the second feature map by the current flow, build a cost volume, take the
// winner displacement with parabolic sub-pixel refinement, then median
// filter. Texture-free pixels (center correlation already maximal) keep a
// zero-motion update.
inline FlowField estimate_flow(const ImageGrid &img1, const ImageGrid &img2,
                               const EstimatorConfig &cfg = {}) {
  if (!img1.same_dims(img2))
    throw std::invalid_argument("estimate_flow: dimension mismatch");
  cfg.validate();
  if (std::min(img1.height, img1.width) < (1 << cfg.levels))
    throw std::invalid_argument("estimate_flow: image too small for pyramid");

  std::vector<ImageGrid> pyr1{img1}, pyr2{img2};
  for (int l = 1; l < cfg.levels; ++l) {
    pyr1.push_back(downsample2(pyr1.back()));
    pyr2.push_back(downsample2(pyr2.back()));
  }

  FlowField flow(pyr1.back().height, pyr1.back().width);
  for (int l = cfg.levels - 1; l >= 0; --l) {
    const FeatureMap f1 = encode_features(pyr1[l], cfg.theta);
    const FeatureMap f2 = encode_features(pyr2[l], cfg.theta);
    bool have_carry = false;
    for (double c : flow.uv)
      if (c != 0.0) have_carry = true;

    // Candidate A searches around the carried flow; candidate B restarts
    // from zero so that pixels whose carried estimate drifted outside the
    // search range can still re-lock at this level.
    const FeatureMap f2w =
        have_carry ? detail::warp_features(f2, flow) : f2;
    const CostVolume cv_carry =
        detail::aggregate_cost(cost_volume(f1, f2w, cfg.radius), 2);
    const CostVolume cv_zero =
        have_carry
            ? detail::aggregate_cost(cost_volume(f1, f2, cfg.radius), 2)
            : cv_carry;

    const int win = cv_carry.window();
    const int center = cfg.radius * win + cfg.radius;
    const auto winner = [&](const CostVolume &cv, int y, int x) {
      int best = 0;
      double best_corr = cv.at(y, x, 0);
      for (int k = 1; k < cv.displacements(); ++k)
        if (cv.at(y, x, k) > best_corr) {
          best_corr = cv.at(y, x, k);
          best = k;
        }
      return std::pair<int, double>{best, best_corr};
    };
    const auto refined = [&](const CostVolume &cv, int y, int x, int best,
                             double best_corr) {
      const int by = best / win, bx = best % win;
      double du = bx - cfg.radius, dv = by - cfg.radius;
      if (bx > 0 && bx < win - 1)
        du += detail::parabola_offset(cv.at(y, x, best - 1), best_corr,
                                      cv.at(y, x, best + 1));
      if (by > 0 && by < win - 1)
        dv += detail::parabola_offset(cv.at(y, x, best - win), best_corr,
                                      cv.at(y, x, best + win));
      return std::pair<double, double>{du, dv};
    };

    for (int y = 0; y < cv_carry.height; ++y)
      for (int x = 0; x < cv_carry.width; ++x) {
        const auto [best_a, corr_a] = winner(cv_carry, y, x);
        const auto [best_b, corr_b] =
            have_carry ? winner(cv_zero, y, x)
                       : std::pair<int, double>{best_a, corr_a};
        // Zero-motion prior: keep the carried flow when staying put is
        // already optimal.
        if (cv_carry.at(y, x, center) >= std::max(corr_a, corr_b) - 1e-12)
          continue;
        if (!have_carry || corr_a >= corr_b) {
          const auto [du, dv] = refined(cv_carry, y, x, best_a, corr_a);
          flow.u(y, x) += du;
          flow.v(y, x) += dv;
        } else {
          const auto [du, dv] = refined(cv_zero, y, x, best_b, corr_b);
          flow.u(y, x) = du;
          flow.v(y, x) = dv;
        }
      }
    flow = detail::median_filter(flow, cfg.median_window);
    if (l > 0) flow = detail::upsample_flow(flow, pyr1[l - 1].height,
                                            pyr1[l - 1].width);
  }
  return flow;
}

} // namespace wf
