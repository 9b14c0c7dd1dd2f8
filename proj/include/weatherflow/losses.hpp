#pragma once

#include <array>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "weatherflow/geometry.hpp"
#include "weatherflow/grid.hpp"

namespace wf {

// Robust penalty psi(x) = (|x| + eps)^p.
struct SparseNormParams {
  double p = 0.4;
  double eps = 0.01;

  void validate() const {
    if (!(p > 0.0 && p <= 2.0))
      throw std::invalid_argument("SparseNormParams: p outside (0,2]");
    if (!(eps >= 0.0))
      throw std::invalid_argument("SparseNormParams: eps must be >= 0");
  }
};

inline double psi(double x, const SparseNormParams &params = {}) {
  return std::pow(std::abs(x) + params.eps, params.p);
}

// Weights of the total objective, ordered
// (pho, depth, geo, consis, contra, self, kl).
struct LossWeights {
  std::array<double, 7> lambda{1.0, 1.0, 0.1, 1.0, 0.1, 1.0, 0.1};

  void validate() const {
    for (double w : lambda)
      if (!(w >= 0.0))
        throw std::invalid_argument("LossWeights: negative weight");
  }
};

// Bidirectional occlusion-masked photometric penalty. Pixels whose warp
// sampled outside the frame join the occluded set; an all-occluded direction
// contributes 0.
inline double photometric_loss(const ImageGrid &img1, const ImageGrid &img2,
                               const FlowField &fwd, const FlowField &bwd,
                               const Mask &occ_fwd, const Mask &occ_bwd,
                               const SparseNormParams &params = {}) {
  if (!img1.same_dims(img2) || img1.height != fwd.height ||
      img1.width != fwd.width || !fwd.same_dims(bwd))
    throw std::invalid_argument("photometric_loss: dimension mismatch");
  params.validate();
  const auto direction = [&](const ImageGrid &a, const ImageGrid &b,
                             const FlowField &flow, const Mask &occ) {
    const auto [warped, oob] = backward_warp(b, flow);
    double sum = 0.0;
    std::size_t count = 0;
    for (int y = 0; y < a.height; ++y)
      for (int x = 0; x < a.width; ++x) {
        if (occ.at(y, x) || oob.at(y, x)) continue;
        double pix = 0.0;
        for (int c = 0; c < a.channels; ++c)
          pix += psi(a.at(y, x, c) - warped.at(y, x, c), params);
        sum += pix / a.channels;
        ++count;
      }
    return count == 0 ? 0.0 : sum / count;
  };
  return direction(img1, img2, fwd, occ_fwd) +
         direction(img2, img1, bwd, occ_bwd);
}

// Stereo photometric penalty plus edge-weighted depth smoothness for one
// frame: mean psi(Il - warp(Ir, disparity)) over in-bounds pixels plus
// mean |lap(D)| * exp(-|lap(Il)|).
inline double depth_loss(const ImageGrid &left, const ImageGrid &right,
                         const DepthMap &depth, const CameraRig &cam,
                         const SparseNormParams &params = {}) {
  if (!left.same_dims(right) || left.height != depth.height ||
      left.width != depth.width)
    throw std::invalid_argument("depth_loss: dimension mismatch");
  params.validate();
  const ImageGrid disp = depth_to_disparity(depth, cam);
  double photo = 0.0;
  std::size_t count = 0;
  for (int y = 0; y < left.height; ++y)
    for (int x = 0; x < left.width; ++x) {
      const SampleResult s = bilinear_sample(right, x - disp.at(y, x), y);
      if (s.out_of_bounds) continue;
      double pix = 0.0;
      for (int c = 0; c < left.channels; ++c)
        pix += psi(left.at(y, x, c) - s.value[c], params);
      photo += pix / left.channels;
      ++count;
    }
  if (count > 0) photo /= count;

  ImageGrid dgrid(depth.height, depth.width, 1, 0.0, true);
  for (std::size_t i = 0; i < depth.values.size(); ++i)
    dgrid.data[i] = depth.values[i];
  const ImageGrid lap_d = spatial_derivatives(dgrid, DerivativeKind::Laplacian);
  const ImageGrid lap_i = spatial_derivatives(left, DerivativeKind::Laplacian);
  double smooth = 0.0;
  for (std::size_t i = 0; i < lap_d.data.size(); ++i)
    smooth += std::abs(lap_d.data[i]) * std::exp(-std::abs(lap_i.data[i]));
  smooth /= lap_d.data.size();
  return photo + smooth;
}

// L1 rigid-flow consistency over the rigid region (nonrigid mask = 1).
inline double geo_consistency_loss(const FlowField &flow,
                                   const FlowField &rigid,
                                   const Mask &nonrigid) {
  if (!flow.same_dims(rigid) || flow.height != nonrigid.height ||
      flow.width != nonrigid.width)
    throw std::invalid_argument("geo_consistency_loss: dimension mismatch");
  double sum = 0.0;
  std::size_t count = 0;
  for (int y = 0; y < flow.height; ++y)
    for (int x = 0; x < flow.width; ++x) {
      if (nonrigid.at(y, x)) continue;
      sum += std::abs(flow.u(y, x) - rigid.u(y, x)) +
             std::abs(flow.v(y, x) - rigid.v(y, x));
      ++count;
    }
  return count == 0 ? 0.0 : sum / count;
}

// Mean per-pixel L1 difference of two flow fields.
inline double flow_l1_loss(const FlowField &a, const FlowField &b) {
  if (!a.same_dims(b))
    throw std::invalid_argument("flow_l1_loss: dimension mismatch");
  double sum = 0.0;
  for (std::size_t i = 0; i < a.uv.size(); ++i)
    sum += std::abs(a.uv[i] - b.uv[i]);
  return sum / (static_cast<double>(a.height) * a.width);
}

// InfoNCE over sampled warp-error descriptors. pos_x[j] pairs with pos_y[j];
// every negative is contrasted against each pos_x[j].
inline double contrastive_loss(const std::vector<std::vector<double>> &pos_x,
                               const std::vector<std::vector<double>> &pos_y,
                               const std::vector<std::vector<double>> &negs,
                               double tau = 0.07) {
  if (pos_x.empty() || pos_x.size() != pos_y.size())
    throw std::invalid_argument("contrastive_loss: bad positive sets");
  if (!(tau > 0.0))
    throw std::invalid_argument("contrastive_loss: tau must be > 0");
  const auto dot = [](const std::vector<double> &a,
                      const std::vector<double> &b) {
    if (a.size() != b.size())
      throw std::invalid_argument("contrastive_loss: descriptor size mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
  };
  double loss = 0.0;
  for (std::size_t j = 0; j < pos_x.size(); ++j) {
    const double pos = std::exp(dot(pos_x[j], pos_y[j]) / tau);
    double denom = pos;
    for (const auto &n : negs) denom += std::exp(dot(n, pos_x[j]) / tau);
    loss -= std::log(pos / denom);
  }
  return loss / static_cast<double>(pos_x.size());
}

// sum_i p_i * ln(p_i / q_i); requires strictly positive entries.
inline double kl_divergence(std::span<const double> p,
                            std::span<const double> q) {
  if (p.size() != q.size() || p.empty())
    throw std::invalid_argument("kl_divergence: bin-count mismatch");
  double d = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (!(p[i] > 0.0) || !(q[i] > 0.0))
      throw std::invalid_argument("kl_divergence: non-positive entry");
    d += p[i] * std::log(p[i] / q[i]);
  }
  return d;
}

// Weighted sum of the seven components (pho, depth, geo, consis, contra,
// self, kl).
inline double total_loss(const std::array<double, 7> &components,
                         const LossWeights &weights = {}) {
  weights.validate();
  double total = 0.0;
  for (std::size_t i = 0; i < components.size(); ++i) {
    if (std::isnan(components[i]))
      throw std::invalid_argument("total_loss: NaN component");
    total += weights.lambda[i] * components[i];
  }
  return total;
}

} // namespace wf
