#pragma once

#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "weatherflow/grid.hpp"

namespace wf {

// Metric depth, strictly positive.
struct DepthMap {
  int height = 0;
  int width = 0;
  std::vector<double> values;

  DepthMap() = default;
  DepthMap(int h, int w, double fill = 1.0)
      : height(h), width(w), values(static_cast<std::size_t>(h) * w, fill) {}

  double &at(int y, int x) {
    return values[static_cast<std::size_t>(y) * width + x];
  }
  double at(int y, int x) const {
    return values[static_cast<std::size_t>(y) * width + x];
  }

  void validate() const {
    for (double v : values)
      if (!std::isfinite(v) || v <= 0.0)
        throw std::invalid_argument("DepthMap: depth must be finite and > 0");
  }
};

// Pinhole intrinsics plus stereo baseline.
struct CameraRig {
  double fx = 100.0, fy = 100.0;
  double cx = 0.0, cy = 0.0;
  double baseline = 0.5; // meters

  void validate() const {
    if (!(fx > 0.0) || !(fy > 0.0))
      throw std::invalid_argument("CameraRig: focal lengths must be > 0");
    if (!(baseline > 0.0))
      throw std::invalid_argument("CameraRig: baseline must be > 0");
  }
};

// Rigid relative camera motion.
struct Pose {
  std::array<double, 9> rotation{1, 0, 0, 0, 1, 0, 0, 0, 1}; // row-major
  std::array<double, 3> translation{0, 0, 0};

  static Pose identity() { return Pose{}; }

  void validate(double tol = 1e-9) const {
    // R^T R = I and det(R) = 1.
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        double dot = 0.0;
        for (int k = 0; k < 3; ++k)
          dot += rotation[k * 3 + i] * rotation[k * 3 + j];
        const double expect = i == j ? 1.0 : 0.0;
        if (std::abs(dot - expect) > tol)
          throw std::invalid_argument("Pose: rotation not orthonormal");
      }
    const auto &r = rotation;
    const double det = r[0] * (r[4] * r[8] - r[5] * r[7]) -
                       r[1] * (r[3] * r[8] - r[5] * r[6]) +
                       r[2] * (r[3] * r[7] - r[4] * r[6]);
    if (std::abs(det - 1.0) > tol)
      throw std::invalid_argument("Pose: rotation determinant != 1");
  }

  std::array<double, 3> apply(const std::array<double, 3> &p) const {
    return {rotation[0] * p[0] + rotation[1] * p[1] + rotation[2] * p[2] +
                translation[0],
            rotation[3] * p[0] + rotation[4] * p[1] + rotation[5] * p[2] +
                translation[1],
            rotation[6] * p[0] + rotation[7] * p[1] + rotation[8] * p[2] +
                translation[2]};
  }

  Pose inverse() const {
    Pose inv;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) inv.rotation[i * 3 + j] = rotation[j * 3 + i];
    for (int i = 0; i < 3; ++i) {
      double s = 0.0;
      for (int j = 0; j < 3; ++j) s += inv.rotation[i * 3 + j] * translation[j];
      inv.translation[i] = -s;
    }
    return inv;
  }
};

struct RigidFlowResult {
  FlowField flow;
  Mask valid; // 0 where the transformed point fell behind the camera
};

// Back-project each pixel with its depth, move it by the relative pose, and
// re-project; the flow is the reprojected position minus the pixel position.
inline RigidFlowResult rigid_flow(const DepthMap &depth, const CameraRig &cam,
                                  const Pose &pose) {
  depth.validate();
  cam.validate();
  pose.validate();
  RigidFlowResult out{FlowField(depth.height, depth.width),
                      Mask(depth.height, depth.width, 1)};
  // No relative motion induces exactly zero flow; skip the round trip through
  // camera coordinates so rounding cannot leave residuals of ~1e-16.
  const Pose id;
  if (pose.rotation == id.rotation && pose.translation == id.translation)
    return out;
  for (int y = 0; y < depth.height; ++y)
    for (int x = 0; x < depth.width; ++x) {
      const double z = depth.at(y, x);
      const std::array<double, 3> p{(x - cam.cx) * z / cam.fx,
                                    (y - cam.cy) * z / cam.fy, z};
      const std::array<double, 3> q = pose.apply(p);
      if (q[2] <= 0.0) {
        out.valid.at(y, x) = 0;
        continue;
      }
      out.flow.u(y, x) = cam.fx * q[0] / q[2] + cam.cx - x;
      out.flow.v(y, x) = cam.fy * q[1] / q[2] + cam.cy - y;
    }
  return out;
}

// Forward-backward check: the mask is 1 where
// |Ff(x) + Fb(x + Ff(x))|^2 >= a1*(|Ff(x)|^2 + |Fb(x + Ff(x))|^2) + a2,
// i.e. where the consistency constraint is violated.
inline Mask fb_consistency_mask(const FlowField &fwd, const FlowField &bwd,
                                double alpha1 = 0.01, double alpha2 = 0.5) {
  if (!fwd.same_dims(bwd))
    throw std::invalid_argument("fb_consistency_mask: dimension mismatch");
  Mask mask(fwd.height, fwd.width);
  ImageGrid bgrid(fwd.height, fwd.width, 2, 0.0, true);
  for (int y = 0; y < fwd.height; ++y)
    for (int x = 0; x < fwd.width; ++x) {
      bgrid.at(y, x, 0) = bwd.u(y, x);
      bgrid.at(y, x, 1) = bwd.v(y, x);
    }
  for (int y = 0; y < fwd.height; ++y)
    for (int x = 0; x < fwd.width; ++x) {
      const double fu = fwd.u(y, x), fv = fwd.v(y, x);
      const SampleResult s = bilinear_sample(bgrid, x + fu, y + fv);
      const double bu = s.value[0], bv = s.value[1];
      const double du = fu + bu, dv = fv + bv;
      const double lhs = du * du + dv * dv;
      const double rhs =
          alpha1 * (fu * fu + fv * fv + bu * bu + bv * bv) + alpha2;
      mask.at(y, x) = lhs >= rhs ? 1 : 0;
    }
  return mask;
}

// d = fx * B / D.
inline ImageGrid depth_to_disparity(const DepthMap &depth,
                                    const CameraRig &cam) {
  depth.validate();
  cam.validate();
  ImageGrid out(depth.height, depth.width, 1, 0.0, true);
  for (int y = 0; y < depth.height; ++y)
    for (int x = 0; x < depth.width; ++x)
      out.at(y, x) = cam.fx * cam.baseline / depth.at(y, x);
  return out;
}

} // namespace wf
