#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "weatherflow/grid.hpp"

namespace wf {

inline constexpr double kPsnrCapDb = 99.0;

struct EvalResult {
  double epe = 0.0;
  double fl_all = 0.0; // percent
  long valid_count = 0;
};

namespace detail {

inline void check_eval_dims(const FlowField &flow, const FlowField &gt,
                            const Mask *valid, const char *what) {
  if (!flow.same_dims(gt) ||
      (valid && (flow.height != valid->height || flow.width != valid->width)))
    throw std::invalid_argument(std::string(what) + ": dimension mismatch");
}

} // namespace detail

// Mean endpoint error over valid pixels (all pixels when no mask is given).
inline double epe(const FlowField &flow, const FlowField &gt,
                  const Mask *valid = nullptr) {
  detail::check_eval_dims(flow, gt, valid, "epe");
  double sum = 0.0;
  std::size_t count = 0;
  for (int y = 0; y < flow.height; ++y)
    for (int x = 0; x < flow.width; ++x) {
      if (valid && !valid->at(y, x)) continue;
      const double du = flow.u(y, x) - gt.u(y, x);
      const double dv = flow.v(y, x) - gt.v(y, x);
      sum += std::sqrt(du * du + dv * dv);
      ++count;
    }
  if (count == 0) throw std::invalid_argument("epe: empty valid mask");
  return sum / count;
}

// KITTI outlier percentage: error > 3 px and > 5% of the ground-truth
// magnitude.
inline double fl_all(const FlowField &flow, const FlowField &gt,
                     const Mask *valid = nullptr) {
  detail::check_eval_dims(flow, gt, valid, "fl_all");
  std::size_t outliers = 0, count = 0;
  for (int y = 0; y < flow.height; ++y)
    for (int x = 0; x < flow.width; ++x) {
      if (valid && !valid->at(y, x)) continue;
      const double du = flow.u(y, x) - gt.u(y, x);
      const double dv = flow.v(y, x) - gt.v(y, x);
      const double err = std::sqrt(du * du + dv * dv);
      const double mag =
          std::sqrt(gt.u(y, x) * gt.u(y, x) + gt.v(y, x) * gt.v(y, x));
      if (err > 3.0 && err > 0.05 * mag) ++outliers;
      ++count;
    }
  if (count == 0) throw std::invalid_argument("fl_all: empty valid mask");
  return 100.0 * static_cast<double>(outliers) / static_cast<double>(count);
}

inline EvalResult evaluate_flow(const FlowField &flow, const FlowField &gt,
                                const Mask *valid = nullptr) {
  EvalResult r;
  r.epe = epe(flow, gt, valid);
  r.fl_all = fl_all(flow, gt, valid);
  r.valid_count = valid ? static_cast<long>(valid->count())
                        : static_cast<long>(flow.height) * flow.width;
  return r;
}

// 10*log10(1/MSE) for [0,1] images; exact matches return the 99 dB cap.
inline double psnr(const ImageGrid &img, const ImageGrid &ref) {
  if (!img.same_dims(ref))
    throw std::invalid_argument("psnr: dimension mismatch");
  double mse = 0.0;
  for (std::size_t i = 0; i < img.data.size(); ++i) {
    const double d = img.data[i] - ref.data[i];
    mse += d * d;
  }
  mse /= img.data.size();
  if (mse <= 0.0) return kPsnrCapDb;
  return std::min(kPsnrCapDb, 10.0 * std::log10(1.0 / mse));
}

} // namespace wf
