#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

#include "weatherflow/grid.hpp"
#include "weatherflow/rng.hpp"

namespace wf {

// Patches sampled from a warp-error map, with zero-mean L2-normalized
// flattened descriptors. Flat patches get a zero descriptor and a degenerate
// flag.
struct PatchSet {
  std::vector<std::pair<int, int>> centers; // (row, col)
  int patch_size = 0;
  std::vector<std::vector<double>> patches;
  std::vector<std::vector<double>> descriptors;
  std::vector<bool> degenerate;
  int shortfall = 0; // requested minus delivered
};

struct WarpErrorResult {
  ImageGrid error; // linear-mode signed residuals
  Mask oob;        // pixels whose sample fell outside the frame (error = 0)
};

// w(i) = I1(i) - I2(i + F(i)).
inline WarpErrorResult warp_error_map(const ImageGrid &img1,
                                      const ImageGrid &img2,
                                      const FlowField &flow) {
  if (!img1.same_dims(img2) || img1.height != flow.height ||
      img1.width != flow.width)
    throw std::invalid_argument("warp_error_map: dimension mismatch");
  WarpErrorResult out{ImageGrid(img1.height, img1.width, img1.channels, 0.0,
                                true),
                      Mask(img1.height, img1.width)};
  for (int y = 0; y < img1.height; ++y)
    for (int x = 0; x < img1.width; ++x) {
      const SampleResult s =
          bilinear_sample(img2, x + flow.u(y, x), y + flow.v(y, x));
      if (s.out_of_bounds) {
        out.oob.at(y, x) = 1;
        continue;
      }
      for (int c = 0; c < img1.channels; ++c)
        out.error.at(y, x, c) = img1.at(y, x, c) - s.value[c];
    }
  return out;
}

namespace detail {

inline int chebyshev(std::pair<int, int> a, std::pair<int, int> b) {
  return std::max(std::abs(a.first - b.first), std::abs(a.second - b.second));
}

inline std::vector<double> flatten_patch(const ImageGrid &map, int row,
                                         int col, int patch_size) {
  const int half = patch_size / 2;
  std::vector<double> p;
  p.reserve(static_cast<std::size_t>(patch_size) * patch_size);
  for (int dy = -half; dy <= half; ++dy)
    for (int dx = -half; dx <= half; ++dx)
      p.push_back(map.at(row + dy, col + dx));
  return p;
}

inline void append_patch(PatchSet &set, const ImageGrid &map, int row,
                         int col) {
  std::vector<double> patch = flatten_patch(map, row, col, set.patch_size);
  double mean = 0.0;
  for (double v : patch) mean += v;
  mean /= patch.size();
  std::vector<double> desc(patch.size());
  double norm2 = 0.0;
  for (std::size_t i = 0; i < patch.size(); ++i) {
    desc[i] = patch[i] - mean;
    norm2 += desc[i] * desc[i];
  }
  const double norm = std::sqrt(norm2);
  const bool flat = norm < 1e-12;
  if (!flat)
    for (double &v : desc) v /= norm;
  else
    std::fill(desc.begin(), desc.end(), 0.0);
  set.centers.emplace_back(row, col);
  set.patches.push_back(std::move(patch));
  set.descriptors.push_back(std::move(desc));
  set.degenerate.push_back(flat);
}

// Signed single-channel view of a (possibly multi-channel) warp-error map.
inline ImageGrid error_luminance(const ImageGrid &error) {
  return to_luminance(error);
}

} // namespace wf::detail

// Extracts patches at the given centers (all must admit a full patch).
inline PatchSet extract_patches(const ImageGrid &error,
                                const std::vector<std::pair<int, int>> &centers,
                                int patch_size) {
  if (patch_size < 3 || patch_size % 2 == 0)
    throw std::invalid_argument("extract_patches: patch_size must be odd >= 3");
  const ImageGrid map = detail::error_luminance(error);
  const int half = patch_size / 2;
  PatchSet set;
  set.patch_size = patch_size;
  for (auto [row, col] : centers) {
    if (row < half || col < half || row >= map.height - half ||
        col >= map.width - half)
      throw std::invalid_argument("extract_patches: patch outside bounds");
    detail::append_patch(set, map, row, col);
  }
  return set;
}

// Positive sampling: keep pixels whose gradient magnitude of |w| exceeds the
// 90th percentile, then draw up to N centers without replacement (seeded)
// with minimum Chebyshev spacing patch_size/2.
inline PatchSet edge_aware_sample(const ImageGrid &w_clean, int n,
                                  int patch_size, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("edge_aware_sample: N must be >= 1");
  if (patch_size < 3 || patch_size % 2 == 0)
    throw std::invalid_argument("edge_aware_sample: patch_size must be odd");
  const ImageGrid map = detail::error_luminance(w_clean);
  const ImageGrid grad =
      spatial_derivatives(abs_grid(map), DerivativeKind::GradMag);
  std::vector<double> sorted = grad.data;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t rank =
      static_cast<std::size_t>(0.9 * (sorted.size() - 1));
  const double threshold = sorted[rank];

  const int half = patch_size / 2;
  std::vector<std::pair<int, int>> candidates;
  for (int y = half; y < map.height - half; ++y)
    for (int x = half; x < map.width - half; ++x)
      if (grad.at(y, x) > threshold) candidates.emplace_back(y, x);

  // Seeded Fisher-Yates over the lexicographically ordered candidates.
  SplitMix64 rng(seed);
  for (std::size_t i = candidates.size(); i > 1; --i)
    std::swap(candidates[i - 1], candidates[rng.below(i)]);

  PatchSet set;
  set.patch_size = patch_size;
  const int spacing = patch_size / 2;
  for (const auto &c : candidates) {
    if (static_cast<int>(set.centers.size()) >= n) break;
    bool ok = true;
    for (const auto &sel : set.centers)
      if (detail::chebyshev(c, sel) < spacing) {
        ok = false;
        break;
      }
    if (ok) detail::append_patch(set, map, c.first, c.second);
  }
  set.shortfall = n - static_cast<int>(set.centers.size());
  return set;
}

// Negative sampling: rank candidate centers by local entropy of |w|
// descending (ties broken by (row, col)), skip anything within patch_size
// Chebyshev distance of an excluded center, and keep up to N with minimum
// spacing patch_size/2.
inline PatchSet
entropy_aware_sample(const ImageGrid &w_degraded, int n, int patch_size,
                     const std::vector<std::pair<int, int>> &exclude,
                     std::uint64_t seed) {
  (void)seed; // ranking is fully deterministic; kept for interface symmetry
  if (n < 1)
    throw std::invalid_argument("entropy_aware_sample: N must be >= 1");
  if (patch_size < 3 || patch_size % 2 == 0)
    throw std::invalid_argument("entropy_aware_sample: patch_size must be odd");
  const ImageGrid map = detail::error_luminance(w_degraded);
  const ImageGrid ent = local_entropy(abs_grid(map), patch_size);

  const int half = patch_size / 2;
  struct Candidate {
    double entropy;
    int row, col;
  };
  std::vector<Candidate> candidates;
  for (int y = half; y < map.height - half; ++y)
    for (int x = half; x < map.width - half; ++x)
      candidates.push_back({ent.at(y, x), y, x});
  std::sort(candidates.begin(), candidates.end(),
            [](const Candidate &a, const Candidate &b) {
              if (a.entropy != b.entropy) return a.entropy > b.entropy;
              if (a.row != b.row) return a.row < b.row;
              return a.col < b.col;
            });

  PatchSet set;
  set.patch_size = patch_size;
  const int spacing = patch_size / 2;
  for (const auto &c : candidates) {
    if (static_cast<int>(set.centers.size()) >= n) break;
    const std::pair<int, int> pos{c.row, c.col};
    bool ok = true;
    for (const auto &ex : exclude)
      if (detail::chebyshev(pos, ex) < patch_size) {
        ok = false;
        break;
      }
    if (!ok) continue;
    for (const auto &sel : set.centers)
      if (detail::chebyshev(pos, sel) < spacing) {
        ok = false;
        break;
      }
    if (ok) detail::append_patch(set, map, c.row, c.col);
  }
  set.shortfall = n - static_cast<int>(set.centers.size());
  return set;
}

} // namespace wf
