#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace wf {

// H x W x C grid of intensities, row-major with interleaved channels.
// Values live in [0,1] unless linear_mode is set, in which case they are
// unclipped (signed residuals, unscaled depth, etc.).
struct ImageGrid {
  int height = 0;
  int width = 0;
  int channels = 1;
  bool linear_mode = false;
  std::vector<double> data;

  ImageGrid() = default;
  ImageGrid(int h, int w, int c, double fill = 0.0, bool linear = false)
      : height(h), width(w), channels(c), linear_mode(linear),
        data(static_cast<std::size_t>(h) * w * c, fill) {
    if (h < 1 || w < 1 || c < 1 || c > 3)
      throw std::invalid_argument("ImageGrid: bad dimensions");
  }

  double &at(int y, int x, int c = 0) {
    return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  double at(int y, int x, int c = 0) const {
    return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }

  std::size_t pixel_count() const {
    return static_cast<std::size_t>(height) * width;
  }

  bool same_dims(const ImageGrid &o) const {
    return height == o.height && width == o.width && channels == o.channels;
  }

  void validate() const {
    if (height < 1 || width < 1 || channels < 1 || channels > 3)
      throw std::invalid_argument("ImageGrid: bad dimensions");
    if (data.size() != pixel_count() * channels)
      throw std::invalid_argument("ImageGrid: data size mismatch");
    for (double v : data) {
      if (!std::isfinite(v))
        throw std::invalid_argument("ImageGrid: non-finite value");
      if (!linear_mode && (v < 0.0 || v > 1.0))
        throw std::invalid_argument("ImageGrid: value outside [0,1]");
    }
  }
};

// H x W field of per-pixel (u,v) pixel displacements.
struct FlowField {
  int height = 0;
  int width = 0;
  std::vector<double> uv; // interleaved (u,v)

  FlowField() = default;
  FlowField(int h, int w) : height(h), width(w) {
    if (h < 1 || w < 1)
      throw std::invalid_argument("FlowField: bad dimensions");
    uv.assign(static_cast<std::size_t>(h) * w * 2, 0.0);
  }

  double &u(int y, int x) {
    return uv[(static_cast<std::size_t>(y) * width + x) * 2];
  }
  double &v(int y, int x) {
    return uv[(static_cast<std::size_t>(y) * width + x) * 2 + 1];
  }
  double u(int y, int x) const {
    return uv[(static_cast<std::size_t>(y) * width + x) * 2];
  }
  double v(int y, int x) const {
    return uv[(static_cast<std::size_t>(y) * width + x) * 2 + 1];
  }

  bool same_dims(const FlowField &o) const {
    return height == o.height && width == o.width;
  }

  void validate() const {
    const double bound = static_cast<double>(std::max(height, width));
    for (double c : uv) {
      if (!std::isfinite(c))
        throw std::invalid_argument("FlowField: non-finite component");
      if (std::abs(c) > bound)
        throw std::invalid_argument("FlowField: displacement exceeds bound");
    }
  }
};

// Binary H x W mask.
struct Mask {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> values;

  Mask() = default;
  Mask(int h, int w, std::uint8_t fill = 0)
      : height(h), width(w),
        values(static_cast<std::size_t>(h) * w, fill) {}

  std::uint8_t &at(int y, int x) {
    return values[static_cast<std::size_t>(y) * width + x];
  }
  std::uint8_t at(int y, int x) const {
    return values[static_cast<std::size_t>(y) * width + x];
  }

  std::size_t count() const {
    std::size_t n = 0;
    for (auto v : values) n += v;
    return n;
  }
  double fill_ratio() const {
    return values.empty() ? 0.0
                          : static_cast<double>(count()) / values.size();
  }
};

struct SampleResult {
  std::array<double, 3> value{0.0, 0.0, 0.0};
  bool out_of_bounds = false;
};

// Bilinear interpolation at real coordinates (x,y). Coordinates outside the
// grid are clamped to the border; the result is flagged out-of-bounds so
// callers can exclude such pixels.
inline SampleResult bilinear_sample(const ImageGrid &img, double x, double y) {
  SampleResult r;
  const double xmax = static_cast<double>(img.width - 1);
  const double ymax = static_cast<double>(img.height - 1);
  if (x < 0.0 || x > xmax || y < 0.0 || y > ymax) {
    r.out_of_bounds = true;
    x = std::clamp(x, 0.0, xmax);
    y = std::clamp(y, 0.0, ymax);
  }
  const int x0 = static_cast<int>(std::floor(x));
  const int y0 = static_cast<int>(std::floor(y));
  const int x1 = std::min(x0 + 1, img.width - 1);
  const int y1 = std::min(y0 + 1, img.height - 1);
  const double fx = x - x0;
  const double fy = y - y0;
  for (int c = 0; c < img.channels; ++c) {
    const double v00 = img.at(y0, x0, c);
    const double v01 = img.at(y0, x1, c);
    const double v10 = img.at(y1, x0, c);
    const double v11 = img.at(y1, x1, c);
    r.value[c] = (1.0 - fy) * ((1.0 - fx) * v00 + fx * v01) +
                 fy * ((1.0 - fx) * v10 + fx * v11);
  }
  return r;
}

// out(i) = img(i + flow(i)). The mask marks pixels whose sample fell outside
// the frame.
inline std::pair<ImageGrid, Mask> backward_warp(const ImageGrid &img,
                                                const FlowField &flow) {
  if (img.height != flow.height || img.width != flow.width)
    throw std::invalid_argument("backward_warp: dimension mismatch");
  ImageGrid out(img.height, img.width, img.channels, 0.0, img.linear_mode);
  Mask oob(img.height, img.width);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      const SampleResult s =
          bilinear_sample(img, x + flow.u(y, x), y + flow.v(y, x));
      for (int c = 0; c < img.channels; ++c) out.at(y, x, c) = s.value[c];
      oob.at(y, x) = s.out_of_bounds ? 1 : 0;
    }
  return {std::move(out), std::move(oob)};
}

namespace detail {
inline int clamp_idx(int i, int n) { return std::clamp(i, 0, n - 1); }
} // namespace detail

// 5-tap binomial blur followed by 2x decimation; output dims = ceil(dim/2).
inline ImageGrid downsample2(const ImageGrid &img) {
  if (img.height < 2 || img.width < 2)
    throw std::invalid_argument("downsample2: input too small");
  static constexpr double kTap[5] = {1.0 / 16, 4.0 / 16, 6.0 / 16, 4.0 / 16,
                                     1.0 / 16};
  ImageGrid tmp(img.height, img.width, img.channels, 0.0, img.linear_mode);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < img.channels; ++c) {
        double acc = 0.0;
        for (int k = -2; k <= 2; ++k)
          acc += kTap[k + 2] * img.at(y, detail::clamp_idx(x + k, img.width), c);
        tmp.at(y, x, c) = acc;
      }
  const int oh = (img.height + 1) / 2;
  const int ow = (img.width + 1) / 2;
  ImageGrid out(oh, ow, img.channels, 0.0, img.linear_mode);
  for (int y = 0; y < oh; ++y)
    for (int x = 0; x < ow; ++x)
      for (int c = 0; c < img.channels; ++c) {
        double acc = 0.0;
        for (int k = -2; k <= 2; ++k)
          acc += kTap[k + 2] *
                 tmp.at(detail::clamp_idx(2 * y + k, img.height), 2 * x, c);
        out.at(y, x, c) = acc;
      }
  return out;
}

// Unweighted channel mean.
inline ImageGrid to_luminance(const ImageGrid &img) {
  if (img.channels == 1) return img;
  ImageGrid out(img.height, img.width, 1, 0.0, img.linear_mode);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      double s = 0.0;
      for (int c = 0; c < img.channels; ++c) s += img.at(y, x, c);
      out.at(y, x) = s / img.channels;
    }
  return out;
}

inline ImageGrid abs_grid(const ImageGrid &img) {
  ImageGrid out = img;
  for (double &v : out.data) v = std::abs(v);
  return out;
}

enum class DerivativeKind { GradMag, Laplacian };

// Central-difference gradient magnitude or 4-neighbor Laplacian
// (sum of neighbors - 4*center), borders replicated. Multi-channel inputs
// are averaged to luminance first.
inline ImageGrid spatial_derivatives(const ImageGrid &img,
                                     DerivativeKind kind) {
  const ImageGrid lum = to_luminance(img);
  ImageGrid out(lum.height, lum.width, 1, 0.0, true);
  for (int y = 0; y < lum.height; ++y)
    for (int x = 0; x < lum.width; ++x) {
      const int xm = detail::clamp_idx(x - 1, lum.width);
      const int xp = detail::clamp_idx(x + 1, lum.width);
      const int ym = detail::clamp_idx(y - 1, lum.height);
      const int yp = detail::clamp_idx(y + 1, lum.height);
      if (kind == DerivativeKind::GradMag) {
        const double ix = 0.5 * (lum.at(y, xp) - lum.at(y, xm));
        const double iy = 0.5 * (lum.at(yp, x) - lum.at(ym, x));
        out.at(y, x) = std::sqrt(ix * ix + iy * iy);
      } else {
        out.at(y, x) = lum.at(y, xm) + lum.at(y, xp) + lum.at(ym, x) +
                       lum.at(yp, x) - 4.0 * lum.at(y, x);
      }
    }
  return out;
}

inline constexpr int kEntropyBins = 16;

// Per-pixel Shannon entropy (natural log) of a 16-bin intensity histogram
// over an odd window, border replicated. Values are clamped into [0,1]
// before binning.
inline ImageGrid local_entropy(const ImageGrid &img, int window) {
  if (img.channels != 1)
    throw std::invalid_argument("local_entropy: single-channel input required");
  if (window < 3 || window % 2 == 0)
    throw std::invalid_argument("local_entropy: window must be odd and >= 3");
  const int half = window / 2;
  ImageGrid out(img.height, img.width, 1, 0.0, true);
  std::array<int, kEntropyBins> hist{};
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      hist.fill(0);
      for (int dy = -half; dy <= half; ++dy)
        for (int dx = -half; dx <= half; ++dx) {
          const double v = std::clamp(
              img.at(detail::clamp_idx(y + dy, img.height),
                     detail::clamp_idx(x + dx, img.width)),
              0.0, 1.0);
          const int bin =
              std::min(kEntropyBins - 1, static_cast<int>(v * kEntropyBins));
          ++hist[bin];
        }
      const double total = static_cast<double>(window) * window;
      double h = 0.0;
      for (int b = 0; b < kEntropyBins; ++b)
        if (hist[b] > 0) {
          const double p = hist[b] / total;
          h -= p * std::log(p);
        }
      out.at(y, x) = h;
    }
  return out;
}

} // namespace wf
