#pragma once

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "weatherflow/grid.hpp"

namespace wf {

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline constexpr float kFloMagic = 202021.25f;

// Middlebury .flo: magic float, int32 width, int32 height, interleaved
// float32 (u,v) row-major, all little-endian.
inline void write_flo(const std::string &path, const FlowField &flow) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("write_flo: cannot open " + path);
  const float magic = kFloMagic;
  const std::int32_t w = flow.width, h = flow.height;
  out.write(reinterpret_cast<const char *>(&magic), 4);
  out.write(reinterpret_cast<const char *>(&w), 4);
  out.write(reinterpret_cast<const char *>(&h), 4);
  for (double c : flow.uv) {
    const float f = static_cast<float>(c);
    out.write(reinterpret_cast<const char *>(&f), 4);
  }
  if (!out) throw IoError("write_flo: write failed for " + path);
}

inline FlowField read_flo(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("read_flo: cannot open " + path);
  float magic = 0.0f;
  std::int32_t w = 0, h = 0;
  in.read(reinterpret_cast<char *>(&magic), 4);
  in.read(reinterpret_cast<char *>(&w), 4);
  in.read(reinterpret_cast<char *>(&h), 4);
  if (!in || magic != kFloMagic)
    throw IoError("read_flo: bad magic in " + path);
  if (w < 1 || h < 1 || w > 1 << 20 || h > 1 << 20)
    throw IoError("read_flo: bad dimensions in " + path);
  FlowField flow(h, w);
  for (double &c : flow.uv) {
    float f = 0.0f;
    in.read(reinterpret_cast<char *>(&f), 4);
    c = f;
  }
  if (!in) throw IoError("read_flo: truncated payload in " + path);
  return flow;
}

namespace detail {

inline void skip_pnm_whitespace(std::istream &in) {
  int c = in.peek();
  while (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '#') {
    if (c == '#') {
      std::string line;
      std::getline(in, line);
    } else {
      in.get();
    }
    c = in.peek();
  }
}

inline int read_pnm_int(std::istream &in) {
  skip_pnm_whitespace(in);
  int v = -1;
  in >> v;
  if (!in || v < 0) throw IoError("pnm: malformed header");
  return v;
}

} // namespace detail

// P5 (1-channel) / P6 (3-channel), maxval 255 only; values map linearly to
// [0,1].
inline void write_pnm(const std::string &path, const ImageGrid &img) {
  if (img.channels != 1 && img.channels != 3)
    throw IoError("write_pnm: channels must be 1 or 3");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("write_pnm: cannot open " + path);
  out << (img.channels == 1 ? "P5" : "P6") << "\n"
      << img.width << " " << img.height << "\n255\n";
  for (double v : img.data) {
    const double clipped = std::clamp(v, 0.0, 1.0);
    out.put(static_cast<char>(
        static_cast<unsigned char>(std::lround(clipped * 255.0))));
  }
  if (!out) throw IoError("write_pnm: write failed for " + path);
}

inline ImageGrid read_pnm(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("read_pnm: cannot open " + path);
  char m0 = 0, m1 = 0;
  in.get(m0).get(m1);
  if (m0 != 'P' || (m1 != '5' && m1 != '6'))
    throw IoError("read_pnm: unsupported magic in " + path);
  const int channels = m1 == '5' ? 1 : 3;
  const int w = detail::read_pnm_int(in);
  const int h = detail::read_pnm_int(in);
  const int maxval = detail::read_pnm_int(in);
  if (maxval != 255) throw IoError("read_pnm: only maxval 255 is supported");
  in.get(); // single whitespace byte before the raster
  ImageGrid img(h, w, channels);
  for (double &v : img.data) {
    const int c = in.get();
    if (c < 0) throw IoError("read_pnm: truncated raster in " + path);
    v = c / 255.0;
  }
  return img;
}

// PFM, little-endian (negative scale); rows stored bottom-to-top. Pf is
// 1-channel, PF is 3-channel. Float32 payload, so round trips are exact.
inline void write_pfm(const std::string &path, const ImageGrid &img) {
  if (img.channels != 1 && img.channels != 3)
    throw IoError("write_pfm: channels must be 1 or 3");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("write_pfm: cannot open " + path);
  out << (img.channels == 1 ? "Pf" : "PF") << "\n"
      << img.width << " " << img.height << "\n-1.0\n";
  for (int y = img.height - 1; y >= 0; --y)
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < img.channels; ++c) {
        const float f = static_cast<float>(img.at(y, x, c));
        out.write(reinterpret_cast<const char *>(&f), 4);
      }
  if (!out) throw IoError("write_pfm: write failed for " + path);
}

inline ImageGrid read_pfm(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("read_pfm: cannot open " + path);
  std::string magic;
  in >> magic;
  if (magic != "Pf" && magic != "PF")
    throw IoError("read_pfm: unsupported magic in " + path);
  int w = 0, h = 0;
  double scale = 0.0;
  in >> w >> h >> scale;
  if (!in || w < 1 || h < 1 || scale >= 0.0)
    throw IoError("read_pfm: malformed header (big-endian unsupported)");
  in.get(); // newline before the raster
  const int channels = magic == "Pf" ? 1 : 3;
  ImageGrid img(h, w, channels, 0.0, true);
  for (int y = h - 1; y >= 0; --y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < channels; ++c) {
        float f = 0.0f;
        in.read(reinterpret_cast<char *>(&f), 4);
        img.at(y, x, c) = f;
      }
  if (!in) throw IoError("read_pfm: truncated raster in " + path);
  return img;
}

// JSON serialization with doubles at a fixed 9 significant digits, so the
// same result always produces the same bytes.
inline std::string format_json_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

inline void format_json(const nlohmann::json &j, std::string &out) {
  switch (j.type()) {
  case nlohmann::json::value_t::number_float:
    out += format_json_number(j.get<double>());
    break;
  case nlohmann::json::value_t::array: {
    out += '[';
    bool first = true;
    for (const auto &e : j) {
      if (!first) out += ',';
      first = false;
      format_json(e, out);
    }
    out += ']';
    break;
  }
  case nlohmann::json::value_t::object: {
    out += '{';
    bool first = true;
    for (auto it = j.begin(); it != j.end(); ++it) {
      if (!first) out += ',';
      first = false;
      out += nlohmann::json(it.key()).dump();
      out += ':';
      format_json(it.value(), out);
    }
    out += '}';
    break;
  }
  default:
    out += j.dump();
  }
}

inline std::string format_json(const nlohmann::json &j) {
  std::string out;
  format_json(j, out);
  return out;
}

} // namespace wf
