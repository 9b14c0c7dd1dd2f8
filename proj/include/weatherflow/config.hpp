#pragma once

#include <cstdint>
#include <fstream>
#include <string>

#include <json.hpp>

#include "weatherflow/degrade.hpp"
#include "weatherflow/flow_estimator.hpp"
#include "weatherflow/geometry.hpp"
#include "weatherflow/losses.hpp"

namespace wf {

// Whole-pipeline configuration with the published defaults. Any subset of
// keys may be overridden from a JSON document.
struct RunConfig {
  std::uint64_t seed = 0;
  LossWeights weights;
  FogParams fog;
  RainParams rain;
  EstimatorConfig estimator;
  int sample_count = 100;  // N
  int patch_size = 15;
  int hist_samples = 1000; // M
  int hist_bins = 10;      // k
  double ema_lambda = 0.99;
  double alpha1 = 0.01;
  double alpha2 = 0.5;
  double tau = 0.07;
  SparseNormParams sparse_norm;
  CameraRig camera;
  Pose pose;

  void validate() const {
    weights.validate();
    fog.validate();
    rain.validate();
    estimator.validate();
    sparse_norm.validate();
    camera.validate();
    pose.validate();
    if (sample_count < 1 || patch_size < 3 || patch_size % 2 == 0)
      throw std::invalid_argument("RunConfig: bad sampling params");
    if (hist_samples < 1 || hist_bins < 2)
      throw std::invalid_argument("RunConfig: bad histogram params");
    if (!(ema_lambda >= 0.0 && ema_lambda <= 1.0))
      throw std::invalid_argument("RunConfig: lambda outside [0,1]");
    if (!(tau > 0.0)) throw std::invalid_argument("RunConfig: tau must be > 0");
  }
};

namespace detail {

template <typename T>
void maybe(const nlohmann::json &j, const char *key, T &out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

inline void range(const nlohmann::json &j, const char *key, double &lo,
                  double &hi) {
  if (j.contains(key)) {
    const auto &a = j.at(key);
    lo = a.at(0).get<double>();
    hi = a.at(1).get<double>();
  }
}

} // namespace detail

inline RunConfig parse_run_config(const nlohmann::json &j) {
  RunConfig cfg;
  detail::maybe(j, "seed", cfg.seed);
  if (j.contains("weights")) {
    const auto &w = j.at("weights");
    if (w.size() != cfg.weights.lambda.size())
      throw std::invalid_argument("config: weights must have 7 entries");
    for (std::size_t i = 0; i < cfg.weights.lambda.size(); ++i)
      cfg.weights.lambda[i] = w.at(i).get<double>();
  }
  if (j.contains("fog")) {
    const auto &f = j.at("fog");
    detail::maybe(f, "beta", cfg.fog.beta);
    if (f.contains("atmospheric_light")) {
      const auto &a = f.at("atmospheric_light");
      if (a.is_number())
        cfg.fog.atmospheric_light = {a.get<double>()};
      else
        cfg.fog.atmospheric_light = a.get<std::vector<double>>();
    }
  }
  if (j.contains("rain")) {
    const auto &r = j.at("rain");
    detail::maybe(r, "streak_count", cfg.rain.streak_count);
    detail::maybe(r, "seed", cfg.rain.seed);
    detail::range(r, "length_px", cfg.rain.length_min, cfg.rain.length_max);
    detail::range(r, "angle_deg", cfg.rain.angle_min, cfg.rain.angle_max);
    detail::range(r, "intensity", cfg.rain.intensity_min,
                  cfg.rain.intensity_max);
    detail::range(r, "width_px", cfg.rain.width_min, cfg.rain.width_max);
  }
  if (j.contains("estimator")) {
    const auto &e = j.at("estimator");
    detail::maybe(e, "levels", cfg.estimator.levels);
    detail::maybe(e, "radius", cfg.estimator.radius);
    detail::maybe(e, "median_window", cfg.estimator.median_window);
    if (e.contains("theta"))
      cfg.estimator.theta =
          ParamVector(e.at("theta").get<std::vector<double>>());
  }
  detail::maybe(j, "N", cfg.sample_count);
  detail::maybe(j, "patch_size", cfg.patch_size);
  detail::maybe(j, "M", cfg.hist_samples);
  detail::maybe(j, "k", cfg.hist_bins);
  detail::maybe(j, "lambda", cfg.ema_lambda);
  detail::maybe(j, "alpha1", cfg.alpha1);
  detail::maybe(j, "alpha2", cfg.alpha2);
  detail::maybe(j, "tau", cfg.tau);
  detail::maybe(j, "p", cfg.sparse_norm.p);
  detail::maybe(j, "eps", cfg.sparse_norm.eps);
  if (j.contains("camera")) {
    const auto &c = j.at("camera");
    detail::maybe(c, "fx", cfg.camera.fx);
    detail::maybe(c, "fy", cfg.camera.fy);
    detail::maybe(c, "cx", cfg.camera.cx);
    detail::maybe(c, "cy", cfg.camera.cy);
    detail::maybe(c, "baseline", cfg.camera.baseline);
    if (c.contains("rotation")) {
      const auto r = c.at("rotation").get<std::vector<double>>();
      if (r.size() != 9)
        throw std::invalid_argument("config: rotation must have 9 entries");
      std::copy(r.begin(), r.end(), cfg.pose.rotation.begin());
    }
    if (c.contains("translation")) {
      const auto t = c.at("translation").get<std::vector<double>>();
      if (t.size() != 3)
        throw std::invalid_argument("config: translation must have 3 entries");
      std::copy(t.begin(), t.end(), cfg.pose.translation.begin());
    }
  }
  cfg.validate();
  return cfg;
}

inline RunConfig load_run_config(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open " + path);
  nlohmann::json j;
  in >> j;
  return parse_run_config(j);
}

} // namespace wf
