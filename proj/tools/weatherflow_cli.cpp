// Command-line front end: file-format plumbing plus one subcommand per
// pipeline stage. Every subcommand prints a single JSON object on stdout and
// is bit-deterministic given (inputs, config, seed).

#include <cstdint>
#include <exception>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "weatherflow/weatherflow.hpp"

namespace {

using nlohmann::json;

bool has_suffix(const std::string &s, const std::string &suffix) {
  return s.size() >= suffix.size() &&
         s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

wf::ImageGrid load_image(const std::string &path) {
  if (has_suffix(path, ".pfm")) return wf::read_pfm(path);
  return wf::read_pnm(path);
}

void save_image(const std::string &path, const wf::ImageGrid &img) {
  if (has_suffix(path, ".pfm"))
    wf::write_pfm(path, img);
  else
    wf::write_pnm(path, img);
}

wf::DepthMap load_depth(const std::string &path) {
  const wf::ImageGrid grid = wf::read_pfm(path);
  if (grid.channels != 1)
    throw wf::IoError("depth map must be single-channel: " + path);
  wf::DepthMap depth(grid.height, grid.width);
  depth.values = grid.data;
  depth.validate();
  return depth;
}

wf::Mask load_mask(const std::string &path) {
  const wf::ImageGrid grid = wf::read_pnm(path);
  if (grid.channels != 1)
    throw wf::IoError("mask must be single-channel: " + path);
  wf::Mask mask(grid.height, grid.width);
  for (std::size_t i = 0; i < grid.data.size(); ++i)
    mask.values[i] = grid.data[i] >= 0.5 ? 1 : 0;
  return mask;
}

double mean_abs(const wf::ImageGrid &img) {
  double s = 0.0;
  for (double v : img.data) s += std::abs(v);
  return img.data.empty() ? 0.0 : s / img.data.size();
}

struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;

  wf::RunConfig resolve() const {
    wf::RunConfig cfg =
        config_path.empty() ? wf::RunConfig{} : wf::load_run_config(config_path);
    if (seed) cfg.seed = *seed;
    cfg.validate();
    return cfg;
  }
};

void add_common(CLI::App *sub, Common &common) {
  sub->add_option("--config", common.config_path, "JSON run configuration");
  sub->add_option("--seed", common.seed, "Override the configured seed");
}

void emit(const json &j) { std::cout << wf::format_json(j) << "\n"; }

json patch_set_json(const wf::PatchSet &set) {
  json j;
  j["patch_size"] = set.patch_size;
  j["count"] = static_cast<int>(set.centers.size());
  j["shortfall"] = set.shortfall;
  json centers = json::array();
  for (const auto &[row, col] : set.centers) centers.push_back({row, col});
  j["centers"] = centers;
  json descriptors = json::array();
  for (const auto &d : set.descriptors) descriptors.push_back(d);
  j["descriptors"] = descriptors;
  return j;
}

json srma_step_json(const wf::SrmaStep &s) {
  json j;
  j["iteration"] = s.iteration;
  j["kl"] = s.kl;
  j["self"] = s.self;
  j["objective"] = s.objective;
  j["accepted_moves"] = s.accepted_moves;
  j["theta_s"] = s.theta_s;
  j["theta_r"] = s.theta_r;
  return j;
}

json cdma_report_json(const wf::CdmaReport &r) {
  json j;
  j["pho"] = r.pho;
  j["depth"] = r.depth;
  j["geo"] = r.geo;
  j["consis_static"] = r.consis_static;
  j["consis_dynamic"] = r.consis_dynamic;
  j["contra"] = r.contra;
  j["total"] = r.total;
  j["positive_count"] = r.positive_count;
  j["positive_shortfall"] = r.positive_shortfall;
  j["negative_count"] = r.negative_count;
  j["negative_shortfall"] = r.negative_shortfall;
  j["nonrigid_fill"] = r.nonrigid_fill;
  j["occ_fwd_fill"] = r.occ_fwd_fill;
  j["occ_bwd_fill"] = r.occ_bwd_fill;
  return j;
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"weatherflow: adverse-weather optical-flow toolkit"};
  app.require_subcommand(1);
  std::function<void()> action;

  // ---- synth-fog ----------------------------------------------------------
  {
    auto *sub = app.add_subcommand(
        "synth-fog", "Apply the atmospheric-scattering fog model");
    auto common = std::make_shared<Common>();
    auto image = std::make_shared<std::string>();
    auto depth = std::make_shared<std::string>();
    auto out = std::make_shared<std::string>();
    add_common(sub, *common);
    sub->add_option("--image", *image, "Clean input image")->required();
    sub->add_option("--depth", *depth, "Depth map (PFM)")->required();
    sub->add_option("--out", *out, "Output image path")->required();
    sub->callback([=, &action] {
      action = [=] {
        const wf::RunConfig cfg = common->resolve();
        const wf::ImageGrid img = load_image(*image);
        const wf::DepthMap d = load_depth(*depth);
        const wf::ImageGrid fogged = wf::synth_fog(img, d, cfg.fog);
        save_image(*out, fogged);
        json j;
        j["command"] = "synth-fog";
        j["output"] = *out;
        j["beta"] = cfg.fog.beta;
        j["psnr_vs_input"] = wf::psnr(fogged, img);
        emit(j);
      };
    });
  }

  // ---- synth-rain ---------------------------------------------------------
  {
    auto *sub =
        app.add_subcommand("synth-rain", "Overlay seeded additive rain streaks");
    auto common = std::make_shared<Common>();
    auto image = std::make_shared<std::string>();
    auto out = std::make_shared<std::string>();
    auto streaks_out = std::make_shared<std::string>();
    add_common(sub, *common);
    sub->add_option("--image", *image, "Clean input image")->required();
    sub->add_option("--out", *out, "Output image path")->required();
    sub->add_option("--streaks-out", *streaks_out,
                    "Optional PFM path for the streak layer");
    sub->callback([=, &action] {
      action = [=] {
        const wf::RunConfig cfg = common->resolve();
        wf::RainParams rain = cfg.rain;
        rain.seed = wf::derive_seed(cfg.seed ^ cfg.rain.seed, "synth-rain");
        const wf::ImageGrid img = load_image(*image);
        const auto [rainy, streaks] = wf::synth_rain(img, rain);
        save_image(*out, rainy);
        if (!streaks_out->empty()) wf::write_pfm(*streaks_out, streaks);
        json j;
        j["command"] = "synth-rain";
        j["output"] = *out;
        j["streak_count"] = rain.streak_count;
        j["mean_added"] = mean_abs(streaks);
        emit(j);
      };
    });
  }

  // ---- rigid-flow ---------------------------------------------------------
  {
    auto *sub = app.add_subcommand(
        "rigid-flow", "Flow induced by camera motion over a static scene");
    auto common = std::make_shared<Common>();
    auto depth = std::make_shared<std::string>();
    auto out = std::make_shared<std::string>();
    add_common(sub, *common);
    sub->add_option("--depth", *depth, "Depth map (PFM)")->required();
    sub->add_option("--out", *out, "Output flow (.flo)")->required();
    sub->callback([=, &action] {
      action = [=] {
        const wf::RunConfig cfg = common->resolve();
        const wf::DepthMap d = load_depth(*depth);
        const wf::RigidFlowResult r = wf::rigid_flow(d, cfg.camera, cfg.pose);
        wf::write_flo(*out, r.flow);
        double mag = 0.0;
        for (int y = 0; y < r.flow.height; ++y)
          for (int x = 0; x < r.flow.width; ++x)
            mag += std::hypot(r.flow.u(y, x), r.flow.v(y, x));
        json j;
        j["command"] = "rigid-flow";
        j["output"] = *out;
        j["valid_count"] = static_cast<std::int64_t>(r.valid.count());
        j["mean_magnitude"] = mag / (r.flow.height * r.flow.width);
        emit(j);
      };
    });
  }

  // ---- estimate -----------------------------------------------------------
  {
    auto *sub = app.add_subcommand(
        "estimate", "Coarse-to-fine optical flow between two frames");
    auto common = std::make_shared<Common>();
    auto image1 = std::make_shared<std::string>();
    auto image2 = std::make_shared<std::string>();
    auto out = std::make_shared<std::string>();
    add_common(sub, *common);
    sub->add_option("--image1", *image1, "Frame t")->required();
    sub->add_option("--image2", *image2, "Frame t+1")->required();
    sub->add_option("--out", *out, "Output flow (.flo)")->required();
    sub->callback([=, &action] {
      action = [=] {
        const wf::RunConfig cfg = common->resolve();
        const wf::ImageGrid i1 = load_image(*image1);
        const wf::ImageGrid i2 = load_image(*image2);
        const wf::FlowField flow = wf::estimate_flow(i1, i2, cfg.estimator);
        wf::write_flo(*out, flow);
        double mag = 0.0;
        for (int y = 0; y < flow.height; ++y)
          for (int x = 0; x < flow.width; ++x)
            mag += std::hypot(flow.u(y, x), flow.v(y, x));
        json j;
        j["command"] = "estimate";
        j["output"] = *out;
        j["height"] = flow.height;
        j["width"] = flow.width;
        j["mean_magnitude"] = mag / (flow.height * flow.width);
        emit(j);
      };
    });
  }

  // ---- warp-error ---------------------------------------------------------
  {
    auto *sub = app.add_subcommand(
        "warp-error", "Residual after aligning two frames with a flow field");
    auto common = std::make_shared<Common>();
    auto image1 = std::make_shared<std::string>();
    auto image2 = std::make_shared<std::string>();
    auto flow_path = std::make_shared<std::string>();
    auto out = std::make_shared<std::string>();
    add_common(sub, *common);
    sub->add_option("--image1", *image1, "Frame t")->required();
    sub->add_option("--image2", *image2, "Frame t+1")->required();
    sub->add_option("--flow", *flow_path, "Flow field (.flo)")->required();
    sub->add_option("--out", *out, "Output residual (PFM)")->required();
    sub->callback([=, &action] {
      action = [=] {
        common->resolve();
        const wf::ImageGrid i1 = load_image(*image1);
        const wf::ImageGrid i2 = load_image(*image2);
        const wf::FlowField flow = wf::read_flo(*flow_path);
        const wf::WarpErrorResult w = wf::warp_error_map(i1, i2, flow);
        wf::write_pfm(*out, w.error);
        json j;
        j["command"] = "warp-error";
        j["output"] = *out;
        j["mean_abs"] = mean_abs(w.error);
        j["oob_count"] = static_cast<std::int64_t>(w.oob.count());
        emit(j);
      };
    });
  }

  // ---- sample-patches -----------------------------------------------------
  {
    auto *sub = app.add_subcommand(
        "sample-patches",
        "Edge-aware or entropy-aware patch sampling from a residual map");
    auto common = std::make_shared<Common>();
    auto error_path = std::make_shared<std::string>();
    auto mode = std::make_shared<std::string>("edge");
    add_common(sub, *common);
    sub->add_option("--error", *error_path, "Residual map (PFM)")->required();
    sub->add_option("--mode", *mode, "edge or entropy")
        ->check(CLI::IsMember({"edge", "entropy"}));
    sub->callback([=, &action] {
      action = [=] {
        const wf::RunConfig cfg = common->resolve();
        const wf::ImageGrid err = load_image(*error_path);
        const std::uint64_t seed = wf::derive_seed(cfg.seed, "sample-patches");
        const wf::PatchSet set =
            *mode == "edge"
                ? wf::edge_aware_sample(err, cfg.sample_count, cfg.patch_size,
                                        seed)
                : wf::entropy_aware_sample(err, cfg.sample_count,
                                           cfg.patch_size, {}, seed);
        json j = patch_set_json(set);
        j["command"] = "sample-patches";
        j["mode"] = *mode;
        emit(j);
      };
    });
  }

  // ---- cost-volume --------------------------------------------------------
  {
    auto *sub = app.add_subcommand(
        "cost-volume", "Cosine-similarity cost volume between two frames");
    auto common = std::make_shared<Common>();
    auto image1 = std::make_shared<std::string>();
    auto image2 = std::make_shared<std::string>();
    add_common(sub, *common);
    sub->add_option("--image1", *image1, "Frame t")->required();
    sub->add_option("--image2", *image2, "Frame t+1")->required();
    sub->callback([=, &action] {
      action = [=] {
        const wf::RunConfig cfg = common->resolve();
        const wf::ImageGrid i1 = load_image(*image1);
        const wf::ImageGrid i2 = load_image(*image2);
        const wf::FeatureMap f1 =
            wf::encode_features(i1, cfg.estimator.theta);
        const wf::FeatureMap f2 =
            wf::encode_features(i2, cfg.estimator.theta);
        const wf::CostVolume cv =
            wf::cost_volume(f1, f2, cfg.estimator.radius);
        double lo = cv.corr[0], hi = cv.corr[0], mean = 0.0;
        for (double v : cv.corr) {
          lo = std::min(lo, v);
          hi = std::max(hi, v);
          mean += v;
        }
        json j;
        j["command"] = "cost-volume";
        j["height"] = cv.height;
        j["width"] = cv.width;
        j["radius"] = cv.radius;
        j["displacements"] = cv.displacements();
        j["min"] = lo;
        j["max"] = hi;
        j["mean"] = mean / cv.corr.size();
        emit(j);
      };
    });
  }

  // ---- histogram ----------------------------------------------------------
  {
    auto *sub = app.add_subcommand(
        "histogram", "Smoothed correlation histogram of a cost volume");
    auto common = std::make_shared<Common>();
    auto image1 = std::make_shared<std::string>();
    auto image2 = std::make_shared<std::string>();
    add_common(sub, *common);
    sub->add_option("--image1", *image1, "Frame t")->required();
    sub->add_option("--image2", *image2, "Frame t+1")->required();
    sub->callback([=, &action] {
      action = [=] {
        const wf::RunConfig cfg = common->resolve();
        const wf::ImageGrid i1 = load_image(*image1);
        const wf::ImageGrid i2 = load_image(*image2);
        const wf::FeatureMap f1 =
            wf::encode_features(i1, cfg.estimator.theta);
        const wf::FeatureMap f2 =
            wf::encode_features(i2, cfg.estimator.theta);
        const wf::CostVolume cv =
            wf::cost_volume(f1, f2, cfg.estimator.radius);
        const wf::CorrelationHistogram h = wf::correlation_histogram(
            cv, cfg.hist_samples, cfg.hist_bins,
            wf::derive_seed(cfg.seed, "histogram"));
        json j;
        j["command"] = "histogram";
        j["k"] = h.bins;
        j["thresholds"] = h.thresholds;
        j["counts"] = h.counts;
        j["probabilities"] = h.probabilities;
        emit(j);
      };
    });
  }

  // ---- losses -------------------------------------------------------------
  {
    auto *sub = app.add_subcommand(
        "losses",
        "Seven-component loss breakdown with the weighted total");
    auto common = std::make_shared<Common>();
    auto clean1 = std::make_shared<std::string>();
    auto clean2 = std::make_shared<std::string>();
    auto right1 = std::make_shared<std::string>();
    auto right2 = std::make_shared<std::string>();
    auto depth = std::make_shared<std::string>();
    add_common(sub, *common);
    sub->add_option("--clean1", *clean1, "Left frame t")->required();
    sub->add_option("--clean2", *clean2, "Left frame t+1")->required();
    sub->add_option("--right1", *right1, "Right frame t")->required();
    sub->add_option("--right2", *right2, "Right frame t+1")->required();
    sub->add_option("--depth", *depth, "Depth map (PFM)")->required();
    sub->callback([=, &action] {
      action = [=] {
        const wf::RunConfig cfg = common->resolve();
        wf::CdmaInputs in;
        in.clean1 = load_image(*clean1);
        in.clean2 = load_image(*clean2);
        in.right1 = load_image(*right1);
        in.right2 = load_image(*right2);
        in.depth = load_depth(*depth);
        const wf::CdmaReport r = wf::run_cdma(in, cfg);
        json j;
        j["command"] = "losses";
        j["pho"] = r.pho;
        j["dep"] = r.depth;
        j["geo"] = r.geo;
        j["consis"] = r.consis_static + r.consis_dynamic;
        j["contra"] = r.contra;
        j["self"] = 0.0;
        j["kl"] = 0.0;
        j["weights"] = cfg.weights.lambda;
        j["total"] = r.total;
        emit(j);
      };
    });
  }

  // ---- evaluate -----------------------------------------------------------
  {
    auto *sub = app.add_subcommand(
        "evaluate", "Endpoint-error and outlier metrics for a flow estimate");
    auto common = std::make_shared<Common>();
    auto flow_path = std::make_shared<std::string>();
    auto gt_path = std::make_shared<std::string>();
    auto valid_path = std::make_shared<std::string>();
    add_common(sub, *common);
    sub->add_option("--flow", *flow_path, "Estimated flow (.flo)")->required();
    sub->add_option("--gt", *gt_path, "Ground-truth flow (.flo)")->required();
    sub->add_option("--valid", *valid_path, "Optional validity mask (PGM)");
    sub->callback([=, &action] {
      action = [=] {
        common->resolve();
        const wf::FlowField flow = wf::read_flo(*flow_path);
        const wf::FlowField gt = wf::read_flo(*gt_path);
        wf::EvalResult r;
        if (valid_path->empty()) {
          r = wf::evaluate_flow(flow, gt);
        } else {
          const wf::Mask valid = load_mask(*valid_path);
          r = wf::evaluate_flow(flow, gt, &valid);
        }
        json j;
        j["epe"] = r.epe;
        j["fl_all"] = r.fl_all;
        j["valid_count"] = r.valid_count;
        emit(j);
      };
    });
  }

  // ---- run-cdma -----------------------------------------------------------
  {
    auto *sub = app.add_subcommand(
        "run-cdma", "Clean-to-degraded adaptation losses for one scene");
    auto common = std::make_shared<Common>();
    auto clean1 = std::make_shared<std::string>();
    auto clean2 = std::make_shared<std::string>();
    auto right1 = std::make_shared<std::string>();
    auto right2 = std::make_shared<std::string>();
    auto depth = std::make_shared<std::string>();
    auto out = std::make_shared<std::string>();
    add_common(sub, *common);
    sub->add_option("--clean1", *clean1, "Left frame t")->required();
    sub->add_option("--clean2", *clean2, "Left frame t+1")->required();
    sub->add_option("--right1", *right1, "Right frame t")->required();
    sub->add_option("--right2", *right2, "Right frame t+1")->required();
    sub->add_option("--depth", *depth, "Depth map (PFM)")->required();
    sub->add_option("--out", *out, "Optional JSON-lines report path");
    sub->callback([=, &action] {
      action = [=] {
        const wf::RunConfig cfg = common->resolve();
        wf::CdmaInputs in;
        in.clean1 = load_image(*clean1);
        in.clean2 = load_image(*clean2);
        in.right1 = load_image(*right1);
        in.right2 = load_image(*right2);
        in.depth = load_depth(*depth);
        const wf::CdmaReport r = wf::run_cdma(in, cfg);
        json j = cdma_report_json(r);
        j["command"] = "run-cdma";
        if (!out->empty()) {
          std::ofstream file(*out);
          if (!file) throw wf::IoError("cannot open " + *out);
          file << wf::format_json(cdma_report_json(r)) << "\n";
        }
        emit(j);
      };
    });
  }

  // ---- run-srma -----------------------------------------------------------
  {
    auto *sub = app.add_subcommand(
        "run-srma",
        "Synthetic-to-real encoder adaptation by greedy coordinate descent");
    auto common = std::make_shared<Common>();
    auto synth1 = std::make_shared<std::string>();
    auto synth2 = std::make_shared<std::string>();
    auto real1 = std::make_shared<std::string>();
    auto real2 = std::make_shared<std::string>();
    auto out = std::make_shared<std::string>();
    auto iters = std::make_shared<int>(20);
    auto step = std::make_shared<double>(0.05);
    add_common(sub, *common);
    sub->add_option("--synth1", *synth1, "Synthetic frame t")->required();
    sub->add_option("--synth2", *synth2, "Synthetic frame t+1")->required();
    sub->add_option("--real1", *real1, "Real frame t")->required();
    sub->add_option("--real2", *real2, "Real frame t+1")->required();
    sub->add_option("--iters", *iters, "Optimization iterations");
    sub->add_option("--step", *step, "Coordinate step size");
    sub->add_option("--out", *out, "Optional JSON-lines trace path");
    sub->callback([=, &action] {
      action = [=] {
        const wf::RunConfig cfg = common->resolve();
        wf::SrmaInputs in;
        in.synth1 = load_image(*synth1);
        in.synth2 = load_image(*synth2);
        in.real1 = load_image(*real1);
        in.real2 = load_image(*real2);
        const auto trace = wf::run_srma(
            in, cfg.estimator.theta, cfg.estimator.theta, cfg.ema_lambda,
            *iters, *step, wf::derive_seed(cfg.seed, "run-srma"), cfg);
        if (!out->empty()) {
          std::ofstream file(*out);
          if (!file) throw wf::IoError("cannot open " + *out);
          for (const wf::SrmaStep &s : trace)
            file << wf::format_json(srma_step_json(s)) << "\n";
        }
        json j = srma_step_json(trace.back());
        j["command"] = "run-srma";
        j["iterations"] = static_cast<int>(trace.size());
        emit(j);
      };
    });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    action();
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
