#pragma once

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "weatherflow/config.hpp"
#include "weatherflow/correlation.hpp"
#include "weatherflow/degrade.hpp"
#include "weatherflow/flow_estimator.hpp"
#include "weatherflow/losses.hpp"
#include "weatherflow/warp_error.hpp"

namespace wf {

struct CdmaInputs {
  ImageGrid clean1, clean2; // left frames t, t+1
  ImageGrid right1, right2; // right stereo frames
  DepthMap depth;           // left frame t
};

// Loss report of the clean -> synthetic-degraded stage.
struct CdmaReport {
  double pho = 0.0;
  double depth = 0.0;
  double geo = 0.0;
  double consis_static = 0.0;
  double consis_dynamic = 0.0;
  double contra = 0.0;
  double total = 0.0;
  int positive_count = 0;
  int positive_shortfall = 0;
  int negative_count = 0;
  int negative_shortfall = 0;
  double nonrigid_fill = 0.0;
  double occ_fwd_fill = 0.0;
  double occ_bwd_fill = 0.0;

  void validate() const {
    for (double v : {pho, depth, geo, consis_static, consis_dynamic, contra,
                     total})
      if (!std::isfinite(v) || v < 0.0)
        throw std::runtime_error("CdmaReport: loss must be finite and >= 0");
  }
};

namespace detail {

inline std::vector<std::vector<double>>
patch_descriptors(const PatchSet &set) {
  return set.descriptors;
}

} // namespace detail

// Evaluates the clean-degraded adaptation losses on one desk-scale scene:
// clean flow + occlusion masks, rigid-flow geometry terms, fog/rain
// synthesis, cross-domain flow consistency, and warp-error contrastive
// sampling, assembled into the weighted total.
inline CdmaReport run_cdma(const CdmaInputs &in, const RunConfig &cfg) {
  cfg.validate();
  in.depth.validate();

  CdmaReport report;
  const FlowField flow_c = estimate_flow(in.clean1, in.clean2, cfg.estimator);
  const FlowField flow_c_bwd =
      estimate_flow(in.clean2, in.clean1, cfg.estimator);
  const Mask occ_fwd =
      fb_consistency_mask(flow_c, flow_c_bwd, cfg.alpha1, cfg.alpha2);
  const Mask occ_bwd =
      fb_consistency_mask(flow_c_bwd, flow_c, cfg.alpha1, cfg.alpha2);
  report.occ_fwd_fill = occ_fwd.fill_ratio();
  report.occ_bwd_fill = occ_bwd.fill_ratio();
  report.pho = photometric_loss(in.clean1, in.clean2, flow_c, flow_c_bwd,
                                occ_fwd, occ_bwd, cfg.sparse_norm);

  const RigidFlowResult rigid_fwd = rigid_flow(in.depth, cfg.camera, cfg.pose);
  const RigidFlowResult rigid_bwd =
      rigid_flow(in.depth, cfg.camera, cfg.pose.inverse());
  const Mask nonrigid = fb_consistency_mask(rigid_fwd.flow, rigid_bwd.flow,
                                            cfg.alpha1, cfg.alpha2);
  report.nonrigid_fill = nonrigid.fill_ratio();
  report.geo = geo_consistency_loss(flow_c, rigid_fwd.flow, nonrigid);
  report.depth =
      depth_loss(in.clean1, in.right1, in.depth, cfg.camera, cfg.sparse_norm);

  const ImageGrid fog1 = synth_fog(in.clean1, in.depth, cfg.fog);
  const ImageGrid fog2 = synth_fog(in.clean2, in.depth, cfg.fog);
  RainParams rain1 = cfg.rain;
  rain1.seed = derive_seed(cfg.seed ^ cfg.rain.seed, "rain-frame-1");
  RainParams rain2 = cfg.rain;
  rain2.seed = derive_seed(cfg.seed ^ cfg.rain.seed, "rain-frame-2");
  const auto [rainy1, streaks1] = synth_rain(in.clean1, rain1);
  const auto [rainy2, streaks2] = synth_rain(in.clean2, rain2);

  const FlowField flow_ss = estimate_flow(fog1, fog2, cfg.estimator);
  const FlowField flow_sd = estimate_flow(rainy1, rainy2, cfg.estimator);
  report.consis_static = flow_l1_loss(flow_ss, flow_c);
  report.consis_dynamic = flow_l1_loss(flow_sd, flow_c);

  const WarpErrorResult wx = warp_error_map(in.clean1, in.clean2, flow_c);
  const WarpErrorResult wy = warp_error_map(rainy1, rainy2, flow_c);
  const PatchSet positives =
      edge_aware_sample(wx.error, cfg.sample_count, cfg.patch_size,
                        derive_seed(cfg.seed, "edge-sample"));
  report.positive_count = static_cast<int>(positives.centers.size());
  report.positive_shortfall = positives.shortfall;
  if (!positives.centers.empty()) {
    const PatchSet pos_degraded =
        extract_patches(wy.error, positives.centers, cfg.patch_size);
    const PatchSet negatives = entropy_aware_sample(
        wy.error, cfg.sample_count, cfg.patch_size, positives.centers,
        derive_seed(cfg.seed, "entropy-sample"));
    report.negative_count = static_cast<int>(negatives.centers.size());
    report.negative_shortfall = negatives.shortfall;
    report.contra = contrastive_loss(positives.descriptors,
                                     pos_degraded.descriptors,
                                     negatives.descriptors, cfg.tau);
  }

  const double consis = report.consis_static + report.consis_dynamic;
  report.total = total_loss({report.pho, report.depth, report.geo, consis,
                             report.contra, 0.0, 0.0},
                            cfg.weights);
  report.validate();
  return report;
}

// One recorded step of the synthetic -> real optimization.
struct SrmaStep {
  int iteration = 0;
  double kl = 0.0;
  double self = 0.0;
  double objective = 0.0;
  int accepted_moves = 0;
  std::vector<double> theta_s;
  std::vector<double> theta_r;
};

struct SrmaInputs {
  ImageGrid synth1, synth2;
  ImageGrid real1, real2;
};

namespace detail {

struct SrmaEval {
  double kl = 0.0;
  double self = 0.0;
  double objective = 0.0;
};

} // namespace detail

// Greedy coordinate descent over the synthetic encoder parameters,
// minimizing lambda7 * KL(p_r || p_s) + lambda6 * L1(F_r, F_pse), with the
// real encoder tracking theta_s through EMA after every iteration.
inline std::vector<SrmaStep>
run_srma(const SrmaInputs &in, ParamVector theta_s, ParamVector theta_r,
         double lambda, int iters, double step, std::uint64_t seed,
         const RunConfig &cfg) {
  if (!(lambda >= 0.0 && lambda <= 1.0))
    throw std::invalid_argument("run_srma: lambda outside [0,1]");
  if (iters < 1) throw std::invalid_argument("run_srma: iters must be >= 1");
  if (!(step > 0.0)) throw std::invalid_argument("run_srma: step must be > 0");
  theta_s.validate();
  theta_r.validate();

  const double w_self = cfg.weights.lambda[5];
  const double w_kl = cfg.weights.lambda[6];

  // One sampling seed for the whole run keeps the objective landscape fixed
  // across iterations, so the greedy trace is comparable end to end.
  const std::uint64_t hist_seed = derive_seed(seed, "srma-hist");

  std::vector<SrmaStep> trace;
  trace.reserve(static_cast<std::size_t>(iters));
  for (int it = 1; it <= iters; ++it) {
    // Real side is fixed throughout this iteration's sweep.
    const FeatureMap fr1 = encode_features(in.real1, theta_r);
    const FeatureMap fr2 = encode_features(in.real2, theta_r);
    const CostVolume cv_r = cost_volume(fr1, fr2, cfg.estimator.radius);
    const CorrelationHistogram hist_r =
        correlation_histogram(cv_r, cfg.hist_samples, cfg.hist_bins,
                              hist_seed);
    EstimatorConfig est_r = cfg.estimator;
    est_r.theta = theta_r;
    const FlowField flow_r = estimate_flow(in.real1, in.real2, est_r);

    const auto evaluate = [&](const ParamVector &ts) {
      const FeatureMap fs1 = encode_features(in.synth1, ts);
      const FeatureMap fs2 = encode_features(in.synth2, ts);
      const CostVolume cv_s = cost_volume(fs1, fs2, cfg.estimator.radius);
      const CorrelationHistogram hist_s =
          correlation_histogram(cv_s, cfg.hist_samples, cfg.hist_bins,
                                hist_seed);
      EstimatorConfig est_s = cfg.estimator;
      est_s.theta = ts;
      const FlowField flow_pse = estimate_flow(in.real1, in.real2, est_s);
      detail::SrmaEval e;
      e.kl = kl_divergence(hist_r.probabilities, hist_s.probabilities);
      e.self = flow_l1_loss(flow_r, flow_pse);
      e.objective = w_kl * e.kl + w_self * e.self;
      if (!std::isfinite(e.objective))
        throw std::runtime_error("run_srma: non-finite objective");
      return e;
    };

    detail::SrmaEval current = evaluate(theta_s);
    int accepted = 0;
    for (std::size_t i = 0; i < theta_s.values.size(); ++i) {
      detail::SrmaEval best = current;
      double best_value = theta_s.values[i];
      for (double delta : {step, -step}) {
        ParamVector candidate = theta_s;
        candidate.values[i] += delta;
        if (i < kFeatureChannels && !(candidate.values[i] > 0.0))
          continue; // gains stay positive
        const detail::SrmaEval e = evaluate(candidate);
        if (e.objective < best.objective) {
          best = e;
          best_value = candidate.values[i];
        }
      }
      if (best_value != theta_s.values[i]) {
        theta_s.values[i] = best_value;
        current = best;
        ++accepted;
      }
    }

    theta_r = ema_update(theta_r, theta_s, lambda);

    SrmaStep rec;
    rec.iteration = it;
    rec.kl = current.kl;
    rec.self = current.self;
    rec.objective = current.objective;
    rec.accepted_moves = accepted;
    rec.theta_s = theta_s.values;
    rec.theta_r = theta_r.values;
    trace.push_back(std::move(rec));
  }
  return trace;
}

} // namespace wf
