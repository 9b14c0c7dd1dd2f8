#include <catch_amalgamated.hpp>

#include <cmath>

#include "weatherflow/adapt.hpp"
#include "weatherflow/rng.hpp"

using namespace wf;

namespace {

ImageGrid textured(int h, int w, std::uint64_t seed) {
  SplitMix64 rng(seed);
  ImageGrid raw(h, w, 1);
  for (double &v : raw.data) v = rng.uniform();
  ImageGrid out(h, w, 1);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double s = 0.0;
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx)
          s += raw.at(std::clamp(y + dy, 0, h - 1),
                      std::clamp(x + dx, 0, w - 1));
      out.at(y, x) = s / 9.0;
    }
  return out;
}

CdmaInputs make_scene(std::uint64_t seed) {
  CdmaInputs in;
  in.clean1 = textured(32, 32, seed);
  // Frame t+1: one-pixel rightward shift of frame t.
  in.clean2 = ImageGrid(32, 32, 1);
  for (int y = 0; y < 32; ++y)
    for (int x = 0; x < 32; ++x)
      in.clean2.at(y, x) = in.clean1.at(y, std::max(0, x - 1));
  in.right1 = textured(32, 32, seed + 100);
  in.right2 = textured(32, 32, seed + 101);
  in.depth = DepthMap(32, 32, 10.0);
  SplitMix64 rng(seed + 7);
  for (double &d : in.depth.values) d = rng.uniform(5.0, 30.0);
  return in;
}

RunConfig small_config() {
  RunConfig cfg;
  cfg.seed = 42;
  cfg.sample_count = 10;
  cfg.patch_size = 5;
  cfg.estimator.levels = 2;
  cfg.estimator.radius = 2;
  return cfg;
}

} // namespace

TEST_CASE("run_cdma consistency terms vanish without degradation") {
  const CdmaInputs in = make_scene(1);
  RunConfig cfg = small_config();
  cfg.fog.beta = 0.0;        // fog synthesis becomes the identity
  cfg.rain.streak_count = 0; // rain synthesis becomes the identity
  const CdmaReport r = run_cdma(in, cfg);
  REQUIRE(r.consis_static == 0.0);
  REQUIRE(r.consis_dynamic == 0.0);
}

TEST_CASE("run_cdma is bit-deterministic for a fixed seed") {
  const CdmaInputs in = make_scene(2);
  const RunConfig cfg = small_config();
  const CdmaReport a = run_cdma(in, cfg);
  const CdmaReport b = run_cdma(in, cfg);
  REQUIRE(a.pho == b.pho);
  REQUIRE(a.depth == b.depth);
  REQUIRE(a.geo == b.geo);
  REQUIRE(a.consis_static == b.consis_static);
  REQUIRE(a.consis_dynamic == b.consis_dynamic);
  REQUIRE(a.contra == b.contra);
  REQUIRE(a.total == b.total);
  REQUIRE(a.positive_count == b.positive_count);
  REQUIRE(a.negative_count == b.negative_count);
}

TEST_CASE("run_cdma total matches the weighted sum of its parts") {
  const CdmaInputs in = make_scene(3);
  const RunConfig cfg = small_config();
  const CdmaReport r = run_cdma(in, cfg);
  const double expected = total_loss(
      {r.pho, r.depth, r.geo, r.consis_static + r.consis_dynamic, r.contra,
       0.0, 0.0},
      cfg.weights);
  REQUIRE(r.total == expected);
  REQUIRE_NOTHROW(r.validate());
}

TEST_CASE("denser rain produces larger degraded warp errors") {
  // Linear mode keeps the streak layer purely additive: no clipping means
  // the degraded warp error cannot saturate at high streak counts.
  ImageGrid x1 = textured(48, 48, 4);
  x1.linear_mode = true;
  ImageGrid x2(48, 48, 1, 0.0, true);
  for (int y = 0; y < 48; ++y)
    for (int x = 0; x < 48; ++x) x2.at(y, x) = x1.at(y, std::max(0, x - 1));
  FlowField flow(48, 48);
  for (int y = 0; y < 48; ++y)
    for (int x = 0; x < 48; ++x) flow.u(y, x) = 1.0;

  double prev = -1.0;
  for (int streaks : {0, 20, 80, 320}) {
    RainParams p;
    p.streak_count = streaks;
    p.seed = 11;
    const auto [y1, d1] = synth_rain(x1, p);
    p.seed = 12;
    const auto [y2, d2] = synth_rain(x2, p);
    const WarpErrorResult w = warp_error_map(y1, y2, flow);
    double mean_abs = 0.0;
    std::size_t count = 0;
    for (int y = 0; y < 48; ++y)
      for (int x = 0; x < 48; ++x) {
        if (w.oob.at(y, x)) continue;
        mean_abs += std::abs(w.error.at(y, x));
        ++count;
      }
    mean_abs /= count;
    REQUIRE(mean_abs > prev);
    prev = mean_abs;
  }
}

TEST_CASE("run_srma on identical domains stays at the optimum") {
  SrmaInputs in;
  in.synth1 = textured(32, 32, 5);
  in.synth2 = textured(32, 32, 6);
  in.real1 = in.synth1;
  in.real2 = in.synth2;
  RunConfig cfg = small_config();
  const auto trace = run_srma(in, ParamVector::identity(),
                              ParamVector::identity(), 0.99, 3, 0.1, 9, cfg);
  REQUIRE(trace.size() == 3);
  for (const SrmaStep &s : trace) {
    REQUIRE(s.kl == 0.0);
    REQUIRE(s.self == 0.0);
    REQUIRE(s.objective == 0.0);
    REQUIRE(s.accepted_moves == 0);
    REQUIRE(s.theta_s == ParamVector::identity().values);
    REQUIRE(s.theta_r == ParamVector::identity().values);
  }
}

TEST_CASE("run_srma real parameters track the synthetic ones geometrically") {
  // Constant images make every objective zero, so the synthetic parameters
  // never move and the real ones follow a pure exponential-average path.
  SrmaInputs in;
  in.synth1 = ImageGrid(16, 16, 1, 0.5);
  in.synth2 = ImageGrid(16, 16, 1, 0.5);
  in.real1 = in.synth1;
  in.real2 = in.synth2;
  RunConfig cfg = small_config();
  const ParamVector theta_s = ParamVector::identity();
  ParamVector theta_r0 = ParamVector::identity();
  theta_r0.values = {2.0, 1.5, 1.25, 0.2, 0.1, -0.1};
  const double lambda = 0.99;
  const auto trace = run_srma(in, theta_s, theta_r0, lambda, 5, 0.1, 3, cfg);
  for (std::size_t n = 0; n < trace.size(); ++n) {
    REQUIRE(trace[n].accepted_moves == 0);
    for (std::size_t i = 0; i < theta_s.values.size(); ++i) {
      const double expected =
          theta_s.values[i] + (theta_r0.values[i] - theta_s.values[i]) *
                                  std::pow(lambda, n + 1);
      REQUIRE(trace[n].theta_r[i] ==
              Catch::Approx(expected).epsilon(1e-12));
    }
  }
}

TEST_CASE("run_srma is deterministic") {
  SrmaInputs in;
  in.synth1 = textured(32, 32, 7);
  in.synth2 = textured(32, 32, 8);
  in.real1 = textured(32, 32, 9);
  in.real2 = textured(32, 32, 10);
  RunConfig cfg = small_config();
  const auto a = run_srma(in, ParamVector::identity(),
                          ParamVector::identity(), 0.99, 2, 0.05, 17, cfg);
  const auto b = run_srma(in, ParamVector::identity(),
                          ParamVector::identity(), 0.99, 2, 0.05, 17, cfg);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    REQUIRE(a[i].objective == b[i].objective);
    REQUIRE(a[i].theta_s == b[i].theta_s);
    REQUIRE(a[i].theta_r == b[i].theta_r);
  }
}

TEST_CASE("run_srma validates its arguments") {
  SrmaInputs in;
  in.synth1 = ImageGrid(16, 16, 1, 0.5);
  in.synth2 = in.synth1;
  in.real1 = in.synth1;
  in.real2 = in.synth1;
  const RunConfig cfg = small_config();
  const ParamVector id = ParamVector::identity();
  REQUIRE_THROWS_AS(run_srma(in, id, id, 1.5, 1, 0.1, 0, cfg),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(run_srma(in, id, id, 0.99, 0, 0.1, 0, cfg),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(run_srma(in, id, id, 0.99, 1, 0.0, 0, cfg),
                    std::invalid_argument);
}
