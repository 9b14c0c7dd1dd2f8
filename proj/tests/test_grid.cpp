#include <catch_amalgamated.hpp>

#include <cmath>

#include "weatherflow/grid.hpp"
#include "weatherflow/rng.hpp"

using namespace wf;

namespace {

ImageGrid random_image(int h, int w, int c, std::uint64_t seed) {
  ImageGrid img(h, w, c);
  SplitMix64 rng(seed);
  for (double &v : img.data) v = rng.uniform();
  return img;
}

} // namespace

TEST_CASE("bilinear_sample at integer coordinates is exact") {
  ImageGrid img = random_image(6, 7, 3, 1);
  const SampleResult s = bilinear_sample(img, 3.0, 2.0);
  REQUIRE_FALSE(s.out_of_bounds);
  for (int c = 0; c < 3; ++c) REQUIRE(s.value[c] == img.at(2, 3, c));
}

TEST_CASE("bilinear_sample interpolates midpoints") {
  ImageGrid img(2, 2, 1);
  img.at(0, 0) = 0.0;
  img.at(0, 1) = 1.0;
  const SampleResult s = bilinear_sample(img, 0.5, 0.0);
  REQUIRE(s.value[0] == Catch::Approx(0.5).margin(1e-12));
}

TEST_CASE("bilinear_sample clamps and flags out-of-bounds coordinates") {
  ImageGrid img = random_image(4, 4, 1, 2);
  const SampleResult s = bilinear_sample(img, -5.0, -5.0);
  REQUIRE(s.out_of_bounds);
  REQUIRE(s.value[0] == img.at(0, 0));
}

TEST_CASE("bilinear_sample is linear in the image") {
  ImageGrid a = random_image(5, 5, 1, 3);
  ImageGrid b = random_image(5, 5, 1, 4);
  ImageGrid mix(5, 5, 1, 0.0, true);
  const double ca = 0.3, cb = 0.6;
  for (std::size_t i = 0; i < mix.data.size(); ++i)
    mix.data[i] = ca * a.data[i] + cb * b.data[i];
  SplitMix64 rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const double x = rng.uniform(0.0, 4.0);
    const double y = rng.uniform(0.0, 4.0);
    const double lhs = bilinear_sample(mix, x, y).value[0];
    const double rhs = ca * bilinear_sample(a, x, y).value[0] +
                       cb * bilinear_sample(b, x, y).value[0];
    REQUIRE(lhs == Catch::Approx(rhs).margin(1e-6));
  }
}

TEST_CASE("backward_warp with zero flow is the identity") {
  ImageGrid img = random_image(8, 9, 3, 6);
  FlowField zero(8, 9);
  const auto [out, oob] = backward_warp(img, zero);
  REQUIRE(out.data == img.data);
  REQUIRE(oob.count() == 0);
}

TEST_CASE("backward_warp reconstructs a shifted image in the interior") {
  ImageGrid img = random_image(6, 8, 1, 7);
  ImageGrid shifted(6, 8, 1);
  for (int y = 0; y < 6; ++y)
    for (int x = 0; x < 8; ++x)
      shifted.at(y, x) = img.at(y, x == 7 ? 7 : x + 1); // img shifted left by 1
  FlowField flow(6, 8);
  for (double &c : flow.uv) c = 0.0;
  for (int y = 0; y < 6; ++y)
    for (int x = 0; x < 8; ++x) flow.u(y, x) = -1.0;
  const auto [out, oob] = backward_warp(shifted, flow);
  for (int y = 0; y < 6; ++y)
    for (int x = 1; x < 8; ++x)
      REQUIRE(out.at(y, x) == Catch::Approx(img.at(y, x)).margin(1e-12));
}

TEST_CASE("backward_warp flags everything when flow leaves the frame") {
  ImageGrid img = random_image(4, 4, 1, 8);
  FlowField flow(4, 4);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 4; ++x) flow.u(y, x) = 100.0;
  const auto [out, oob] = backward_warp(img, flow);
  REQUIRE(oob.count() == 16);
}

TEST_CASE("backward_warp rejects mismatched dimensions") {
  ImageGrid img = random_image(4, 4, 1, 9);
  FlowField flow(4, 5);
  REQUIRE_THROWS_AS(backward_warp(img, flow), std::invalid_argument);
}

TEST_CASE("downsample2 preserves constants and halves the shape") {
  ImageGrid img(4, 4, 1, 0.25);
  const ImageGrid out = downsample2(img);
  REQUIRE(out.height == 2);
  REQUIRE(out.width == 2);
  for (double v : out.data) REQUIRE(v == Catch::Approx(0.25).margin(1e-12));

  ImageGrid odd(5, 7, 1, 0.5);
  const ImageGrid out2 = downsample2(odd);
  REQUIRE(out2.height == 3);
  REQUIRE(out2.width == 4);
}

TEST_CASE("downsample2 low-passes a checkerboard") {
  ImageGrid img(8, 8, 1);
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 8; ++x) img.at(y, x) = (x + y) % 2;
  const ImageGrid out = downsample2(img);
  for (double v : out.data) {
    REQUIRE(v > 0.0);
    REQUIRE(v < 1.0);
  }
}

TEST_CASE("downsample2 rejects degenerate input") {
  ImageGrid img(1, 1, 1, 0.0);
  REQUIRE_THROWS_AS(downsample2(img), std::invalid_argument);
}

TEST_CASE("spatial_derivatives of a constant grid is zero") {
  ImageGrid img(6, 6, 3, 0.7);
  for (auto kind : {DerivativeKind::GradMag, DerivativeKind::Laplacian}) {
    const ImageGrid out = spatial_derivatives(img, kind);
    for (double v : out.data) REQUIRE(v == 0.0);
  }
}

TEST_CASE("spatial_derivatives on a linear ramp") {
  ImageGrid img(6, 8, 1, 0.0, true);
  for (int y = 0; y < 6; ++y)
    for (int x = 0; x < 8; ++x) img.at(y, x) = static_cast<double>(x);
  const ImageGrid grad = spatial_derivatives(img, DerivativeKind::GradMag);
  const ImageGrid lap = spatial_derivatives(img, DerivativeKind::Laplacian);
  for (int y = 1; y < 5; ++y)
    for (int x = 1; x < 7; ++x) {
      REQUIRE(grad.at(y, x) == Catch::Approx(1.0).margin(1e-12));
      REQUIRE(lap.at(y, x) == Catch::Approx(0.0).margin(1e-12));
    }
}

TEST_CASE("laplacian stencil sign convention on an impulse") {
  ImageGrid img(5, 5, 1, 0.0, true);
  img.at(2, 2) = 0.5;
  const ImageGrid lap = spatial_derivatives(img, DerivativeKind::Laplacian);
  REQUIRE(lap.at(2, 2) == Catch::Approx(-4.0 * 0.5).margin(1e-12));
}

TEST_CASE("local_entropy of a constant region is zero") {
  ImageGrid img(7, 7, 1, 0.4);
  const ImageGrid ent = local_entropy(img, 3);
  for (double v : ent.data) REQUIRE(v == 0.0);
}

TEST_CASE("local_entropy of two equally frequent bins is ln 2") {
  // Rows alternate between two bins, so any 3x3 window holds 6 of one bin and
  // 3 of the other except where replication balances them; use a 4-row
  // period so that a window straddling the boundary is split 6/3 and a
  // half-half construction gives exactly ln 2.
  ImageGrid stripes(4, 4, 1);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 4; ++x) stripes.at(y, x) = y < 2 ? 0.1 : 0.9;
  const ImageGrid ent = local_entropy(stripes, 3);
  // Window at row 1: rows {0,1,2} -> 6 lows, 3 highs.
  const double p1 = 6.0 / 9.0, p2 = 3.0 / 9.0;
  REQUIRE(ent.at(1, 1) ==
          Catch::Approx(-p1 * std::log(p1) - p2 * std::log(p2)).margin(1e-12));

  // Exactly half-half: window rows split 0.1 / 0.9 with replication making
  // the counts unequal is avoided by a 2-row image sampled at the boundary.
  ImageGrid columns(3, 4, 1);
  for (int y = 0; y < 3; ++y)
    for (int x = 0; x < 4; ++x)
      columns.at(y, x) = ((x + y) % 2) ? 0.9 : 0.1;
  // Checkerboard: every 3x3 window holds 5 of one bin and 4 of the other.
  const ImageGrid e2 = local_entropy(columns, 3);
  const double q1 = 5.0 / 9.0, q2 = 4.0 / 9.0;
  const double expected = -q1 * std::log(q1) - q2 * std::log(q2);
  REQUIRE(e2.at(1, 1) == Catch::Approx(expected).margin(1e-12));
  REQUIRE(expected == Catch::Approx(std::log(2.0)).margin(0.01));
}

TEST_CASE("local_entropy approaches ln 16 on a 16-level dithered tile") {
  // 4x4 tile holding every entropy bin exactly once, repeated.
  ImageGrid img(17, 17, 1);
  for (int y = 0; y < 17; ++y)
    for (int x = 0; x < 17; ++x)
      img.at(y, x) = ((x % 4) + 4 * (y % 4) + 0.5) / 16.0;
  const int window = 5;
  const ImageGrid ent = local_entropy(img, window);

  // Independent oracle at an interior pixel.
  const int cy = 8, cx = 8;
  int counts[16] = {};
  for (int dy = -2; dy <= 2; ++dy)
    for (int dx = -2; dx <= 2; ++dx) {
      const double v = img.at(cy + dy, cx + dx);
      ++counts[static_cast<int>(v * 16.0)];
    }
  double expected = 0.0;
  for (int c : counts)
    if (c > 0) {
      const double p = c / 25.0;
      expected -= p * std::log(p);
    }
  REQUIRE(ent.at(cy, cx) == Catch::Approx(expected).margin(1e-12));
  REQUIRE(ent.at(cy, cx) > 0.9 * std::log(16.0));
}

TEST_CASE("local_entropy stays within [0, ln 16]") {
  ImageGrid img = random_image(12, 12, 1, 11);
  const ImageGrid ent = local_entropy(img, 5);
  for (double v : ent.data) {
    REQUIRE(v >= 0.0);
    REQUIRE(v <= std::log(16.0) + 1e-12);
  }
}

TEST_CASE("local_entropy validates its window") {
  ImageGrid img = random_image(6, 6, 1, 12);
  REQUIRE_THROWS_AS(local_entropy(img, 4), std::invalid_argument);
  REQUIRE_THROWS_AS(local_entropy(img, 1), std::invalid_argument);
}

TEST_CASE("grid validation catches broken invariants") {
  ImageGrid img = random_image(3, 3, 1, 13);
  img.data[0] = 2.0;
  REQUIRE_THROWS_AS(img.validate(), std::invalid_argument);
  img.data[0] = 0.5;
  REQUIRE_NOTHROW(img.validate());

  FlowField flow(3, 3);
  flow.u(0, 0) = 100.0;
  REQUIRE_THROWS_AS(flow.validate(), std::invalid_argument);
}
