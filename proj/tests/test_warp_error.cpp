#include <catch_amalgamated.hpp>

#include <cmath>

#include "weatherflow/degrade.hpp"
#include "weatherflow/rng.hpp"
#include "weatherflow/warp_error.hpp"

using namespace wf;

namespace {

ImageGrid random_image(int h, int w, int c, std::uint64_t seed,
                       bool linear = false) {
  ImageGrid img(h, w, c, 0.0, linear);
  SplitMix64 rng(seed);
  for (double &v : img.data) v = rng.uniform();
  return img;
}

double cosine(const std::vector<double> &a, const std::vector<double> &b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d += a[i] * b[i];
  return d;
}

} // namespace

TEST_CASE("warp_error_map at zero flow is the plain difference") {
  ImageGrid img1 = random_image(6, 6, 1, 1);
  ImageGrid img2 = random_image(6, 6, 1, 2);
  FlowField zero(6, 6);
  const WarpErrorResult w = warp_error_map(img1, img2, zero);
  for (std::size_t i = 0; i < img1.data.size(); ++i)
    REQUIRE(w.error.data[i] ==
            Catch::Approx(img1.data[i] - img2.data[i]).margin(1e-12));
  REQUIRE(w.oob.count() == 0);
}

TEST_CASE("warp_error_map vanishes for a perfectly aligned pair") {
  ImageGrid img1 = random_image(8, 12, 1, 3);
  ImageGrid img2(8, 12, 1);
  // img2(x) = img1(x-2): flow (2,0) aligns them.
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 12; ++x)
      img2.at(y, x) = img1.at(y, std::max(0, x - 2));
  FlowField flow(8, 12);
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 12; ++x) flow.u(y, x) = 2.0;
  const WarpErrorResult w = warp_error_map(img1, img2, flow);
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 10; ++x)
      REQUIRE(w.error.at(y, x) == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("warp-error decomposition identity holds in linear mode") {
  SplitMix64 rng(4);
  for (int trial = 0; trial < 5; ++trial) {
    ImageGrid x1 = random_image(12, 12, 1, 10 + trial, true);
    ImageGrid x2 = random_image(12, 12, 1, 20 + trial, true);
    RainParams p;
    p.seed = 30 + trial;
    const auto [y1, d1] = synth_rain(x1, p);
    p.seed = 40 + trial;
    const auto [y2, d2] = synth_rain(x2, p);
    FlowField flow(12, 12);
    for (double &c : flow.uv) c = rng.uniform(-2.0, 2.0);

    const WarpErrorResult wx = warp_error_map(x1, x2, flow);
    const WarpErrorResult wy = warp_error_map(y1, y2, flow);
    const WarpErrorResult wd = warp_error_map(d1, d2, flow);
    for (int y = 0; y < 12; ++y)
      for (int x = 0; x < 12; ++x) {
        if (wx.oob.at(y, x)) continue;
        REQUIRE(wy.error.at(y, x) - wx.error.at(y, x) ==
                Catch::Approx(wd.error.at(y, x)).margin(1e-6));
      }
  }
}

TEST_CASE("edge_aware_sample finds nothing on a constant map") {
  ImageGrid flat(32, 32, 1, 0.3, true);
  const PatchSet set = edge_aware_sample(flat, 10, 5, 1);
  REQUIRE(set.centers.empty());
  REQUIRE(set.shortfall == 10);
}

TEST_CASE("edge_aware_sample concentrates on a step edge") {
  ImageGrid step(32, 32, 1, 0.0, true);
  for (int y = 0; y < 32; ++y)
    for (int x = 16; x < 32; ++x) step.at(y, x) = 1.0;
  const PatchSet set = edge_aware_sample(step, 8, 5, 7);
  REQUIRE_FALSE(set.centers.empty());
  for (auto [row, col] : set.centers) REQUIRE(std::abs(col - 15) <= 1);
}

TEST_CASE("edge_aware_sample respects spacing and determinism") {
  ImageGrid noise = random_image(48, 48, 1, 5, true);
  const PatchSet a = edge_aware_sample(noise, 20, 7, 99);
  const PatchSet b = edge_aware_sample(noise, 20, 7, 99);
  REQUIRE(a.centers == b.centers);
  for (std::size_t i = 0; i < a.centers.size(); ++i)
    for (std::size_t j = i + 1; j < a.centers.size(); ++j) {
      const int cheb = std::max(
          std::abs(a.centers[i].first - a.centers[j].first),
          std::abs(a.centers[i].second - a.centers[j].second));
      REQUIRE(cheb >= 7 / 2);
    }
}

TEST_CASE("descriptors are unit length or flagged degenerate") {
  ImageGrid noise = random_image(48, 48, 1, 6, true);
  const PatchSet set = edge_aware_sample(noise, 15, 7, 3);
  for (std::size_t i = 0; i < set.descriptors.size(); ++i) {
    const double n = std::sqrt(cosine(set.descriptors[i], set.descriptors[i]));
    if (set.degenerate[i])
      REQUIRE(n == 0.0);
    else
      REQUIRE(n == Catch::Approx(1.0).margin(1e-9));
  }
}

TEST_CASE("entropy_aware_sample picks the noisy stripe") {
  ImageGrid img(40, 40, 1, 0.5, true);
  SplitMix64 rng(8);
  for (int y = 16; y < 24; ++y)
    for (int x = 0; x < 40; ++x) img.at(y, x) = rng.uniform();
  const PatchSet set = entropy_aware_sample(img, 4, 5, {}, 1);
  REQUIRE(static_cast<int>(set.centers.size()) == 4);
  for (auto [row, col] : set.centers) {
    REQUIRE(row >= 13);
    REQUIRE(row <= 26);
  }
}

TEST_CASE("entropy_aware_sample honors exclusions") {
  ImageGrid img = random_image(24, 24, 1, 9, true);
  const PatchSet base = entropy_aware_sample(img, 6, 5, {}, 1);
  REQUIRE_FALSE(base.centers.empty());
  // Excluding everything near every selected center starves the sampler.
  std::vector<std::pair<int, int>> exclude;
  for (int y = 0; y < 24; y += 4)
    for (int x = 0; x < 24; x += 4) exclude.emplace_back(y, x);
  const PatchSet starved = entropy_aware_sample(img, 6, 5, exclude, 1);
  REQUIRE(starved.shortfall == 6);
  REQUIRE(starved.centers.empty());
}

TEST_CASE("entropy_aware_sample is deterministic with lexicographic ties") {
  ImageGrid img = random_image(32, 32, 1, 10, true);
  const PatchSet a = entropy_aware_sample(img, 8, 5, {}, 1);
  const PatchSet b = entropy_aware_sample(img, 8, 5, {}, 2);
  REQUIRE(a.centers == b.centers); // ranking ignores the seed
}

TEST_CASE("negative centers stay clear of positive centers") {
  ImageGrid wx = random_image(48, 48, 1, 11, true);
  ImageGrid wy = random_image(48, 48, 1, 12, true);
  const PatchSet pos = edge_aware_sample(wx, 10, 7, 5);
  const PatchSet neg = entropy_aware_sample(wy, 10, 7, pos.centers, 5);
  for (const auto &n : neg.centers)
    for (const auto &p : pos.centers) {
      const int cheb = std::max(std::abs(n.first - p.first),
                                std::abs(n.second - p.second));
      REQUIRE(cheb >= 7);
    }
}

TEST_CASE("extract_patches validates bounds") {
  ImageGrid img = random_image(10, 10, 1, 13, true);
  REQUIRE_THROWS_AS(extract_patches(img, {{0, 0}}, 5), std::invalid_argument);
  REQUIRE_NOTHROW(extract_patches(img, {{5, 5}}, 5));
}
