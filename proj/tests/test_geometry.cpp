#include <doctest.h>

#include <cmath>
#include <numeric>

#include "eps2/errors.hpp"
#include "eps2/scene_io.hpp"
#include "eps2/sphere.hpp"
#include "eps2/fixtures.hpp"

using namespace eps2;
using namespace eps2::fixtures;

TEST_CASE("classify on the half-plane pair") {
  auto R = half_pair(2);
  CHECK(R.classify({0, 1, 0}) == Label::Plus);
  CHECK(R.classify({0, 0, 0}) == Label::Free);
  CHECK(R.classify({3, -0.5, 0}) == Label::Minus);
  auto R3 = half_pair(3);
  CHECK(classify({0, 0, -1}, R3) == Label::Minus);
  CHECK(classify({0, -1, 0}, R3) == Label::Free);
}

TEST_CASE("overlapping regions are rejected") {
  CHECK_THROWS_AS(RegionPair(2, leaf(ball(2, {0, 0, 0}, 1)), leaf(ball(2, {0.5, 0, 0}, 1))), SceneError);
}

TEST_CASE("sample_sphere weights and node placement") {
  auto s = sample_sphere(2, {0, 0, 0}, 1, QuadMode::Lattice, 360);
  REQUIRE(s.nodes.size() == 360);
  for (double w : s.weights) CHECK(w == doctest::Approx(2 * kPi / 360).epsilon(1e-14));
  auto s2 = sample_sphere(2, {0, 0, 0}, 2, QuadMode::Lattice, 360);
  CHECK(std::accumulate(s2.weights.begin(), s2.weights.end(), 0.0) == doctest::Approx(4 * kPi).epsilon(1e-12));
  auto s3 = sample_sphere(3, {0, 0, 0}, 1, QuadMode::Lattice, 1000);
  CHECK(std::fabs(std::accumulate(s3.weights.begin(), s3.weights.end(), 0.0) - 4 * kPi) < 1e-9 * 4 * kPi);
  Vec3 c{0.3, -1.2, 0.7};
  for (QuadMode m : {QuadMode::Lattice, QuadMode::Stratified}) {
    auto q = sample_sphere(3, c, 2.5, m, 501, 9);
    CHECK(q.nodes.size() % 2 == 0);
    for (std::size_t k = 0; k < q.nodes.size(); ++k) {
      CHECK(std::fabs(dist(q.nodes[k], c) - 2.5) <= 1e-12 * 2.5 * 4);
      CHECK(dist(q.nodes[q.antipode[k]], c * 2.0 - q.nodes[k]) < 1e-12);
    }
  }
  CHECK_THROWS(sample_sphere(2, {0, 0, 0}, 1, QuadMode::Lattice, 7));
}

TEST_CASE("stratified sampling is reproducible from the seed") {
  auto a = sample_sphere(2, {0, 0, 0}, 1, QuadMode::Stratified, 64, 42);
  auto b = sample_sphere(2, {0, 0, 0}, 1, QuadMode::Stratified, 64, 42);
  auto c = sample_sphere(2, {0, 0, 0}, 1, QuadMode::Stratified, 64, 43);
  CHECK(a.nodes[5] == b.nodes[5]);
  CHECK_FALSE(a.nodes[5] == c.nodes[5]);
}

TEST_CASE("arc decomposition examples") {
  auto d = arc_decomposition(half_pair(2), {0, 0, 0}, 1);
  REQUIRE(d.plus.size() == 1);
  REQUIRE(d.minus.size() == 1);
  CHECK(d.plus[0].first == doctest::Approx(0).epsilon(1e-15));
  CHECK(d.plus[0].second == doctest::Approx(kPi));
  CHECK(d.minus[0].first == doctest::Approx(kPi));
  CHECK(d.minus[0].second == doctest::Approx(2 * kPi));
  CHECK(d.free.empty());

  for (double h : {0.05, 0.1, 0.3}) {
    auto g = arc_decomposition(gap_strip(h), {0, 0, 0}, 1);
    double fr = 0;
    for (auto [a, b] : g.free) fr += b - a;
    // The strip {-h < y2 < 0} meets the unit circle in two arcs of angle asin(h).
    CHECK(std::fabs(fr - 2 * std::asin(h)) < 1e-12);
  }
  auto e = arc_decomposition(empty_pair(2), {0, 0, 0}, 1);
  REQUIRE(e.free.size() == 1);
  CHECK(e.free[0].second - e.free[0].first == doctest::Approx(2 * kPi));
}

TEST_CASE("arc lengths are invariant under rigid motions") {
  auto tot = [](const std::vector<std::pair<double, double>>& v) {
    double s = 0;
    for (auto [a, b] : v) s += b - a;
    return s;
  };
  const Motion M{0.37, {0.2, -0.4, 0}};
  for (std::uint64_t seed = 1; seed <= 8; ++seed) {
    auto R = random_scene(seed);
    auto RM = random_scene(seed, M);
    Vec3 x{0.1, 0.05, 0};
    for (double r : {0.2, 0.8, 1.7}) {
      auto A = arc_decomposition(R, x, r);
      auto B = arc_decomposition(RM, M(x), r);
      CHECK(std::fabs(tot(A.plus) - tot(B.plus)) < 1e-9);
      CHECK(std::fabs(tot(A.minus) - tot(B.minus)) < 1e-9);
      CHECK(std::fabs(tot(A.free) - tot(B.free)) < 1e-9);
    }
  }
}

TEST_CASE("classify agrees with arc labels at sampled nodes") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    auto R = random_scene(seed);
    Vec3 x{0.1 * seed - 0.5, 0.2, 0};
    auto A = arc_set(R, x, 0.9);
    auto q = sample_sphere(2, x, 0.9, QuadMode::Stratified, 400, seed);
    for (const auto& p : q.nodes) {
      Vec3 d = p - x;
      double th = wrap_angle(std::atan2(d.y, d.x));
      bool near_break = false;
      for (double b : A.breaks) near_break |= std::fabs(std::remainder(th - b, 2 * kPi)) < 1e-9;
      if (!near_break) CHECK(R.classify(p) == A.label_at(th));
    }
  }
}

TEST_CASE("stratified estimates stay within the reported error") {
  // Exact-arc value is the oracle; the stratified error bar is 3 sigma.
  int ok = 0, trials = 0;
  for (std::uint64_t scene = 1; scene <= 4; ++scene) {
    auto R = random_scene(scene);
    Vec3 x{0.05, -0.1, 0};
    for (double r : {0.3, 0.9}) {
      SphereView ex = view_sphere(R, x, r, {QuadMode::ExactArc, 0, 0});
      for (std::uint64_t s = 0; s < 50; ++s) {
        SphereView st = view_sphere(R, x, r, {QuadMode::Stratified, 256, derive_seed(77, s)});
        double err = std::fabs(st.measure(Label::Plus) - ex.measure(Label::Plus)) * st.norm_factor();
        ok += err <= st.quad_error() + 1e-12;
        ++trials;
      }
    }
  }
  CHECK(ok >= 0.99 * trials);
}

TEST_CASE("cone emptiness") {
  auto R = half_pair(2);
  auto a = cone_empty(R, {{0, 0, 0}, {0, 1, 0}, 0.5}, 1);
  CHECK(a.empty);
  CHECK(a.samples > 0);
  CHECK_FALSE(cone_empty(R, {{0, 0, 0}, {1, 0, 0}, 0.1}, 1).empty);
  const double h = 0.1;
  auto G = gap_strip(h);
  CHECK(cone_empty(G, {{0, 0, 0}, {0, 1, 0}, 0.5}, 0.5 * h).empty);
  CHECK_FALSE(cone_empty(G, {{0, 0, 0}, {0, 1, 0}, 0.5}, 1.0).empty);
  auto R3 = half_pair(3);
  CHECK(cone_empty(R3, {{0, 0, 0}, {0, 0, 1}, 0.5}, 1).empty);
  CHECK_FALSE(cone_empty(R3, {{0, 0, 0}, {1, 0, 0}, 0.1}, 1).empty);
  CHECK_THROWS(cone_empty(R, {{0, 0, 0}, {0, 1, 0}, 1.0}, 1));
}

TEST_CASE("scene documents round trip and report paths") {
  auto R = random_scene(3);
  auto doc = scene_to_json(R);
  auto R2 = parse_scene(doc);
  for (int k = 0; k < 500; ++k) {
    Vec3 p{-2 + 4.0 * (k % 25) / 24, -2 + 4.0 * (k / 25) / 19, 0};
    CHECK(R.classify(p) == R2.classify(p));
  }
  nlohmann::json bad = {{"dim", 2},
                        {"plus", {{"op", "union"}, {"children", {{{"primitive", "ball"}, {"params", {{"center", {0, 0}}, {"radius", -1}}}}}}}},
                        {"minus", {{"primitive", "empty"}, {"params", nlohmann::json::object()}}}};
  try {
    parse_scene(bad);
    FAIL("expected SceneError");
  } catch (const SceneError& e) {
    CHECK(std::string(e.what()).find("plus.children[0].params.radius") != std::string::npos);
  }
  nlohmann::json unk = {{"dim", 2}, {"plus", {{"primitive", "empty"}}}, {"minus", {{"primitive", "empty"}}}, {"colour", 1}};
  CHECK_THROWS_AS(parse_scene(unk), SceneError);
}

TEST_CASE("voxel scenes classify by nearest voxel centre") {
  nlohmann::json doc = {{"dim", 3},
                        {"plus", {{"primitive", "voxels"}, {"params", {{"origin", {0, 0, 0}}, {"spacing", {1, 1, 1}}, {"counts", {2, 1, 1}}, {"data", {1, 0}}}}}},
                        {"minus", {{"primitive", "empty"}}}};
  auto R = parse_scene(doc);
  CHECK(R.classify({0.2, 0.1, -0.2}) == Label::Plus);
  CHECK(R.classify({0.8, 0, 0}) == Label::Free);
}
