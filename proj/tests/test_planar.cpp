#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "eps2/numerics.hpp"
#include "eps2/planar.hpp"
#include "eps2/rng.hpp"
#include "eps2/fixtures.hpp"

using namespace eps2;
using namespace eps2::fixtures;

TEST_CASE("arc profiles") {
  auto p = arc_profile(half_pair(2), {0.5, 0, 0}, 1);
  CHECK(p.theta_plus == doctest::Approx(kPi).epsilon(1e-14));
  CHECK(p.theta_minus == doctest::Approx(kPi).epsilon(1e-14));
  CHECK(p.alpha_plus == doctest::Approx(1));
  CHECK(fh_term(p) == 0);
  CHECK(carleson_epsilon(p) < 1e-14);

  for (double h : {0.05, 0.1, 0.2}) {
    auto g = arc_profile(gap_strip(h), {0, 0, 0}, 1);
    CHECK(std::fabs(g.theta_plus - kPi) < 1e-12);
    CHECK(std::fabs(g.theta_minus - (kPi - 2 * std::asin(h))) < 1e-12);
    CHECK(std::fabs(g.alpha_minus - kPi / (kPi - 2 * std::asin(h))) < 1e-12);
    CHECK(std::fabs(carleson_epsilon(gap_strip(h), {0, 0, 0}, 1) - 2 * std::asin(h)) < 1e-12);
  }
  RegionPair upper(2, leaf(halfspace(2, {0, 1, 0}, 0)), leaf(empty_region(2)));
  auto u = arc_profile(upper, {0, 0, 0}, 1);
  CHECK(std::isinf(u.alpha_minus));
  CHECK(fh_term(u) == 1);
  CHECK(carleson_epsilon(empty_pair(2), {0, 0, 0}, 1) == doctest::Approx(kPi));
}

TEST_CASE("friedland-hayman term is nonnegative on random scenes") {
  for (std::uint64_t s = 1; s <= 30; ++s) {
    auto R = random_scene(s);
    for (double r : {0.1, 0.4, 1.0, 2.5}) CHECK(fh_term(arc_profile(R, {0.1, -0.2, 0}, r)) >= 0.0);
  }
}

TEST_CASE("alpha dini") {
  CHECK(alpha_dini(half_pair(2), {0, 0, 0}, 1e-3, 1).value == 0);
  RegionPair upper(2, leaf(halfspace(2, {0, 1, 0}, 0)), leaf(empty_region(2)));
  CHECK(std::fabs(alpha_dini(upper, {0, 0, 0}, 1e-3, 1).value - std::log(1e3)) < 1e-12);
  auto c = alpha_dini(gap_strip(0.1), {0, 0, 0}, 1e-3, 1);
  auto f = alpha_dini(gap_strip(0.1), {0, 0, 0}, 1e-3, 1, std::pow(kDefaultGridFactor, 0.1));
  CHECK(std::isfinite(c.value));
  CHECK(std::fabs(c.value - f.value) < 0.01 * f.value);
  CHECK(c.recompute() == c.value);
}

TEST_CASE("akn check") {
  auto radii = log_grid(1e-3, 1, std::pow(2.0, 0.25));
  auto hp = akn_check(half_pair(2), {0, 0, 0}, radii);
  CHECK(hp.pass);
  CHECK(hp.empirical_constant.get<double>() == 0);
  std::vector<double> C;
  for (double h : {0.02, 0.05, 0.1, 0.2}) {
    auto r = akn_check(gap_strip(h), {0, 0, 0}, radii);
    CHECK(r.pass);
    C.push_back(r.empirical_constant.get<double>());
  }
  CHECK(*std::max_element(C.begin(), C.end()) <= 2 * *std::min_element(C.begin(), C.end()));
  // Rotating the scene and the centre together leaves the report unchanged.
  const Motion M{0.8, {0.4, -0.1, 0}};
  for (std::uint64_t s = 1; s <= 4; ++s) {
    auto a = akn_check(random_scene(s), {0.1, 0, 0}, radii);
    auto b = akn_check(random_scene(s, M), M({0.1, 0, 0}), radii);
    REQUIRE(a.rows.size() == b.rows.size());
    for (std::size_t i = 0; i < a.rows.size(); ++i)
      for (int c = 1; c < 5; ++c) CHECK(std::fabs(a.rows[i][c] - b.rows[i][c]) < 1e-9);
  }
}

TEST_CASE("carleson ratio table") {
  auto t = carleson_ratio_table(gap_strip(0.1), {0, 0, 0}, {0.2, 0.5, 1, 2});
  for (const auto& row : t.rows) CHECK(std::fabs(row[3] - 1) < 1e-9);
}

TEST_CASE("l1 tangent defects") {
  auto z = l1_tangent_defect(half_pair(2), {0, 0, 0}, 1, {0, 1, 0});
  CHECK(z.first < 1e-14);
  CHECK(z.second < 1e-14);

  // Monte-Carlo oracle: uniform points in the unit disk.
  const double phi = 0.3;
  Vec3 u = polar(kPi / 2 + phi);
  Rng g(99);
  const int N = 1000000;
  int bp = 0, bm = 0, in = 0;
  auto R = half_pair(2);
  while (in < N) {
    Vec3 y{g.uniform(-1, 1), g.uniform(-1, 1), 0};
    if (dot(y, y) >= 1) continue;
    ++in;
    Label l = R.classify(y);
    bp += (l == Label::Plus) != (dot(y, u) > 0);
    bm += (l == Label::Minus) != (dot(y, u) < 0);
  }
  auto d = l1_tangent_defect(R, {0, 0, 0}, 1, u);
  for (auto [v, hits] : {std::pair{d.first, bp}, std::pair{d.second, bm}}) {
    double p = static_cast<double>(hits) / N;
    CHECK(std::fabs(v - kPi * p) <= 3 * kPi * std::sqrt(p * (1 - p) / N));
    CHECK(std::fabs(v - phi) < 1e-12);
  }

  for (double r : {1.0, 10.0, 100.0}) {
    double tau = 0.1 / r;
    auto e = l1_tangent_defect(gap_strip(0.1), {0, 0, 0}, r, {0, 1, 0});
    CHECK(e.first < 1e-14);
    CHECK(std::fabs(e.second - (tau * std::sqrt(1 - tau * tau) + std::asin(tau))) < 1e-12);
  }
}
