#include <doctest.h>

#include <cmath>

#include "eps2/coefficients.hpp"
#include "eps2/errors.hpp"
#include "eps2/rng.hpp"
#include "eps2/fixtures.hpp"

using namespace eps2;
using namespace eps2::fixtures;

namespace {

const QuadSpec kExact{QuadMode::ExactArc, 0, 0};

RegionPair swapped(const RegionPair& R) { return RegionPair(R.dim(), R.minus(), R.plus()); }

// Closed form of (1/r^2) int_0^r 4 asin(min(1, h/t)) t dt.
double g_gap(double h, double r) {
  if (r <= h) return kPi;
  auto F = [h](double t) { return 0.5 * t * t * std::asin(h / t) + 0.5 * h * std::sqrt(t * t - h * h); };
  return (kPi * h * h + 4.0 * (F(r) - F(h))) / (r * r);
}

}  // namespace

TEST_CASE("epsilon_given_H examples") {
  auto R = half_pair(2);
  CHECK(epsilon_given_H(R, {0, 0, 0}, 1, {{0, 0, 0}, {0, 1, 0}}, kExact) == doctest::Approx(0).epsilon(1e-15));
  for (double phi : {0.01, 0.1, -0.3}) {
    double v = epsilon_given_H(R, {0, 0, 0}, 1, {{0, 0, 0}, polar(kPi / 2 + phi)}, kExact);
    CHECK(std::fabs(v - 2 * std::fabs(phi)) < 1e-12);
  }
  for (double h : {0.05, 0.1, 0.2}) {
    double v = epsilon_given_H(gap_strip(h), {0, 0, 0}, 1, {{0, 0, 0}, {0, 1, 0}}, kExact);
    CHECK(std::fabs(v - 2 * std::asin(h)) < 1e-12);
  }
  CHECK_THROWS_AS(epsilon_given_H(R, {0, 0, 0}, 1, {{0.1, 0, 0}, {0, 1, 0}}, kExact), AnchorMismatch);
}

TEST_CASE("epsilon search examples") {
  auto e = epsilon(half_pair(2), {0, 0, 0}, 1, kExact);
  CHECK(e.value < 1e-12);
  CHECK(std::fabs(std::fabs(e.H.normal.y) - 1) < 1e-9);

  auto g = epsilon(gap_strip(0.1), {0, 0, 0}, 1, kExact);
  CHECK(std::fabs(g.value - 2 * std::asin(0.1)) < 1e-9);
  // Brute force over 10^4 directions never beats the search.
  double brute = 1e9;
  for (int k = 0; k < 10000; ++k)
    brute = std::min(brute, epsilon_given_H(gap_strip(0.1), {0, 0, 0}, 1, {{0, 0, 0}, polar(2 * kPi * k / 10000)}, kExact));
  CHECK(g.value <= brute + 1e-12);
  CHECK(std::fabs(brute - 2 * std::asin(0.1)) < 1e-6);

  CHECK(epsilon(empty_pair(2), {0, 0, 0}, 1, kExact).value == doctest::Approx(2 * kPi));
  CHECK(epsilon(empty_pair(3), {0, 0, 0}, 1, {QuadMode::Lattice, 1000, 1}).value == doctest::Approx(4 * kPi));
}

TEST_CASE("epsilon minimizer reproduces the value") {
  for (std::uint64_t s = 1; s <= 10; ++s) {
    auto R = random_scene(s);
    for (QuadSpec q : {kExact, QuadSpec{QuadMode::Stratified, 400, s}}) {
      auto v = view_sphere(R, {0.05, 0.02, 0}, 0.7, q);
      auto e = epsilon(v);
      CHECK(std::fabs(epsilon_given_H(v, e.H) - e.value) <= v.quad_error());
    }
  }
}

TEST_CASE("epsilon on the 3D half-space pair") {
  auto R = half_pair(3);
  for (QuadMode m : {QuadMode::Lattice, QuadMode::Stratified}) {
    auto v = view_sphere(R, {0.3, -0.2, 0}, 1, {m, 1000, 3});
    auto e = epsilon(v);
    CHECK(e.value < 1e-12);
    CHECK(asym_a(v) < 1e-12);
    CHECK(gamma_sym(v) < 1e-12);
  }
}

TEST_CASE("complementary half-space with swapped regions agrees exactly") {
  for (std::uint64_t s = 1; s <= 10; ++s) {
    auto R = random_scene(s);
    auto S = swapped(R);
    Vec3 x{-0.1, 0.2, 0};
    for (double phi : {0.0, 0.7, 2.9, 4.4}) {
      HalfSpace H{x, polar(phi)}, Hc{x, -polar(phi)};
      CHECK(epsilon_given_H(R, x, 0.8, H, kExact) == epsilon_given_H(S, x, 0.8, Hc, kExact));
      QuadSpec q{QuadMode::Lattice, 720, 1};
      CHECK(epsilon_given_H(R, x, 0.8, H, q) == epsilon_given_H(S, x, 0.8, Hc, q));
    }
  }
}

TEST_CASE("epsilon is invariant under rigid motions and dilations") {
  const Motion M{1.1, {0.3, 0.25, 0}};
  for (std::uint64_t s = 1; s <= 6; ++s) {
    Vec3 x{0.1, -0.05, 0};
    double a = epsilon(random_scene(s), x, 0.6, kExact).value;
    double b = epsilon(random_scene(s, M), M(x), 0.6, kExact).value;
    CHECK(std::fabs(a - b) < 1e-9);
  }
  for (double lam : {0.01, 3.0, 250.0}) {
    double a = epsilon(gap_strip(0.1), {0, 0, 0}, 1, kExact).value;
    double b = epsilon(gap_strip(0.1 * lam), {0, 0, 0}, lam, kExact).value;
    CHECK(std::fabs(a - b) < 1e-9);
  }
}

TEST_CASE("a larger direction grid never increases epsilon") {
  for (std::uint64_t s = 1; s <= 8; ++s) {
    auto v = view_sphere(random_scene(s), {0, 0.1, 0}, 0.9, kExact);
    double prev = 1e9;
    for (int m : {90, 360, 720, 2880}) {
      SearchConfig c;
      c.grid2d = m;
      double val = epsilon(v, c).value;
      CHECK(val <= prev + 1e-12);
      prev = val;
    }
  }
}

TEST_CASE("asymmetry and symmetry coefficients") {
  CHECK(asym_a(half_pair(2), {0.4, 0, 0}, 1, kExact) < 1e-15);
  CHECK(gamma_sym(half_pair(2), {0.4, 0, 0}, 1, kExact) < 1e-15);
  for (double h : {0.05, 0.1, 0.2}) {
    CHECK(std::fabs(asym_a(gap_strip(h), {0, 0, 0}, 1, kExact) - 2 * std::asin(h)) < 1e-12);
    CHECK(std::fabs(gamma_sym(gap_strip(h), {0, 0, 0}, 1, kExact) - 4 * std::asin(h)) < 1e-12);
  }
  RegionPair upper(2, leaf(halfspace(2, {0, 1, 0}, 0)), leaf(empty_region(2)));
  CHECK(std::fabs(asym_a(upper, {0, 0, 0}, 1, kExact) - kPi) < 1e-12);
  for (std::uint64_t s = 1; s <= 10; ++s)
    CHECK(gamma_sym(random_scene(s), {0.2, 0, 0}, 1.3, kExact) <= 2 * kPi + 1e-12);
}

TEST_CASE("g_ball on the gap strip and under dilation") {
  CHECK(g_ball(half_pair(2), {0, 0, 0}, 1, kExact) < 1e-14);
  for (double h : {0.05, 0.1, 0.2})
    for (double r : {0.5 * h, 1.0, 3.0}) CHECK(std::fabs(g_ball(gap_strip(h), {0, 0, 0}, r, kExact) - g_gap(h, r)) < 1e-9);
  double a = g_ball(gap_strip(0.1), {0, 0, 0}, 1, kExact);
  double b = g_ball(gap_strip(0.4), {0, 0, 0}, 4, kExact);
  CHECK(std::fabs(a - b) < 1e-10);
}

TEST_CASE("smoothed asymmetry") {
  Kernel G;
  auto [p0, m0] = a_psi(half_pair(2), {0, 0, 0}, 1, G, kExact);
  CHECK(p0 < 1e-12);
  CHECK(m0 < 1e-12);
  auto [pe, me] = a_psi(empty_pair(2), {0, 0, 0}, 1, G, kExact);
  CHECK(std::fabs(pe - G.c_psi(2)) < G.tail_bound(2) + 1e-10);
  CHECK(std::fabs(me - kPi / 2) < G.tail_bound(2) + 1e-10);

  // Gap strip against a 10^6-sample Monte-Carlo oracle: the Gaussian mass of
  // a region is pi * P(Y in region) for Y ~ N(0, I/2).
  const double h = 0.1;
  Rng rng(2024);
  const int N = 1000000;
  int hit_p = 0, hit_m = 0;
  for (int i = 0; i < N; ++i) {
    double y1 = rng.normal() * std::sqrt(0.5), y2 = rng.normal() * std::sqrt(0.5);
    (void)y1;
    hit_p += y2 > 0;
    hit_m += y2 < -h;
  }
  auto mc = [&](int hits) {
    double p = static_cast<double>(hits) / N;
    return std::pair{std::fabs(kPi / 2 - kPi * p), 3 * kPi * std::sqrt(p * (1 - p) / N)};
  };
  auto [ap, am] = a_psi(gap_strip(h), {0, 0, 0}, 1, G, kExact);
  auto [mp, sp] = mc(hit_p);
  auto [mm, sm] = mc(hit_m);
  CHECK(std::fabs(ap - mp) <= sp + G.tail_bound(2));
  CHECK(std::fabs(am - mm) <= sm + G.tail_bound(2));
  CHECK(std::fabs(am - 0.5 * kPi * std::erf(h)) < 1e-8);

  Kernel B{Kernel::Kind::Bump};
  auto [bp, bm] = a_psi(half_pair(2), {0, 0, 0}, 1, B, kExact);
  CHECK(bp < 1e-12);
  CHECK(bm < 1e-12);
  auto [bpe, bme] = a_psi(empty_pair(2), {0, 0, 0}, 1, B, kExact);
  CHECK(std::fabs(bpe - B.c_psi(2)) < 1e-9);
  (void)bme;
}

TEST_CASE("coefficient record invariants and the chain inequality") {
  for (std::uint64_t s = 1; s <= 12; ++s) {
    auto R = random_scene(s);
    for (QuadSpec q : {kExact, QuadSpec{QuadMode::Stratified, 512, s}, QuadSpec{QuadMode::Lattice, 512, 1}}) {
      RadialConfig rc;
      rc.panels = 8;
      auto c = coefficients(R, {0.05, -0.05, 0}, 0.8, q, {}, {}, rc);
      for (double v : {c.eps, c.a_sym, c.gamma_sym, c.g_ball, c.a_psi_plus, c.a_psi_minus}) CHECK(v >= -c.quad_error);
      CHECK(c.eps <= 2 * kPi + c.quad_error);
      // Exact for equal-weight antipodal nodes as well as for arcs.
      CHECK(2 * c.a_sym <= c.gamma_sym + 1e-12);
      CHECK(c.gamma_sym <= 2 * c.eps + 1e-12);
    }
  }
}

TEST_CASE("corkscrew search") {
  auto R = half_pair(2);
  auto c = find_corkscrew(R, {{0, 0, 0}, 1}, Label::Plus, 0.05);
  REQUIRE(c.found);
  CHECK(c.ball.center.y - c.ball.radius >= -1e-12);
  CHECK(dist(c.ball.center, {0, 0, 0}) + c.ball.radius <= 1 + 1e-12);
  CHECK(c.ball.radius >= 0.1 - 1e-12);
  CHECK(c.upper_bound <= 0.05);

  RegionPair none(2, leaf(empty_region(2)), leaf(halfspace(2, {0, -1, 0}, 0)));
  CorkscrewConfig small;
  small.max_candidates = 500;
  CHECK_FALSE(find_corkscrew(none, {{0, 0, 0}, 1}, Label::Plus, 0.05, small).found);

  for (double h : {0.05, 0.15}) {
    auto g = find_corkscrew(gap_strip(h), {{0, 0, 0}, 1}, Label::Minus, 0.05);
    REQUIRE(g.found);
    CHECK(g.ball.center.y + g.ball.radius <= -h + 0.05);
  }
}

TEST_CASE("splitting fractions") {
  auto f = splitting_fractions(half_pair(2), {{0, 0, 0}, 1}, {{0, 0, 0}, {0, 1, 0}}, 0);
  CHECK(f.plus == doctest::Approx(1).epsilon(1e-12));
  CHECK(f.minus == doctest::Approx(1).epsilon(1e-12));
  const double h = 0.1;
  auto g = splitting_fractions(gap_strip(h), {{0, 0, 0}, 1}, {{0, -h / 2, 0}, {0, 1, 0}}, h);
  CHECK(g.plus == doctest::Approx(1).epsilon(1e-12));
  CHECK(g.minus == doctest::Approx(1).epsilon(1e-12));
  auto e = splitting_fractions(empty_pair(2), {{0, 0, 0}, 1}, {{0, 0, 0}, {0, 1, 0}}, 0);
  CHECK(e.plus == 0);
  CHECK(e.minus == 0);
  auto s = splitting_fractions(swapped(half_pair(2)), {{0, 0, 0}, 1}, {{0, 0, 0}, {0, 1, 0}}, 0);
  CHECK(s.swapped);
  CHECK(s.plus == doctest::Approx(1).epsilon(1e-12));
  auto t = splitting_fractions(half_pair(3), {{0, 0, 0}, 1}, {{0, 0, 0}, {0, 0, 1}}, 0.05);
  CHECK(t.plus == doctest::Approx(1).epsilon(1e-12));
}

TEST_CASE("csv rows match the header") {
  auto c = coefficients(gap_strip(0.1), {0, 0, 0}, 1, kExact);
  CHECK(coefficient_csv_row(c, 2).size() == coefficient_csv_header(2).size());
  CHECK(coefficient_csv_header(3).size() == coefficient_csv_header(2).size() + 2);
}
