#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "eps2/capacity.hpp"
#include "eps2/errors.hpp"
#include "eps2/rng.hpp"
#include "eps2/fixtures.hpp"

using namespace eps2;
using namespace eps2::fixtures;

namespace {

std::vector<Vec3> scaled(std::vector<Vec3> v, double l) {
  for (auto& p : v) p = l * p;
  return v;
}

std::vector<Vec3> random_square(int n, std::uint64_t seed) {
  Rng g(seed);
  std::vector<Vec3> v;
  for (int i = 0; i < n; ++i) v.push_back({g.uniform(-1, 1), g.uniform(-1, 1), 0});
  return v;
}

}  // namespace

TEST_CASE("riesz energy splits into self and cross parts") {
  DiscreteMeasure mu{{{0, 0, 0}, {1, 0, 0}}, {0.5, 0.5}, 1e-3};
  Energy e = riesz_energy(mu, 1);
  CHECK(e.cross == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(e.self == doctest::Approx(2 * 0.25 * 1e3).epsilon(1e-14));
  CHECK(e.total == doctest::Approx(e.self + e.cross));

  DiscreteMeasure atom{{{0.3, 0.1, 0}}, {1.0}, 0.01};
  CHECK(riesz_energy(atom, 1.5).total == doctest::Approx(std::pow(0.01, -1.5)));

  auto pts = random_square(40, 3);
  std::vector<double> m(40, 1.0 / 40);
  for (double l : {0.5, 3.0}) {
    double c1 = riesz_energy({pts, m, 1e-9}, 0.7).cross;
    double c2 = riesz_energy({scaled(pts, l), m, 1e-9}, 0.7).cross;
    CHECK(c2 == doctest::Approx(std::pow(l, -0.7) * c1).epsilon(1e-12));
  }
}

TEST_CASE("simplex projection") {
  Rng g(8);
  for (int t = 0; t < 50; ++t) {
    std::vector<double> v(1 + t % 17);
    for (double& x : v) x = g.uniform(-2, 2);
    auto p = v;
    project_simplex(p);
    double s = 0;
    for (double x : p) {
      CHECK(x >= 0);
      s += x;
    }
    CHECK(s == doctest::Approx(1).epsilon(1e-12));
    // optimality: (v - p) . (q - p) <= 0 for every vertex q
    for (std::size_t k = 0; k < v.size(); ++k) {
      double acc = 0;
      for (std::size_t i = 0; i < v.size(); ++i) acc += (v[i] - p[i]) * ((i == k ? 1.0 : 0.0) - p[i]);
      CHECK(acc <= 1e-12);
    }
  }
}

TEST_CASE("capacity of small nets against direct minimization") {
  // two points: symmetric optimum, energy (k(delta) + k(d)) / 2
  const double delta = 0.05, s = 1.2;
  auto two = capacity_s({{0, 0, 0}, {0.4, 0, 0}}, 2, s, {delta});
  const double e2 = 0.5 * (std::pow(delta, -s) + std::pow(0.4, -s));
  CHECK(two.energy == doctest::Approx(e2).epsilon(1e-7));
  CHECK(two.value == doctest::Approx(1 / e2).epsilon(1e-7));
  CHECK(two.monotone);

  // three points: brute force over a fine simplex grid
  std::vector<Vec3> P{{0, 0, 0}, {0.3, 0, 0}, {0, 0.9, 0}};
  auto est = capacity_s(P, 2, s, {delta});
  double best = 1e300;
  const int N = 600;
  for (int i = 0; i <= N; ++i)
    for (int j = 0; i + j <= N; ++j) {
      double m[3] = {double(i) / N, double(j) / N, double(N - i - j) / N}, e = 0;
      for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) e += m[a] * m[b] * riesz_kernel(dist(P[a], P[b]), s, delta);
      best = std::min(best, e);
    }
  CHECK(est.energy <= best + 1e-12);
  CHECK(est.energy >= best - 1e-4 * best);
  CHECK(est.energy - est.residual <= best);

  CHECK_THROWS_AS(capacity_s(P, 2, 2.0, {}), PreconditionError);
  CHECK_THROWS_AS(capacity_s({}, 2, 1.0, {}), PreconditionError);
}

TEST_CASE("capacity scaling and monotonicity") {
  auto K = random_square(300, 5);
  for (double s : {0.5, 1.0, 1.5}) {
    auto base = capacity_s(K, 2, s);
    for (double l : {0.5, 2.0}) {
      auto c = capacity_s(scaled(K, l), 2, s);
      CHECK(c.value / base.value == doctest::Approx(std::pow(l, s)).epsilon(0.02));
    }
  }
  // K subset K' with a common truncation scale
  std::vector<Vec3> sub(K.begin(), K.begin() + 150);
  CapacityOptions o;
  o.delta = 0.02;
  auto small = capacity_s(sub, 2, 1.0, o), big = capacity_s(K, 2, 1.0, o);
  // value = 1/energy; energies are within their residuals of the net optimum
  CHECK(small.value <= 1 / std::max(1e-300, big.energy - big.residual) + 1e-12);
  CHECK(big.monotone);
  CHECK(small.monotone);
}

TEST_CASE("logarithmic capacity") {
  auto seg = segment_net(200, {0, 0, 0}, {1, 0, 0});
  auto c = capacity_log(seg);
  for (double l : {0.5, 2.0}) CHECK(capacity_log(scaled(seg, l)).value == doctest::Approx(l * c.value).epsilon(1e-6));
  auto half = capacity_log(segment_net(100, {0, 0, 0}, {0.5, 0, 0}));
  CHECK(half.value < c.value);
  // resolution cross-check, and the segment value L/4
  auto fine = capacity_log(segment_net(400, {0, 0, 0}, {1, 0, 0}));
  CHECK(fine.value == doctest::Approx(c.value).epsilon(0.05));
  CHECK(fine.value == doctest::Approx(0.25).epsilon(0.05));
}

TEST_CASE("hausdorff content") {
  auto seg = segment_net(1025, {0, 0, 0}, {1, 0, 0});
  ContentOptions o;
  o.depth = 8;
  o.resolution = 1.0 / 1024;
  CHECK(hausdorff_content(seg, 2, 1.0, o) == doctest::Approx(1.0).epsilon(0.1));
  auto diag = segment_net(1025, {0, 0, 0}, {0.6, 0.8, 0});
  CHECK(hausdorff_content(diag, 2, 1.0, o) == doctest::Approx(1.0).epsilon(0.1));

  // single point: only the blob of the net resolution remains
  ContentOptions p;
  p.root = Cube{{-1, -1, 0}, 2};
  for (int d = 0; d < 10; ++d) {
    p.depth = d;
    p.resolution = std::ldexp(1.0, -d);
    CHECK(hausdorff_content({{0.1, 0.2, 0}}, 2, 0.5, p) == doctest::Approx(std::pow(p.resolution, 0.5)));
  }
  p.resolution = 0;
  CHECK(hausdorff_content({{0.1, 0.2, 0}}, 2, 0.5, p) == 0);
  // two far points: two small pieces beat one big one once the tree is deep enough
  p.resolution = 0.01;
  p.depth = 0;
  CHECK(hausdorff_content({{-0.9, -0.9, 0}, {0.9, 0.9, 0}}, 2, 1.0, p) == doctest::Approx(0.9 * 2 * std::sqrt(2.0) + 0.01));
  p.depth = 1;
  CHECK(hausdorff_content({{-0.9, -0.9, 0}, {0.9, 0.9, 0}}, 2, 1.0, p) == doctest::Approx(0.02));

  // nonincreasing in depth, monotone under inclusion with a common root
  auto K = random_square(500, 9);
  ContentOptions q;
  q.root = bounding_cube(K, 2);
  q.resolution = 0.01;
  double prev = 1e300;
  for (int d = 0; d <= 10; ++d) {
    q.depth = d;
    double v = hausdorff_content(K, 2, 1.3, q);
    CHECK(v <= prev + 1e-12);
    prev = v;
    std::vector<Vec3> sub(K.begin(), K.begin() + 200);
    CHECK(hausdorff_content(sub, 2, 1.3, q) <= v + 1e-12);
  }
}

TEST_CASE("choquet integral") {
  auto K = random_square(300, 12);
  ContentOptions o;
  o.depth = 6;
  o.resolution = 0.05;
  o.root = bounding_cube(K, 2);
  const double H = hausdorff_content(K, 2, 1.0, o);
  std::vector<double> c(K.size(), 0.7);
  for (double p : {1.0, 2.0, 0.5}) {
    auto r = choquet_integral(K, c, 2, 1.0, p, 16, o);
    CHECK(r.exact);
    CHECK(r.value == doctest::Approx(std::pow(0.7, p) * H).epsilon(1e-12));
  }
  CHECK(choquet_integral(K, std::vector<double>(K.size(), 0.0), 2, 1.0, 1.0, 16, o).value == 0);

  std::vector<double> ind(K.size());
  std::vector<Vec3> sup;
  for (std::size_t i = 0; i < K.size(); ++i) {
    ind[i] = K[i].x > 0.2 ? 1.0 : 0.0;
    if (ind[i] > 0) sup.push_back(K[i]);
  }
  CHECK(choquet_integral(K, ind, 2, 1.0, 2.0, 16, o).value == doctest::Approx(hausdorff_content(sup, 2, 1.0, o)).epsilon(1e-12));

  // many levels: the bracket contains the exact value
  std::vector<double> f(K.size());
  for (std::size_t i = 0; i < K.size(); ++i) f[i] = 1 + K[i].x * K[i].x + K[i].y;
  auto exact = choquet_integral(K, f, 2, 1.0, 1.5, 100000, o);
  auto coarse = choquet_integral(K, f, 2, 1.0, 1.5, 12, o);
  CHECK(exact.exact);
  CHECK_FALSE(coarse.exact);
  CHECK(coarse.lower <= exact.value + 1e-12);
  CHECK(coarse.upper >= exact.value - 1e-12);
}

TEST_CASE("capacity density condition") {
  auto R = half_pair(2);
  auto rep = cdc_check(R, {0, 0, 0}, 1.0, 0.5, 0.05);
  CHECK(rep.holds);
  CHECK(rep.margin > 0);
  // the complement net is the diameter of the ball: capacity of a segment net
  CHECK(rep.net_points == 33);
  auto big = cdc_check(R, {0, 0, 0}, 4.0, 0.5, 0.05);
  CHECK(big.capacity / rep.capacity == doctest::Approx(2.0).epsilon(1e-6));
  CHECK(big.margin / rep.margin == doctest::Approx(2.0).epsilon(1e-6));

  // Omega = plane minus the origin: the net is a single point, its truncated
  // capacity is (step/2)^s and fails once the resolution passes c^(-1/s)/2
  RegionPair punctured(2,
                       union_of({leaf(halfspace(2, {1, 0, 0}, 0)), leaf(halfspace(2, {-1, 0, 0}, 0)),
                                 leaf(halfspace(2, {0, 1, 0}, 0)), leaf(halfspace(2, {0, -1, 0}, 0))}),
                       leaf(empty_region(2)));
  for (int k : {8, 32, 128}) {
    NetOptions no;
    no.points_per_radius = k;
    auto pt = cdc_check(punctured, {0, 0, 0}, 0.1, 0.5, 0.1, no);
    CHECK(pt.net_points == 1);
    CHECK(pt.capacity == doctest::Approx(std::pow(0.1 / k / 2, 0.5)).epsilon(1e-12));
    CHECK(pt.holds == (std::pow(1.0 / (2 * k), 0.5) >= 0.1));
  }

  // a gap strip whose boundary lines both cross the ball
  auto strip = gap_strip(0.2);
  auto gs = cdc_check(strip, {0, 0, 0}, 1.0, 1.0, 0.01);
  CHECK(gs.net_points > 33);
  CHECK(gs.holds);
}

TEST_CASE("thick points") {
  auto E = empty_pair(3);
  HalfSpace H{{0, 0, 0}, {0, 0, 1}};
  auto T = thick_points(E, {0, 0, 0}, 1.0, H, 0.01, 0.5, {200, 32});
  std::size_t cand = 0;
  for (const auto& tp : T.points) {
    if (tp.side == Label::Free) continue;
    ++cand;
    CHECK(tp.candidate);
    CHECK(tp.thick);
  }
  CHECK(cand == T.points.size());

  // aligned H on the half-space pair: both open hemispheres lie in Omega+-, no candidates
  auto P = half_pair(3);
  auto A = thick_points(P, {0, 0, 0}, 1.0, H, 0.01, 0.5, {200, 32});
  CHECK(A.count() == 0);
  for (const auto& tp : A.points) CHECK_FALSE(tp.candidate);

  // tilted H: the band between the equator and L_H consists of candidates
  // whose probed caps contain an arc of the equator circle F
  const double tilt = 0.3;
  HalfSpace Ht{{0, 0, 0}, {std::sin(tilt), 0, std::cos(tilt)}};
  auto B = thick_points(P, {0, 0, 0}, 1.0, Ht, 0.01, 0.5, {400, 48});
  std::size_t band = 0, thick = 0;
  for (const auto& tp : B.points)
    if (tp.candidate) {
      ++band;
      thick += tp.thick;
      CHECK(tp.side != P.classify(tp.y));
    }
  CHECK(band > 0);
  CHECK(thick == band);

  CHECK_THROWS_AS(thick_points(half_pair(2), {0, 0, 0}, 1.0, H, 0.01, 0.5), PreconditionError);
}

TEST_CASE("epsilon_s") {
  EpsSConfig cfg;
  cfg.thick = {200, 24};
  cfg.directions = 16;
  cfg.nm_iters = 0;
  auto P = half_pair(3);
  CHECK(epsilon_s(P, {0, 0, 0}, 1.0, 1.5, 0.01, 0.5, cfg).value == 0);

  auto E = empty_pair(3);
  HalfSpace H{{0, 0, 0}, {0, 0, 1}};
  EpsSConfig a = cfg, b = cfg;
  a.thick.sphere_nodes = 300;
  b.thick.sphere_nodes = 600;
  double va = epsilon_s_given_H(E, {0, 0, 0}, 1.0, 1.9, 0.01, 0.5, H, a);
  double vb = epsilon_s_given_H(E, {0, 0, 0}, 1.0, 1.9, 0.01, 0.5, H, b);
  CHECK(va > 0);
  CHECK(vb == doctest::Approx(va).epsilon(0.1));

  // joint dilation of scene, centre and radius
  RegionPair ballsc(3, leaf(ball(3, {0.4, 0, 0}, 0.5)), leaf(empty_region(3)));
  RegionPair ballsc2(3, leaf(ball(3, {0.8, 0, 0}, 1.0)), leaf(empty_region(3)));
  double v1 = epsilon_s_given_H(ballsc, {0, 0, 0}, 1.0, 1.5, 0.01, 0.5, H, cfg);
  double v2 = epsilon_s_given_H(ballsc2, {0, 0, 0}, 2.0, 1.5, 0.01, 0.5, H, cfg);
  CHECK(v2 == doctest::Approx(v1).epsilon(1e-6));
}

TEST_CASE("slicing") {
  auto make = [](int ball_pts, int disk_per_radius, double rho) {
    SlicingInput in;
    in.dim = 3;
    in.r0 = 1;
    in.tau = 0;
    in.graph = [](const Vec3&) { return 0.0; };
    in.B = {{0, 0, 0.5}, 0.1};
    in.K = ball_net(ball_pts, 4, 0.1, in.B.center);
    disk_net(rho, disk_per_radius, 0.0, in.G, in.G_weights);
    in.s = 1.5;
    return in;
  };
  auto coarse = slicing_check(make(250, 4, 0.3));
  auto fine = slicing_check(make(600, 4, 0.3));
  CHECK(coarse.radius_ok);
  CHECK(coarse.distance_ok);
  CHECK(std::isfinite(coarse.ratio));
  CHECK(coarse.ratio > 0);
  CHECK(fine.ratio / coarse.ratio < 2);
  CHECK(coarse.ratio / fine.ratio < 2);

  auto empty = make(250, 4, 0.3);
  empty.K.clear();
  auto z = slicing_check(empty);
  CHECK(z.lhs == 0);
  CHECK(z.rhs == 0);

  // G of half the measure: halve every weight
  auto halfG = make(250, 4, 0.3);
  for (double& w : halfG.G_weights) w *= 0.5;
  auto h = slicing_check(halfG);
  CHECK(h.lhs / coarse.lhs == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(h.rhs / coarse.rhs == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("capacity and content sandwich on the four-corner set") {
  const double s = 0.5, t = 1.0;
  double c1[2], c2[2];
  for (int lv = 0; lv < 2; ++lv) {
    auto K = four_corner_cantor(4 + lv);
    const double res = std::pow(0.25, 4 + lv);
    ContentOptions o;
    o.depth = 2 * (4 + lv) + 2;
    o.resolution = res;
    o.root = Cube{{0, 0, 0}, 1};
    const double Ht = hausdorff_content(K, 2, t, o), Hs = hausdorff_content(K, 2, s, o);
    const double cap = capacity_s(K, 2, s).value;
    c1[lv] = std::pow(Ht, s / t) / cap;
    c2[lv] = cap / Hs;
  }
  CHECK(std::max(c1[0] / c1[1], c1[1] / c1[0]) <= 2);
  CHECK(std::max(c2[0] / c2[1], c2[1] / c2[0]) <= 2);
}

TEST_CASE("newtonian capacity of the unit ball") {
  auto K = ball_net(2000, 7);
  auto c = capacity_s(K, 3, 1.0);
  CHECK(c.monotone);
  // fine-net oracle: the equilibrium measure of the ball is uniform on its
  // boundary sphere; its truncated energy on a 16000-point lattice
  auto S = sphere_net(16000);
  std::vector<double> m(S.size(), 1.0 / S.size());
  const double oracle = 1 / riesz_energy({S, m, net_spacing(S) / 2}, 1.0).total;
  CHECK(c.value == doctest::Approx(oracle).epsilon(0.05));
  CHECK(c.value == doctest::Approx(1.0).epsilon(0.05));
}
