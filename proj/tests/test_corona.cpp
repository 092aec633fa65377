#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>

#include "eps2/corona.hpp"
#include "eps2/errors.hpp"
#include "eps2/rng.hpp"
#include "eps2/fixtures.hpp"

using namespace eps2;
using namespace eps2::fixtures;

namespace {

// sup-distance of pts to the best plane with normal nu, over many directions
double brute_beta2(const std::vector<Vec3>& pts, double r, int dirs) {
  double best = 1e300;
  for (int i = 0; i < dirs; ++i) {
    double t = kPi * i / dirs;
    best = std::min(best, slab(pts, polar(t)).first);
  }
  return best / r;
}

double brute_beta3(const std::vector<Vec3>& pts, double r, int dirs) {
  double best = 1e300;
  const double ga = kPi * (3.0 - std::sqrt(5.0));
  for (int i = 0; i < dirs; ++i) {
    double z = 1.0 - (i + 0.5) / dirs, rr = std::sqrt(1 - z * z);
    best = std::min(best, slab(pts, {rr * std::cos(ga * i), rr * std::sin(ga * i), z}).first);
  }
  return best / r;
}

}  // namespace

TEST_CASE("beta_inf examples") {
  std::vector<Vec3> line;
  for (int i = 0; i < 9; ++i) line.push_back({-0.4 + 0.1 * i, 0.3 - 0.05 * i, 0});
  CHECK(beta_inf(2, line, {{0, 0, 0}, 1}).value <= 1e-15);

  std::vector<Vec3> tri{{0, 0, 0}, {1, 0, 0}, {0.5, 0.3, 0}};
  auto f = beta_inf(2, tri, {{0.5, 0, 0}, 1});
  CHECK(std::fabs(f.value - brute_beta2(tri, 1, 100000)) < 1e-4);
  auto [half, mid] = slab(tri, f.plane.normal);
  CHECK(std::fabs(half - f.value) < 1e-12);
  CHECK(std::fabs(mid - dot(f.plane.point, f.plane.normal)) < 1e-12);

  Rng rng(5);
  for (double delta : {1e-3, 1e-2}) {
    std::vector<Vec3> pts;
    for (int i = 0; i < 200; ++i) pts.push_back({-0.9 + 0.009 * i, delta * rng.uniform(-1, 1), 0});
    CHECK(beta_inf(2, pts, {{0, 0, 0}, 1}).value <= delta);
  }
  CHECK_THROWS_AS(beta_inf(2, tri, {{5, 5, 0}, 1}), EmptyIntersection);
}

TEST_CASE("beta_inf agrees with direction brute force") {
  Rng rng(11);
  for (int t = 0; t < 20; ++t) {
    std::vector<Vec3> pts;
    int k = 3 + t % 20;
    for (int i = 0; i < k; ++i) pts.push_back({rng.uniform(-0.6, 0.6), 0.3 * rng.uniform(-0.6, 0.6), 0});
    double b = beta_inf(2, pts, {{0, 0, 0}, 1}).value;
    double bf = brute_beta2(pts, 1, 100000);
    CHECK(b <= bf + 1e-12);
    CHECK(bf - b < 1e-4);
  }
  for (int t = 0; t < 12; ++t) {
    std::vector<Vec3> pts;
    int k = 4 + t * 3;
    for (int i = 0; i < k; ++i)
      pts.push_back({rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5), 0.2 * rng.uniform(-0.5, 0.5)});
    double b = beta_inf(3, pts, {{0, 0, 0}, 1}).value;
    double bf = brute_beta3(pts, 1, 200000);
    CHECK(b <= bf + 1e-6);
    if (k <= 5) CHECK(b <= bf + 1e-12);
  }
  // exact small cases against the general path
  for (int t = 0; t < 10; ++t) {
    std::vector<Vec3> pts;
    for (int i = 0; i < 5; ++i) pts.push_back({rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5)});
    CHECK(beta_exact_small(3, pts, {{0, 0, 0}, 1}).value <= brute_beta3(pts, 1, 200000) + 1e-12);
  }
}

TEST_CASE("plane angles are folded into [0, pi/2]") {
  CHECK(plane_angle({0, 1, 0}, {0, -1, 0}) == 0);
  CHECK(std::fabs(plane_angle({0, 1, 0}, {1, 0, 0}) - kPi / 2) < 1e-15);
  CHECK(std::fabs(plane_angle({0, 1, 0}, {std::sin(0.3), -std::cos(0.3), 0}) - 0.3) < 1e-12);
}

TEST_CASE("theta density") {
  auto c = WeightedCloud::make(2, {{0, 0, 0}}, {1.0});
  CHECK(theta_density(c, {{0, 0, 0}, 1}) == 1);
  CHECK(theta_density(c, {{5, 0, 0}, 1}) == 0);
  CHECK(theta_density(c, {{0, 0, 0}, 2}) == 0.5);
}

TEST_CASE("weighted clouds check growth and round trip through csv") {
  auto c = line_cloud(400, 0.1, 0.0);
  CHECK(c.growth_const > 0);
  CHECK_THROWS_AS(WeightedCloud::make(2, c.points, c.weights, c.growth_const * 0.5), PreconditionError);
  CHECK_THROWS_AS(WeightedCloud::make(2, {{0, 0, 0}}, {0.0}), PreconditionError);
  CHECK_THROWS_AS(WeightedCloud::make(2, {{0, 0, 0}}, {-1.0}), PreconditionError);
  auto path = (std::filesystem::temp_directory_path() / "eps2_cloud_test.csv").string();
  write_cloud_csv(path, c);
  auto back = read_cloud_csv(path, 2, c.growth_const);
  CHECK(back.points == c.points);
  CHECK(back.weights == c.weights);
  std::remove(path.c_str());
}

TEST_CASE("good balls") {
  auto c = line_cloud(2000, 0.0, 0.0);
  const Vec3 ref{0, 1, 0};
  CHECK(ball_is_good(c, c.points, {{0, 0, 0}, 0.5}, 0.01, 0.1, ref));
  CHECK_FALSE(ball_is_good(c, c.points, {{0, 3, 0}, 0.5}, 0.0, 0.1, ref));
  CHECK_FALSE(ball_is_good(c, c.points, {{0, 0, 0}, 0.5}, 10.0, 0.1, ref));
  CHECK_FALSE(ball_is_good(c, c.points, {{0, 0, 0}, 0.5}, 0.01, 0.1, {1, 0, 0}));
}

TEST_CASE("stopping heights match a direct scan") {
  auto c = line_cloud(2000, 0.03, 0.0);
  auto pts = c.points;
  pts.push_back({0.1, 0.3, 0});  // isolated
  std::vector<double> w = c.weights;
  w.push_back(w[0]);
  auto mu = WeightedCloud::make(2, pts, w);
  const Ball B0{{0, 0, 0}, 0.5};
  const double theta = 0.01, alpha = 0.1;
  auto grid = StopGrid::make(B0.radius, mu.diameter_bound(), std::pow(2.0, 0.25));
  CHECK(grid.radii.back() >= B0.radius / 128 * (1 - 1e-12));
  CHECK(grid.radii.front() >= 2 * B0.radius);

  // mu restricted to B0, E the full cloud
  std::vector<double> w0(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) w0[i] = dist(pts[i], B0.center) <= B0.radius ? w[i] : 0;
  auto mu0 = WeightedCloud::make(2, pts, w0, 1e9);
  const Vec3 ref = beta_inf(2, pts, B0).plane.normal;
  PointIndex idx(2, pts, w0);
  GoodTester T;
  T.theta = theta;
  T.alpha = alpha;
  T.ref = ref;
  T.density = [&](const Ball& B) { return idx.mass(B.center, B.radius) / B.radius; };
  T.fit = [&](const Ball& B, BetaFit& f) {
    try {
      f = beta_inf(2, pts, B, &ref);
      return true;
    } catch (const EmptyIntersection&) {
      return false;
    }
  };
  for (std::size_t q : {std::size_t{1000}, std::size_t{700}, pts.size() - 1}) {
    const Vec3 x = pts[q];
    const double cr = dist(x, B0.center) + B0.radius;
    StopInfo s = stopping_height(T, x, cr, grid);
    // direct scan with the public predicate
    int expect_fail = -1, last_good = -1;
    for (int k = 0; k < static_cast<int>(grid.radii.size()); ++k) {
      double r = grid.radii[k];
      bool good = r >= cr || ball_is_good(mu0, pts, {x, r}, theta, alpha, ref);
      if (!good) {
        expect_fail = k;
        break;
      }
      last_good = k;
    }
    CHECK(s.fail_index == expect_fail);
    CHECK(s.h_index == last_good);
    CHECK(s.h <= 2 * B0.radius);
    if (q == 1000) {
      CHECK(s.fail_index == -1);
      CHECK(s.h_index == static_cast<int>(grid.radii.size()) - 1);
      CHECK(classify_point(s, theta) == PointClass::Z);
    }
    if (q == pts.size() - 1) {
      CHECK(s.h > 0.1);
      CHECK(classify_point(s, theta) == PointClass::LD);
    }
  }
}

TEST_CASE("d and D") {
  CHECK(d_function({3, 4, 0}, {Ball{{0, 0, 0}, 1}}) == 6);
  CHECK(std::isinf(d_function({0, 0, 0}, {})));
  Rng rng(3);
  std::vector<Ball> vg;
  std::vector<Vec3> cs;
  std::vector<double> hs;
  for (int i = 0; i < 300; ++i) {
    Ball b{{rng.uniform(-1, 1), rng.uniform(-0.1, 0.1), 0}, rng.uniform(0, 0.2)};
    vg.push_back(b);
    cs.push_back(b.center);
    hs.push_back(b.radius);
  }
  ConeField field(2, cs, hs);
  double prev = 1e300;
  for (int t = 0; t < 400; ++t) {
    Vec3 x{rng.uniform(-2, 2), rng.uniform(-2, 2), 0}, y{rng.uniform(-2, 2), rng.uniform(-2, 2), 0};
    CHECK(field(x) == d_function(x, vg));
    CHECK(std::fabs(field(x) - field(y)) <= dist(x, y) + 1e-12);
  }
  // adding balls never increases d
  for (int i = 0; i < 30; ++i) {
    Vec3 x{0.3, 0.4, 0};
    std::vector<Ball> sub(vg.begin(), vg.begin() + 10 * (i + 1));
    double d = d_function(x, sub);
    CHECK(d <= prev);
    prev = d;
  }

  // D from projected cones against the vertical segment grid
  Frame F = Frame::make(2, {0, 0, 0}, {0, 1, 0});
  std::vector<Vec3> us;
  for (auto& c : cs) us.push_back(F.to_u(c));
  ConeField D(1, us, hs);
  auto d = [&](const Vec3& x) { return field(x); };
  for (int t = 0; t < 50; ++t) {
    Vec3 u{rng.uniform(-1.5, 1.5), 0, 0};
    double exact = D(u), seg = D_segment(F, u, d, 1.0, 4000);
    CHECK(exact <= seg + 1e-12);
    CHECK(seg - exact <= 0.5 * 2.0 / 4000 + 1e-12);
    Vec3 u2{u[0] + 0.01, 0, 0};
    CHECK(std::fabs(D(u2) - exact) <= 0.01 + 1e-12);
  }
  ConeField single(1, {{0, 0, 0}}, {1.0});
  ConeField single3(2, {{0, 0, 0}}, {1.0});
  CHECK(single({0, 0, 0}) == 1);
  CHECK(D_segment(F, {0, 0, 0}, [&](const Vec3& x) { return single3(x); }, 1, 10) == 1);
}

TEST_CASE("whitney examples") {
  WhitneyWindow W;
  W.n = 2;
  W.lo = {0, 0, 0};
  W.side = 256;
  W.max_level = 10;
  auto c100 = [](const Box&) { return 100.0; };
  auto p100 = [](const Vec3&) { return 100.0; };
  auto F = whitney(W, c100, p100);
  CHECK(F.cubes.size() == 64 * 64);
  for (auto& q : F.cubes) CHECK(W.cube_side(q.level) == 4);
  CHECK(F.residual.empty());
  auto chk = check_whitney(F, c100, p100);
  CHECK(chk.partition);

  auto z = whitney(W, [](const Box&) { return 0.0; }, [](const Vec3&) { return 0.0; });
  CHECK(z.cubes.empty());

  for (int n : {1, 2}) {
    WhitneyWindow V;
    V.n = n;
    V.lo = {-128, -128, 0};
    V.side = 256;
    V.max_level = 14;
    auto Dp = [n](const Vec3& u) { return n == 1 ? std::fabs(u[0]) : std::hypot(u[0], u[1]); };
    auto Db = [n](const Box& b) {
      double s = 0;
      for (int k = 0; k < n; ++k) {
        double d = std::max({b.lo[k], 0.0, -b.hi[k]});
        s += d * d;
      }
      return std::sqrt(s);
    };
    auto G = whitney(V, Db, Dp);
    auto c = check_whitney(G, Db, Dp);
    CHECK(c.partition);
    CHECK(c.residual_ok);
    CHECK(c.a_lower_min >= 5);
    CHECK(c.b_ratio <= 10);
    if (n == 1) {
      CHECK(c.a_holds);
      CHECK(c.a_upper_max <= 50);
    } else {
      // Parent maximality only gives 40 + 9 sqrt(2) for squares in the Euclidean metric.
      CHECK(c.a_upper_max <= 40 + 9 * std::sqrt(2.0));
    }
    // graded: sides grow with the distance to the origin
    double small = 1e300, large = 0;
    for (auto& q : G.cubes) {
      small = std::min(small, V.cube_side(q.level));
      large = std::max(large, V.cube_side(q.level));
    }
    CHECK(large / small >= 256);
  }
}

TEST_CASE("partition of unity and extension") {
  WhitneyWindow V;
  V.n = 1;
  V.lo = {-64, 0, 0};
  V.side = 128;
  V.max_level = 14;
  auto Dp = [](const Vec3& u) { return std::fabs(u[0] - 3.3); };
  auto Db = [](const Box& b) { return std::max({b.lo[0] - 3.3, 0.0, 3.3 - b.hi[0]}); };
  auto F = whitney(V, Db, Dp);
  PartitionOfUnity P(F);
  Rng rng(2);
  for (int t = 0; t < 2000; ++t) {
    Vec3 u{rng.uniform(-64, 64), 0, 0};
    auto [found, code] = F.locate(u);
    if (!found || code < 0) continue;
    double s = 0;
    for (auto& e : P.eval(u)) s += e.second;
    CHECK(std::fabs(s - 1) <= 1e-9);
  }
  Frame Fr = Frame::make(2, {0, 0, 0}, {0, 1, 0});
  ExtendedGraph zero(F, std::vector<Affine>(F.cubes.size()), nullptr);
  Affine L;
  L.c = 0.2;
  L.g = {0.07, 0};
  ExtendedGraph same(F, std::vector<Affine>(F.cubes.size(), L), [&](const Vec3& u) { return L(u); });
  for (int t = 0; t < 500; ++t) {
    Vec3 u{rng.uniform(-64, 64), 0, 0};
    CHECK(zero(u) == 0);
    CHECK(std::fabs(same(u) - L(u)) <= 1e-12);
  }
  Affine a;
  CHECK(plane_to_affine(Fr, {{0, 0.2, 0}, normalized({-0.07, 1, 0})}, a));
  CHECK(std::fabs(a.c - 0.2) < 1e-15);
  CHECK(std::fabs(a.g[0] - 0.07) < 1e-15);
  CHECK_FALSE(plane_to_affine(Fr, {{0, 0, 0}, {1, 0, 0}}, a));
}

TEST_CASE("corona on an exact line") {
  const double s = 0.3, b = 0.1;
  std::vector<Vec3> pts;
  for (int i = 0; i < 2000; ++i) {
    double x = -1 + 2.0 * i / 1999;
    pts.push_back({x, s * x + b, 0});
  }
  auto mu = counting_cloud(2, pts);
  CoronaParams p;
  p.graph_nodes = 513;
  p.lip_pairs = 2000;
  auto R = corona(mu, {{0, b, 0}, 0.5}, p);
  CHECK(R.stats.mu_LD == 0);
  CHECK(R.stats.mu_BA == 0);
  CHECK(R.stats.mu_Z == doctest::Approx(R.stats.mu_E0));
  // graph of the line over L0 (here L0 is the line itself)
  double worst = 0;
  for (int i = 0; i < R.graph.nodes; ++i) worst = std::max(worst, std::fabs(R.graph.at(i)));
  CHECK(worst <= 1e-9);
  CHECK(std::fabs(R.L0.normal.x + s * R.L0.normal.y) < 1e-12);
}

TEST_CASE("corona on two parallel lines follows the line through B0") {
  std::vector<Vec3> pts;
  for (int i = 0; i < 1500; ++i) {
    double x = -1 + 2.0 * i / 1499;
    pts.push_back({x, 0.05 * x, 0});
    pts.push_back({x, 0.05 * x + 60, 0});
  }
  auto mu = counting_cloud(2, pts);
  CoronaParams p;
  p.graph_nodes = 513;
  p.lip_pairs = 1000;
  auto R = corona(mu, {{0, 0, 0}, 0.5}, p);
  // A is the line y = 0.05 x on the part of L0 over E0
  for (int i = 0; i < R.graph.nodes; ++i) {
    double u = R.graph.coord(i);
    if (std::fabs(u) > 0.45) continue;
    Vec3 y = R.L0.lift({u, 0, 0}, R.graph.at(i));
    CHECK(std::fabs(y.y - 0.05 * y.x) < 1e-9);
  }
  CHECK(R.stats.mu_Z == doctest::Approx(R.stats.mu_E0));
}

TEST_CASE("corona classifies spikes and sparse clouds") {
  std::vector<Vec3> pts;
  for (int i = 0; i < 3000; ++i) pts.push_back({-1 + 2.0 * i / 2999, 0, 0});
  const std::size_t first_spike = pts.size();
  for (int i = 1; i <= 300; ++i) pts.push_back({0.2, 0.3 * i / 300, 0});
  auto mu = counting_cloud(2, pts);
  CoronaParams p;
  p.graph_nodes = 513;
  p.lip_pairs = 1000;
  auto R = corona(mu, {{0, 0, 0}, 0.5}, p);
  std::size_t spike = 0, spike_ba = 0;
  for (std::size_t a = 0; a < R.e0.size(); ++a)
    if (R.e0[a] >= first_spike && pts[R.e0[a]].y > 0.02) {
      ++spike;
      spike_ba += R.labels[a] == PointClass::BA;
    }
  CHECK(spike > 200);
  CHECK(spike_ba >= 0.8 * spike);

  std::vector<Vec3> sparse{{0, 0, 0}, {0.2, 0.01, 0}, {-0.3, 0, 0}, {0.45, -0.02, 0}, {3, 0, 0}};
  // atoms of mass 1e-4: every ball below the containing radius has Theta < theta
  auto ms = counting_cloud(2, sparse, 5e-4);
  CoronaParams ps = p;
  ps.c0 = 1e-4;
  auto S = corona(ms, {{0, 0, 0}, 0.5}, ps);
  CHECK(S.stats.mu_LD > 0.5 * S.stats.mu_E0);

  CHECK(S.stats.mu_LD == doctest::Approx(S.stats.mu_E0));
  CHECK_THROWS_AS(corona(ms, {{0, 0, 0}, 0.5}, p), DensityTooLow);
  CHECK_THROWS_AS(corona(ms, {{10, 10, 0}, 0.5}, ps), DensityTooLow);
}

TEST_CASE("corona results round trip through json") {
  auto mu = graph_cloud(1500, 0.03, 4);
  CoronaParams p;
  p.graph_nodes = 257;
  p.lip_pairs = 500;
  auto R = corona(mu, {{0, 0, 0}, 0.5}, p);
  auto j = R.to_json();
  auto back = CoronaResult::from_json(nlohmann::json::parse(j.dump()));
  CHECK(back.to_json() == j);
  CHECK(back.graph.values == R.graph.values);
  CHECK(back.labels == R.labels);
  CHECK(back.whitney == R.whitney);
}

TEST_CASE("corona on a spatial graph") {
  std::vector<Vec3> pts;
  for (int i = 0; i < 40; ++i)
    for (int j = 0; j < 40; ++j) {
      double x = -1 + 2.0 * i / 39, y = -1 + 2.0 * j / 39;
      pts.push_back({x, y, 0.03 * std::sin(2 * x) + 0.02 * y});
    }
  auto mu = counting_cloud(3, pts);
  CoronaParams p;
  p.graph_nodes_2d = 33;
  p.lip_pairs = 500;
  p.bottom_divisor = 8;
  auto R = corona(mu, {{0, 0, 0}, 0.6}, p);
  CHECK(R.stats.mu_Z >= 0.9 * R.stats.mu_E0);
  CHECK(R.stats.max_grad <= 0.5);
  CHECK(R.diagnostics["whitney"]["partition"].get<bool>());
  CHECK(R.diagnostics["piperp_lip"]["violations"].get<int>() == 0);
}

TEST_CASE("dense dyadic interval") {
  auto J = dense_dyadic_interval(0, 1, {{0, 1}}, 0.5, 0.25);
  CHECK(J.a == 0);
  CHECK(J.b == 1);
  auto H = dense_dyadic_interval(0, 1, {{0, 0.5}}, 0.5, 0.4);
  CHECK(H.b - H.a >= 0.25);
  CHECK_THROWS_AS(dense_dyadic_interval(0, 1, {{0, 0.2}}, 0.5, 0.25), PreconditionError);

  // exhaustive descendant check on random unions
  Rng rng(8);
  for (int t = 0; t < 40; ++t) {
    std::vector<std::pair<double, double>> G;
    for (int k = 0; k < 12; ++k) {
      double a = rng.uniform(0, 1), l = rng.uniform(0, 0.15);
      G.emplace_back(a, a + l);
    }
    double c2 = std::min(0.9, interval_measure(G, 0, 1));
    double theta = rng.uniform(0.05, 0.45);
    auto K = dense_dyadic_interval(0, 1, G, c2, theta);
    CHECK(K.a >= 0);
    CHECK(K.b <= 1);
    const double L = K.b - K.a;
    for (int g = 0; std::ldexp(L, -g) >= theta * L; ++g) {
      int cnt = 1 << g;
      for (int i = 0; i < cnt; ++i) {
        double a = K.a + L * i / cnt, b = K.a + L * (i + 1) / cnt;
        CHECK(interval_measure(G, a, b) >= c2 / 2 * (b - a));
      }
    }
  }
}
