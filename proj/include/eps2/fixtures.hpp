#pragma once

// Reference scenes, clouds and nets shared by the verify suites and the tests.

#include <cmath>
#include <cstdint>
#include <vector>

#include "eps2/cloud.hpp"
#include "eps2/region.hpp"
#include "eps2/rng.hpp"
#include "eps2/vec.hpp"

namespace eps2::fixtures {

// {y_last > 0} / {y_last < 0}
inline RegionPair half_pair(int dim = 2) {
  Vec3 n = dim == 2 ? Vec3{0, 1, 0} : Vec3{0, 0, 1};
  return RegionPair(dim, leaf(halfspace(dim, n, 0.0)), leaf(halfspace(dim, -n, 0.0)));
}

// {y2 > 0} / {y2 < -h}
inline RegionPair gap_strip(double h) {
  return RegionPair(2, leaf(halfspace(2, {0, 1, 0}, 0.0)), leaf(halfspace(2, {0, -1, 0}, h)));
}

inline RegionPair empty_pair(int dim = 2) {
  return RegionPair(dim, leaf(empty_region(dim)), leaf(empty_region(dim)));
}

// Rigid motion y -> rot(rho) y + t of the plane.
struct Motion {
  double rho = 0;
  Vec3 t;
  Vec3 operator()(const Vec3& p) const { return rotate(p) + t; }
  Vec3 rotate(const Vec3& p) const {
    return {std::cos(rho) * p.x - std::sin(rho) * p.y, std::sin(rho) * p.x + std::cos(rho) * p.y, 0};
  }
};

// Five random primitives: a splitting half-plane P, two shapes kept on the
// P side for Omega+, two on the other side for Omega-. The optional motion
// is applied to every primitive.
inline RegionPair random_scene(std::uint64_t seed, const Motion& M = {}) {
  Rng g(seed);
  double phi = g.uniform(0, 2 * kPi);
  Vec3 n = M.rotate(polar(phi));
  double c = g.uniform(-0.3, 0.3) + dot(n, M.t);
  Primitive P = halfspace(2, n, c);
  auto shape = [&](int k) {
    Vec3 ctr{g.uniform(-1, 1), g.uniform(-1, 1), 0};
    double s = g.uniform(0.3, 1.2);
    if (k == 0) return leaf(ball(2, M(ctr), s));
    std::vector<Vec3> v;
    if (k == 1) {
      for (Vec3 d : {Vec3{s, 0.6 * s, 0}, Vec3{-s, 0.6 * s, 0}, Vec3{-s, -0.6 * s, 0}, Vec3{s, -0.6 * s, 0}})
        v.push_back(M(ctr + d));
    } else {
      for (int i = 0; i < 5; ++i) v.push_back(M(ctr + polar(phi + 2 * kPi * i / 5.0 + 0.3) * s));
    }
    return leaf(convex_polygon(v));
  };
  int k1 = static_cast<int>(g.index(3)), k2 = static_cast<int>(g.index(3));
  int k3 = static_cast<int>(g.index(3)), k4 = static_cast<int>(g.index(3));
  RegionNode plus = intersection_of({leaf(P), union_of({shape(k1), shape(k2)})});
  RegionNode minus = intersection_of({complement_of(leaf(P)), union_of({shape(k3), shape(k4)})});
  return RegionPair(2, plus, minus);
}

// n equally spaced points on y = slope x over [-1, 1], vertical jitter of size noise.
inline WeightedCloud line_cloud(int n, double slope, double noise, std::uint64_t seed = 1) {
  Rng rng(seed);
  std::vector<Vec3> pts;
  for (int i = 0; i < n; ++i) {
    double x = -1 + 2.0 * i / (n - 1);
    pts.push_back({x, slope * x + noise * rng.uniform(-1, 1), 0});
  }
  return counting_cloud(2, pts);
}

// Graph of slope * g over [-1, 1] with g a random trigonometric sum, |g'| <= 1.
inline WeightedCloud graph_cloud(int n, double slope, std::uint64_t seed) {
  Rng rng(seed);
  double a[4], ph[4], tot = 0;
  for (int k = 0; k < 4; ++k) {
    a[k] = rng.uniform(0.2, 1);
    ph[k] = rng.uniform(0, 6.283185307179586);
    tot += a[k];
  }
  std::vector<Vec3> pts;
  for (int i = 0; i < n; ++i) {
    double x = -1 + 2.0 * i / (n - 1), g = 0;
    for (int k = 0; k < 4; ++k) g += a[k] / tot * std::sin((k + 1) * 3.0 * x + ph[k]) / ((k + 1) * 3.0);
    pts.push_back({x, slope * g, 0});
  }
  return counting_cloud(2, pts);
}

// n points of a Fibonacci lattice on S(c, r).
inline std::vector<Vec3> sphere_net(int n, double r = 1, Vec3 c = {}) {
  std::vector<Vec3> out;
  const double ga = kPi * (3.0 - std::sqrt(5.0));
  for (int i = 0; i < n; ++i) {
    double z = 1 - 2 * (i + 0.5) / n, rr = std::sqrt(1 - z * z);
    out.push_back(c + r * Vec3{rr * std::cos(ga * i), rr * std::sin(ga * i), z});
  }
  return out;
}

// Closed ball B(c, r) in R^3: centre plus `shells` concentric lattices with
// point counts proportional to the shell area, about `total` points overall.
inline std::vector<Vec3> ball_net(int total, int shells, double r = 1, Vec3 c = {}) {
  std::vector<Vec3> out{c};
  double sum = 0;
  for (int k = 1; k <= shells; ++k) sum += k * k;
  for (int k = 1; k <= shells; ++k) {
    int nk = std::max(1, static_cast<int>(std::lround((total - 1) * k * k / sum)));
    auto s = sphere_net(nk, r * k / shells, c);
    out.insert(out.end(), s.begin(), s.end());
  }
  return out;
}

// n equally spaced points on the segment [a, b].
inline std::vector<Vec3> segment_net(int n, Vec3 a, Vec3 b) {
  std::vector<Vec3> out;
  for (int i = 0; i < n; ++i) out.push_back(a + (static_cast<double>(i) / (n - 1)) * (b - a));
  return out;
}

// Centres of the 4^level squares of the planar four-corner Cantor set with
// ratio 1/4 in [0, 1]^2.
inline std::vector<Vec3> four_corner_cantor(int level) {
  std::vector<Vec3> pts{{0, 0, 0}};
  double side = 1;
  for (int l = 0; l < level; ++l) {
    std::vector<Vec3> next;
    for (const auto& p : pts)
      for (double dx : {0.0, 0.75 * side})
        for (double dy : {0.0, 0.75 * side}) next.push_back({p.x + dx, p.y + dy, 0});
    pts.swap(next);
    side /= 4;
  }
  for (auto& p : pts) {
    p.x += side / 2;
    p.y += side / 2;
  }
  return pts;
}

// Square grid of the disk |u| <= rho in the plane z = height, with cell weights.
inline void disk_net(double rho, int per_radius, double height, std::vector<Vec3>& pts, std::vector<double>& w) {
  const double h = rho / per_radius;
  for (int i = -per_radius; i <= per_radius; ++i)
    for (int j = -per_radius; j <= per_radius; ++j) {
      Vec3 p{i * h, j * h, height};
      if (p.x * p.x + p.y * p.y <= rho * rho) {
        pts.push_back(p);
        w.push_back(h * h);
      }
    }
}

}  // namespace eps2::fixtures
