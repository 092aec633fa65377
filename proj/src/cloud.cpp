#include "eps2/cloud.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include <Eigen/Dense>

#include "eps2/errors.hpp"
#include "eps2/kernels.hpp"
#include "eps2/numerics.hpp"

namespace eps2 {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double box_dist2(const Vec3& c, const Vec3& lo, const Vec3& hi) {
  double s = 0;
  for (int k = 0; k < 3; ++k) {
    double d = std::max({lo[k] - c[k], 0.0, c[k] - hi[k]});
    s += d * d;
  }
  return s;
}

double box_far2(const Vec3& c, const Vec3& lo, const Vec3& hi) {
  double s = 0;
  for (int k = 0; k < 3; ++k) {
    double d = std::max(std::fabs(c[k] - lo[k]), std::fabs(c[k] - hi[k]));
    s += d * d;
  }
  return s;
}

double cross2(const Vec3& o, const Vec3& a, const Vec3& b) {
  return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

bool lex_less(const Vec3& a, const Vec3& b) {
  if (a.x != b.x) return a.x < b.x;
  if (a.y != b.y) return a.y < b.y;
  return a.z < b.z;
}

Vec3 tie_normal(int dim, const Vec3* ref) {
  if (ref && norm(*ref) > 0) return orient_normal(normalized(*ref), dim);
  return dim == 2 ? Vec3{0, 1, 0} : Vec3{0, 0, 1};
}

BetaFit make_fit(const std::vector<Vec3>& pts, const Ball& B, Vec3 nu, int dim) {
  nu = orient_normal(normalized(nu), dim);
  auto [half, mid] = slab(pts, nu);
  BetaFit f;
  f.value = half / B.radius;
  f.plane.normal = nu;
  f.plane.point = nu * mid;
  f.count = pts.size();
  return f;
}

// Andrew's monotone chain on points sorted lexicographically; CCW, no collinear vertices.
std::vector<Vec3> hull2(const std::vector<Vec3>& p) {
  const std::size_t n = p.size();
  if (n < 3) return p;
  std::vector<Vec3> h(2 * n);
  std::size_t k = 0;
  for (std::size_t i = 0; i < n; ++i) {
    while (k >= 2 && cross2(h[k - 2], h[k - 1], p[i]) <= 0) --k;
    h[k++] = p[i];
  }
  for (std::size_t i = n - 1, t = k + 1; i-- > 0;) {
    while (k >= t && cross2(h[k - 2], h[k - 1], p[i]) <= 0) --k;
    h[k++] = p[i];
  }
  h.resize(k - 1);
  return h;
}

BetaFit fit2(std::vector<Vec3> pts, const Ball& B, const Vec3* ref) {
  if (!std::is_sorted(pts.begin(), pts.end(), lex_less)) std::sort(pts.begin(), pts.end(), lex_less);
  std::vector<Vec3> u;
  for (const auto& p : pts)
    if (u.empty() || !(u.back() == p)) u.push_back(p);
  std::vector<Vec3> H = hull2(u);
  if (H.size() == 1) return make_fit(pts, B, tie_normal(2, ref), 2);
  if (H.size() == 2) {
    Vec3 d = H[1] - H[0];
    return make_fit(pts, B, {-d.y, d.x, 0}, 2);
  }
  // Rotating calipers: width for each edge direction.
  const std::size_t h = H.size();
  double best = kInf;
  Vec3 best_n;
  std::size_t j = 1;
  for (std::size_t i = 0; i < h; ++i) {
    const Vec3& a = H[i];
    const Vec3& b = H[(i + 1) % h];
    double len = dist(a, b);
    auto height = [&](std::size_t k) { return cross2(a, b, H[k % h]); };
    for (std::size_t step = 0; step < h && height(j + 1) > height(j); ++step) j = (j + 1) % h;
    double w = height(j) / len;
    if (w < best) {
      best = w;
      Vec3 d = b - a;
      best_n = {-d.y, d.x, 0};
    }
  }
  return make_fit(pts, B, best_n, 2);
}

std::vector<Vec3> hemisphere_dirs(int m) {
  std::vector<Vec3> d;
  const double ga = kPi * (3.0 - std::sqrt(5.0));
  for (int i = 0; i < m; ++i) {
    double z = 1.0 - (i + 0.5) / m;
    double rr = std::sqrt(std::max(0.0, 1 - z * z));
    d.push_back({rr * std::cos(ga * i), rr * std::sin(ga * i), z});
  }
  return d;
}

// All points on a line with direction t: the plane through the line closest to ref.
BetaFit fit_line(const std::vector<Vec3>& pts, const Ball& B, const Vec3& t, const Vec3* ref) {
  Vec3 r = tie_normal(3, ref);
  Vec3 nu = r - t * dot(r, t);
  if (norm(nu) < 1e-9) {
    Vec3 t1, t2;
    tangent_frame(t, t1, t2);
    nu = t1;
  }
  return make_fit(pts, B, nu, 3);
}

BetaFit fit3(const std::vector<Vec3>& pts, const Ball& B, const Vec3* ref) {
  const std::size_t k = pts.size();
  Vec3 c;
  for (const auto& p : pts) c += p;
  c *= 1.0 / static_cast<double>(k);
  Eigen::Matrix3d C = Eigen::Matrix3d::Zero();
  for (const auto& p : pts) {
    Eigen::Vector3d v(p.x - c.x, p.y - c.y, p.z - c.z);
    C += v * v.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(C);
  auto ev = es.eigenvalues();
  auto col = [&](int i) { return Vec3{es.eigenvectors()(0, i), es.eigenvectors()(1, i), es.eigenvectors()(2, i)}; };
  const double scale = std::max(ev(2), 1e-300);
  if (ev(1) <= 1e-24 * scale || ev(2) == 0) {
    // Collinear, or a single point.
    return fit_line(pts, B, ev(2) > 0 ? col(2) : Vec3{1, 0, 0}, ref);
  }
  if (k <= 5) return beta_exact_small(3, pts, B, ref);

  static const std::vector<Vec3> dirs = hemisphere_dirs(600);
  std::vector<Vec3> cand = dirs;
  cand.push_back(col(0));
  std::vector<std::pair<double, std::size_t>> w(cand.size());
  std::vector<std::size_t> support;
  for (std::size_t i = 0; i < cand.size(); ++i) {
    double lo = kInf, hi = -kInf;
    std::size_t a = 0, b = 0;
    for (std::size_t q = 0; q < k; ++q) {
      double s = dot(pts[q], cand[i]);
      if (s < lo) lo = s, a = q;
      if (s > hi) hi = s, b = q;
    }
    w[i] = {hi - lo, i};
    support.push_back(a);
    support.push_back(b);
  }
  std::sort(support.begin(), support.end());
  support.erase(std::unique(support.begin(), support.end()), support.end());
  std::sort(w.begin(), w.end());

  std::vector<Vec3> sub;
  for (auto s : support) sub.push_back(pts[s]);
  auto width_on = [](const std::vector<Vec3>& P, const Vec3& nu) {
    double lo = kInf, hi = -kInf;
    for (const auto& p : P) {
      double s = dot(p, nu);
      lo = std::min(lo, s);
      hi = std::max(hi, s);
    }
    return hi - lo;
  };

  Vec3 best_n = cand[w[0].second];
  double best = kInf;
  for (int round = 0; round < 6; ++round) {
    for (std::size_t s = 0; s < std::min<std::size_t>(4, w.size()); ++s) {
      Vec3 seed = round == 0 ? cand[w[s].second] : best_n;
      Vec3 t1, t2;
      tangent_frame(seed, t1, t2);
      auto f = [&](const std::array<double, 2>& ab) {
        return width_on(sub, normalized(seed + t1 * ab[0] + t2 * ab[1]));
      };
      auto [ab, val] = nelder_mead2(f, {0, 0}, 0.08, 400);
      Vec3 nu = normalized(seed + t1 * ab[0] + t2 * ab[1]);
      if (val < best) best = val, best_n = nu;
      if (round > 0) break;
    }
    // Points outside the working subset may stick out of the slab.
    double lo = kInf, hi = -kInf;
    std::size_t a = 0, b = 0;
    for (std::size_t q = 0; q < k; ++q) {
      double s = dot(pts[q], best_n);
      if (s < lo) lo = s, a = q;
      if (s > hi) hi = s, b = q;
    }
    if (hi - lo <= best * (1 + 1e-12) + 1e-300) break;
    sub.push_back(pts[a]);
    sub.push_back(pts[b]);
    best = hi - lo;
  }
  return make_fit(pts, B, best_n, 3);
}

}  // namespace

double WeightedCloud::total_mass() const { return std::accumulate(weights.begin(), weights.end(), 0.0); }

double WeightedCloud::diameter_bound() const {
  if (points.empty()) return 0;
  Vec3 lo = points[0], hi = points[0];
  for (const auto& p : points)
    for (int k = 0; k < 3; ++k) {
      lo[k] = std::min(lo[k], p[k]);
      hi[k] = std::max(hi[k], p[k]);
    }
  return dist(lo, hi);
}

WeightedCloud WeightedCloud::make(int dim, std::vector<Vec3> pts, std::vector<double> w, double growth_const,
                                  double growth_rmin) {
  if (dim != 2 && dim != 3) throw PreconditionError("cloud: dim must be 2 or 3");
  if (pts.size() != w.size()) throw PreconditionError("cloud: points and weights differ in length");
  if (pts.empty()) throw PreconditionError("cloud: no points");
  for (double x : w)
    if (!(x >= 0) || !std::isfinite(x)) throw PreconditionError("cloud: weights must be finite and nonnegative");
  for (auto& p : pts) {
    if (dim == 2) p.z = 0;
    if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.z))
      throw PreconditionError("cloud: non-finite coordinate");
  }
  WeightedCloud c;
  c.dim = dim;
  c.points = std::move(pts);
  c.weights = std::move(w);
  if (!(c.total_mass() > 0)) throw PreconditionError("cloud: total mass must be positive");

  const double diam = std::max(c.diameter_bound(), 1e-300);
  if (growth_rmin <= 0) growth_rmin = diam * std::ldexp(1.0, -12);
  c.growth_rmin = growth_rmin;
  std::vector<double> radii;
  for (int e = static_cast<int>(std::ceil(std::log2(growth_rmin))); std::ldexp(1.0, e - 1) < diam; ++e)
    radii.push_back(std::ldexp(1.0, e));
  PointIndex idx(dim, c.points, c.weights);
  const int n = dim - 1;
  std::vector<double> worst;
  kernels::map_index(c.points.size(), [&](std::size_t i) {
    double m = 0;
    for (double r : radii) m = std::max(m, idx.mass(c.points[i], r) / std::pow(r, n));
    return m;
  }, worst);
  double C = worst.empty() ? 0 : *std::max_element(worst.begin(), worst.end());
  if (growth_const <= 0) {
    c.growth_const = C;
  } else {
    if (C > growth_const * (1 + 1e-12))
      throw PreconditionError("cloud: growth bound violated (measured " + fmt_double(C) + " > " +
                              fmt_double(growth_const) + ")");
    c.growth_const = growth_const;
  }
  return c;
}

WeightedCloud counting_cloud(int dim, std::vector<Vec3> pts, double total, double growth_const, double growth_rmin) {
  std::vector<double> w(pts.size(), pts.empty() ? 0.0 : total / static_cast<double>(pts.size()));
  return WeightedCloud::make(dim, std::move(pts), std::move(w), growth_const, growth_rmin);
}

WeightedCloud read_cloud_csv(const std::string& path, int dim, double growth_const, double growth_rmin) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open cloud file " + path);
  std::vector<Vec3> pts;
  std::vector<double> w;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::vector<double> v;
    std::stringstream ss(line);
    std::string cell;
    bool numeric = true;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        v.push_back(std::stod(cell, &used));
      } catch (...) {
        numeric = false;
        break;
      }
    }
    if (!numeric) {
      if (pts.empty()) continue;  // header
      throw ConfigError(path + ":" + std::to_string(lineno) + ": non-numeric cell");
    }
    if (static_cast<int>(v.size()) != dim + 1)
      throw ConfigError(path + ":" + std::to_string(lineno) + ": expected " + std::to_string(dim + 1) + " columns");
    pts.push_back({v[0], v[1], dim == 3 ? v[2] : 0.0});
    w.push_back(v[dim]);
  }
  return WeightedCloud::make(dim, std::move(pts), std::move(w), growth_const, growth_rmin);
}

void write_cloud_csv(const std::string& path, const WeightedCloud& c) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path);
  out << (c.dim == 2 ? "x1,x2,weight\n" : "x1,x2,x3,weight\n");
  for (std::size_t i = 0; i < c.points.size(); ++i) {
    for (int k = 0; k < c.dim; ++k) out << fmt_double(c.points[i][k]) << ',';
    out << fmt_double(c.weights[i]) << '\n';
  }
}

PointIndex::PointIndex(int dim, const std::vector<Vec3>& pts, const std::vector<double>& weights)
    : dim_(dim), pts_(pts), w_(weights), perm_(pts.size()) {
  std::iota(perm_.begin(), perm_.end(), 0);
  if (!pts_.empty()) build(0, pts_.size(), 0);
}

int PointIndex::build(std::size_t b, std::size_t e, int depth) {
  Node nd;
  nd.begin = b;
  nd.end = e;
  nd.lo = nd.hi = pts_[perm_[b]];
  for (std::size_t i = b; i < e; ++i) {
    const Vec3& p = pts_[perm_[i]];
    for (int k = 0; k < 3; ++k) {
      nd.lo[k] = std::min(nd.lo[k], p[k]);
      nd.hi[k] = std::max(nd.hi[k], p[k]);
    }
    nd.w += w_[perm_[i]];
  }
  int id = static_cast<int>(nodes_.size());
  nodes_.push_back(nd);
  if (e - b > 16) {
    int axis = 0;
    double ext = -1;
    for (int k = 0; k < dim_; ++k)
      if (nd.hi[k] - nd.lo[k] > ext) ext = nd.hi[k] - nd.lo[k], axis = k;
    (void)depth;
    std::size_t m = b + (e - b) / 2;
    std::nth_element(perm_.begin() + static_cast<long>(b), perm_.begin() + static_cast<long>(m),
                     perm_.begin() + static_cast<long>(e),
                     [&](std::size_t x, std::size_t y) { return pts_[x][axis] < pts_[y][axis]; });
    int l = build(b, m, depth + 1);
    int r = build(m, e, depth + 1);
    nodes_[id].left = l;
    nodes_[id].right = r;
  }
  return id;
}

double PointIndex::mass(const Vec3& c, double r) const {
  if (nodes_.empty()) return 0;
  const double r2 = r * r;
  double s = 0;
  std::vector<int> stack{0};
  while (!stack.empty()) {
    const Node& nd = nodes_[stack.back()];
    stack.pop_back();
    if (box_dist2(c, nd.lo, nd.hi) > r2) continue;
    if (box_far2(c, nd.lo, nd.hi) <= r2) {
      s += nd.w;
      continue;
    }
    if (nd.left < 0) {
      for (std::size_t i = nd.begin; i < nd.end; ++i) {
        Vec3 d = pts_[perm_[i]] - c;
        if (dot(d, d) <= r2) s += w_[perm_[i]];
      }
      continue;
    }
    stack.push_back(nd.right);
    stack.push_back(nd.left);
  }
  return s;
}

void PointIndex::collect(const Vec3& c, double r, std::vector<std::size_t>& out) const {
  out.clear();
  if (nodes_.empty()) return;
  const double r2 = r * r;
  std::vector<int> stack{0};
  while (!stack.empty()) {
    const Node& nd = nodes_[stack.back()];
    stack.pop_back();
    if (box_dist2(c, nd.lo, nd.hi) > r2) continue;
    if (box_far2(c, nd.lo, nd.hi) <= r2) {
      for (std::size_t i = nd.begin; i < nd.end; ++i) out.push_back(perm_[i]);
      continue;
    }
    if (nd.left < 0) {
      for (std::size_t i = nd.begin; i < nd.end; ++i) {
        Vec3 d = pts_[perm_[i]] - c;
        if (dot(d, d) <= r2) out.push_back(perm_[i]);
      }
      continue;
    }
    stack.push_back(nd.right);
    stack.push_back(nd.left);
  }
  std::sort(out.begin(), out.end());
}

std::pair<double, double> slab(const std::vector<Vec3>& pts, const Vec3& nu) {
  double lo = kInf, hi = -kInf;
  for (const auto& p : pts) {
    double s = dot(p, nu);
    lo = std::min(lo, s);
    hi = std::max(hi, s);
  }
  return {(hi - lo) / 2, (hi + lo) / 2};
}

double plane_angle(const Vec3& n1, const Vec3& n2) {
  double c = std::fabs(dot(normalized(n1), normalized(n2)));
  return std::acos(std::min(1.0, c));
}

Vec3 orient_normal(Vec3 n, int dim) {
  for (int k = dim - 1; k >= 0; --k) {
    if (n[k] > 0) return n;
    if (n[k] < 0) return -n;
  }
  return n;
}

BetaFit beta_exact_small(int dim, const std::vector<Vec3>& pts, const Ball& B, const Vec3* ref) {
  const std::size_t k = pts.size();
  if (k == 0) throw EmptyIntersection("beta_inf: empty set");
  if (k > static_cast<std::size_t>(dim + 2)) throw PreconditionError("beta_exact_small: too many points");
  std::vector<Vec3> cand;
  if (dim == 2) {
    for (std::size_t i = 0; i < k; ++i)
      for (std::size_t j = i + 1; j < k; ++j) {
        Vec3 d = pts[j] - pts[i];
        cand.push_back({-d.y, d.x, 0});
      }
  } else {
    for (std::size_t i = 0; i < k; ++i)
      for (std::size_t j = i + 1; j < k; ++j)
        for (std::size_t l = j + 1; l < k; ++l) cand.push_back(cross(pts[j] - pts[i], pts[l] - pts[i]));
    for (std::size_t i = 0; i < k; ++i)
      for (std::size_t j = i + 1; j < k; ++j)
        for (std::size_t a = 0; a < k; ++a)
          for (std::size_t b = a + 1; b < k; ++b)
            if (a != i && a != j && b != i && b != j) cand.push_back(cross(pts[j] - pts[i], pts[b] - pts[a]));
  }
  double scale = 0;
  for (const auto& p : pts) scale = std::max(scale, dist(p, pts[0]));
  BetaFit best;
  best.value = kInf;
  bool any = false;
  for (const auto& c : cand) {
    if (norm(c) <= 1e-14 * scale * scale) continue;
    any = true;
    BetaFit f = make_fit(pts, B, c, dim);
    if (f.value < best.value) best = f;
  }
  if (!any) {
    if (scale > 0) {
      for (const auto& p : pts)
        if (dist(p, pts[0]) == scale) {
          Vec3 d = p - pts[0];
          return dim == 2 ? make_fit(pts, B, {-d.y, d.x, 0}, 2) : fit_line(pts, B, normalized(d), ref);
        }
    }
    return make_fit(pts, B, tie_normal(dim, ref), dim);
  }
  return best;
}

BetaFit beta_fit(int dim, std::vector<Vec3> pts, const Ball& B, const Vec3* ref) {
  if (pts.empty()) throw EmptyIntersection("beta_inf: E does not meet the ball");
  if (dim == 2) return fit2(std::move(pts), B, ref);
  return fit3(pts, B, ref);
}

BetaFit beta_inf(int dim, const std::vector<Vec3>& E, const Ball& B, const Vec3* ref) {
  std::vector<Vec3> in;
  for (const auto& p : E)
    if (dist(p, B.center) <= B.radius) in.push_back(p);
  return beta_fit(dim, std::move(in), B, ref);
}

}  // namespace eps2
