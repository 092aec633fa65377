#include "eps2/corona.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "eps2/errors.hpp"
#include "eps2/kernels.hpp"
#include "eps2/numerics.hpp"
#include "eps2/rng.hpp"

namespace eps2 {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double smoothstep5(double s) {
  s = std::clamp(s, 0.0, 1.0);
  return s * s * s * (10 + s * (-15 + 6 * s));
}

double box_gap(const Vec3& alo, const Vec3& ahi, const Vec3& blo, const Vec3& bhi, int m) {
  double s = 0;
  for (int k = 0; k < m; ++k) {
    double d = std::max({blo[k] - ahi[k], 0.0, alo[k] - bhi[k]});
    s += d * d;
  }
  return std::sqrt(s);
}

double point_box(const Vec3& p, const Vec3& lo, const Vec3& hi, int m) { return box_gap(p, p, lo, hi, m); }

double pow_n(double r, int n) { return n == 1 ? r : r * r; }

nlohmann::json vec_json(const Vec3& v, int dim) {
  nlohmann::json a = nlohmann::json::array();
  for (int k = 0; k < dim; ++k) a.push_back(v[k]);
  return a;
}

Vec3 json_vec(const nlohmann::json& a) {
  Vec3 v;
  for (std::size_t k = 0; k < a.size() && k < 3; ++k) v[k] = a[k].get<double>();
  return v;
}

nlohmann::json cubes_json(const std::vector<DyadicCube>& v, int n) {
  nlohmann::json a = nlohmann::json::array();
  for (const auto& q : v) {
    if (n == 1)
      a.push_back({q.level, q.idx[0]});
    else
      a.push_back({q.level, q.idx[0], q.idx[1]});
  }
  return a;
}

std::vector<DyadicCube> json_cubes(const nlohmann::json& a) {
  std::vector<DyadicCube> v;
  for (const auto& e : a) {
    DyadicCube q;
    q.level = e[0].get<int>();
    q.idx[0] = e[1].get<std::int64_t>();
    if (e.size() > 2) q.idx[1] = e[2].get<std::int64_t>();
    v.push_back(q);
  }
  return v;
}

}  // namespace

// ---------------------------------------------------------------------------

double theta_density(const WeightedCloud& mu, const Ball& B) {
  if (!(B.radius > 0)) throw PreconditionError("theta_density: radius must be positive");
  double m = 0;
  for (std::size_t i = 0; i < mu.points.size(); ++i)
    if (dist(mu.points[i], B.center) <= B.radius) m += mu.weights[i];
  return m / pow_n(B.radius, mu.n());
}

bool ball_is_good(const WeightedCloud& mu, const std::vector<Vec3>& E, const Ball& B, double theta, double alpha,
                  const Vec3& ref_normal) {
  if (theta_density(mu, B) < theta) return false;
  try {
    BetaFit f = beta_inf(mu.dim, E, B, &ref_normal);
    return plane_angle(f.plane.normal, ref_normal) <= alpha;
  } catch (const EmptyIntersection&) {
    return false;
  }
}

StopGrid StopGrid::make(double r0, double scene_diam, double factor, double top_multiple, double bottom_divisor) {
  if (!(r0 > 0) || !(factor > 1)) throw PreconditionError("radius grid: need r0 > 0 and factor > 1");
  StopGrid g;
  g.factor = factor;
  g.requested_top = top_multiple * r0;
  const double clip = std::max(std::min(g.requested_top, scene_diam), 2 * r0);
  g.clipped = clip < g.requested_top;
  const double bottom = r0 / bottom_divisor;
  std::vector<double> all;
  for (int k = 0;; ++k) {
    double r = g.requested_top * std::pow(factor, -k);
    if (r < bottom * (1 - 1e-12)) break;
    all.push_back(r);
  }
  // Start at the smallest grid value still >= clip.
  std::size_t first = 0;
  while (first + 1 < all.size() && all[first + 1] >= clip * (1 - 1e-12)) ++first;
  g.radii.assign(all.begin() + static_cast<long>(first), all.end());
  g.top = g.radii.front();
  return g;
}

StopInfo stopping_height(const GoodTester& t, const Vec3& x, double containing_radius, const StopGrid& grid,
                         std::vector<BetaFit>* fits) {
  const int K = static_cast<int>(grid.radii.size());
  if (fits) fits->assign(K, BetaFit{});
  StopInfo s;
  for (int k = 0; k < K; ++k) {
    const double r = grid.radii[k];
    if (r >= containing_radius) {
      s.h_index = k;
      continue;
    }
    const Ball B{x, r};
    const double dens = t.density(B);
    bool ok = dens >= t.theta;
    StopCause cause = StopCause::Density;
    if (ok) {
      BetaFit f;
      ok = t.fit(B, f);
      if (ok && plane_angle(f.plane.normal, t.ref) > t.alpha) {
        ok = false;
        cause = StopCause::Angle;
      }
      if (ok && fits) (*fits)[k] = f;
    }
    if (!ok) {
      s.fail_index = k;
      s.cause = cause;
      s.stop_density = dens;
      s.h = s.h_index >= 0 ? grid.radii[s.h_index] : containing_radius;
      return s;
    }
    s.h_index = k;
  }
  s.h = 0;
  return s;
}

// ---------------------------------------------------------------------------

double d_function(const Vec3& x, const std::vector<Ball>& vg) {
  double d = kInf;
  for (const auto& b : vg) d = std::min(d, dist(x, b.center) + b.radius);
  return d;
}

ConeField::ConeField(int m, std::vector<Vec3> centres, std::vector<double> offsets)
    : m_(m), c_(std::move(centres)), h_(std::move(offsets)) {
  if (c_.size() != h_.size()) throw PreconditionError("ConeField: size mismatch");
  for (auto& c : c_)
    for (int k = m_; k < 3; ++k) c[k] = 0;
  perm_.resize(c_.size());
  std::iota(perm_.begin(), perm_.end(), 0);
  if (!c_.empty()) build(0, static_cast<int>(c_.size()));
}

int ConeField::build(int b, int e) {
  Node nd;
  nd.begin = b;
  nd.end = e;
  nd.lo = nd.hi = c_[perm_[b]];
  nd.hmin = kInf;
  for (int i = b; i < e; ++i) {
    const Vec3& p = c_[perm_[i]];
    for (int k = 0; k < m_; ++k) {
      nd.lo[k] = std::min(nd.lo[k], p[k]);
      nd.hi[k] = std::max(nd.hi[k], p[k]);
    }
    nd.hmin = std::min(nd.hmin, h_[perm_[i]]);
  }
  int id = static_cast<int>(nodes_.size());
  nodes_.push_back(nd);
  if (e - b > 8) {
    int axis = 0;
    double ext = -1;
    for (int k = 0; k < m_; ++k)
      if (nd.hi[k] - nd.lo[k] > ext) ext = nd.hi[k] - nd.lo[k], axis = k;
    int mid = b + (e - b) / 2;
    std::nth_element(perm_.begin() + b, perm_.begin() + mid, perm_.begin() + e,
                     [&](int x, int y) { return c_[x][axis] < c_[y][axis] || (c_[x][axis] == c_[y][axis] && x < y); });
    int l = build(b, mid);
    int r = build(mid, e);
    nodes_[id].left = l;
    nodes_[id].right = r;
  }
  return id;
}

template <class LB, class Leaf>
std::pair<double, int> ConeField::search(LB lower, Leaf leaf) const {
  double best = kInf;
  int arg = -1;
  if (nodes_.empty()) return {best, arg};
  std::vector<std::pair<double, int>> stack{{lower(nodes_[0]), 0}};
  while (!stack.empty()) {
    auto [lb, id] = stack.back();
    stack.pop_back();
    if (lb > best) continue;
    const Node& nd = nodes_[id];
    if (nd.left < 0) {
      for (int i = nd.begin; i < nd.end; ++i) {
        int q = perm_[i];
        double v = leaf(q);
        if (v < best || (v == best && q < arg)) best = v, arg = q;
      }
      continue;
    }
    double a = lower(nodes_[nd.left]), b = lower(nodes_[nd.right]);
    if (a <= b) {
      stack.push_back({b, nd.right});
      stack.push_back({a, nd.left});
    } else {
      stack.push_back({a, nd.left});
      stack.push_back({b, nd.right});
    }
  }
  return {best, arg};
}

std::pair<double, int> ConeField::min_point(const Vec3& p) const {
  return search([&](const Node& nd) { return point_box(p, nd.lo, nd.hi, m_) + nd.hmin; },
                [&](int q) {
                  double s = 0;
                  for (int k = 0; k < m_; ++k) s += (p[k] - c_[q][k]) * (p[k] - c_[q][k]);
                  return std::sqrt(s) + h_[q];
                });
}

std::pair<double, int> ConeField::min_box(const Vec3& lo, const Vec3& hi) const {
  return search([&](const Node& nd) { return box_gap(lo, hi, nd.lo, nd.hi, m_) + nd.hmin; },
                [&](int q) { return point_box(c_[q], lo, hi, m_) + h_[q]; });
}

Frame Frame::make(int dim, const Vec3& origin, const Vec3& normal) {
  Frame F;
  F.dim = dim;
  F.origin = origin;
  F.normal = orient_normal(normalized(normal), dim);
  if (dim == 2) {
    F.tangent[0] = {F.normal.y, -F.normal.x, 0};
    F.tangent[1] = {0, 0, 0};
  } else {
    tangent_frame(F.normal, F.tangent[0], F.tangent[1]);
  }
  return F;
}

Vec3 Frame::to_u(const Vec3& y) const {
  Vec3 d = y - origin;
  return {dot(d, tangent[0]), dim == 3 ? dot(d, tangent[1]) : 0.0, 0.0};
}

double Frame::to_v(const Vec3& y) const { return dot(y - origin, normal); }

Vec3 Frame::lift(const Vec3& u, double v) const {
  Vec3 y = origin + tangent[0] * u[0] + normal * v;
  if (dim == 3) y += tangent[1] * u[1];
  return y;
}

double D_segment(const Frame& F, const Vec3& u, const std::function<double(const Vec3&)>& d, double half_height,
                 int steps) {
  if (steps < 1) throw PreconditionError("D_segment: steps must be >= 1");
  double best = kInf;
  for (int j = 0; j <= steps; ++j) {
    double v = -half_height + 2 * half_height * j / steps;
    best = std::min(best, d(F.lift(u, v)));
  }
  return best;
}

// ---------------------------------------------------------------------------

Box WhitneyWindow::box(const DyadicCube& q, double scale) const {
  const double l = cube_side(q.level);
  Box b;
  for (int k = 0; k < n; ++k) {
    double c = lo[k] + (static_cast<double>(q.idx[k]) + 0.5) * l;
    b.lo[k] = c - scale * l / 2;
    b.hi[k] = c + scale * l / 2;
  }
  return b;
}

std::uint64_t WhitneyFamily::key(const DyadicCube& q) {
  return (static_cast<std::uint64_t>(q.level) << 58) | (static_cast<std::uint64_t>(q.idx[0]) << 29) |
         static_cast<std::uint64_t>(q.idx[1]);
}

void WhitneyFamily::build_lookup() {
  lookup.clear();
  lookup.reserve(2 * (cubes.size() + residual.size()));
  for (std::size_t i = 0; i < cubes.size(); ++i) lookup[key(cubes[i])] = static_cast<std::int64_t>(i);
  for (std::size_t i = 0; i < residual.size(); ++i) lookup[key(residual[i])] = -1 - static_cast<std::int64_t>(i);
}

std::pair<bool, std::int64_t> WhitneyFamily::locate(const Vec3& u) const {
  const int n = window.n;
  for (int k = 0; k < n; ++k)
    if (!(u[k] >= window.lo[k] && u[k] <= window.lo[k] + window.side)) return {false, 0};
  for (int L = 0; L <= window.max_level; ++L) {
    const double l = window.cube_side(L);
    const std::int64_t cells = std::int64_t{1} << L;
    DyadicCube q;
    q.level = L;
    for (int k = 0; k < n; ++k)
      q.idx[k] = std::clamp<std::int64_t>(static_cast<std::int64_t>(std::floor((u[k] - window.lo[k]) / l)), 0, cells - 1);
    auto it = lookup.find(key(q));
    if (it != lookup.end()) return {true, it->second};
  }
  return {false, 0};
}

WhitneyFamily whitney(const WhitneyWindow& W, const std::function<double(const Box&)>& D_box,
                      const std::function<double(const Vec3&)>& D_point) {
  if (W.n != 1 && W.n != 2) throw PreconditionError("whitney: n must be 1 or 2");
  if (W.max_level < 0 || W.max_level > 28) throw PreconditionError("whitney: max_level must lie in [0, 28]");
  WhitneyFamily F;
  F.window = W;
  const double l_min = W.cube_side(W.max_level);
  const double half_diag = std::sqrt(static_cast<double>(W.n)) / 2;
  std::vector<DyadicCube> cur{DyadicCube{}};
  while (!cur.empty()) {
    std::vector<double> dinf(cur.size()), dmid(cur.size());
    kernels::for_index(cur.size(), [&](std::size_t i) {
      Box b = W.box(cur[i]);
      dinf[i] = D_box(b);
      const double l = W.cube_side(cur[i].level);
      if (!(l < dinf[i] / 20) && cur[i].level < W.max_level) {
        Vec3 c;
        for (int k = 0; k < W.n; ++k) c[k] = (b.lo[k] + b.hi[k]) / 2;
        dmid[i] = D_point(c);
      }
    });
    std::vector<DyadicCube> next;
    for (std::size_t i = 0; i < cur.size(); ++i) {
      const DyadicCube& q = cur[i];
      const double l = W.cube_side(q.level);
      if (l < dinf[i] / 20) {
        F.cubes.push_back(q);
        F.D_inf.push_back(dinf[i]);
      } else if (q.level == W.max_level || dmid[i] + l * half_diag <= 20 * l_min) {
        // No descendant down to the finest level can satisfy the criterion.
        F.residual.push_back(q);
      } else {
        const int kids = W.n == 1 ? 2 : 4;
        for (int c = 0; c < kids; ++c) {
          DyadicCube ch;
          ch.level = q.level + 1;
          ch.idx[0] = 2 * q.idx[0] + (c & 1);
          ch.idx[1] = W.n == 2 ? 2 * q.idx[1] + (c >> 1) : 0;
          next.push_back(ch);
        }
      }
    }
    cur.swap(next);
  }
  F.build_lookup();
  return F;
}

nlohmann::json WhitneyCheck::to_json() const {
  return {{"partition", partition},   {"a_lower_min", a_lower_min}, {"a_upper_max", a_upper_max},
          {"a_holds", a_holds},       {"b_ratio", b_ratio},         {"c_count", c_count},
          {"residual_fraction", residual_fraction}, {"residual_ok", residual_ok}};
}

WhitneyCheck check_whitney(const WhitneyFamily& F, const std::function<double(const Box&)>& D_box,
                           const std::function<double(const Vec3&)>& D_point, int samples_per_axis) {
  const WhitneyWindow& W = F.window;
  const int n = W.n, M = W.max_level;
  WhitneyCheck c;

  // (d) and disjointness: leaf volumes in units of the finest cell, and no leaf is
  // an ancestor of another.
  std::uint64_t vol = 0, res_vol = 0;
  bool nested = false;
  auto visit = [&](const DyadicCube& q, bool res) {
    std::uint64_t v = std::uint64_t{1} << (n * (M - q.level));
    vol += v;
    if (res) res_vol += v;
    DyadicCube a = q;
    while (a.level > 0) {
      a.level -= 1;
      a.idx[0] >>= 1;
      a.idx[1] >>= 1;
      if (F.lookup.count(WhitneyFamily::key(a))) nested = true;
    }
  };
  for (const auto& q : F.cubes) visit(q, false);
  for (const auto& q : F.residual) visit(q, true);
  const std::uint64_t total = std::uint64_t{1} << (n * M);
  c.partition = vol == total && !nested && F.lookup.size() == F.cubes.size() + F.residual.size();
  c.residual_fraction = static_cast<double>(res_vol) / static_cast<double>(total);

  const double l_min = W.cube_side(M);
  c.residual_ok = true;
  for (const auto& q : F.residual) c.residual_ok = c.residual_ok && D_box(W.box(q)) <= 20 * l_min;

  // (a)
  const std::size_t N = F.cubes.size();
  std::vector<double> lower(N), upper(N);
  kernels::for_index(N, [&](std::size_t i) {
    const double l = W.cube_side(F.cubes[i].level);
    Box b = W.box(F.cubes[i], 15);
    lower[i] = D_box(b) / l;
    double up = 0;
    const int s = std::max(2, samples_per_axis);
    for (int a = 0; a < s; ++a)
      for (int bb = 0; bb < (n == 2 ? s : 1); ++bb) {
        Vec3 p;
        p[0] = b.lo[0] + (b.hi[0] - b.lo[0]) * a / (s - 1);
        if (n == 2) p[1] = b.lo[1] + (b.hi[1] - b.lo[1]) * bb / (s - 1);
        up = std::max(up, D_point(p));
      }
    upper[i] = up / l;
  });
  c.a_lower_min = N ? *std::min_element(lower.begin(), lower.end()) : 0;
  c.a_upper_max = N ? *std::max_element(upper.begin(), upper.end()) : 0;
  c.a_holds = N == 0 || (c.a_lower_min >= 5 * (1 - 1e-12) && c.a_upper_max <= 50 * (1 + 1e-12));

  // (b), (c): overlapping pairs of 15R_i through a bounding-box tree.
  std::vector<Box> big(N);
  for (std::size_t i = 0; i < N; ++i) big[i] = W.box(F.cubes[i], 15);
  struct BNode {
    Box bb;
    std::size_t begin, end;
    int left = -1, right = -1;
  };
  std::vector<std::size_t> ord(N);
  std::iota(ord.begin(), ord.end(), 0);
  std::vector<BNode> tree;
  auto overlaps = [&](const Box& a, const Box& b) {
    for (int k = 0; k < n; ++k)
      if (a.lo[k] > b.hi[k] || b.lo[k] > a.hi[k]) return false;
    return true;
  };
  std::function<int(std::size_t, std::size_t, int)> build = [&](std::size_t b, std::size_t e, int depth) {
    BNode nd{big[ord[b]], b, e};
    for (std::size_t t = b + 1; t < e; ++t)
      for (int k = 0; k < n; ++k) {
        nd.bb.lo[k] = std::min(nd.bb.lo[k], big[ord[t]].lo[k]);
        nd.bb.hi[k] = std::max(nd.bb.hi[k], big[ord[t]].hi[k]);
      }
    const int id = static_cast<int>(tree.size());
    tree.push_back(nd);
    if (e - b > 16) {
      const int ax = depth % n;
      const std::size_t mid = b + (e - b) / 2;
      std::nth_element(ord.begin() + b, ord.begin() + mid, ord.begin() + e, [&](std::size_t x, std::size_t y) {
        return big[x].lo[ax] + big[x].hi[ax] < big[y].lo[ax] + big[y].hi[ax];
      });
      const int l = build(b, mid, depth + 1), r = build(mid, e, depth + 1);
      tree[id].left = l;
      tree[id].right = r;
    }
    return id;
  };
  if (N) build(0, N, 0);
  std::vector<std::size_t> count(N, 0);
  std::vector<double> worst(N, N ? 1.0 : 0.0);
  kernels::for_index(N, [&](std::size_t i) {
    std::vector<int> stack{0};
    const double li = W.cube_side(F.cubes[i].level);
    while (!stack.empty()) {
      const BNode& nd = tree[stack.back()];
      stack.pop_back();
      if (!overlaps(nd.bb, big[i])) continue;
      if (nd.left >= 0) {
        stack.push_back(nd.left);
        stack.push_back(nd.right);
        continue;
      }
      for (std::size_t t = nd.begin; t < nd.end; ++t) {
        const std::size_t j = ord[t];
        if (!overlaps(big[j], big[i])) continue;
        ++count[i];
        const double lj = W.cube_side(F.cubes[j].level);
        worst[i] = std::max(worst[i], std::max(li / lj, lj / li));
      }
    }
  });
  const double ratio = N ? *std::max_element(worst.begin(), worst.end()) : 0.0;
  c.b_ratio = ratio;
  c.c_count = N ? *std::max_element(count.begin(), count.end()) : 0;
  return c;
}

std::vector<std::pair<std::size_t, double>> PartitionOfUnity::eval(const Vec3& u) const {
  const WhitneyFamily& F = *F_;
  const WhitneyWindow& W = F.window;
  const int n = W.n;
  std::vector<std::pair<std::size_t, double>> out;
  double sum = 0;
  for (int L = 0; L <= W.max_level; ++L) {
    const double l = W.cube_side(L);
    const std::int64_t cells = std::int64_t{1} << L;
    std::int64_t base[2] = {0, 0};
    for (int k = 0; k < n; ++k) base[k] = static_cast<std::int64_t>(std::floor((u[k] - W.lo[k]) / l));
    for (int a = -1; a <= 1; ++a)
      for (int b = (n == 2 ? -1 : 0); b <= (n == 2 ? 1 : 0); ++b) {
        DyadicCube q;
        q.level = L;
        q.idx[0] = base[0] + a;
        q.idx[1] = n == 2 ? base[1] + b : 0;
        if (q.idx[0] < 0 || q.idx[0] >= cells || q.idx[1] < 0 || q.idx[1] >= cells) continue;
        auto it = F.lookup.find(WhitneyFamily::key(q));
        if (it == F.lookup.end() || it->second < 0) continue;
        const auto i = static_cast<std::size_t>(it->second);
        double w = raw_bump(i, u);
        if (w > 0) {
          out.emplace_back(i, w);
          sum += w;
        }
      }
  }
  if (sum > 0)
    for (auto& e : out) e.second /= sum;
  std::sort(out.begin(), out.end());
  return out;
}

double PartitionOfUnity::raw_bump(std::size_t i, const Vec3& u) const {
  const WhitneyWindow& W = F_->window;
  const DyadicCube& q = F_->cubes[i];
  const double l = W.cube_side(q.level);
  double v = 1;
  for (int k = 0; k < W.n; ++k) {
    double c = W.lo[k] + (static_cast<double>(q.idx[k]) + 0.5) * l;
    double t = std::fabs(u[k] - c) / l;
    v *= smoothstep5(1.5 - t);
  }
  return v;
}

bool plane_to_affine(const Frame& F, const Hyperplane& P, Affine& out) {
  const Vec3 nu = normalized(P.normal);
  const double den = dot(nu, F.normal);
  if (std::fabs(den) < 1e-12) return false;
  out.c = -dot(F.origin - P.point, nu) / den;
  out.g[0] = -dot(F.tangent[0], nu) / den;
  out.g[1] = F.dim == 3 ? -dot(F.tangent[1], nu) / den : 0.0;
  return true;
}

ExtendedGraph::ExtendedGraph(const WhitneyFamily& F, std::vector<Affine> maps,
                             std::function<double(const Vec3&)> residual)
    : F_(&F), pou_(F), maps_(std::move(maps)), residual_(std::move(residual)) {
  if (maps_.size() != F.cubes.size()) throw PreconditionError("extend_graph: one affine map per cube");
}

double ExtendedGraph::operator()(const Vec3& u) const {
  auto [found, code] = F_->locate(u);
  if (!found) return 0.0;
  if (code < 0) return residual_ ? residual_(u) : 0.0;
  double a = 0;
  for (auto [i, phi] : pou_.eval(u)) a += phi * maps_[i](u);
  return a;
}

// ---------------------------------------------------------------------------

const char* point_class_name(PointClass c) {
  switch (c) {
    case PointClass::Z: return "Z";
    case PointClass::LD: return "LD";
    case PointClass::BA: return "BA";
  }
  return "?";
}

PointClass parse_point_class(const std::string& s) {
  if (s == "Z") return PointClass::Z;
  if (s == "LD") return PointClass::LD;
  if (s == "BA") return PointClass::BA;
  throw ConfigError("unknown point class '" + s + "'");
}

PointClass classify_point(const StopInfo& s, double theta) {
  if (s.fail_index < 0) return PointClass::Z;
  return s.stop_density <= theta && s.cause == StopCause::Density ? PointClass::LD : PointClass::BA;
}

nlohmann::json CoronaParams::to_json() const {
  return {{"theta", theta},
          {"alpha", alpha},
          {"eps", eps},
          {"c0", c0},
          {"grid_factor", grid_factor},
          {"top_multiple", top_multiple},
          {"bottom_divisor", bottom_divisor},
          {"whitney_extra_levels", whitney_extra_levels},
          {"graph_nodes", graph_nodes},
          {"graph_nodes_2d", graph_nodes_2d},
          {"lip_pairs", lip_pairs},
          {"seed", seed}};
}

CoronaParams CoronaParams::from_json(const nlohmann::json& j) {
  CoronaParams p;
  static const char* known[] = {"theta",          "alpha",          "eps",        "c0",
                                "grid_factor",    "top_multiple",   "bottom_divisor", "whitney_extra_levels",
                                "graph_nodes",    "graph_nodes_2d", "lip_pairs",  "seed"};
  for (auto it = j.begin(); it != j.end(); ++it)
    if (std::find_if(std::begin(known), std::end(known), [&](const char* k) { return it.key() == k; }) ==
        std::end(known))
      throw ConfigError("corona params: unknown key '" + it.key() + "'");
  p.theta = j.value("theta", p.theta);
  p.alpha = j.value("alpha", p.alpha);
  p.eps = j.value("eps", p.eps);
  p.c0 = j.value("c0", p.c0);
  p.grid_factor = j.value("grid_factor", p.grid_factor);
  p.top_multiple = j.value("top_multiple", p.top_multiple);
  p.bottom_divisor = j.value("bottom_divisor", p.bottom_divisor);
  p.whitney_extra_levels = j.value("whitney_extra_levels", p.whitney_extra_levels);
  p.graph_nodes = j.value("graph_nodes", p.graph_nodes);
  p.graph_nodes_2d = j.value("graph_nodes_2d", p.graph_nodes_2d);
  p.lip_pairs = j.value("lip_pairs", p.lip_pairs);
  p.seed = j.value("seed", p.seed);
  if (!(p.theta > 0) || !(p.alpha > 0) || !(p.eps > 0) || !(p.c0 > 0) || !(p.grid_factor > 1))
    throw ConfigError("corona params: theta, alpha, eps, c0 must be positive and grid_factor > 1");
  if (p.graph_nodes < 2 || p.graph_nodes_2d < 2) throw ConfigError("corona params: need at least 2 graph nodes");
  return p;
}

double GraphGrid::interpolate(const Vec3& u) const {
  const double h = (hi - lo) / (nodes - 1);
  auto cell = [&](double x, int& i, double& t) {
    double s = std::clamp((x - lo) / h, 0.0, static_cast<double>(nodes - 1));
    i = std::min(static_cast<int>(s), nodes - 2);
    t = s - i;
  };
  int i, j = 0;
  double s, t = 0;
  cell(u[0], i, s);
  if (n == 1) return (1 - s) * at(i) + s * at(i + 1);
  cell(u[1], j, t);
  // Triangles split along the (i, j)-(i+1, j+1) diagonal.
  if (s >= t) return at(i, j) + s * (at(i + 1, j) - at(i, j)) + t * (at(i + 1, j + 1) - at(i + 1, j));
  return at(i, j) + t * (at(i, j + 1) - at(i, j)) + s * (at(i + 1, j + 1) - at(i, j + 1));
}

nlohmann::json CoronaStats::to_json() const {
  return {{"mu_E0", mu_E0}, {"mu_Z", mu_Z}, {"mu_LD", mu_LD}, {"mu_BA", mu_BA}, {"max_grad", max_grad}};
}

nlohmann::json CoronaResult::to_json() const {
  nlohmann::json j;
  const int n = dim - 1;
  j["dim"] = dim;
  j["base_ball"] = {{"center", vec_json(base_ball.center, dim)}, {"radius", base_ball.radius}};
  j["L0"] = {{"origin", vec_json(L0.origin, dim)},
             {"normal", vec_json(L0.normal, dim)},
             {"tangent", {vec_json(L0.tangent[0], dim), vec_json(L0.tangent[1], dim)}}};
  j["params"] = params.to_json();
  j["radius_grid"] = {{"radii", grid.radii},     {"requested_top", grid.requested_top}, {"top", grid.top},
                      {"clipped", grid.clipped}, {"factor", grid.factor}};
  j["graph"] = {{"n", graph.n},         {"lo", graph.lo},         {"hi", graph.hi},
                {"nodes", graph.nodes}, {"values", graph.values}, {"slope", graph.slope}};
  j["window"] = {{"n", window.n}, {"lo", vec_json(window.lo, n)}, {"side", window.side}, {"max_level", window.max_level}};
  j["whitney"] = cubes_json(whitney, n);
  j["residual"] = cubes_json(residual, n);
  j["in_I0"] = in_I0;
  j["e0"] = e0;
  nlohmann::json lab = nlohmann::json::array();
  for (auto c : labels) lab.push_back(point_class_name(c));
  j["labels"] = lab;
  j["h"] = h;
  j["stats"] = stats.to_json();
  j["diagnostics"] = diagnostics;
  return j;
}

CoronaResult CoronaResult::from_json(const nlohmann::json& j) {
  CoronaResult r;
  r.dim = j.at("dim").get<int>();
  r.base_ball.center = json_vec(j.at("base_ball").at("center"));
  r.base_ball.radius = j.at("base_ball").at("radius").get<double>();
  r.L0.dim = r.dim;
  r.L0.origin = json_vec(j.at("L0").at("origin"));
  r.L0.normal = json_vec(j.at("L0").at("normal"));
  r.L0.tangent[0] = json_vec(j.at("L0").at("tangent")[0]);
  r.L0.tangent[1] = json_vec(j.at("L0").at("tangent")[1]);
  r.params = CoronaParams::from_json(j.at("params"));
  const auto& g = j.at("radius_grid");
  r.grid.radii = g.at("radii").get<std::vector<double>>();
  r.grid.requested_top = g.at("requested_top").get<double>();
  r.grid.top = g.at("top").get<double>();
  r.grid.clipped = g.at("clipped").get<bool>();
  r.grid.factor = g.at("factor").get<double>();
  const auto& gr = j.at("graph");
  r.graph.n = gr.at("n").get<int>();
  r.graph.lo = gr.at("lo").get<double>();
  r.graph.hi = gr.at("hi").get<double>();
  r.graph.nodes = gr.at("nodes").get<int>();
  r.graph.values = gr.at("values").get<std::vector<double>>();
  r.graph.slope = gr.at("slope").get<double>();
  const auto& w = j.at("window");
  r.window.n = w.at("n").get<int>();
  r.window.lo = json_vec(w.at("lo"));
  r.window.side = w.at("side").get<double>();
  r.window.max_level = w.at("max_level").get<int>();
  r.whitney = json_cubes(j.at("whitney"));
  r.residual = json_cubes(j.at("residual"));
  r.in_I0 = j.at("in_I0").get<std::vector<std::uint8_t>>();
  r.e0 = j.at("e0").get<std::vector<std::size_t>>();
  for (const auto& s : j.at("labels")) r.labels.push_back(parse_point_class(s.get<std::string>()));
  r.h = j.at("h").get<std::vector<double>>();
  const auto& st = j.at("stats");
  r.stats.mu_E0 = st.at("mu_E0").get<double>();
  r.stats.mu_Z = st.at("mu_Z").get<double>();
  r.stats.mu_LD = st.at("mu_LD").get<double>();
  r.stats.mu_BA = st.at("mu_BA").get<double>();
  r.stats.max_grad = st.at("max_grad").get<double>();
  r.diagnostics = j.at("diagnostics");
  return r;
}

// ---------------------------------------------------------------------------

namespace {

// Points of E inside a ball: x-sorted range scan in the plane, kd-tree in space.
class BallGather {
 public:
  BallGather(int dim, const std::vector<Vec3>& E) : dim_(dim) {
    if (dim == 2) {
      sorted_ = E;
      std::sort(sorted_.begin(), sorted_.end(), [](const Vec3& a, const Vec3& b) {
        return a.x < b.x || (a.x == b.x && (a.y < b.y || (a.y == b.y && a.z < b.z)));
      });
      xs_.resize(sorted_.size());
      for (std::size_t i = 0; i < sorted_.size(); ++i) xs_[i] = sorted_[i].x;
    } else {
      raw_ = E;
      index_ = PointIndex(dim, E, std::vector<double>(E.size(), 0.0));
    }
  }

  void gather(const Ball& B, std::vector<Vec3>& out) const {
    out.clear();
    const double r2 = B.radius * B.radius;
    if (dim_ == 2) {
      auto a = std::lower_bound(xs_.begin(), xs_.end(), B.center.x - B.radius) - xs_.begin();
      auto b = std::upper_bound(xs_.begin(), xs_.end(), B.center.x + B.radius) - xs_.begin();
      for (auto i = a; i < b; ++i) {
        Vec3 d = sorted_[i] - B.center;
        if (dot(d, d) <= r2) out.push_back(sorted_[i]);
      }
      return;
    }
    std::vector<std::size_t> idx;
    index_.collect(B.center, B.radius, idx);
    for (auto i : idx) out.push_back(raw_[i]);
  }

 private:
  int dim_;
  std::vector<Vec3> sorted_, raw_;
  std::vector<double> xs_;
  PointIndex index_;
};

}  // namespace

CoronaResult corona(const WeightedCloud& cloud, const Ball& B0, const CoronaParams& p) {
  const int dim = cloud.dim, n = dim - 1;
  const double r0 = B0.radius;
  const Vec3 x0 = B0.center;
  if (!(r0 > 0) || !std::isfinite(r0)) throw PreconditionError("corona: base ball radius must be positive");
  if (!(p.theta > 0 && p.alpha > 0 && p.eps > 0 && p.c0 > 0 && p.grid_factor > 1))
    throw PreconditionError("corona: invalid parameters");
  const auto& E = cloud.points;

  CoronaResult res;
  res.dim = dim;
  res.base_ball = B0;
  res.params = p;

  std::vector<double> w0(E.size(), 0.0);
  std::vector<Vec3> E0pts;
  for (std::size_t i = 0; i < E.size(); ++i)
    if (dist(E[i], x0) <= r0) {
      res.e0.push_back(i);
      w0[i] = cloud.weights[i];
      E0pts.push_back(E[i]);
    }
  double mu0 = 0;
  for (auto i : res.e0) mu0 += cloud.weights[i];
  if (!(mu0 >= p.c0 * pow_n(r0, n)))
    throw DensityTooLow("corona: mu(B0) = " + fmt_double(mu0) + " < c0 r0^n = " + fmt_double(p.c0 * pow_n(r0, n)));

  nlohmann::json timings = nlohmann::json::object();
  auto clock0 = std::chrono::steady_clock::now();
  auto lap = [&](const char* what) {
    auto now = std::chrono::steady_clock::now();
    timings[what] = std::chrono::duration<double, std::milli>(now - clock0).count();
    clock0 = now;
  };

  const PointIndex dens_index(dim, E, w0);
  const BallGather gather(dim, E);
  auto fit_ball = [&](const Ball& B, const Vec3* ref, BetaFit& f) {
    thread_local std::vector<Vec3> buf;
    gather.gather(B, buf);
    if (buf.empty()) return false;
    f = beta_fit(dim, buf, B, ref);
    return true;
  };

  BetaFit fit0;
  fit_ball(B0, nullptr, fit0);
  res.L0 = Frame::make(dim, x0, fit0.plane.normal);
  const Frame& F = res.L0;
  const Vec3 nu0 = F.normal;
  BetaFit fit20;
  fit_ball({x0, 20 * r0}, &nu0, fit20);

  res.grid = StopGrid::make(r0, cloud.diameter_bound(), p.grid_factor, p.top_multiple, p.bottom_divisor);
  const StopGrid& grid = res.grid;
  const int K = static_cast<int>(grid.radii.size());

  GoodTester tester;
  tester.theta = p.theta;
  tester.alpha = p.alpha;
  tester.ref = nu0;
  tester.density = [&](const Ball& B) { return dens_index.mass(B.center, B.radius) / pow_n(B.radius, n); };
  tester.fit = [&](const Ball& B, BetaFit& f) { return fit_ball(B, &nu0, f); };

  const std::size_t m = res.e0.size();
  std::vector<StopInfo> stops(m);
  std::vector<std::vector<BetaFit>> fits(m);
  std::vector<double> contain(m);
  kernels::for_index(m, [&](std::size_t a) {
    const Vec3& x = E0pts[a];
    contain[a] = dist(x, x0) + r0;
    stops[a] = stopping_height(tester, x, contain[a], grid, &fits[a]);
  });

  lap("stopping");
  res.labels.resize(m);
  res.h.resize(m);
  double beta_good_max = 0;
  for (std::size_t a = 0; a < m; ++a) {
    res.labels[a] = classify_point(stops[a], p.theta);
    res.h[a] = stops[a].h;
    const double w = cloud.weights[res.e0[a]];
    res.stats.mu_E0 += w;
    (res.labels[a] == PointClass::Z ? res.stats.mu_Z : res.labels[a] == PointClass::LD ? res.stats.mu_LD
                                                                                        : res.stats.mu_BA) += w;
    for (int k = 0; k < K; ++k)
      if (fits[a][k].count) beta_good_max = std::max(beta_good_max, fits[a][k].value);
  }

  // Balls containing B0 are taken as good; test a sample of them literally.
  std::size_t hyp_checked = 0, hyp_failed = 0;
  {
    const std::size_t stride = std::max<std::size_t>(1, m / 64);
    std::vector<std::size_t> picks;
    for (std::size_t a = 0; a < m; a += stride) picks.push_back(a);
    std::vector<double> bad(picks.size());
    kernels::map_index(picks.size(), [&](std::size_t t) {
      const std::size_t a = picks[t];
      int k = K - 1;
      while (k > 0 && grid.radii[k] < contain[a]) --k;
      const Ball B{E0pts[a], grid.radii[k]};
      BetaFit f;
      bool ok = tester.density(B) >= p.theta && fit_ball(B, &nu0, f) && plane_angle(f.plane.normal, nu0) <= p.alpha;
      return ok ? 0.0 : 1.0;
    }, bad);
    hyp_checked = picks.size();
    for (double b : bad) hyp_failed += b > 0;
  }

  lap("containing");
  // d and D through cone fields over the very good balls of least radius.
  std::vector<Vec3> U(m);
  for (std::size_t a = 0; a < m; ++a) U[a] = F.to_u(E0pts[a]);
  const ConeField dfield(dim, E0pts, res.h);
  const ConeField Dfield(n, U, res.h);

  // Planes of very good balls that were not tested during the scan.
  std::map<std::pair<std::size_t, int>, BetaFit> extra;
  auto plane_of = [&](std::size_t a, int k) -> const BetaFit& {
    if (fits[a][k].count) return fits[a][k];
    return extra.at({a, k});
  };
  auto need = [&](std::size_t a, int k) {
    if (!fits[a][k].count) extra.emplace(std::make_pair(a, k), BetaFit{});
  };
  for (std::size_t a = 0; a < m; ++a) need(a, stops[a].h_index);

  lap("fields");
  // Whitney decomposition of the window on L0.
  WhitneyWindow W;
  W.n = n;
  W.side = std::ldexp(1.0, static_cast<int>(std::ceil(std::log2(32 * r0))));
  for (int k = 0; k < n; ++k) W.lo[k] = -W.side / 2;
  const double l_min = grid.radii.back() / std::ldexp(1.0, p.whitney_extra_levels);
  W.max_level = std::clamp(static_cast<int>(std::ceil(std::log2(W.side / l_min))), 0, 28);
  res.window = W;
  auto D_box = [&](const Box& b) { return Dfield.min_box(b.lo, b.hi).first; };
  auto D_point = [&](const Vec3& u) { return Dfield(u); };
  WhitneyFamily fam = whitney(W, D_box, D_point);

  lap("whitney");
  const std::size_t nc = fam.cubes.size();
  res.in_I0.assign(nc, 0);
  std::vector<std::pair<std::size_t, int>> cube_ball(nc, {0, -1});
  for (std::size_t i = 0; i < nc; ++i) {
    Box b = W.box(fam.cubes[i]);
    if (point_box({0, 0, 0}, b.lo, b.hi, n) >= 10 * r0) continue;
    res.in_I0[i] = 1;
    auto [Dv, z] = Dfield.min_box(b.lo, b.hi);
    const double target = std::max(res.h[z], Dv);
    int k = 0;
    while (k + 1 < K && grid.radii[k + 1] >= target) ++k;
    k = std::min(k, stops[z].h_index);
    cube_ball[i] = {static_cast<std::size_t>(z), k};
    need(z, k);
  }
  {
    std::vector<std::pair<std::size_t, int>> keys;
    for (auto& e : extra) keys.push_back(e.first);
    std::vector<BetaFit> got(keys.size());
    kernels::for_index(keys.size(), [&](std::size_t t) {
      fit_ball({E0pts[keys[t].first], grid.radii[keys[t].second]}, &nu0, got[t]);
    });
    for (std::size_t t = 0; t < keys.size(); ++t) extra[keys[t]] = got[t];
  }

  lap("planes");
  std::size_t vertical = 0;
  double map_slope = 0, map_angle = 0;
  std::vector<Affine> maps(nc);
  for (std::size_t i = 0; i < nc; ++i) {
    if (!res.in_I0[i]) continue;
    const BetaFit& f = plane_of(cube_ball[i].first, cube_ball[i].second);
    if (!plane_to_affine(F, f.plane, maps[i])) {
      maps[i] = Affine{};
      ++vertical;
      continue;
    }
    map_slope = std::max(map_slope, std::hypot(maps[i].g[0], maps[i].g[1]));
    map_angle = std::max(map_angle, plane_angle(f.plane.normal, nu0));
  }
  std::vector<Affine> home(m);
  for (std::size_t a = 0; a < m; ++a) {
    Affine g;
    if (!plane_to_affine(F, plane_of(a, stops[a].h_index).plane, g)) g = Affine{};
    // Pass through the point itself; keep the tilt of its own plane.
    home[a].g = g.g;
    home[a].c = F.to_v(E0pts[a]) - g.g[0] * U[a][0] - g.g[1] * U[a][1];
  }
  auto residual_A = [&](const Vec3& u) {
    int z = Dfield.min_point(u).second;
    return z < 0 ? 0.0 : home[z](u);
  };
  const ExtendedGraph A(fam, maps, residual_A);

  // Graph on a grid of [-12 r0, 12 r0]^n.
  GraphGrid& G = res.graph;
  G.n = n;
  G.lo = -12 * r0;
  G.hi = 12 * r0;
  G.nodes = n == 1 ? p.graph_nodes : p.graph_nodes_2d;
  const std::size_t total_nodes = n == 1 ? G.nodes : static_cast<std::size_t>(G.nodes) * G.nodes;
  G.values.assign(total_nodes, 0.0);
  kernels::for_index(total_nodes, [&](std::size_t q) {
    Vec3 u;
    if (n == 1) {
      u[0] = G.coord(static_cast<int>(q));
    } else {
      u[0] = G.coord(static_cast<int>(q / G.nodes));
      u[1] = G.coord(static_cast<int>(q % G.nodes));
    }
    G.values[q] = A(u);
  });
  lap("graph");
  const double hstep = (G.hi - G.lo) / (G.nodes - 1);
  double slope = 0;
  if (n == 1) {
    for (int i = 0; i + 1 < G.nodes; ++i) slope = std::max(slope, std::fabs(G.at(i + 1) - G.at(i)) / hstep);
  } else {
    for (int i = 0; i + 1 < G.nodes; ++i)
      for (int j = 0; j + 1 < G.nodes; ++j) {
        double g1x = (G.at(i + 1, j) - G.at(i, j)) / hstep, g1y = (G.at(i + 1, j + 1) - G.at(i + 1, j)) / hstep;
        double g2y = (G.at(i, j + 1) - G.at(i, j)) / hstep, g2x = (G.at(i + 1, j + 1) - G.at(i, j + 1)) / hstep;
        slope = std::max({slope, std::hypot(g1x, g1y), std::hypot(g2x, g2y)});
      }
  }
  G.slope = slope;
  res.stats.max_grad = slope;

  Rng rng(p.seed);
  auto random_u = [&](double lo, double hi) {
    Vec3 u;
    for (int k = 0; k < n; ++k) u[k] = rng.uniform(lo, hi);
    return u;
  };

  // Support: A vanishes outside [-12 r0, 12 r0]^n.
  double support_max = 0;
  {
    std::vector<Vec3> probes;
    while (probes.size() < 2000) {
      Vec3 u = random_u(W.lo[0], W.lo[0] + W.side);
      bool outside = false;
      for (int k = 0; k < n; ++k) outside |= std::fabs(u[k]) > 12 * r0;
      if (outside) probes.push_back(u);
    }
    std::vector<double> vals;
    kernels::map_index(probes.size(), [&](std::size_t t) { return std::fabs(A(probes[t])); }, vals);
    for (double v : vals) support_max = std::max(support_max, v);
  }
  lap("support");
  std::size_t i0_outside = 0;
  for (std::size_t i = 0; i < nc; ++i) {
    if (!res.in_I0[i]) continue;
    Box b = W.box(fam.cubes[i], 3);
    for (int k = 0; k < n; ++k) i0_outside += (b.lo[k] < -12 * r0 || b.hi[k] > 12 * r0) ? 1 : 0;
  }

  // Partition of unity: sum and gradient bounds on cube points.
  double pou_dev = 0, pou_grad = 0;
  std::size_t pou_points = 0;
  {
    std::vector<Vec3> probes;
    for (int t = 0; t < 4000; ++t) probes.push_back(random_u(G.lo, G.hi));
    for (std::size_t a = 0; a < m; ++a) probes.push_back(U[a]);
    std::vector<double> dev(probes.size(), -1.0), grad(probes.size(), 0.0);
    kernels::for_index(probes.size(), [&](std::size_t t) {
      auto [found, code] = fam.locate(probes[t]);
      if (!found || code < 0) return;
      auto phis = A.pou().eval(probes[t]);
      double s = 0;
      for (auto& e : phis) s += e.second;
      dev[t] = std::fabs(s - 1);
      if (t >= 500) return;
      for (auto [i, phi] : phis) {
        const double l = W.cube_side(fam.cubes[i].level), step = 1e-4 * l;
        double g2 = 0;
        for (int k = 0; k < n; ++k) {
          Vec3 a = probes[t], b = probes[t];
          a[k] += step;
          b[k] -= step;
          auto pick = [&](const Vec3& q) {
            for (auto& e : A.pou().eval(q))
              if (e.first == i) return e.second;
            return 0.0;
          };
          double d = (pick(a) - pick(b)) / (2 * step);
          g2 += d * d;
        }
        grad[t] = std::max(grad[t], std::sqrt(g2) * l);
      }
    });
    for (std::size_t t = 0; t < probes.size(); ++t)
      if (dev[t] >= 0) {
        ++pou_points;
        pou_dev = std::max(pou_dev, dev[t]);
        pou_grad = std::max(pou_grad, grad[t]);
      }
  }

  lap("pou");
  // |Pi_perp x - Pi_perp y| <= 6 alpha |Pi x - Pi y| + 4 d(x) + 4 d(y).
  std::size_t lip_viol = 0;
  double lip_worst = 0;
  {
    const std::size_t P = static_cast<std::size_t>(std::max(0, p.lip_pairs));
    std::vector<std::pair<Vec3, Vec3>> pairs;
    for (std::size_t t = 0; t < P; ++t) {
      auto draw = [&](bool from_e0) {
        if (from_e0 && m > 0) return E0pts[rng.index(m)];
        return F.lift(random_u(-12 * r0, 12 * r0), rng.uniform(-2 * r0, 2 * r0));
      };
      pairs.emplace_back(draw(t % 4 != 3), draw(t % 4 < 2));
    }
    std::vector<double> ratio;
    kernels::map_index(pairs.size(), [&](std::size_t t) {
      const Vec3 &x = pairs[t].first, &y = pairs[t].second;
      const double lhs = std::fabs(F.to_v(x) - F.to_v(y));
      const double rhs = 6 * p.alpha * dist(F.to_u(x), F.to_u(y)) + 4 * dfield(x) + 4 * dfield(y);
      if (lhs <= rhs + 1e-12 * r0) return lhs > 0 ? std::min(1.0, lhs / std::max(rhs, 1e-300)) : 0.0;
      return lhs / std::max(rhs, 1e-300);
    }, ratio);
    for (double r : ratio) {
      lip_worst = std::max(lip_worst, r);
      lip_viol += r > 1;
    }
  }

  lap("piperp");
  // dist(x, graph) against eps d(x) on E0 (vertical gap bounds the distance).
  double dist_const = 0, z_gap = 0;
  {
    std::vector<double> gap;
    kernels::map_index(m, [&](std::size_t a) { return std::fabs(F.to_v(E0pts[a]) - A(U[a])); }, gap);
    for (std::size_t a = 0; a < m; ++a) {
      const double d = dfield(E0pts[a]);
      if (res.labels[a] == PointClass::Z) z_gap = std::max(z_gap, gap[a]);
      if (d > 0) dist_const = std::max(dist_const, gap[a] / (p.eps * d));
    }
  }

  lap("dist_to_graph");
  WhitneyCheck wc = check_whitney(fam, D_box, D_point);
  lap("whitney_check");
  res.whitney = fam.cubes;
  res.residual = fam.residual;

  auto& dg = res.diagnostics;
  dg["beta_B0"] = fit0.value;
  dg["beta_20B0"] = fit20.value;
  dg["beta_good_max"] = beta_good_max;
  dg["radius_clip"] = {{"requested_top", grid.requested_top}, {"top", grid.top}, {"clipped", grid.clipped},
                       {"scene_diameter_bound", cloud.diameter_bound()}};
  dg["containing_balls"] = {{"checked", hyp_checked}, {"failed_literal_test", hyp_failed}};
  dg["whitney"] = wc.to_json();
  dg["whitney_counts"] = {{"cubes", nc}, {"residual", fam.residual.size()},
                          {"I0", std::count(res.in_I0.begin(), res.in_I0.end(), 1)},
                          {"finest_side", l_min}};
  dg["maps"] = {{"vertical", vertical}, {"max_slope", map_slope}, {"max_angle", map_angle}};
  dg["support"] = {{"max_abs_outside", support_max}, {"I0_cubes_leaving_12r0", i0_outside}};
  dg["partition_of_unity"] = {{"points", pou_points}, {"max_sum_deviation", pou_dev}, {"max_scaled_gradient", pou_grad}};
  dg["piperp_lip"] = {{"pairs", p.lip_pairs}, {"violations", lip_viol}, {"worst_ratio", lip_worst}};
  dg["dist_to_graph"] = {{"constant", dist_const}, {"max_gap_on_Z", z_gap}};
  res.timings_ms = timings;
  return res;
}

// ---------------------------------------------------------------------------

double interval_measure(const std::vector<std::pair<double, double>>& G, double a, double b) {
  std::vector<std::pair<double, double>> v;
  for (auto [x, y] : G) {
    x = std::max(x, a);
    y = std::min(y, b);
    if (y > x) v.emplace_back(x, y);
  }
  std::sort(v.begin(), v.end());
  double s = 0, cur_a = 0, cur_b = -kInf;
  for (auto [x, y] : v) {
    if (x > cur_b) {
      if (cur_b > cur_a) s += cur_b - cur_a;
      cur_a = x;
      cur_b = y;
    } else {
      cur_b = std::max(cur_b, y);
    }
  }
  if (cur_b > cur_a) s += cur_b - cur_a;
  return s;
}

DyadicInterval dense_dyadic_interval(double a, double b, std::vector<std::pair<double, double>> G, double c2,
                                     double theta, int max_depth) {
  if (!(b > a)) throw PreconditionError("dense_dyadic_interval: empty interval");
  if (!(c2 > 0 && c2 <= 1)) throw PreconditionError("dense_dyadic_interval: c2 must lie in (0, 1]");
  if (!(theta > 0 && theta < 0.5)) throw PreconditionError("dense_dyadic_interval: theta must lie in (0, 1/2)");
  if (interval_measure(G, a, b) < c2 * (b - a))
    throw PreconditionError("dense_dyadic_interval: |G| < c2 |I|");
  const int N = static_cast<int>(std::ceil(-std::log2(theta)));
  auto low = [&](double x, double y) { return interval_measure(G, x, y) <= c2 / 2 * (y - x); };

  std::vector<DyadicInterval> top{{a, b, 0}};
  while (!top.empty()) {
    std::vector<DyadicInterval> next;
    for (const auto& J : top) {
      // ld[k][i]: the i-th generation-k subinterval of J has low density
      std::vector<std::vector<char>> ld(N + 1);
      bool good = true;
      for (int k = 0; k <= N; ++k) {
        const int cnt = 1 << k;
        ld[k].resize(cnt);
        const double len = (J.b - J.a) / cnt;
        for (int i = 0; i < cnt; ++i) {
          ld[k][i] = low(J.a + i * len, J.a + (i + 1) * len);
          good = good && !ld[k][i];
        }
      }
      if (good) return J;
      if (J.depth + N > max_depth) continue;
      const int cnt = 1 << N;
      const double len = (J.b - J.a) / cnt;
      for (int i = 0; i < cnt; ++i) {
        bool covered = false;
        for (int k = 0; k <= N && !covered; ++k) covered = ld[k][i >> (N - k)];
        if (!covered) next.push_back({J.a + i * len, J.a + (i + 1) * len, J.depth + N});
      }
    }
    top.swap(next);
  }
  throw PreconditionError("dense_dyadic_interval: no dense interval within the depth limit");
}

}  // namespace eps2
