#include "eps2/capacity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "eps2/errors.hpp"
#include "eps2/kernels.hpp"
#include "eps2/numerics.hpp"
#include "eps2/sphere.hpp"

namespace eps2 {

namespace {

double dot_n(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

struct Minimized {
  std::vector<double> m;
  double energy = 0;
  int iterations = 0;
  double residual = 0;
  bool monotone = true;
};

// min m^T K m over the simplex
Minimized minimize_energy(const std::vector<double>& K, std::size_t n, const CapacityOptions& o) {
  Minimized out;
  std::vector<double> m(n, 1.0 / static_cast<double>(n)), y, mn(n), yn, g(n);
  kernels::matvec(K, m, y);
  double f = dot_n(m, y);
  double rowmax = 0;
  for (std::size_t i = 0; i < n; ++i) {
    double r = 0;
    for (std::size_t j = 0; j < n; ++j) r += std::fabs(K[i * n + j]);
    rowmax = std::max(rowmax, r);
  }
  double t = rowmax > 0 ? 0.5 / rowmax : 1.0;
  int quiet = 0, it = 0;
  for (; it < o.max_iter && n > 1; ++it) {
    for (std::size_t i = 0; i < n; ++i) g[i] = 2 * y[i];
    double t_try = t, fn = f, gd = 0;
    bool moved = false;
    for (int bt = 0; bt < 60; ++bt) {
      for (std::size_t i = 0; i < n; ++i) mn[i] = m[i] - t_try * g[i];
      project_simplex(mn);
      gd = 0;
      double dmax = 0;
      for (std::size_t i = 0; i < n; ++i) {
        gd += g[i] * (mn[i] - m[i]);
        dmax = std::max(dmax, std::fabs(mn[i] - m[i]));
      }
      if (dmax == 0) break;
      kernels::matvec(K, mn, yn);
      fn = dot_n(mn, yn);
      if (fn <= f + 1e-4 * gd) {
        moved = true;
        break;
      }
      t_try *= 0.5;
    }
    if (!moved) break;
    if (fn > f) out.monotone = false;
    // Barzilai-Borwein step for the next iterate
    double ss = 0, sy = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double ds = mn[i] - m[i], dy = 2 * (yn[i] - y[i]);
      ss += ds * ds;
      sy += ds * dy;
    }
    t = sy > 0 ? ss / sy : 2 * t_try;
    const double rel = (f - fn) / std::max(std::fabs(f), 1e-300);
    m.swap(mn);
    y.swap(yn);
    f = fn;
    quiet = rel < o.rel_tol ? quiet + 1 : 0;
    if (quiet >= 2) {
      ++it;
      break;
    }
  }
  // Convexity: inf f >= 2 min_i (Km)_i - f.
  const double ymin = *std::min_element(y.begin(), y.end());
  out.residual = std::max(0.0, 2 * (f - ymin));
  out.m = std::move(m);
  out.energy = f;
  out.iterations = it;
  return out;
}

CapacityEstimate run_capacity(const std::vector<Vec3>& K, double s, const CapacityOptions& o) {
  CapacityEstimate c;
  c.s = s;
  if (K.empty()) throw PreconditionError("capacity: empty net");
  c.spacing = net_spacing(K);
  c.delta = o.delta > 0 ? o.delta : c.spacing / 2;
  if (!(c.delta > 0)) throw PreconditionError("capacity: truncation scale must be positive (single point needs delta)");
  std::vector<double> M;
  kernels::riesz_matrix(K, s, c.delta, M);
  Minimized r = minimize_energy(M, K.size(), o);
  c.masses = std::move(r.m);
  c.energy = r.energy;
  c.iterations = r.iterations;
  c.residual = r.residual;
  c.monotone = r.monotone;
  c.diverged = !r.monotone || !std::isfinite(r.energy);
  DiscreteMeasure mu{K, c.masses, c.delta};
  c.parts = riesz_energy(mu, s);
  return c;
}

}  // namespace

Energy riesz_energy(const DiscreteMeasure& mu, double s) {
  const std::size_t n = mu.support.size();
  if (mu.masses.size() != n) throw PreconditionError("riesz_energy: masses and support differ in length");
  std::vector<double> row(n);
  kernels::map_index(n, [&](std::size_t i) {
    double acc = 0;
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) acc += mu.masses[j] * riesz_kernel(dist(mu.support[i], mu.support[j]), s, mu.delta);
    return mu.masses[i] * acc;
  }, row);
  Energy e;
  e.cross = kernels::ordered_sum(row);
  for (std::size_t i = 0; i < n; ++i) e.self += mu.masses[i] * mu.masses[i] * riesz_kernel(0, s, mu.delta);
  e.total = e.self + e.cross;
  return e;
}

double net_spacing(const std::vector<Vec3>& K) {
  const std::size_t n = K.size();
  if (n < 2) return 0;
  std::vector<double> nn;
  kernels::map_index(n, [&](std::size_t i) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) best = std::min(best, dist(K[i], K[j]));
    return best;
  }, nn);
  std::nth_element(nn.begin(), nn.begin() + n / 2, nn.end());
  return nn[n / 2];
}

void project_simplex(std::vector<double>& v) {
  std::vector<double> u(v);
  std::sort(u.begin(), u.end(), std::greater<>());
  double cum = 0, tau = 0;
  for (std::size_t k = 0; k < u.size(); ++k) {
    cum += u[k];
    const double t = (cum - 1) / static_cast<double>(k + 1);
    if (u[k] - t > 0) tau = t;
  }
  for (double& x : v) x = std::max(0.0, x - tau);
}

CapacityEstimate capacity_s(const std::vector<Vec3>& K, int dim, double s, const CapacityOptions& o) {
  if (!(s > 0 && s < dim)) throw PreconditionError("capacity_s: need 0 < s < dim");
  CapacityEstimate c = run_capacity(K, s, o);
  c.value = 1.0 / c.energy;
  return c;
}

CapacityEstimate capacity_log(const std::vector<Vec3>& K, const CapacityOptions& o) {
  CapacityEstimate c = run_capacity(K, 0, o);
  c.value = std::exp(-kTwoPi * c.energy);
  return c;
}

nlohmann::json CapacityEstimate::to_json() const {
  return {{"s", s},
          {"value", value},
          {"energy", energy},
          {"self_energy", parts.self},
          {"cross_energy", parts.cross},
          {"iterations", iterations},
          {"residual", residual},
          {"delta", delta},
          {"spacing", spacing},
          {"monotone", monotone},
          {"diverged", diverged},
          {"points", masses.size()}};
}

// ---- Hausdorff content ----------------------------------------------------------

Cube bounding_cube(const std::vector<Vec3>& K, int dim, double pad) {
  Cube c;
  if (K.empty()) return c;
  Vec3 lo = K[0], hi = K[0];
  for (const auto& p : K)
    for (int k = 0; k < dim; ++k) {
      lo[k] = std::min(lo[k], p[k]);
      hi[k] = std::max(hi[k], p[k]);
    }
  double side = 0;
  for (int k = 0; k < dim; ++k) side = std::max(side, hi[k] - lo[k]);
  side += 2 * pad;
  for (int k = 0; k < dim; ++k) c.lo[k] = lo[k] - pad;
  c.side = side;
  return c;
}

namespace {

struct ContentTree {
  const std::vector<Vec3>& K;
  int dim;
  double s, res;
  int depth;
  std::vector<std::size_t> perm;

  // each net point stands for a blob of diameter `res`
  double leaf_cost(std::size_t b, std::size_t e) const {
    Vec3 lo = K[perm[b]], hi = lo;
    for (std::size_t t = b + 1; t < e; ++t)
      for (int k = 0; k < dim; ++k) {
        lo[k] = std::min(lo[k], K[perm[t]][k]);
        hi[k] = std::max(hi[k], K[perm[t]][k]);
      }
    const double diag = dist(lo, hi);
    return std::pow(diag + res, s);
  }

  double solve(std::size_t b, std::size_t e, const Cube& q, int level) {
    const double leaf = leaf_cost(b, e);
    if (level == depth || leaf == 0) return leaf;
    const double h = q.side / 2;
    Vec3 mid = q.lo;
    for (int k = 0; k < dim; ++k) mid[k] += h;
    // children by bit k: coordinate k above the midpoint
    std::vector<std::size_t> bounds{b, e};
    for (int k = 0; k < dim; ++k) {
      std::vector<std::size_t> nb;
      for (std::size_t t = 0; t + 1 < bounds.size(); ++t) {
        auto it = std::stable_partition(perm.begin() + bounds[t], perm.begin() + bounds[t + 1],
                                        [&](std::size_t i) { return K[i][k] < mid[k]; });
        nb.push_back(bounds[t]);
        nb.push_back(static_cast<std::size_t>(it - perm.begin()));
      }
      nb.push_back(e);
      bounds = std::move(nb);
    }
    // bounds now holds 2^dim + 1 fenceposts; child c has bit k set when coordinate k is high.
    double sum = 0;
    const int nch = 1 << dim;
    for (int c = 0; c < nch && sum < leaf; ++c) {
      if (bounds[c] == bounds[c + 1]) continue;
      Cube ch{q.lo, h};
      // fencepost order: first partition (axis 0) is the most significant split
      for (int k = 0; k < dim; ++k)
        if ((c >> (dim - 1 - k)) & 1) ch.lo[k] += h;
      sum += solve(bounds[c], bounds[c + 1], ch, level + 1);
    }
    return std::min(leaf, sum);
  }
};

}  // namespace

double hausdorff_content(const std::vector<Vec3>& K, int dim, double s, const ContentOptions& o) {
  if (K.empty()) return 0;
  if (!(s >= 0)) throw PreconditionError("hausdorff_content: s must be >= 0");
  Cube root = o.root ? *o.root : bounding_cube(K, dim);
  if (root.side <= 0) root.side = std::max(o.resolution, 1e-300);
  ContentTree T{K, dim, s, o.resolution, std::max(0, o.depth), {}};
  T.perm.resize(K.size());
  std::iota(T.perm.begin(), T.perm.end(), 0);
  return T.solve(0, K.size(), root, 0);
}

ChoquetResult choquet_integral(const std::vector<Vec3>& A, const std::vector<double>& f, int dim, double s, double p,
                               int level_grid, const ContentOptions& o) {
  if (A.size() != f.size()) throw PreconditionError("choquet_integral: values and points differ in length");
  if (!(p > 0)) throw PreconditionError("choquet_integral: p must be positive");
  ChoquetResult out;
  std::vector<double> vals;
  for (double v : f) {
    if (v < 0 || !std::isfinite(v)) throw PreconditionError("choquet_integral: f must be finite and >= 0");
    if (v > 0) vals.push_back(v);
  }
  std::sort(vals.begin(), vals.end());
  vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
  if (vals.empty()) {
    out.exact = true;
    return out;
  }
  ContentOptions co = o;
  if (!co.root) co.root = bounding_cube(A, dim);
  // content of {f >= t} (closed) or {f > t} (open)
  auto content = [&](double t, bool closed) {
    std::vector<Vec3> sub;
    for (std::size_t i = 0; i < A.size(); ++i)
      if (closed ? f[i] >= t : f[i] > t) sub.push_back(A[i]);
    return hausdorff_content(sub, dim, s, co);
  };
  const std::size_t L = static_cast<std::size_t>(std::max(1, level_grid));
  if (vals.size() <= L) {
    double prev = 0, acc = 0;
    for (double v : vals) {
      acc += content(v, true) * (std::pow(v, p) - std::pow(prev, p));
      prev = v;
    }
    out.value = out.lower = out.upper = acc;
    out.levels = static_cast<int>(vals.size());
    out.exact = true;
    return out;
  }
  std::vector<double> t{0.0};
  for (std::size_t j = 1; j <= L; ++j) t.push_back(vals[(vals.size() - 1) * j / L]);
  std::vector<double> H(t.size());
  for (std::size_t j = 0; j < t.size(); ++j) H[j] = content(t[j], false);
  for (std::size_t j = 1; j < t.size(); ++j) {
    const double w = std::pow(t[j], p) - std::pow(t[j - 1], p);
    out.lower += H[j] * w;
    out.upper += H[j - 1] * w;
  }
  out.value = 0.5 * (out.lower + out.upper);
  out.levels = static_cast<int>(L);
  return out;
}

// ---- capacity density -------------------------------------------------------------

std::vector<Vec3> complement_net(const RegionPair& R, const Vec3& x, double r, const NetOptions& o, double* step) {
  const int dim = R.dim(), k = std::max(1, o.points_per_radius);
  const double h = r / k;
  if (step) *step = h;
  const int side = 2 * k + 1, nz = dim == 3 ? side : 1;
  auto id = [&](int i, int j, int l) { return (static_cast<std::size_t>(l) * side + j) * side + i; };
  std::vector<Vec3> grid(static_cast<std::size_t>(side) * side * nz);
  std::vector<std::uint8_t> inside(grid.size(), 0);
  for (int l = 0; l < nz; ++l)
    for (int j = 0; j < side; ++j)
      for (int i = 0; i < side; ++i) {
        Vec3 p{x.x + h * (i - k), x.y + h * (j - k), dim == 3 ? x.z + h * (l - k) : x.z};
        grid[id(i, j, l)] = p;
        inside[id(i, j, l)] = dist(p, x) <= r * (1 + 1e-12);
      }
  std::vector<Label> lab;
  kernels::classify_batch(R, grid, lab);
  std::vector<Vec3> net;
  for (std::size_t q = 0; q < grid.size(); ++q)
    if (inside[q] && lab[q] == Label::Free) net.push_back(grid[q]);

  // Plus-Minus edges: the segment leaves Omega+ cup Omega- somewhere.
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  for (int l = 0; l < nz; ++l)
    for (int j = 0; j < side; ++j)
      for (int i = 0; i < side; ++i) {
        const std::size_t a = id(i, j, l);
        if (!inside[a] || lab[a] == Label::Free) continue;
        std::size_t nb[3] = {i + 1 < side ? id(i + 1, j, l) : a, j + 1 < side ? id(i, j + 1, l) : a,
                             (dim == 3 && l + 1 < nz) ? id(i, j, l + 1) : a};
        for (std::size_t b : nb)
          if (b != a && inside[b] && lab[b] != Label::Free && lab[b] != lab[a]) edges.emplace_back(a, b);
      }
  std::vector<Vec3> found(edges.size());
  kernels::for_index(edges.size(), [&](std::size_t t) {
    Vec3 lo = grid[edges[t].first], hi = grid[edges[t].second];
    const Label la = lab[edges[t].first];
    for (int it = 0; it < o.bisection_steps; ++it) {
      Vec3 mid = 0.5 * (lo + hi);
      Label lm = R.classify(mid);
      if (lm == Label::Free) {
        lo = hi = mid;
        break;
      }
      (lm == la ? lo : hi) = mid;
    }
    found[t] = 0.5 * (lo + hi);
  });
  // one boundary point per cell of side h/2
  std::vector<std::array<long, 3>> keys;
  for (const auto& p : found) {
    std::array<long, 3> key{std::lround((p.x - x.x) * 2 / h), std::lround((p.y - x.y) * 2 / h),
                            std::lround((p.z - x.z) * 2 / h)};
    if (std::find(keys.begin(), keys.end(), key) != keys.end()) continue;
    keys.push_back(key);
    if (dist(p, x) <= r) net.push_back(p);
  }
  return net;
}

nlohmann::json CdcReport::to_json() const {
  return {{"holds", holds},       {"margin", margin},         {"capacity", capacity},
          {"threshold", threshold}, {"net_points", net_points}, {"residual", residual}};
}

CdcReport cdc_check(const RegionPair& R, const Vec3& x, double r, double s, double c, const NetOptions& o) {
  if (!(r > 0)) throw PreconditionError("cdc_check: r must be positive");
  double h = 0;
  auto net = complement_net(R, x, r, o, &h);
  CdcReport rep;
  rep.net_points = net.size();
  rep.threshold = s == 0 ? c * r : c * std::pow(r, s);
  if (!net.empty()) {
    CapacityOptions co;
    co.delta = h / 2;
    CapacityEstimate e = s == 0 ? capacity_log(net, co) : capacity_s(net, R.dim(), s, co);
    rep.capacity = e.value;
    rep.residual = e.residual;
  }
  rep.margin = rep.capacity - rep.threshold;
  rep.holds = rep.margin >= 0;
  return rep;
}

// ---- thick points -----------------------------------------------------------------------

std::size_t ThickSet::count() const {
  return static_cast<std::size_t>(std::count_if(points.begin(), points.end(), [](const ThickPoint& t) { return t.thick; }));
}

namespace {

// Equal-area spiral on the cap of S(x, r) around y with chordal radius rho.
std::vector<Vec3> cap_net(const Vec3& x, double r, const Vec3& y, double rho, int m, double* spacing) {
  const Vec3 w = normalized(y - x);
  Vec3 t1, t2;
  tangent_frame(w, t1, t2);
  const double phi = rho >= 2 * r ? kPi : 2 * std::asin(rho / (2 * r));
  const double one_minus = 1 - std::cos(phi);
  const double ga = kPi * (3.0 - std::sqrt(5.0));
  std::vector<Vec3> out{y};
  for (int k = 0; k < m; ++k) {
    const double ct = 1 - one_minus * (k + 0.5) / m, st = std::sqrt(std::max(0.0, 1 - ct * ct));
    const double ps = ga * k;
    out.push_back(x + r * (ct * w + st * (std::cos(ps) * t1 + std::sin(ps) * t2)));
  }
  *spacing = std::sqrt(kTwoPi * r * r * one_minus / m);
  return out;
}

struct SphereLabels {
  SphereSample S;
  std::vector<Label> lab;
};

SphereLabels label_sphere(const RegionPair& R, const Vec3& x, double r, int nodes) {
  SphereLabels L;
  L.S = sample_sphere(3, x, r, QuadMode::Lattice, nodes);
  kernels::classify_batch(R, L.S.nodes, L.lab);
  return L;
}

ThickSet thick_on(const RegionPair& R, const SphereLabels& L, const Vec3& x, double r, const HalfSpace& H, double c0,
                  double a, const ThickOptions& o) {
  ThickSet T;
  const std::size_t m = L.S.nodes.size();
  T.spacing = std::sqrt(4 * kPi * r * r / static_cast<double>(m));
  T.points.resize(m);
  const Vec3 nu = normalized(H.normal);
  kernels::for_index(m, [&](std::size_t i) {
    ThickPoint& tp = T.points[i];
    tp.y = L.S.nodes[i];
    const double v = dot(tp.y - x, nu);
    tp.side = v > 0 ? Label::Plus : v < 0 ? Label::Minus : Label::Free;
    tp.dist_plane = std::fabs(v);
    tp.candidate = tp.side != Label::Free && L.lab[i] != tp.side;
    if (!tp.candidate) return;
    double sp = 0;
    auto net = cap_net(x, r, tp.y, a * tp.dist_plane, o.local_nodes, &sp);
    std::vector<Vec3> keep;
    for (const auto& q : net)
      if (R.classify(q) != tp.side) keep.push_back(q);
    if (!keep.empty()) {
      CapacityOptions co;
      co.delta = sp / 2;
      tp.capacity = capacity_log(keep, co).value;
    }
    tp.margin = tp.capacity - c0 * tp.dist_plane;
    tp.thick = tp.margin >= 0;
  });
  return T;
}

double eps_s_from(const ThickSet& T, const Vec3& x, double r, double s, const EpsSConfig& cfg, std::size_t* thick) {
  std::vector<Vec3> A;
  std::vector<double> f;
  for (const auto& tp : T.points)
    if (tp.thick) {
      A.push_back(tp.y);
      f.push_back(std::pow(tp.dist_plane / r, 2 - s));
    }
  if (thick) *thick = A.size();
  if (A.empty()) return 0;
  ContentOptions co;
  co.depth = cfg.content_depth;
  co.resolution = T.spacing;
  co.root = Cube{x - Vec3{r, r, r}, 2 * r};
  return choquet_integral(A, f, 3, s, 1.0, cfg.level_grid, co).value / std::pow(r, s);
}

}  // namespace

ThickSet thick_points(const RegionPair& R, const Vec3& x, double r, const HalfSpace& H, double c0, double a,
                      const ThickOptions& o) {
  if (R.dim() != 3) throw PreconditionError("thick_points: implemented for dim = 3 only");
  if (!(a > 0 && a < 1) || !(c0 > 0)) throw PreconditionError("thick_points: need a in (0,1) and c0 > 0");
  return thick_on(R, label_sphere(R, x, r, o.sphere_nodes), x, r, H, c0, a, o);
}

double epsilon_s_given_H(const RegionPair& R, const Vec3& x, double r, double s, double c0, double a,
                         const HalfSpace& H, const EpsSConfig& cfg, std::size_t* thick) {
  if (!(s > 0 && s <= 2)) throw PreconditionError("epsilon_s: need 0 < s <= 2");
  ThickSet T = thick_points(R, x, r, H, c0, a, cfg.thick);
  return eps_s_from(T, x, r, s, cfg, thick);
}

EpsSResult epsilon_s(const RegionPair& R, const Vec3& x, double r, double s, double c0, double a, const EpsSConfig& cfg) {
  if (R.dim() != 3) throw PreconditionError("epsilon_s: implemented for dim = 3 only");
  if (!(s > 0 && s <= 2)) throw PreconditionError("epsilon_s: need 0 < s <= 2");
  if (!(a > 0 && a < 1) || !(c0 > 0)) throw PreconditionError("epsilon_s: need a in (0,1) and c0 > 0");
  const SphereLabels L = label_sphere(R, x, r, cfg.thick.sphere_nodes);
  EpsSResult best;
  best.value = std::numeric_limits<double>::infinity();
  auto eval = [&](const Vec3& nu) {
    ++best.probes;
    HalfSpace H{x, normalized(nu)};
    std::size_t th = 0;
    double v = eps_s_from(thick_on(R, L, x, r, H, c0, a, cfg.thick), x, r, s, cfg, &th);
    if (v < best.value) {
      best.value = v;
      best.H = H;
      best.thick = th;
    }
    return v;
  };
  const int D = std::max(2, cfg.directions);
  const double ga = kPi * (3.0 - std::sqrt(5.0));
  for (int i = 0; i < D; ++i) {
    const double z = 1 - 2 * (i + 0.5) / D, rr = std::sqrt(1 - z * z);
    eval({rr * std::cos(ga * i), rr * std::sin(ga * i), z});
  }
  // the coordinate axes catch aligned scenes exactly
  for (int k = 0; k < 3; ++k) {
    Vec3 e;
    e[k] = 1;
    eval(e);
    eval(-e);
  }
  if (cfg.nm_iters > 0 && best.value > 0) {
    const Vec3 n0 = best.H.normal;
    std::array<double, 2> p0{std::acos(std::clamp(n0.z, -1.0, 1.0)), std::atan2(n0.y, n0.x)};
    nelder_mead2([&](const std::array<double, 2>& p) {
      return eval({std::sin(p[0]) * std::cos(p[1]), std::sin(p[0]) * std::sin(p[1]), std::cos(p[0])});
    }, p0, 0.2, cfg.nm_iters);
  }
  return best;
}

// ---- slicing ------------------------------------------------------------------------------

nlohmann::json SlicingReport::to_json() const {
  nlohmann::json j{{"lhs", lhs},
                   {"rhs", rhs},
                   {"cap_K", cap_K},
                   {"measure_G", measure_G},
                   {"annulus_width", annulus_width},
                   {"radius_ok", radius_ok},
                   {"distance_ok", distance_ok},
                   {"dist_B_graph", dist_B_graph}};
  j["ratio"] = std::isfinite(ratio) ? nlohmann::json(ratio) : nlohmann::json(nullptr);
  return j;
}

SlicingReport slicing_check(const SlicingInput& in) {
  if (!(in.s > 1 && in.s < in.dim)) throw PreconditionError("slicing_check: need 1 < s < dim");
  if (in.G.size() != in.G_weights.size()) throw PreconditionError("slicing_check: G weights mismatch");
  SlicingReport rep;
  const int n = in.dim - 1;
  rep.radius_ok = in.B.radius <= in.r0 / 10;
  // distance from B to the graph over the window [-r0, r0]^n
  if (in.graph) {
    double best = std::numeric_limits<double>::infinity();
    const int S = n == 1 ? 4001 : 201;
    for (int i = 0; i < S; ++i)
      for (int j = 0; j < (n == 2 ? S : 1); ++j) {
        Vec3 u;
        u[0] = -in.r0 + 2 * in.r0 * i / (S - 1);
        if (n == 2) u[1] = -in.r0 + 2 * in.r0 * j / (S - 1);
        u[n] = in.graph(u);
        best = std::min(best, dist(u, in.B.center) - in.B.radius);
      }
    rep.dist_B_graph = std::max(0.0, best);
    rep.distance_ok = rep.dist_B_graph >= 100 * in.tau * in.r0;
  }
  for (double w : in.G_weights) rep.measure_G += w;
  if (in.K.empty()) {
    rep.ratio = std::numeric_limits<double>::quiet_NaN();
    return rep;
  }
  const double spacing = net_spacing(in.K);
  CapacityOptions co = in.cap;
  if (!(co.delta > 0)) co.delta = std::max(spacing, 1e-12 * in.r0) / 2;
  rep.annulus_width = std::max(spacing, 2 * co.delta);
  rep.cap_K = capacity_s(in.K, in.dim, in.s, co).value;
  rep.lhs = rep.cap_K * rep.measure_G * rep.measure_G / std::pow(in.r0, n);

  std::vector<double> per_z(in.G.size(), 0.0);
  const double w = rep.annulus_width;
  kernels::for_index(in.G.size(), [&](std::size_t a) {
    const Vec3& z = in.G[a];
    std::vector<double> d(in.K.size());
    double dmin = std::numeric_limits<double>::infinity(), dmax = 0;
    for (std::size_t i = 0; i < in.K.size(); ++i) {
      d[i] = dist(in.K[i], z);
      dmin = std::min(dmin, d[i]);
      dmax = std::max(dmax, d[i]);
    }
    std::vector<double> centres = in.radii;
    if (centres.empty())
      for (double rr = dmin; rr <= dmax + w; rr += w) centres.push_back(rr);
    double acc = 0;
    for (std::size_t b = 0; b < centres.size(); ++b) {
      const double lo = b == 0 ? centres[0] - w / 2 : 0.5 * (centres[b - 1] + centres[b]);
      const double hi = b + 1 == centres.size() ? centres[b] + w / 2 : 0.5 * (centres[b] + centres[b + 1]);
      std::vector<Vec3> slice;
      for (std::size_t i = 0; i < in.K.size(); ++i)
        if (std::fabs(d[i] - centres[b]) <= w / 2) slice.push_back(in.K[i]);
      if (slice.empty()) continue;
      CapacityOptions cs = co;
      acc += capacity_s(slice, in.dim, in.s - 1, cs).value * (hi - lo);
    }
    per_z[a] = in.G_weights[a] * acc;
  });
  rep.rhs = kernels::ordered_sum(per_z);
  rep.ratio = rep.rhs > 0 ? rep.lhs / rep.rhs : std::numeric_limits<double>::infinity();
  return rep;
}

}  // namespace eps2
