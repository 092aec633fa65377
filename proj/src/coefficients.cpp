#include "eps2/coefficients.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "eps2/errors.hpp"
#include "eps2/kernels.hpp"
#include "eps2/numerics.hpp"
#include "eps2/rng.hpp"

namespace eps2 {

namespace {

void circle_line(const Vec3& c, double t, const Vec3& n, double off, std::vector<double>& out) {
  double nn = std::hypot(n.x, n.y);
  if (nn == 0 || t <= 0) return;
  double k = (off - (c.x * n.x + c.y * n.y)) / (t * nn);
  if (k < -1.0 || k > 1.0) return;
  double phi = std::atan2(n.y, n.x), a = std::acos(k);
  out.push_back(phi + a);
  out.push_back(phi - a);
}

bool in_side(Label l, int side) { return side == 0 ? l == Label::Plus : l == Label::Minus; }

// Objective for a unit normal on sampled views (normalized units).
double eps_nodes(const SphereView& v, const Vec3& n) {
  double bad = 0;
  for (std::size_t k = 0; k < v.labels.size(); ++k) {
    double s = dot(v.q.nodes[k] - v.x, n);
    Label l = v.labels[k];
    if ((s > 0 && l != Label::Plus) || (s < 0 && l != Label::Minus)) bad += v.q.weights[k];
  }
  return bad * v.norm_factor();
}

// The cut angles are taken from whichever of +n, -n lies in the upper half
// plane, so H and its complement produce bitwise-identical sums.
double eps_arcs(const SphereView& v, const Vec3& n) {
  Vec3 c = (n.y > 0 || (n.y == 0 && n.x > 0)) ? n : -n;
  double psi = std::atan2(c.y, c.x);
  return v.arcs.measure_if({psi + 0.5 * kPi, psi - 0.5 * kPi}, [&n](double t, Label l) {
    return dot(polar(t), n) > 0 ? l != Label::Plus : l != Label::Minus;
  });
}

double eps_arcs(const SphereView& v, double phi) { return eps_arcs(v, polar(phi)); }

double eps_angle(const SphereView& v, double phi) { return v.exact ? eps_arcs(v, phi) : eps_nodes(v, polar(phi)); }

struct Best {
  double value = std::numeric_limits<double>::infinity();
  Vec3 normal{0, 1, 0};
  long probes = 0;
  void offer(double val, const Vec3& n) {
    ++probes;
    if (val < value) {
      value = val;
      normal = n;
    }
  }
};

// Exact minimum over angles for a planar node set: the objective is
// piecewise constant and changes only where phi -/+ pi/2 passes a node.
void sweep_nodes_2d(const SphereView& v, Best& best) {
  struct Ev {
    double at;
    double dw;
  };
  std::vector<Ev> ev;
  for (std::size_t k = 0; k < v.labels.size(); ++k) {
    Vec3 d = v.q.nodes[k] - v.x;
    double th = std::atan2(d.y, d.x);
    double w = v.q.weights[k] * v.norm_factor();
    if (v.labels[k] == Label::Plus) {
      ev.push_back({wrap_angle(th + 0.5 * kPi), w});
      ev.push_back({wrap_angle(th + 1.5 * kPi), -w});
    } else if (v.labels[k] == Label::Minus) {
      ev.push_back({wrap_angle(th - 0.5 * kPi), w});
      ev.push_back({wrap_angle(th + 0.5 * kPi), -w});
    }
  }
  if (ev.empty()) {
    best.offer(eps_nodes(v, polar(0.0)), polar(0.0));
    return;
  }
  std::sort(ev.begin(), ev.end(), [](const Ev& a, const Ev& b) { return a.at < b.at; });
  std::vector<double> cuts;
  for (const auto& e : ev)
    if (cuts.empty() || e.at > cuts.back()) cuts.push_back(e.at);
  // Evaluate each open segment at its midpoint; direct evaluation keeps the
  // reported value tied to a concrete normal.
  const std::size_t n = cuts.size();
  std::vector<double> mids(n);
  for (std::size_t k = 0; k < n; ++k) {
    double a = cuts[k], b = k + 1 < n ? cuts[k + 1] : cuts[0] + kTwoPi;
    mids[k] = 0.5 * (a + b);
  }
  double cur = eps_nodes(v, polar(mids[n - 1]));
  std::vector<std::pair<double, double>> seg;  // (value, mid)
  std::size_t e = 0;
  for (std::size_t k = 0; k < n; ++k) {
    while (e < ev.size() && ev[e].at <= cuts[k]) cur += ev[e++].dw;
    seg.emplace_back(cur, mids[k]);
  }
  // Running sums drift by rounding; re-evaluate the smallest directly.
  std::sort(seg.begin(), seg.end());
  for (std::size_t k = 0; k < std::min<std::size_t>(seg.size(), 8); ++k) {
    Vec3 nrm = polar(seg[k].second);
    best.offer(eps_nodes(v, nrm), nrm);
  }
}

std::vector<Vec3> fibonacci_dirs(int m) {
  std::vector<Vec3> d(m);
  const double ga = kPi * (3.0 - std::sqrt(5.0));
  for (int k = 0; k < m; ++k) {
    double z = 1.0 - (2.0 * k + 1.0) / m;
    double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
    d[k] = {rho * std::cos(ga * k), rho * std::sin(ga * k), z};
  }
  return d;
}

void search_3d(const SphereView& v, const SearchConfig& cfg, Best& best) {
  std::vector<Vec3> dirs = fibonacci_dirs(std::max(8, cfg.grid3d));
  std::vector<double> val;
  kernels::map_index(dirs.size(), [&](std::size_t i) { return eps_nodes(v, dirs[i]); }, val);
  for (std::size_t i = 0; i < dirs.size(); ++i) best.offer(val[i], dirs[i]);
  // Seed: weighted mean direction of Plus nodes minus that of Minus nodes.
  Vec3 md;
  for (std::size_t k = 0; k < v.labels.size(); ++k) {
    Vec3 d = v.q.nodes[k] - v.x;
    if (v.labels[k] == Label::Plus) md += d * v.q.weights[k];
    if (v.labels[k] == Label::Minus) md -= d * v.q.weights[k];
  }
  std::vector<Vec3> starts;
  if (norm(md) > 0) {
    starts.push_back(normalized(md));
    best.offer(eps_nodes(v, starts.back()), starts.back());
  }
  std::vector<std::size_t> order(dirs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return val[a] < val[b]; });
  for (std::size_t i = 0; i < std::min<std::size_t>(3, order.size()); ++i) starts.push_back(dirs[order[i]]);
  const double h = std::sqrt(4.0 * kPi / dirs.size());
  for (const Vec3& n0 : starts) {
    Vec3 t1, t2;
    tangent_frame(n0, t1, t2);
    auto chart = [&](const std::array<double, 2>& p) { return normalized(n0 + t1 * p[0] + t2 * p[1]); };
    auto [p, f] = nelder_mead2([&](const std::array<double, 2>& p) { return eps_nodes(v, chart(p)); }, {0, 0}, h,
                               cfg.nm_iters);
    best.offer(f, chart(p));
  }
  // Smooth surrogate: logistic loss of the labelled nodes against the
  // separating direction, annealed; only the exact objective is reported.
  Vec3 n = best.normal;
  for (double tau : {0.1, 0.03, 0.01, 0.003}) {
    double step = 0.05;
    for (int it = 0; it < 60; ++it) {
      Vec3 g;
      for (std::size_t k = 0; k < v.labels.size(); ++k) {
        double s = v.labels[k] == Label::Plus ? 1.0 : v.labels[k] == Label::Minus ? -1.0 : 0.0;
        if (s == 0) continue;
        Vec3 d = (v.q.nodes[k] - v.x) * (1.0 / v.r);
        double z = -s * dot(d, n) / tau;
        double sig = z > 30 ? 1.0 : std::exp(z) / (1.0 + std::exp(z));
        g -= d * (s * sig * v.q.weights[k] / tau);
      }
      Vec3 gt = g - n * dot(g, n);
      if (norm(gt) == 0) break;
      n = normalized(n - normalized(gt) * step);
      step *= 0.93;
    }
    best.offer(eps_nodes(v, n), n);
  }
}

void check_anchor(const SphereView& v, const HalfSpace& H) {
  double tol = 1e-12 * (1.0 + norm(v.x) + v.r);
  if (dist(H.anchor, v.x) > tol) throw AnchorMismatch("epsilon_given_H: half-space anchor must equal x");
  if (!(norm(H.normal) > 0)) throw PreconditionError("epsilon_given_H: zero normal");
}

}  // namespace

double epsilon_given_H(const SphereView& v, const HalfSpace& H) {
  check_anchor(v, H);
  Vec3 n = normalized(H.normal);
  if (v.exact) return eps_arcs(v, n);
  return eps_nodes(v, n);
}

double epsilon_given_H(const RegionPair& R, const Vec3& x, double r, const HalfSpace& H, const QuadSpec& q) {
  if (dist(H.anchor, x) > 1e-12 * (1.0 + norm(x) + r)) throw AnchorMismatch("epsilon_given_H: half-space anchor must equal x");
  return epsilon_given_H(view_sphere(R, x, r, q), H);
}

EpsResult epsilon(const SphereView& v, const SearchConfig& cfg) {
  Best best;
  if (v.dim == 2) {
    const int m = std::max(8, cfg.grid2d);
    const double h = kTwoPi / m;
    std::vector<double> val;
    kernels::map_index(static_cast<std::size_t>(m), [&](std::size_t j) { return eps_angle(v, j * h); }, val);
    std::size_t jb = 0;
    for (std::size_t j = 0; j < val.size(); ++j) {
      best.offer(val[j], polar(j * h));
      if (val[j] < val[jb]) jb = j;
    }
    auto [phi, f] = golden_min([&](double p) { return eps_angle(v, p); }, jb * h - h, jb * h + h, cfg.golden_tol);
    best.offer(f, polar(phi));
    if (cfg.breakpoints) {
      if (v.exact) {
        for (double b : v.arcs.breaks)
          for (double s : {0.5 * kPi, -0.5 * kPi}) {
            double p = wrap_angle(b + s);
            best.offer(eps_arcs(v, p), polar(p));
          }
      } else {
        sweep_nodes_2d(v, best);
      }
    }
  } else {
    search_3d(v, cfg, best);
  }
  EpsResult res;
  res.value = best.value;
  res.H = {v.x, best.normal};
  res.probes = best.probes;
  return res;
}

EpsResult epsilon(const RegionPair& R, const Vec3& x, double r, const QuadSpec& q, const SearchConfig& cfg) {
  return epsilon(view_sphere(R, x, r, q), cfg);
}

std::pair<double, double> asym_a_sides(const SphereView& v) {
  double half = 0.5 * v.total();
  return {std::fabs(v.measure(Label::Plus) - half) * v.norm_factor(),
          std::fabs(v.measure(Label::Minus) - half) * v.norm_factor()};
}

std::pair<double, double> gamma_sides(const SphereView& v) {
  double g[2] = {0, 0};
  for (int side = 0; side < 2; ++side) {
    if (v.exact) {
      std::vector<double> extra;
      for (double b : v.arcs.breaks) extra.push_back(b + kPi);
      const ArcSet& arcs = v.arcs;
      g[side] = arcs.measure_if(extra, [&](double t, Label l) {
        return in_side(l, side) == in_side(arcs.label_at(wrap_angle(t + kPi)), side);
      });
    } else {
      double s = 0;
      for (std::size_t k = 0; k < v.labels.size(); ++k)
        if (in_side(v.labels[k], side) == in_side(v.labels[v.q.antipode[k]], side)) s += v.q.weights[k];
      g[side] = s * v.norm_factor();
    }
  }
  return {g[0], g[1]};
}

double asym_a(const SphereView& v) {
  auto [p, m] = asym_a_sides(v);
  return std::max(p, m);
}

double gamma_sym(const SphereView& v) {
  auto [p, m] = gamma_sides(v);
  return std::max(p, m);
}

double asym_a(const RegionPair& R, const Vec3& x, double r, const QuadSpec& q) { return asym_a(view_sphere(R, x, r, q)); }
double gamma_sym(const RegionPair& R, const Vec3& x, double r, const QuadSpec& q) {
  return gamma_sym(view_sphere(R, x, r, q));
}

namespace {

// Radial node list on [0, T] for integrals over shells S(x,t).
std::vector<std::pair<double, double>> radial_nodes(const RegionPair& R, const Vec3& x, double T, const QuadSpec& q,
                                                    const RadialConfig& rc, std::vector<double> cuts) {
  if (q.mode == QuadMode::ExactArc && R.dim() == 2) {
    // Endpoint singularities decay over a few multiples of the critical
    // radius, so long panels are split geometrically.
    for (double c : R.critical_radii(x))
      for (double t = c; t > 0 && t < T; t *= 2) cuts.push_back(t);
    return panel_nodes(0.0, T, cuts, rc.order);
  }
  std::vector<std::pair<double, double>> out;
  const GaussRule& g = gauss_legendre(rc.sampled_order);
  double h = T / rc.panels;
  for (int p = 0; p < rc.panels; ++p)
    for (int i = 0; i < rc.sampled_order; ++i)
      out.emplace_back((p + 0.5) * h + 0.5 * h * g.x[i], 0.5 * h * g.w[i]);
  return out;
}

// Two outputs per index; each index owns its slot.
template <class F>
std::vector<std::pair<double, double>> map_pairs(std::size_t n, F&& f) {
  std::vector<std::pair<double, double>> out(n);
  std::vector<double> unused;
  kernels::map_index(n, [&](std::size_t i) {
    out[i] = f(i);
    return 0.0;
  }, unused);
  return out;
}

QuadSpec shell_spec(const QuadSpec& q, std::size_t index) {
  QuadSpec s = q;
  s.seed = derive_seed(q.seed, index);
  return s;
}

}  // namespace

double g_ball(const RegionPair& R, const Vec3& x, double r, const QuadSpec& q, const RadialConfig& rc) {
  if (!(r > 0)) throw PreconditionError("g_ball: radius must be positive");
  const int n = R.dim() - 1;
  auto nodes = radial_nodes(R, x, r, q, rc, {});
  auto val = map_pairs(nodes.size(), [&](std::size_t i) {
    auto g = gamma_sides(view_sphere(R, x, nodes[i].first, shell_spec(q, i)));
    double tn = std::pow(nodes[i].first, n);
    return std::make_pair(g.first * tn, g.second * tn);
  });
  double sp = 0, sm = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    sp += nodes[i].second * val[i].first;
    sm += nodes[i].second * val[i].second;
  }
  return std::max(sp, sm) / std::pow(r, n + 1);
}

std::pair<double, double> a_psi(const RegionPair& R, const Vec3& x, double r, const Kernel& K, const QuadSpec& q,
                                const RadialConfig& rc) {
  if (!(r > 0)) throw PreconditionError("a_psi: radius must be positive");
  const int n = R.dim() - 1;
  const double T = K.support() * r;
  std::vector<double> cuts;
  if (K.kind == Kernel::Kind::Bump)
    for (int k = 0; k < 4; ++k) cuts.push_back(r * (1.0 + 0.025 * k));
  auto nodes = radial_nodes(R, x, T, q, rc, cuts);
  // Integrand phi(t/r) (sigma(S_t)/2 - sigma(Omega^i cap S_t)); the constant
  // c_psi is the same integral with sigma(Omega^i cap S_t) = 0.
  auto both = map_pairs(nodes.size(), [&](std::size_t i) {
    double t = nodes[i].first;
    SphereView v = view_sphere(R, x, t, shell_spec(q, i));
    double half = 0.5 * v.total(), w = K.profile(t / r);
    return std::make_pair(w * (half - v.measure(Label::Plus)), w * (half - v.measure(Label::Minus)));
  });
  double sp = 0, sm = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    sp += nodes[i].second * both[i].first;
    sm += nodes[i].second * both[i].second;
  }
  double norm = std::pow(r, n + 1);
  return {std::fabs(sp) / norm, std::fabs(sm) / norm};
}

CoefficientRecord coefficients(const RegionPair& R, const Vec3& x, double r, const QuadSpec& q, const SearchConfig& sc,
                               const Kernel& K, const RadialConfig& rc) {
  CoefficientRecord c;
  c.x = x;
  c.r = r;
  SphereView v = view_sphere(R, x, r, q);
  EpsResult e = epsilon(v, sc);
  c.eps = e.value;
  c.eps_halfspace = e.H;
  c.a_sym = asym_a(v);
  c.gamma_sym = gamma_sym(v);
  c.g_ball = g_ball(R, x, r, q, rc);
  auto [ap, am] = a_psi(R, x, r, K, q, rc);
  c.a_psi_plus = ap;
  c.a_psi_minus = am;
  c.quad_error = v.quad_error() + K.tail_bound(R.dim());
  return c;
}

double shell_volume(const RegionPair& R, const Vec3& c, double rho, const QuadSpec& q,
                    const std::vector<std::pair<Vec3, double>>& lines,
                    const std::function<bool(const Vec3&, Label)>& pred, const RadialConfig& rc) {
  std::vector<double> cuts;
  for (const auto& [n, off] : lines) cuts.push_back(std::fabs(dot(c, n) - off) / norm(n));
  auto nodes = radial_nodes(R, c, rho, q, rc, cuts);
  std::vector<double> val;
  kernels::map_index(nodes.size(), [&](std::size_t i) {
    double t = nodes[i].first;
    if (q.mode == QuadMode::ExactArc && R.dim() == 2) {
      ArcSet a = arc_set(R, c, t);
      std::vector<double> extra;
      for (const auto& [n, off] : lines) circle_line(c, t, n, off, extra);
      return t * a.measure_if(extra, [&](double th, Label l) { return pred(c + polar(th) * t, l); });
    }
    SphereView v = view_sphere(R, c, t, shell_spec(q, i));
    double s = 0;
    for (std::size_t k = 0; k < v.labels.size(); ++k)
      if (pred(v.q.nodes[k], v.labels[k])) s += v.q.weights[k];
    return s;
  }, val);
  double s = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) s += nodes[i].second * val[i];
  return s;
}

namespace {

Vec3 uniform_in_ball(Rng& rng, int dim) {
  for (;;) {
    Vec3 p{rng.uniform(-1, 1), rng.uniform(-1, 1), dim == 3 ? rng.uniform(-1, 1) : 0.0};
    if (dot(p, p) < 1.0) return p;
  }
}

double miss_fraction(const RegionPair& R, const Ball& b, Label side, int samples, std::uint64_t seed) {
  Rng rng(seed);
  int miss = 0;
  for (int s = 0; s < samples; ++s)
    if (R.classify(b.center + uniform_in_ball(rng, R.dim()) * b.radius) != side) ++miss;
  return static_cast<double>(miss) / samples;
}

}  // namespace

CorkscrewResult find_corkscrew(const RegionPair& R, const Ball& B, Label side, double beta, const CorkscrewConfig& cfg) {
  if (!(beta > 0 && beta < 1)) throw PreconditionError("find_corkscrew: beta must lie in (0,1)");
  if (side == Label::Free) throw PreconditionError("find_corkscrew: side must be plus or minus");
  CorkscrewResult res;
  const int dim = R.dim();
  std::vector<double> radii;
  for (double rho = 0.5 * B.radius; rho > cfg.c1 * B.radius * (1 + 1e-12); rho *= 0.85) radii.push_back(rho);
  radii.push_back(cfg.c1 * B.radius);
  std::uint64_t cand = 0;
  for (double rho : radii) {
    double reach = B.radius - rho, h = 0.5 * rho;
    int k = static_cast<int>(std::floor(reach / h + 1e-9));
    std::vector<Vec3> centers;
    for (int i = -k; i <= k; ++i)
      for (int j = -k; j <= k; ++j)
        for (int l = (dim == 3 ? -k : 0); l <= (dim == 3 ? k : 0); ++l) {
          Vec3 off{i * h, j * h, l * h};
          if (norm(off) <= reach * (1 + 1e-12)) centers.push_back(B.center + off);
        }
    std::stable_sort(centers.begin(), centers.end(),
                     [&](const Vec3& a, const Vec3& b) { return dist(a, B.center) < dist(b, B.center); });
    for (const Vec3& c : centers) {
      if (static_cast<int>(cand) >= cfg.max_candidates) {
        res.candidates = static_cast<long>(cand);
        return res;
      }
      Ball b{c, rho};
      std::uint64_t seed = derive_seed(cfg.seed, cand++);
      double screen = miss_fraction(R, b, side, cfg.screen_samples, seed);
      if (screen > 2.0 * beta + 3.0 / cfg.screen_samples) continue;
      double p = miss_fraction(R, b, side, cfg.samples, splitmix64(seed));
      double se = std::sqrt(std::max(p * (1 - p), 1.0 / cfg.samples) / cfg.samples);
      if (p + cfg.z * se <= beta) {
        res.found = true;
        res.ball = b;
        res.fraction = p;
        res.upper_bound = p + cfg.z * se;
        res.candidates = static_cast<long>(cand);
        return res;
      }
    }
  }
  res.candidates = static_cast<long>(cand);
  return res;
}

SplitFractions splitting_fractions(const RegionPair& R, const Ball& B, const Hyperplane& L, double band,
                                   const QuadSpec& q, const RadialConfig& rc) {
  if (band < 0) throw PreconditionError("splitting_fractions: band must be nonnegative");
  Vec3 n = normalized(L.normal);
  double off = dot(L.point, n);
  QuadSpec qq = q;
  if (R.dim() == 3 && qq.mode == QuadMode::ExactArc) {
    qq.mode = QuadMode::Lattice;
    qq.nodes = 2000;
  }
  std::vector<std::pair<Vec3, double>> lines;
  if (R.dim() == 2) lines = {{n, off + band}, {n, off - band}};
  Vec3 c = B.center;
  double rho = 0.5 * B.radius;
  auto up = [&](const Vec3& y) { return dot(y, n) - off > band; };
  auto dn = [&](const Vec3& y) { return dot(y, n) - off < -band; };
  double vu = shell_volume(R, c, rho, qq, lines, [&](const Vec3& y, Label) { return up(y); }, rc);
  double vd = shell_volume(R, c, rho, qq, lines, [&](const Vec3& y, Label) { return dn(y); }, rc);
  double up_p = shell_volume(R, c, rho, qq, lines, [&](const Vec3& y, Label l) { return up(y) && l == Label::Plus; }, rc);
  double up_m = shell_volume(R, c, rho, qq, lines, [&](const Vec3& y, Label l) { return up(y) && l == Label::Minus; }, rc);
  double dn_p = shell_volume(R, c, rho, qq, lines, [&](const Vec3& y, Label l) { return dn(y) && l == Label::Plus; }, rc);
  double dn_m = shell_volume(R, c, rho, qq, lines, [&](const Vec3& y, Label l) { return dn(y) && l == Label::Minus; }, rc);
  auto frac = [](double a, double b) { return b > 0 ? std::min(1.0, a / b) : 0.0; };
  SplitFractions s1{frac(up_p, vu), frac(dn_m, vd), false};
  SplitFractions s2{frac(dn_p, vd), frac(up_m, vu), true};
  return std::min(s2.plus, s2.minus) > std::min(s1.plus, s1.minus) ? s2 : s1;
}

std::vector<std::string> coefficient_csv_header(int dim) {
  std::vector<std::string> h = {"x1", "x2"};
  if (dim == 3) h.push_back("x3");
  h.push_back("r");
  h.push_back("eps");
  h.push_back("n1");
  h.push_back("n2");
  if (dim == 3) h.push_back("n3");
  for (const char* s : {"a_sym", "gamma_sym", "g_ball", "a_psi_plus", "a_psi_minus", "quad_error"}) h.push_back(s);
  return h;
}

std::vector<std::string> coefficient_csv_row(const CoefficientRecord& c, int dim) {
  std::vector<std::string> r;
  for (int i = 0; i < dim; ++i) r.push_back(fmt_double(c.x[i]));
  r.push_back(fmt_double(c.r));
  r.push_back(fmt_double(c.eps));
  for (int i = 0; i < dim; ++i) r.push_back(fmt_double(c.eps_halfspace.normal[i]));
  for (double v : {c.a_sym, c.gamma_sym, c.g_ball, c.a_psi_plus, c.a_psi_minus, c.quad_error}) r.push_back(fmt_double(v));
  return r;
}

}  // namespace eps2
