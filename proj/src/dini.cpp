#include "eps2/dini.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "eps2/errors.hpp"
#include "eps2/kernels.hpp"
#include "eps2/numerics.hpp"
#include "eps2/rng.hpp"

namespace eps2 {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double default_rmin(const RegionPair& R, const HarnessConfig& cfg) { return cfg.r_min > 0 ? cfg.r_min : 1e-3 * R.scale(); }

double squares_integral(const std::vector<double>& r, const std::vector<double>& f) {
  std::vector<double> g(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) g[i] = f[i] * f[i];
  return trapezoid_log(r, g);
}

// Ratio with the 0/0 convention used by every report: 0 when the numerator
// is within tolerance of zero, +inf when only the denominator vanishes.
double ratio(double num, double den, double tol) {
  if (den > 0) return std::max(0.0, num) / den;
  return num <= tol ? 0.0 : kInf;
}

nlohmann::json grid_json(double r_min, double r_max, double factor) {
  return {{"r_min", r_min}, {"r_max", r_max}, {"factor", factor}};
}

}  // namespace

double DiniResult::recompute() const {
  std::vector<double> r, f;
  for (auto [a, b] : per_scale) {
    r.push_back(a);
    f.push_back(b);
  }
  return power == 2 ? squares_integral(r, f) : trapezoid_log(r, f);
}

DiniResult dini(const std::function<double(double)>& f, double r_min, double r_max, double factor,
                const std::string& label) {
  if (!(r_min > 0 && r_max > r_min && std::isfinite(r_max)))
    throw PreconditionError("dini: need 0 < r_min < r_max < inf");
  if (!(factor > 1.0 && factor <= 2.0)) throw PreconditionError("dini: grid factor must lie in (1, 2]");
  std::vector<double> r = log_grid(r_min, r_max, factor), v;
  kernels::map_index(r.size(), [&](std::size_t i) { return f(r[i]); }, v);
  return dini_tabulated(r, v, factor, label);
}

DiniResult dini_tabulated(const std::vector<double>& r, const std::vector<double>& f, double factor,
                          const std::string& label, int power) {
  if (power != 1 && power != 2) throw PreconditionError("dini: power must be 1 or 2");
  if (r.size() != f.size() || r.size() < 2) throw PreconditionError("dini: grid and values must match (>= 2 points)");
  DiniResult d;
  d.integrand = label;
  d.r_min = r.front();
  d.r_max = r.back();
  d.factor = factor;
  d.power = power;
  for (std::size_t i = 0; i < r.size(); ++i) d.per_scale.emplace_back(r[i], f[i]);
  d.value = d.recompute();
  return d;
}

double kernel_tail(const Kernel& K, int dim, double M) {
  const int n = dim - 1;
  const double hi = M + K.support() * 4.0 + 10.0;
  auto g = [&](double t) { return K.profile(t) * std::pow(t, n) * std::sqrt(std::max(0.0, std::log(t / M))); };
  if (K.kind == Kernel::Kind::Bump && M >= 1.1) return 0.0;
  double upper = K.kind == Kernel::Kind::Bump ? 1.1 : hi;
  return sphere_area(dim) * adaptive_gk(g, M, upper, 1e-14);
}

Report verify_chain(const RegionPair& R, const Vec3& x, const std::vector<double>& radii, const HarnessConfig& cfg) {
  Report rep;
  rep.lemma = "chain";
  rep.columns = {"r", "a", "gamma", "eps", "violation", "tol"};
  rep.tolerances = {{"rule", "violation <= 3 * quad_error per scale"}, {"quad", quad_mode_name(cfg.quad.mode)},
                    {"nodes", cfg.quad.nodes}};
  std::vector<std::vector<double>> rows(radii.size());
  std::vector<double> unused;
  kernels::map_index(radii.size(), [&](std::size_t i) {
    QuadSpec q = cfg.quad;
    q.seed = derive_seed(cfg.quad.seed, i);
    SphereView v = view_sphere(R, x, radii[i], q);
    double a = asym_a(v), g = gamma_sym(v), e = epsilon(v, cfg.search).value;
    double viol = std::max({0.0, 2 * a - g, g - 2 * e});
    rows[i] = {radii[i], a, g, e, viol, 3.0 * v.quad_error()};
    return 0.0;
  }, unused);
  double worst = 0;
  for (auto& row : rows) {
    rep.pass = rep.pass && row[4] <= row[5];
    worst = std::max(worst, row[4]);
    rep.add_row(row);
  }
  rep.values["max_violation"] = worst;
  return rep;
}

Report verify_smoothed_domination(const RegionPair& R, const Vec3& x, double R_max, double M, const HarnessConfig& cfg) {
  if (!(M >= 1)) throw PreconditionError("verify_smoothed_domination: M must be >= 1");
  const double r_min = default_rmin(R, cfg);
  if (!(R_max > r_min)) throw PreconditionError("verify_smoothed_domination: R must exceed r_min");
  std::vector<double> lg = log_grid(r_min, R_max, cfg.factor);
  std::vector<double> eg = M > 1 ? log_grid(r_min, M * R_max, cfg.factor) : lg;
  std::vector<double> all = eg;
  all.insert(all.end(), lg.begin(), lg.end());
  std::sort(all.begin(), all.end());
  all.erase(std::unique(all.begin(), all.end()), all.end());

  struct Row {
    double ap = NAN, am = NAN, eps = NAN, qe = 0;
  };
  std::vector<Row> rows(all.size());
  std::vector<double> unused;
  kernels::map_index(all.size(), [&](std::size_t i) {
    double r = all[i];
    QuadSpec q = cfg.quad;
    q.seed = derive_seed(cfg.quad.seed, i);
    Row row;
    if (std::binary_search(eg.begin(), eg.end(), r)) {
      SphereView v = view_sphere(R, x, r, q);
      row.eps = epsilon(v, cfg.search).value;
      row.qe = v.quad_error();
    }
    if (std::binary_search(lg.begin(), lg.end(), r)) {
      auto [p, m] = a_psi(R, x, r, cfg.kernel, q, cfg.radial);
      row.ap = p;
      row.am = m;
      row.qe = std::max(row.qe, view_sphere(R, x, r, q).quad_error() * cfg.kernel.c_psi(R.dim()) +
                                    cfg.kernel.tail_bound(R.dim()));
    }
    rows[i] = row;
    return 0.0;
  }, unused);

  std::vector<double> lr, lp, lm, er, ee;
  double qe_max = 0, a_max = 0;
  for (std::size_t i = 0; i < all.size(); ++i) {
    const Row& w = rows[i];
    if (!std::isnan(w.ap)) {
      lr.push_back(all[i]);
      lp.push_back(w.ap);
      lm.push_back(w.am);
      a_max = std::max({a_max, w.ap, w.am});
    }
    if (!std::isnan(w.eps)) {
      er.push_back(all[i]);
      ee.push_back(w.eps);
    }
    qe_max = std::max(qe_max, w.qe);
  }
  Report rep;
  rep.lemma = "smoothed-domination";
  rep.columns = {"r", "a_psi_plus", "a_psi_minus", "eps"};
  for (std::size_t i = 0; i < all.size(); ++i) rep.add_row({all[i], rows[i].ap, rows[i].am, rows[i].eps});
  const double lhs_p = squares_integral(lr, lp), lhs_m = squares_integral(lr, lm), rhs = squares_integral(er, ee);
  const double tail = kernel_tail(cfg.kernel, R.dim(), M);
  const double tol = std::log(R_max / r_min) * (2 * a_max * qe_max + qe_max * qe_max);
  double cp = ratio(lhs_p - tail, rhs, tol), cm = ratio(lhs_m - tail, rhs, tol);
  rep.tolerances = {{"dini_tol", tol},
                    {"rule", "finite values; if the eps integral vanishes, lhs <= tail + dini_tol"},
                    {"lhs_grid", grid_json(r_min, R_max, cfg.factor)},
                    {"rhs_grid", grid_json(r_min, M * R_max, cfg.factor)},
                    {"kernel", cfg.kernel.name()},
                    {"M", M}};
  rep.values = {{"lhs_plus", lhs_p}, {"lhs_minus", lhs_m}, {"rhs_eps", rhs}, {"tail", tail},
                {"constant_plus", cp}, {"constant_minus", cm}};
  rep.empirical_constant = std::max(cp, cm);
  rep.pass = std::isfinite(lhs_p) && std::isfinite(lhs_m) && std::isfinite(rhs) && std::isfinite(cp) && std::isfinite(cm);
  return rep;
}

Report verify_g_domination(const RegionPair& R, const Vec3& x, double R_max, const HarnessConfig& cfg) {
  const double r_min = default_rmin(R, cfg);
  if (!(R_max > r_min)) throw PreconditionError("verify_g_domination: R must exceed r_min");
  std::vector<double> r = log_grid(r_min, R_max, cfg.factor);
  std::vector<std::vector<double>> rows(r.size());
  std::vector<double> unused;
  kernels::map_index(r.size(), [&](std::size_t i) {
    QuadSpec q = cfg.quad;
    q.seed = derive_seed(cfg.quad.seed, i);
    SphereView v = view_sphere(R, x, r[i], q);
    rows[i] = {r[i], g_ball(R, x, r[i], q, cfg.radial), gamma_sym(v), epsilon(v, cfg.search).value, v.quad_error()};
    return 0.0;
  }, unused);
  std::vector<double> g, ga, e;
  double qe = 0;
  Report rep;
  rep.lemma = "g-domination";
  rep.columns = {"r", "g_ball", "gamma", "eps"};
  for (const auto& row : rows) {
    g.push_back(row[1]);
    ga.push_back(row[2]);
    e.push_back(row[3]);
    qe = std::max(qe, row[4]);
    rep.add_row({row[0], row[1], row[2], row[3]});
  }
  double lg = squares_integral(r, g), lga = squares_integral(r, ga), le = squares_integral(r, e);
  double tol = std::log(R_max / r_min) * (8 * kPi * qe + qe * qe);
  double c1 = ratio(lg, lga, tol), c2 = ratio(lg, 4 * le, tol);
  rep.tolerances = {{"dini_tol", tol}, {"rule", "int gamma^2 <= 4 int eps^2 + dini_tol; constants finite"},
                    {"grid", grid_json(r_min, R_max, cfg.factor)}};
  rep.values = {{"int_g2", lg}, {"int_gamma2", lga}, {"int_eps2", le}, {"constant_g_gamma", c1}, {"constant_g_eps", c2}};
  rep.empirical_constant = c1;
  rep.pass = lga <= 4 * le + tol && std::isfinite(c1) && std::isfinite(c2);
  return rep;
}

}  // namespace eps2
