#include "eps2/planar.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "eps2/coefficients.hpp"
#include "eps2/errors.hpp"
#include "eps2/kernels.hpp"
#include "eps2/numerics.hpp"

namespace eps2 {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Longest interval; ties go to the smallest start angle.
std::pair<double, double> longest(const std::vector<std::pair<double, double>>& v) {
  double best = 0, start = 0;
  for (auto [a, b] : v) {
    double len = b - a;
    if (len > best || (len == best && len > 0 && a < start)) {
      best = len;
      start = a;
    }
  }
  return {best, start};
}

}  // namespace

ArcProfile arc_profile(const RegionPair& R, const Vec3& x, double r) {
  ArcDecomposition d = arc_decomposition(R, x, r);
  ArcProfile p;
  p.x = x;
  p.r = r;
  std::tie(p.theta_plus, p.start_plus) = longest(d.plus);
  std::tie(p.theta_minus, p.start_minus) = longest(d.minus);
  p.alpha_plus = p.theta_plus > 0 ? kPi / p.theta_plus : kInf;
  p.alpha_minus = p.theta_minus > 0 ? kPi / p.theta_minus : kInf;
  return p;
}

double fh_term(const ArcProfile& p) {
  const double tp = p.theta_plus, tm = p.theta_minus;
  if (!(tp > 0) || !(tm > 0)) return 1.0;
  const double s = tp + tm;
  // Disjoint arcs: s <= 2pi exactly; only rounding can push it over.
  const double num = (tp - tm) * (tp - tm) + s * std::max(0.0, kTwoPi - s);
  return std::min(1.0, num / (2.0 * tp * tm));
}

double carleson_epsilon(const ArcProfile& p) {
  return std::max(std::fabs(kPi - p.theta_plus), std::fabs(kPi - p.theta_minus));
}

double carleson_epsilon(const RegionPair& R, const Vec3& x, double r) { return carleson_epsilon(arc_profile(R, x, r)); }

DiniResult alpha_dini(const RegionPair& R, const Vec3& x, double r_min, double r_max, double factor) {
  if (!(r_min > 0 && r_max > r_min)) throw PreconditionError("alpha_dini: need 0 < r_min < r_max");
  std::vector<double> r = log_grid(r_min, r_max, factor), f;
  kernels::map_index(r.size(), [&](std::size_t i) { return fh_term(arc_profile(R, x, r[i])); }, f);
  return dini_tabulated(r, f, factor, "min(1, alpha+ + alpha- - 2)", 1);
}

Report akn_check(const RegionPair& R, const Vec3& x, const std::vector<double>& radii) {
  Report rep;
  rep.lemma = "akn";
  rep.columns = {"r", "theta_plus", "theta_minus", "carleson_eps", "fh", "ratio"};
  rep.tolerances = {{"rule", "fh >= 0 at every scale; eps = 0 wherever fh = 0 (|eps| <= 1e-12)"}, {"zero_tol", 1e-12}};
  std::vector<std::vector<double>> rows(radii.size());
  std::vector<double> unused;
  kernels::map_index(radii.size(), [&](std::size_t i) {
    ArcProfile p = arc_profile(R, x, radii[i]);
    double e = carleson_epsilon(p), f = fh_term(p);
    double ratio = f > 0 ? e * e / f : (e <= 1e-12 ? 0.0 : kInf);
    rows[i] = {radii[i], p.theta_plus, p.theta_minus, e, f, ratio};
    return 0.0;
  }, unused);
  double C = 0, fh_min = kInf;
  for (auto& row : rows) {
    C = std::max(C, row[5]);
    fh_min = std::min(fh_min, row[4]);
    rep.add_row(row);
  }
  rep.empirical_constant = C;
  rep.values = {{"fh_min", fh_min}};
  rep.pass = fh_min >= 0 && std::isfinite(C);
  return rep;
}

Report carleson_ratio_table(const RegionPair& R, const Vec3& x, const std::vector<double>& radii) {
  Report rep;
  rep.lemma = "carleson-vs-eps";
  rep.columns = {"r", "carleson_eps", "eps", "ratio"};
  std::vector<std::vector<double>> rows(radii.size());
  std::vector<double> unused;
  kernels::map_index(radii.size(), [&](std::size_t i) {
    double c = carleson_epsilon(R, x, radii[i]);
    double e = epsilon(R, x, radii[i], {QuadMode::ExactArc, 0, 0}).value;
    rows[i] = {radii[i], c, e, e > 0 ? c / e : (c > 0 ? kInf : 0.0)};
    return 0.0;
  }, unused);
  double worst = 0;
  for (auto& row : rows) {
    worst = std::max(worst, row[3]);
    rep.add_row(row);
  }
  rep.empirical_constant = worst;
  return rep;
}

std::pair<double, double> l1_tangent_defect(const RegionPair& R, const Vec3& x, double r, const Vec3& u,
                                            const QuadSpec& q) {
  if (!(r > 0)) throw PreconditionError("l1_tangent_defect: radius must be positive");
  const Vec3 n = normalized(u);
  std::vector<std::pair<Vec3, double>> lines;
  if (R.dim() == 2) lines.emplace_back(n, dot(n, x));
  auto side = [&](const Vec3& y) { return dot(y - x, n); };
  double dp = shell_volume(R, x, r, q, lines, [&](const Vec3& y, Label l) {
    return (l == Label::Plus) != (side(y) > 0);
  });
  double dm = shell_volume(R, x, r, q, lines, [&](const Vec3& y, Label l) {
    return (l == Label::Minus) != (side(y) < 0);
  });
  double scale = R.dim() == 2 ? r * r : r * r * r;
  return {dp / scale, dm / scale};
}

}  // namespace eps2
