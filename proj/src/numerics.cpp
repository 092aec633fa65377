#include "eps2/numerics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <stdexcept>

namespace eps2 {

namespace {

GaussRule build_rule(int n) {
  GaussRule g;
  g.x.resize(n);
  g.w.resize(n);
  for (int i = 0; i < n; ++i) {
    double z = std::cos(3.14159265358979323846 * (i + 0.75) / (n + 0.5));
    double dp = 0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1, p1 = z;
      for (int k = 2; k <= n; ++k) {
        double p2 = ((2.0 * k - 1) * z * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      double pn = n == 0 ? 1 : p1, pm = p0;
      if (n == 1) {
        pn = z;
        pm = 1;
      }
      dp = n * (z * pn - pm) / (z * z - 1);
      double dz = pn / dp;
      z -= dz;
      if (std::fabs(dz) < 1e-16) break;
    }
    g.x[i] = z;
    g.w[i] = 2.0 / ((1 - z * z) * dp * dp);
  }
  return g;
}

constexpr double kXgk[8] = {0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
                            0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
                            0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
                            0.207784955007898467600689403773245, 0.0};
constexpr double kWgk[8] = {0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
                            0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
                            0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
                            0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr double kWg[4] = {0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
                           0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

double gk_step(const std::function<double(double)>& f, double a, double b, double& err) {
  double c = 0.5 * (a + b), h = 0.5 * (b - a);
  double fc = f(c);
  double k = fc * kWgk[7], g = fc * kWg[3];
  for (int j = 0; j < 7; ++j) {
    double x = h * kXgk[j];
    double s = f(c - x) + f(c + x);
    k += kWgk[j] * s;
    if (j % 2 == 1) g += kWg[j / 2] * s;
  }
  err = std::fabs((k - g) * h);
  return k * h;
}

double gk_rec(const std::function<double(double)>& f, double a, double b, double tol, int depth) {
  double err;
  double v = gk_step(f, a, b, err);
  if (err <= tol || depth <= 0) return v;
  double c = 0.5 * (a + b);
  return gk_rec(f, a, c, 0.5 * tol, depth - 1) + gk_rec(f, c, b, 0.5 * tol, depth - 1);
}

std::vector<double> clean_cuts(double a, double b, std::vector<double> cuts) {
  std::vector<double> c{a};
  std::sort(cuts.begin(), cuts.end());
  double eps = 1e-13 * (std::fabs(a) + std::fabs(b));
  for (double t : cuts)
    if (t > c.back() + eps && t < b - eps) c.push_back(t);
  c.push_back(b);
  return c;
}

}  // namespace

const GaussRule& gauss_legendre(int n) {
  static const std::vector<GaussRule> rules = [] {
    std::vector<GaussRule> r(65);
    for (int k = 1; k <= 64; ++k) r[k] = build_rule(k);
    return r;
  }();
  if (n < 1 || n > 64) throw std::invalid_argument("gauss_legendre: order must be in [1, 64]");
  return rules[n];
}

std::vector<std::pair<double, double>> panel_nodes(double a, double b, std::vector<double> cuts, int n) {
  std::vector<std::pair<double, double>> out;
  if (!(b > a)) return out;
  auto c = clean_cuts(a, b, std::move(cuts));
  const GaussRule& g = gauss_legendre(n);
  for (std::size_t p = 0; p + 1 < c.size(); ++p) {
    double lo = c[p], len = c[p + 1] - c[p];
    for (int i = 0; i < n; ++i) {
      double s = 0.5 * (g.x[i] + 1.0);
      double t = lo + len * s * s * (3.0 - 2.0 * s);
      double jac = len * 6.0 * s * (1.0 - s) * 0.5;
      out.emplace_back(t, g.w[i] * jac);
    }
  }
  return out;
}

double panel_integral(double a, double b, std::vector<double> cuts, const std::function<double(double)>& f, int n) {
  double s = 0;
  for (const auto& [t, w] : panel_nodes(a, b, std::move(cuts), n)) s += w * f(t);
  return s;
}

std::vector<double> panel_integral_multi(double a, double b, std::vector<double> cuts,
                                         const std::function<void(double, std::vector<double>&)>& f, std::size_t k,
                                         int n) {
  std::vector<double> acc(k, 0.0), val(k, 0.0);
  for (const auto& [t, w] : panel_nodes(a, b, std::move(cuts), n)) {
    std::fill(val.begin(), val.end(), 0.0);
    f(t, val);
    for (std::size_t i = 0; i < k; ++i) acc[i] += w * val[i];
  }
  return acc;
}

double composite_gauss(double a, double b, int panels, int n, const std::function<double(double)>& f) {
  const GaussRule& g = gauss_legendre(n);
  double h = (b - a) / panels, s = 0;
  for (int p = 0; p < panels; ++p) {
    double c = a + (p + 0.5) * h;
    for (int i = 0; i < n; ++i) s += g.w[i] * 0.5 * h * f(c + 0.5 * h * g.x[i]);
  }
  return s;
}

double adaptive_gk(const std::function<double(double)>& f, double a, double b, double tol, int max_depth) {
  return gk_rec(f, a, b, tol, max_depth);
}

std::pair<double, double> golden_min(const std::function<double(double)>& f, double a, double b, double tol) {
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = b - gr * (b - a), d = a + gr * (b - a);
  double fc = f(c), fd = f(d);
  while (b - a > tol) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - gr * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + gr * (b - a);
      fd = f(d);
    }
  }
  return fc <= fd ? std::pair{c, fc} : std::pair{d, fd};
}

std::pair<std::array<double, 2>, double> nelder_mead2(const std::function<double(const std::array<double, 2>&)>& f,
                                                      std::array<double, 2> p0, double h, int iters) {
  using P = std::array<double, 2>;
  std::array<P, 3> s{p0, P{p0[0] + h, p0[1]}, P{p0[0], p0[1] + h}};
  std::array<double, 3> v{f(s[0]), f(s[1]), f(s[2])};
  auto lerp = [](const P& a, const P& b, double t) { return P{a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])}; };
  for (int it = 0; it < iters; ++it) {
    std::array<int, 3> o{0, 1, 2};
    std::sort(o.begin(), o.end(), [&](int i, int j) { return v[i] < v[j]; });
    std::array<P, 3> s2{s[o[0]], s[o[1]], s[o[2]]};
    std::array<double, 3> v2{v[o[0]], v[o[1]], v[o[2]]};
    s = s2;
    v = v2;
    P cen{0.5 * (s[0][0] + s[1][0]), 0.5 * (s[0][1] + s[1][1])};
    P xr = lerp(cen, s[2], -1.0);
    double fr = f(xr);
    if (fr < v[0]) {
      P xe = lerp(cen, s[2], -2.0);
      double fe = f(xe);
      if (fe < fr) {
        s[2] = xe;
        v[2] = fe;
      } else {
        s[2] = xr;
        v[2] = fr;
      }
    } else if (fr < v[1]) {
      s[2] = xr;
      v[2] = fr;
    } else {
      P xc = fr < v[2] ? lerp(cen, xr, 0.5) : lerp(cen, s[2], 0.5);
      double fcn = f(xc);
      if (fcn < std::min(fr, v[2])) {
        s[2] = xc;
        v[2] = fcn;
      } else {
        for (int i = 1; i < 3; ++i) {
          s[i] = lerp(s[0], s[i], 0.5);
          v[i] = f(s[i]);
        }
      }
    }
  }
  int best = 0;
  for (int i = 1; i < 3; ++i)
    if (v[i] < v[best]) best = i;
  return {s[best], v[best]};
}

std::vector<double> log_grid(double r_min, double r_max, double factor) {
  if (!(r_min > 0 && r_max > r_min)) throw std::invalid_argument("log_grid: need 0 < r_min < r_max");
  if (!(factor > 1.0)) throw std::invalid_argument("log_grid: factor must exceed 1");
  std::vector<double> g;
  double lf = std::log(factor);
  int n = static_cast<int>(std::ceil(std::log(r_max / r_min) / lf - 1e-9));
  for (int k = 0; k < n; ++k) g.push_back(r_min * std::exp(k * lf));
  g.push_back(r_max);
  return g;
}

double trapezoid_log(const std::vector<double>& r, const std::vector<double>& g) {
  double s = 0;
  for (std::size_t k = 0; k + 1 < r.size(); ++k) s += 0.5 * (g[k] + g[k + 1]) * std::log(r[k + 1] / r[k]);
  return s;
}

std::string fmt_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace eps2
