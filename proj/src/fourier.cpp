#include "eps2/fourier.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <mutex>
#include <tuple>

#include "eps2/errors.hpp"
#include "eps2/kernels.hpp"
#include "eps2/numerics.hpp"
#include "eps2/rng.hpp"
#include "eps2/vec.hpp"

namespace eps2 {

namespace {

using cplx = std::complex<double>;

// fftw_alloc'd buffers, so new-array execution sees the planned alignment.
struct RealBuf {
  double* p;
  std::size_t n;
  explicit RealBuf(std::size_t n_) : p(fftw_alloc_real(n_)), n(n_) { std::fill(p, p + n, 0.0); }
  ~RealBuf() { fftw_free(p); }
  RealBuf(const RealBuf&) = delete;
  RealBuf& operator=(const RealBuf&) = delete;
};
struct CplxBuf {
  fftw_complex* p;
  std::size_t n;
  explicit CplxBuf(std::size_t n_) : p(fftw_alloc_complex(n_)), n(n_) { std::fill(c(), c() + n, cplx{}); }
  ~CplxBuf() { fftw_free(p); }
  CplxBuf(const CplxBuf&) = delete;
  CplxBuf& operator=(const CplxBuf&) = delete;
  cplx* c() { return reinterpret_cast<cplx*>(p); }
};

// Planning is not thread-safe; execution on other arrays is.
// FFTW_ESTIMATE keeps the algorithm choice, hence the rounding, fixed from run to run.
fftw_plan plan_for(int dim, std::size_t M, bool forward) {
  static std::mutex mu;
  static std::map<std::tuple<int, std::size_t, bool>, fftw_plan> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto key = std::make_tuple(dim, M, forward);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  const std::size_t H = M / 2 + 1;
  RealBuf r(dim == 1 ? M : M * M);
  CplxBuf c(dim == 1 ? H : M * H);
  const int m = static_cast<int>(M);
  fftw_plan p;
  if (dim == 1)
    p = forward ? fftw_plan_dft_r2c_1d(m, r.p, c.p, FFTW_ESTIMATE) : fftw_plan_dft_c2r_1d(m, c.p, r.p, FFTW_ESTIMATE);
  else
    p = forward ? fftw_plan_dft_r2c_2d(m, m, r.p, c.p, FFTW_ESTIMATE)
                : fftw_plan_dft_c2r_2d(m, m, c.p, r.p, FFTW_ESTIMATE);
  if (!p) throw std::runtime_error("fftw planning failed");
  cache.emplace(key, p);
  return p;
}

double bessel(int k, double x) { return std::cyl_bessel_j(static_cast<double>(k), x); }

// Outer radius of the numerically integrated profile.
double extent(const RadialProfile& p) { return p.K.kind == Kernel::Kind::Bump ? 1.1 * p.scale : 8.0 * p.scale; }

// int_0^extent phi(x) g(x) dx; flat part and transition on separate panels for the bump.
template <class G>
double radial_int(const RadialProfile& p, G g, double osc = 0) {
  if (p.K.kind == Kernel::Kind::Bump) {
    const double s = p.scale;
    int flat = 2 + static_cast<int>(std::ceil(osc * s));
    int tr = 2 + static_cast<int>(std::ceil(osc * 0.1 * s));
    return composite_gauss(0, s, flat, 20, [&](double x) { return p(x) * g(x); }) +
           composite_gauss(s, 1.1 * s, tr, 20, [&](double x) { return p(x) * g(x); });
  }
  const double e = extent(p);
  int panels = 16 + static_cast<int>(std::ceil(osc * e));
  return composite_gauss(0, e, panels, 20, [&](double x) { return p(x) * g(x); });
}

double ball_vol(int n) { return n == 1 ? 2.0 : kPi; }

// ---- padded spectra -------------------------------------------------------------

int pad_for(const RadialProfile& p, const RadiusGrid& g) {
  double need = 1 + 2 * std::max(p.support(), 1.0) * g.max_fraction;
  int P = 1;
  while (P < need) P *= 2;
  return P;
}

struct Spectrum {
  int dim = 1;
  std::size_t n = 0, M = 0, H = 0;
  double h = 0, lo = 0;
  std::vector<double> f;  // padded samples, M^dim
  std::vector<cplx> F;    // r2c output
  std::vector<double> xi1, xi2;
  std::vector<char> keep;
  double max_xi = 0;  // largest |xi| among kept modes

  std::size_t total() const { return dim == 1 ? M : M * M; }
  std::size_t spec() const { return dim == 1 ? H : M * H; }
  double coord(std::size_t i) const {
    long k = static_cast<long>(i);
    if (i >= n + (M - n) / 2) k -= static_cast<long>(M);
    return lo + static_cast<double>(k) * h;
  }
  double xi(std::size_t k) const { return dim == 1 ? std::fabs(xi1[k]) : std::hypot(xi1[k], xi2[k]); }
};

Spectrum make_spectrum(const GridFunction& g, int P, double floor, bool square = false) {
  Spectrum S;
  S.dim = g.dim;
  S.n = g.n;
  S.M = static_cast<std::size_t>(P) * g.n;
  S.H = S.M / 2 + 1;
  S.h = g.h;
  S.lo = g.lo;
  RealBuf r(S.total());
  for (std::size_t i = 0; i < g.n; ++i) {
    if (g.dim == 1) {
      double v = g.values[i];
      r.p[i] = square ? v * v : v;
      continue;
    }
    for (std::size_t j = 0; j < g.n; ++j) {
      double v = g.values[i * g.n + j];
      r.p[i * S.M + j] = square ? v * v : v;
    }
  }
  S.f.assign(r.p, r.p + S.total());
  CplxBuf c(S.spec());
  fftw_execute_dft_r2c(plan_for(S.dim, S.M, true), r.p, c.p);
  S.F.assign(c.c(), c.c() + S.spec());
  const double L = static_cast<double>(S.M) * S.h;
  S.xi1.resize(S.spec());
  S.xi2.assign(S.spec(), 0.0);
  const long Ml = static_cast<long>(S.M);
  for (std::size_t k = 0; k < S.spec(); ++k) {
    if (S.dim == 1) {
      S.xi1[k] = static_cast<double>(k) / L;
      continue;
    }
    long k1 = static_cast<long>(k / S.H), k2 = static_cast<long>(k % S.H);
    if (k1 > Ml / 2) k1 -= Ml;
    S.xi1[k] = static_cast<double>(k1) / L;
    S.xi2[k] = static_cast<double>(k2) / L;
  }
  double mx = 0;
  for (const auto& z : S.F) mx = std::max(mx, std::abs(z));
  S.keep.assign(S.spec(), 0);
  for (std::size_t k = 0; k < S.spec(); ++k)
    if (std::abs(S.F[k]) > floor * mx) {
      S.keep[k] = 1;
      S.max_xi = std::max(S.max_xi, S.xi(k));
    }
  return S;
}

// Inverse transform of F * mult(k) over the kept modes, scaled to samples.
template <class Mult>
std::vector<double> inverse(const Spectrum& S, Mult mult) {
  CplxBuf c(S.spec());
  cplx* z = c.c();
  for (std::size_t k = 0; k < S.spec(); ++k) z[k] = S.keep[k] ? S.F[k] * mult(k) : cplx{};
  RealBuf r(S.total());
  fftw_execute_dft_c2r(plan_for(S.dim, S.M, false), c.p, r.p);
  const double norm = 1.0 / static_cast<double>(S.total());
  std::vector<double> out(S.total());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = r.p[i] * norm;
  return out;
}

double parseval_defect(const Spectrum& S) {
  double a = 0, b = 0;
  for (double v : S.f) a += v * v;
  for (std::size_t k = 0; k < S.spec(); ++k) {
    std::size_t last = S.dim == 1 ? k : k % S.H;
    double w = (last == 0 || last == S.M / 2) ? 1.0 : 2.0;
    b += w * std::norm(S.F[k]);
  }
  b /= static_cast<double>(S.total());
  return a > 0 ? std::fabs(a - b) / a : std::fabs(b);
}

void run_radii(std::size_t m, bool serial, const std::function<void(std::size_t)>& f) {
  if (serial) kernels::for_index_serial(m, f);
  else kernels::for_index(m, f);
}

void check_pair(const GridFunction& f, const RadialProfile& p) {
  f.validate();
  if (p.dim != f.dim) throw PreconditionError("kernel profile dimension does not match the grid function");
}

// Log-trapezoid weights matching trapezoid_log.
std::vector<double> log_weights(const std::vector<double>& r) {
  std::vector<double> w(r.size(), 0.0);
  for (std::size_t k = 0; k + 1 < r.size(); ++k) {
    double d = 0.5 * std::log(r[k + 1] / r[k]);
    w[k] += d;
    w[k + 1] += d;
  }
  return w;
}

// (sin x - x cos x) / x^2
double s_fun(double x) {
  if (std::fabs(x) < 0.1) {
    double x2 = x * x;
    return x * (1.0 / 3 - x2 / 30 + x2 * x2 / 840 - x2 * x2 * x2 / 45360);
  }
  return (std::sin(x) - x * std::cos(x)) / (x * x);
}

double sinc(double x) { return std::fabs(x) < 1e-8 ? 1 - x * x / 6 : std::sin(x) / x; }

// 2 J1(x) / x
double jinc(double x) { return std::fabs(x) < 1e-8 ? 1 - x * x / 8 : 2 * bessel(1, x) / x; }

}  // namespace

// ---- radial profile ----------------------------------------------------------------

double RadialProfile::transform(double t) const {
  t = std::fabs(t);
  if (K.kind == Kernel::Kind::Bump) {
    const double s = scale;
    double flat;
    if (dim == 1) flat = weight * 2 * s * sinc(kTwoPi * t * s);
    else flat = weight * kPi * s * s * jinc(kTwoPi * t * s);
    int tr = 2 + static_cast<int>(std::ceil(t * 0.1 * s));
    double rest = composite_gauss(s, 1.1 * s, tr, 20, [&](double x) {
      double v = (*this)(x);
      return dim == 1 ? 2 * v * std::cos(kTwoPi * t * x) : kTwoPi * v * bessel(0, kTwoPi * t * x) * x;
    });
    return flat + rest;
  }
  return radial_int(*this, [&](double x) {
    return dim == 1 ? 2 * std::cos(kTwoPi * t * x) : kTwoPi * bessel(0, kTwoPi * t * x) * x;
  }, t);
}

double RadialProfile::mass() const {
  return radial_int(*this, [&](double x) { return dim == 1 ? 2.0 : kTwoPi * x; });
}

double RadialProfile::moment2() const {
  return radial_int(*this, [&](double x) { return dim == 1 ? 2 * x * x : kPi * x * x * x; });
}

double RadialProfile::l2sq() const {
  return radial_int(*this, [&](double x) { return (*this)(x) * (dim == 1 ? 2.0 : kTwoPi * x); });
}

RadialProfile RadialProfile::unit_mass() const {
  RadialProfile q = *this;
  q.weight = weight / mass();
  return q;
}

TransformTable::TransformTable(const RadialProfile& p, double t_max) : p_(p), t_max_(std::max(t_max, 1.0)) {
  // phi-hat(k / L) by the trapezoid rule on [-L/2, L/2) applied to the profile
  // (dim 1) or to its projection onto a line (dim 2: the transform of a radial
  // function along e_1 is the 1D transform of its Abel projection). Exact up to
  // aliasing from |t| >= 1/delta, where the transform is negligible.
  const std::size_t K = static_cast<std::size_t>(std::ceil(t_max_ / dt_)) + 4;
  v_.resize(K);
  const double L = 1 / dt_, E = extent(p);
  if (E * 2 >= L) throw PreconditionError("transform table: kernel scale too large");
  const double dmin = p.K.kind == Kernel::Kind::Bump ? 0.002 * p.scale : 0.05 * p.scale;
  std::size_t N = 1;
  while (N < 4 * K || L / static_cast<double>(N) > dmin) N *= 2;
  const double d = L / static_cast<double>(N);
  auto line = [&](double x) -> double {
    x = std::fabs(x);
    if (x >= E) return 0.0;
    if (p.dim == 1) return p(x);
    const double ymax = std::sqrt(E * E - x * x);
    auto g = [&](double y) { return p(std::sqrt(x * x + y * y)); };
    if (p.K.kind != Kernel::Kind::Bump) return 2 * composite_gauss(0, ymax, 16, 20, g);
    const double y1 = std::sqrt(std::max(0.0, p.scale * p.scale - x * x));
    return 2 * (p.weight * y1 + composite_gauss(y1, ymax, 4, 20, g));
  };
  std::vector<double> samples;
  kernels::map_index(N / 2 + 1, [&](std::size_t j) { return line(static_cast<double>(j) * d); }, samples);
  RealBuf r(N);
  for (std::size_t j = 0; j < N; ++j) r.p[j] = samples[j <= N / 2 ? j : N - j];
  CplxBuf c(N / 2 + 1);
  fftw_execute_dft_r2c(plan_for(1, N, true), r.p, c.p);
  for (std::size_t k = 0; k < K; ++k) v_[k] = c.c()[k].real() * d;
}

double TransformTable::operator()(double t) const {
  t = std::fabs(t);
  if (t > t_max_) return p_.transform(t);
  const double u = t / dt_;
  const std::size_t k = static_cast<std::size_t>(u);
  const double s = u - static_cast<double>(k);
  auto at = [&](long q) { return v_[static_cast<std::size_t>(q < 0 ? -q : q)]; };
  const long kk = static_cast<long>(k);
  const double a = at(kk - 1), b = at(kk), c = at(kk + 1), d = at(kk + 2);
  return -s * (s - 1) * (s - 2) / 6 * a + (s + 1) * (s - 1) * (s - 2) / 2 * b - (s + 1) * s * (s - 2) / 2 * c +
         (s + 1) * s * (s - 1) / 6 * d;
}

// ---- constants ------------------------------------------------------------------------

PlancherelConstant plancherel_constant(const RadialProfile& p, const ConstantOptions& o) {
  PlancherelConstant out;
  const double unit = 1 / p.scale;
  out.t_max = o.t_max * unit;
  out.depth = o.depth;
  const TransformTable tab(p, out.t_max + 1);
  const double c0 = tab(0);
  auto g = [&](double t) {
    double d = tab(t) - c0;
    return d * d / (t * t * t);
  };
  const int pieces = static_cast<int>(std::lround(o.t_max));
  double T = 0;
  for (int k = 0; k < pieces; ++k) T += adaptive_gk(g, k * unit, (k + 1) * unit, o.tol * c0 * c0, o.depth);
  out.tail = c0 * c0 / (2 * out.t_max * out.t_max);
  out.T = T + out.tail;
  out.value = out.T / (4 * kPi * kPi);
  return out;
}

PlancherelConstant second_diff_constant(const RadialProfile& p, const ConstantOptions& o) {
  const RadialProfile q = p.unit_mass();
  const int n = p.dim;
  PlancherelConstant out;
  const double unit = 1 / p.scale;
  out.t_max = o.t_max * unit;
  out.depth = o.depth;
  // |2 pi i y a + 1 - e^{2 pi i y}|^2 written without cancellation at small y.
  auto F = [](double y, double a) {
    double u = kTwoPi * y, s = std::sin(0.5 * u);
    double re = 2 * s * s, im = a * u - std::sin(u);
    return re * re + im * im;
  };
  const TransformTable tab(q, out.t_max + 1);
  auto J = [&](double t) {
    const double a = tab(t);
    if (n == 1) return 2 * composite_gauss(0, t, 1 + static_cast<int>(std::ceil(2 * t)), 16, [&](double y) { return F(y, a); });
    std::vector<double> cuts;
    for (double c = 0.5; c < t; c += 0.5) cuts.push_back(c);
    return 2 * panel_integral(0, t, cuts, [&](double y) { return F(y, a) * 2 * std::sqrt(std::max(0.0, t * t - y * y)); });
  };
  auto g = [&](double t) { return J(t) / std::pow(t, n + 3); };
  const int pieces = static_cast<int>(std::lround(o.t_max));
  double I = 0;
  for (int k = 0; k < pieces; ++k) I += adaptive_gk(g, k * unit, (k + 1) * unit, o.tol, o.depth);
  out.tail = ball_vol(n) / (out.t_max * out.t_max);
  out.T = I + out.tail;
  out.value = out.T / (4 * kPi * kPi);
  return out;
}

std::vector<double> RadiusGrid::radii(const GridFunction& f) const {
  const double rmin = min_cells * f.h, rmax = max_fraction * f.window();
  if (!(rmax > rmin) || !(factor > 1)) throw PreconditionError("radius grid: empty range");
  return log_grid(rmin, rmax, factor);
}

nlohmann::json ScaleIntegral::to_json() const {
  return {{"value", value}, {"grid_part", grid_part}, {"head", head}, {"tail", tail},
          {"plancherel_defect", plancherel_defect}, {"radii", radii}, {"per_radius", per_radius}};
}

double discrete_plancherel_defect(const GridFunction& f, int pad) {
  f.validate();
  return parseval_defect(make_spectrum(f, pad, 0.0));
}

// ---- first identity -------------------------------------------------------------------

namespace {

// Signed (phi_r * f - c f) on the padded grid.
std::vector<double> compensated(const Spectrum& S, const TransformTable& T, double c, double r) {
  return inverse(S, [&](std::size_t k) { return cplx{T(r * S.xi(k)) - c, 0.0}; });
}

double sum_sq(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x * x;
  return s;
}

}  // namespace

ScaleIntegral plancherel_lhs(const GridFunction& f, const RadialProfile& p, const FourierOptions& o) {
  check_pair(f, p);
  ScaleIntegral out;
  out.radii = o.grid.radii(f);
  Spectrum S = make_spectrum(f, pad_for(p, o.grid), o.spectrum_floor);
  out.plancherel_defect = parseval_defect(S);
  const double c = p.mass();
  TransformTable T(p, out.radii.back() * S.max_xi + 0.01);
  const double cell = f.dim == 1 ? f.h : f.h * f.h;
  out.per_radius.assign(out.radii.size(), 0.0);
  run_radii(out.radii.size(), o.serial, [&](std::size_t k) {
    const double r = out.radii[k];
    out.per_radius[k] = sum_sq(compensated(S, T, c, r)) * cell / (r * r);
  });
  out.grid_part = trapezoid_log(out.radii, out.per_radius);
  const int n = f.dim;
  const double rmin = out.radii.front(), R = out.radii.back();
  const double m2 = p.moment2(), F = f.integral();
  out.head = 0.25 * m2 * m2 * f.laplacian_l2sq() * rmin * rmin / 2;
  out.tail = c * c * f.l2sq() / (2 * R * R) + F * F * (p.l2sq() - 2 * c * p(0)) / ((n + 2) * std::pow(R, n + 2));
  out.value = out.grid_part + out.head + out.tail;
  return out;
}

std::vector<double> plancherel_profile(const GridFunction& f, const RadialProfile& p, double r, int* pad) {
  check_pair(f, p);
  RadiusGrid g;
  const int P = pad_for(p, g);
  if (pad) *pad = P;
  Spectrum S = make_spectrum(f, P, 1e-13);
  TransformTable T(p, r * S.max_xi + 0.01);
  auto v = compensated(S, T, p.mass(), r);
  for (double& x : v) x = x * x / (r * r);
  return v;
}

// ---- second-difference identity ------------------------------------------------------------

namespace {

// Per-sample r^-(n+2) int_{|z|<=r} |g(x).z + f(x) - f(x+z)|^2 dz, with the square
// expanded into ball convolutions of f and f^2.
std::vector<double> second_diff_density(const Spectrum& S, const Spectrum& S2, const TransformTable& Tq, double r) {
  const int n = S.dim;
  const double vol = ball_vol(n) * std::pow(r, n);
  auto chi = [&](double xi) {
    double x = kTwoPi * xi * r;
    return n == 1 ? 2 * r * sinc(x) : kPi * r * r * jinc(x);
  };
  std::vector<double> A = inverse(S, [&](std::size_t k) { return cplx{chi(S.xi(k)), 0}; });
  std::vector<double> B = inverse(S2, [&](std::size_t k) { return cplx{chi(S2.xi(k)), 0}; });
  std::vector<double> dens(S.total(), 0.0);
  if (n == 1) {
    std::vector<double> g = inverse(S, [&](std::size_t k) { return cplx{0, kTwoPi * S.xi1[k] * Tq(r * S.xi1[k])}; });
    std::vector<double> Z = inverse(S, [&](std::size_t k) { return cplx{0, -2 * r * r * s_fun(kTwoPi * S.xi1[k] * r)}; });
    const double m2 = 2 * r * r * r / 3;
    for (std::size_t i = 0; i < dens.size(); ++i) {
      double fx = S.f[i];
      dens[i] = (g[i] * g[i] * m2 + vol * fx * fx - 2 * fx * A[i] + B[i] + 2 * g[i] * Z[i]) / (r * r * r);
    }
    return dens;
  }
  auto zeta = [&](std::size_t k, double comp) {
    double rho = S.xi(k);
    if (rho == 0) return cplx{};
    return cplx{0, -r * r * bessel(2, kTwoPi * rho * r) * comp / (rho * rho)};
  };
  std::vector<double> g1 = inverse(S, [&](std::size_t k) { return cplx{0, kTwoPi * S.xi1[k] * Tq(r * S.xi(k))}; });
  std::vector<double> g2 = inverse(S, [&](std::size_t k) { return cplx{0, kTwoPi * S.xi2[k] * Tq(r * S.xi(k))}; });
  std::vector<double> Z1 = inverse(S, [&](std::size_t k) { return zeta(k, S.xi1[k]); });
  std::vector<double> Z2 = inverse(S, [&](std::size_t k) { return zeta(k, S.xi2[k]); });
  const double m2 = kPi * std::pow(r, 4) / 4;
  for (std::size_t i = 0; i < dens.size(); ++i) {
    double fx = S.f[i];
    double gg = g1[i] * g1[i] + g2[i] * g2[i];
    dens[i] = (gg * m2 + vol * fx * fx - 2 * fx * A[i] + B[i] + 2 * (g1[i] * Z1[i] + g2[i] * Z2[i])) / std::pow(r, 4);
  }
  return dens;
}

}  // namespace

ScaleIntegral second_diff_lhs(const GridFunction& f, const RadialProfile& p, const FourierOptions& o) {
  check_pair(f, p);
  ScaleIntegral out;
  out.radii = o.grid.radii(f);
  const int P = pad_for(p, o.grid);
  Spectrum S = make_spectrum(f, P, o.spectrum_floor);
  Spectrum S2 = make_spectrum(f, P, o.spectrum_floor, true);
  out.plancherel_defect = parseval_defect(S);
  const RadialProfile q = p.unit_mass();
  TransformTable Tq(q, out.radii.back() * S.max_xi + 0.01);
  const double cell = f.dim == 1 ? f.h : f.h * f.h;
  out.per_radius.assign(out.radii.size(), 0.0);
  run_radii(out.radii.size(), o.serial, [&](std::size_t k) {
    auto d = second_diff_density(S, S2, Tq, out.radii[k]);
    out.per_radius[k] = kernels::ordered_sum(d) * cell;
  });
  out.grid_part = trapezoid_log(out.radii, out.per_radius);
  const int n = f.dim;
  const double rmin = out.radii.front(), R = out.radii.back(), F = f.integral();
  out.head = rmin * rmin / 8 * f.hessian_ball_form();
  out.tail = ball_vol(n) * f.l2sq() / (R * R) - 2 * F * F / ((n + 2) * std::pow(R, n + 2));
  out.value = out.grid_part + out.head + out.tail;
  return out;
}

std::vector<double> second_diff_profile(const GridFunction& f, const RadialProfile& p, double r, int* pad) {
  check_pair(f, p);
  const int P = pad_for(p, RadiusGrid{});
  if (pad) *pad = P;
  Spectrum S = make_spectrum(f, P, 1e-13);
  Spectrum S2 = make_spectrum(f, P, 1e-13, true);
  TransformTable Tq(p.unit_mass(), r * S.max_xi + 0.01);
  return second_diff_density(S, S2, Tq, r);
}

// ---- reports ------------------------------------------------------------------------------------

namespace {

Report identity_report(const std::string& lemma, const ScaleIntegral& lhs, const PlancherelConstant& c,
                       const GridFunction& f, double tol) {
  Report rep;
  rep.lemma = lemma;
  rep.columns = {"r", "integrand"};
  for (std::size_t k = 0; k < lhs.radii.size(); ++k) rep.add_row({lhs.radii[k], lhs.per_radius[k]});
  const double g2 = f.grad_l2sq(), rhs = c.value * g2;
  double rel;
  if (rhs > 0) rel = std::fabs(lhs.value - rhs) / rhs;
  else rel = lhs.value == 0 ? 0.0 : INFINITY;
  rep.tolerances = {{"relative", tol}, {"plancherel_defect", 1e-12}};
  rep.empirical_constant = c.value;
  rep.values = {{"lhs", lhs.value},         {"grid_part", lhs.grid_part}, {"head", lhs.head},
                {"tail", lhs.tail},         {"constant", c.value},        {"constant_tail", c.tail},
                {"grad_l2sq", g2},          {"rhs", rhs},                 {"relative_error", rel},
                {"plancherel_defect", lhs.plancherel_defect}};
  rep.pass = lhs.plancherel_defect <= 1e-12 && rel <= tol;
  return rep;
}

}  // namespace

Report verify_fourier_identity(const GridFunction& f, const RadialProfile& p, double tol, const FourierOptions& o) {
  return identity_report("fourier_identity", plancherel_lhs(f, p, o), plancherel_constant(p), f, tol);
}

Report verify_second_diff(const GridFunction& f, const RadialProfile& p, double tol, const FourierOptions& o) {
  return identity_report("second_difference", second_diff_lhs(f, p, o), second_diff_constant(p), f, tol);
}

// ---- graph square functions -----------------------------------------------------------------

namespace {

void check_graph(const GridFunction& f, const Kernel& K) {
  f.validate();
  if (K.kind != Kernel::Kind::Bump) throw PreconditionError("graph square functions need the bump kernel");
  if (f.slope() > 0.1 * (1 + 1e-9)) throw PreconditionError("graph square functions need slope <= 1/10");
}

}  // namespace

double graph_square_function(const GridFunction& f, const Kernel& K, const FourierOptions& o) {
  check_graph(f, K);
  return 2 * plancherel_lhs(f, RadialProfile{K, f.dim}, o).value;
}

McEstimate rho_coefficient_mc(const GridFunction& f, const Kernel& K, double x0, double y0, double r, int samples,
                              std::uint64_t seed) {
  check_graph(f, K);
  const int n = f.dim;
  auto fv = [&](double u, double v) { return n == 1 ? f.eval(x0 + r * u) : f.eval(x0 + r * u, y0 + r * v); };
  const double f0 = fv(0, 0);
  auto beta = [&](double u, double v) { return (fv(u, v) - f0) / r; };
  // Slab height: the largest |beta| on a fine lattice of the kernel box, padded.
  double hb = 0;
  const int L = 200;
  for (int a = 0; a <= L; ++a) {
    double u = -1.1 + 2.2 * a / L;
    if (n == 1) hb = std::max(hb, std::fabs(beta(u, 0)));
    else
      for (int b = 0; b <= L; b += 4) hb = std::max(hb, std::fabs(beta(u, -1.1 + 2.2 * b / L)));
  }
  hb = 1.05 * hb + 1e-12;
  Rng rng(seed);
  double s1 = 0, s2 = 0;
  for (int k = 0; k < samples; ++k) {
    double u = rng.uniform(-1.1, 1.1), v = n == 2 ? rng.uniform(-1.1, 1.1) : 0.0;
    double s = rng.uniform(-hb, hb);
    double w = K.profile(std::hypot(u, v)) * K.profile(std::fabs(s));
    double val = w * ((s > 0 ? 1.0 : 0.0) - (s > beta(u, v) ? 1.0 : 0.0));
    s1 += val;
    s2 += val * val;
  }
  const double V = std::pow(2.2, n) * 2 * hb;
  const double mean = s1 / samples, var = std::max(0.0, s2 / samples - mean * mean);
  return {V * mean, V * std::sqrt(var / samples)};
}

double rho_coefficient_fft(const GridFunction& f, const Kernel& K, std::size_t i, std::size_t j, double r) {
  check_graph(f, K);
  RadialProfile p{K, f.dim};
  Spectrum S = make_spectrum(f, pad_for(p, RadiusGrid{}), 1e-13);
  TransformTable T(p, r * S.max_xi + 0.01);
  auto g = compensated(S, T, p.mass(), r);
  return (f.dim == 1 ? g[i] : g[i * S.M + j]) / r;
}

nlohmann::json GraphSquare::to_json() const {
  return {{"rho", rho}, {"psi", psi}, {"gap", gap}, {"grad_l2sq", grad_l2sq}, {"slope", slope}};
}

GraphSquare graph_square_pair(const GridFunction& f, const Kernel& K, const GapOptions& o) {
  check_graph(f, K);
  const int n = f.dim;
  const RadialProfile p{K, n};
  const std::vector<double> radii = o.fourier.grid.radii(f);
  Spectrum S = make_spectrum(f, pad_for(p, o.fourier.grid), o.fourier.spectrum_floor);
  const double c = p.mass();
  TransformTable T(p, radii.back() * S.max_xi + 0.01);
  GraphSquare out;
  out.slope = f.slope();
  out.grad_l2sq = f.grad_l2sq();

  // Support box in coordinates.
  auto box = f.support_box();
  double blo[2] = {0, 0}, bhi[2] = {0, 0};
  if (!box.empty())
    for (int a = 0; a < n; ++a) {
      blo[a] = f.x(box[2 * a]);
      bhi[a] = f.x(box[2 * a + 1]);
    }

  // Quadrature of the shell a in [a0, 1.1] where psi and rho differ; below a0
  // both kernels equal 1 on the whole vertical range |s| <= |beta|.
  const double bmax = 1.1 * std::max(out.slope * 1.02, 1e-12);
  const double a0 = std::sqrt(std::max(0.0, 1 - bmax * bmax)) * (1 - 1e-12);
  std::vector<std::pair<double, double>> shell;
  {
    const GaussRule& g = gauss_legendre(o.radial_nodes);
    for (auto [lo, hi] : {std::pair{a0, 1.0}, std::pair{1.0, 1.1}})
      for (int i = 0; i < o.radial_nodes; ++i)
        shell.emplace_back(0.5 * (lo + hi) + 0.5 * (hi - lo) * g.x[i], 0.5 * (hi - lo) * g.w[i]);
  }
  const GaussRule& gs = gauss_legendre(o.height_nodes);
  auto inner = [&](double a, double b) {
    // int_0^b (phi(sqrt(a^2 + s^2)) - phi(a)) ds
    const double pa = K.profile(a);
    double acc = 0;
    for (int i = 0; i < o.height_nodes; ++i) {
      double s = 0.5 * b * (1 + gs.x[i]);
      acc += gs.w[i] * (K.profile(std::sqrt(a * a + s * s)) - pa);
    }
    return 0.5 * b * acc;
  };
  std::vector<double> cosv, sinv;
  for (int k = 0; k < o.angular_nodes; ++k) {
    cosv.push_back(std::cos(kTwoPi * k / o.angular_nodes));
    sinv.push_back(std::sin(kTwoPi * k / o.angular_nodes));
  }

  const std::size_t tot = S.total();
  std::vector<std::vector<double>> Srho(radii.size()), Spsi(radii.size());
  run_radii(radii.size(), o.fourier.serial, [&](std::size_t k) {
    const double r = radii[k];
    std::vector<double> g = compensated(S, T, c, r);
    auto& sr = Srho[k];
    auto& sp = Spsi[k];
    sr.assign(tot, 0.0);
    sp.assign(tot, 0.0);
    for (std::size_t idx = 0; idx < tot; ++idx) {
      const double Ir = g[idx] / r;
      sr[idx] = Ir * Ir;
      const std::size_t i = n == 1 ? idx : idx / S.M, j = n == 1 ? 0 : idx % S.M;
      const double x0 = S.coord(i), y0 = n == 2 ? S.coord(j) : 0.0;
      bool near = !box.empty() && x0 + 1.1 * r >= blo[0] && x0 - 1.1 * r <= bhi[0];
      if (n == 2) near = near && y0 + 1.1 * r >= blo[1] && y0 - 1.1 * r <= bhi[1];
      double D = 0;
      if (near) {
        const double f0 = S.f[idx];
        if (n == 1) {
          for (const auto& [a, w] : shell)
            for (double sg : {-1.0, 1.0}) D += w * inner(a, (f.eval(x0 + sg * a * r) - f0) / r);
        } else {
          const double wt = kTwoPi / o.angular_nodes;
          for (const auto& [a, w] : shell)
            for (int t = 0; t < o.angular_nodes; ++t)
              D += w * wt * a * inner(a, (f.eval(x0 + a * r * cosv[t], y0 + a * r * sinv[t]) - f0) / r);
        }
      }
      sp[idx] = (Ir + D) * (Ir + D);
    }
  });

  const std::vector<double> w = log_weights(radii);
  const double cell = n == 1 ? f.h : f.h * f.h;
  // Area element of Gamma from central differences (flat outside the window).
  auto jac = [&](std::size_t idx) {
    const std::size_t i = n == 1 ? idx : idx / S.M, j = n == 1 ? 0 : idx % S.M;
    auto val = [&](long a, long b) -> double {
      if (a < 0 || b < 0 || a >= static_cast<long>(S.M) || b >= static_cast<long>(S.M)) return 0.0;
      return n == 1 ? S.f[a] : S.f[a * S.M + b];
    };
    const long a = static_cast<long>(i), b = static_cast<long>(j);
    double gx = (val(a + 1, b) - val(a - 1, b)) / (2 * f.h);
    double gy = n == 2 ? (val(a, b + 1) - val(a, b - 1)) / (2 * f.h) : 0.0;
    return std::sqrt(1 + gx * gx + gy * gy);
  };
  double rho = 0, psi = 0, gap = 0;
  for (std::size_t idx = 0; idx < tot; ++idx) {
    double a = 0, b = 0;
    for (std::size_t k = 0; k < radii.size(); ++k) {
      a += w[k] * Srho[k][idx];
      b += w[k] * Spsi[k][idx];
    }
    const double J = jac(idx);
    rho += 2 * a * J;
    psi += 2 * b * J;
    const double d = std::sqrt(2 * a) - std::sqrt(2 * b);
    gap += d * d * J;
  }
  // End estimates of the rho integral, shared by psi (the kernels agree to
  // leading order at both ends).
  ScaleIntegral ends;
  {
    const double rmin = radii.front(), R = radii.back(), m2 = p.moment2(), F = f.integral();
    ends.head = 0.25 * m2 * m2 * f.laplacian_l2sq() * rmin * rmin / 2;
    ends.tail = c * c * f.l2sq() / (2 * R * R) + F * F * (p.l2sq() - 2 * c * p(0)) / ((n + 2) * std::pow(R, n + 2));
  }
  out.rho = rho * cell + 2 * (ends.head + ends.tail);
  out.psi = psi * cell + 2 * (ends.head + ends.tail);
  out.gap = gap * cell;
  return out;
}

std::vector<SweepEntry> lips_sweep(const LipsSuite& s, const Kernel& K) {
  std::vector<SweepEntry> out;
  for (std::size_t i = 0; i < s.shapes.size(); ++i)
    for (double sl : s.slopes) {
      if (!(sl > 0)) throw PreconditionError("lips sweep: slopes must be positive");
      out.push_back({i, sl, graph_square_pair(s.shapes[i].with_slope(sl), K, s.options)});
    }
  return out;
}

Report rho_psi_gap(const std::vector<SweepEntry>& sweep, double slack) {
  Report rep;
  rep.lemma = "rho_psi_gap";
  rep.columns = {"shape", "slope", "gap", "grad_l2sq", "normalized", "normalized_over_C"};
  rep.tolerances = {{"slack", slack}};
  if (sweep.empty()) {
    rep.pass = false;
    return rep;
  }
  double smax = 0;
  for (const auto& e : sweep) smax = std::max(smax, e.slope);
  auto normalized = [](const SweepEntry& e) { return e.g.gap / (std::pow(e.slope, 4) * e.g.grad_l2sq); };
  double C = 0;
  std::map<std::size_t, double> own;
  for (const auto& e : sweep)
    if (e.slope == smax) {
      C = std::max(C, normalized(e));
      own[e.shape] = normalized(e);
    }
  rep.empirical_constant = C;
  bool ok = C > 0 && std::isfinite(C);
  double worst = 0;
  for (const auto& e : sweep) {
    double v = normalized(e);
    rep.add_row({static_cast<double>(e.shape), e.slope, e.g.gap, e.g.grad_l2sq, v, v / C});
    ok = ok && v <= (1 + slack) * C;
    double ref = own.count(e.shape) ? own[e.shape] : C;
    ok = ok && std::fabs(v / ref - 1) <= slack;
    worst = std::max(worst, std::fabs(v / ref - 1));
  }
  rep.values = {{"C", C}, {"max_relative_drift", worst}};
  rep.pass = ok;
  return rep;
}

Report verify_lips(const std::vector<SweepEntry>& sweep, double lo, double hi) {
  Report rep;
  rep.lemma = "lips";
  rep.columns = {"shape", "slope", "ratio_psi", "ratio_rho", "deviation"};
  rep.tolerances = {{"bracket", {lo, hi}}, {"spread", "strictly decreasing as slope decreases"}};
  std::map<double, double> spread, spread_range_lo, spread_range_hi;
  bool ok = !sweep.empty();
  for (const auto& e : sweep) {
    if (!(e.g.grad_l2sq > 0)) throw PreconditionError("verify_lips: ||grad f|| must be positive");
    double rp = e.g.psi / e.g.grad_l2sq, rr = e.g.rho / e.g.grad_l2sq;
    double dev = std::fabs(rp - rr) / rr;
    rep.add_row({static_cast<double>(e.shape), e.slope, rp, rr, dev});
    ok = ok && rp >= lo && rp <= hi;
    spread[e.slope] = std::max(spread[e.slope], dev);
    if (!spread_range_lo.count(e.slope)) {
      spread_range_lo[e.slope] = rp;
      spread_range_hi[e.slope] = rp;
    }
    spread_range_lo[e.slope] = std::min(spread_range_lo[e.slope], rp);
    spread_range_hi[e.slope] = std::max(spread_range_hi[e.slope], rp);
  }
  double prev = -1;
  nlohmann::json sp = nlohmann::json::array();
  for (const auto& [s, v] : spread) {  // ascending slope
    ok = ok && v > prev;
    prev = v;
    sp.push_back({{"slope", s}, {"deviation", v}, {"min_ratio", spread_range_lo[s]}, {"max_ratio", spread_range_hi[s]}});
  }
  rep.values = {{"spread", sp}};
  rep.pass = ok;
  return rep;
}

}  // namespace eps2
