#include <array>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "eps2/errors.hpp"
#include "eps2/fourier.hpp"
#include "eps2/kernel.hpp"
#include "eps2/numerics.hpp"
#include "eps2/rng.hpp"
#include "eps2/vec.hpp"

namespace eps2 {

namespace {

// Cubic Lagrange weights for nodes -1, 0, 1, 2 at offset u in [0, 1).
std::array<double, 4> cubic_weights(double u) {
  return {-u * (u - 1) * (u - 2) / 6, (u + 1) * (u - 1) * (u - 2) / 2, -(u + 1) * u * (u - 2) / 2,
          (u + 1) * u * (u - 1) / 6};
}

double cbump(double t) { return std::fabs(t) < 1 ? std::exp(1 - 1 / (1 - t * t)) : 0.0; }

GridFunction blank(int dim, std::size_t n, double window) {
  if (dim != 1 && dim != 2) throw PreconditionError("grid function: dim must be 1 or 2");
  if (n < 16) throw PreconditionError("grid function: need at least 16 points per axis");
  GridFunction f;
  f.dim = dim;
  f.n = n;
  f.h = window / static_cast<double>(n);
  f.lo = -0.5 * window;
  f.values.assign(f.size(), 0.0);
  return f;
}

// Separable discrete mollification by the normalized bump of radius m.
void mollify(GridFunction& f, double m) {
  if (m <= 0) return;
  const long w = static_cast<long>(std::floor(m / f.h));
  std::vector<double> k;
  for (long j = -w; j <= w; ++j) k.push_back(cbump(j * f.h / m));
  double s = 0;
  for (double v : k) s += v;
  for (double& v : k) v /= s;
  const long n = static_cast<long>(f.n);
  auto pass = [&](auto get, auto set, long lines) {
    std::vector<double> line(n), out(n);
    for (long l = 0; l < lines; ++l) {
      for (long i = 0; i < n; ++i) line[i] = get(l, i);
      for (long i = 0; i < n; ++i) {
        double acc = 0;
        for (long j = -w; j <= w; ++j) {
          long q = i - j;
          if (q >= 0 && q < n && line[q] != 0) acc += k[j + w] * line[q];
        }
        out[i] = acc;
      }
      for (long i = 0; i < n; ++i) set(l, i, out[i]);
    }
  };
  auto& v = f.values;
  if (f.dim == 1) {
    pass([&](long, long i) { return v[i]; }, [&](long, long i, double x) { v[i] = x; }, 1);
  } else {
    pass([&](long l, long i) { return v[i * n + l]; }, [&](long l, long i, double x) { v[i * n + l] = x; }, n);
    pass([&](long l, long i) { return v[l * n + i]; }, [&](long l, long i, double x) { v[l * n + i] = x; }, n);
  }
}

}  // namespace

double GridFunction::eval(double xq) const {
  if (dim != 1) throw PreconditionError("eval(x) on a 2D grid function");
  const double t = (xq - lo) / h;
  const double fl = std::floor(t);
  const long i = static_cast<long>(fl), nn = static_cast<long>(n);
  if (i < -2 || i > nn) return 0.0;
  auto w = cubic_weights(t - fl);
  double s = 0;
  for (int k = 0; k < 4; ++k) {
    long q = i - 1 + k;
    if (q >= 0 && q < nn) s += w[k] * values[q];
  }
  return s;
}

double GridFunction::eval(double xq, double yq) const {
  if (dim != 2) throw PreconditionError("eval(x, y) on a 1D grid function");
  const double tx = (xq - lo) / h, ty = (yq - lo) / h;
  const double fx = std::floor(tx), fy = std::floor(ty);
  const long i = static_cast<long>(fx), j = static_cast<long>(fy), nn = static_cast<long>(n);
  if (i < -2 || i > nn || j < -2 || j > nn) return 0.0;
  auto wx = cubic_weights(tx - fx), wy = cubic_weights(ty - fy);
  double s = 0;
  for (int a = 0; a < 4; ++a) {
    long p = i - 1 + a;
    if (p < 0 || p >= nn) continue;
    double row = 0;
    for (int b = 0; b < 4; ++b) {
      long q = j - 1 + b;
      if (q >= 0 && q < nn) row += wy[b] * values[p * nn + q];
    }
    s += wx[a] * row;
  }
  return s;
}

namespace {

// Value with zero extension.
struct Z {
  const GridFunction& f;
  long n;
  double operator()(long i, long j = 0) const {
    if (i < 0 || i >= n || j < 0 || (f.dim == 2 && j >= n)) return 0.0;
    return f.dim == 1 ? f.values[i] : f.values[i * n + j];
  }
};

}  // namespace

double GridFunction::slope() const {
  Z z{*this, static_cast<long>(n)};
  const long nn = static_cast<long>(n);
  double m = 0;
  if (dim == 1) {
    for (long i = 0; i < nn; ++i) m = std::max(m, std::fabs(z(i + 1) - z(i - 1)) / (2 * h));
  } else {
    for (long i = 0; i < nn; ++i)
      for (long j = 0; j < nn; ++j) {
        double gx = (z(i + 1, j) - z(i - 1, j)) / (2 * h), gy = (z(i, j + 1) - z(i, j - 1)) / (2 * h);
        m = std::max(m, std::hypot(gx, gy));
      }
  }
  return m;
}

double GridFunction::grad_l2sq() const {
  Z z{*this, static_cast<long>(n)};
  const long nn = static_cast<long>(n);
  auto d4 = [&](auto g, long i) { return (-g(i + 2) + 8 * g(i + 1) - 8 * g(i - 1) + g(i - 2)) / (12 * h); };
  double s = 0;
  if (dim == 1) {
    for (long i = -2; i < nn + 2; ++i) {
      double d = d4([&](long k) { return z(k); }, i);
      s += d * d;
    }
    return s * h;
  }
  for (long i = -2; i < nn + 2; ++i)
    for (long j = -2; j < nn + 2; ++j) {
      double gx = d4([&](long k) { return z(k, j); }, i), gy = d4([&](long k) { return z(i, k); }, j);
      s += gx * gx + gy * gy;
    }
  return s * h * h;
}

double GridFunction::l2sq() const {
  double s = 0;
  for (double v : values) s += v * v;
  return s * (dim == 1 ? h : h * h);
}

double GridFunction::integral() const {
  double s = 0;
  for (double v : values) s += v;
  return s * (dim == 1 ? h : h * h);
}

double GridFunction::laplacian_l2sq() const {
  Z z{*this, static_cast<long>(n)};
  const long nn = static_cast<long>(n);
  const double h2 = h * h;
  double s = 0;
  if (dim == 1) {
    for (long i = -1; i <= nn; ++i) {
      double d = (z(i + 1) - 2 * z(i) + z(i - 1)) / h2;
      s += d * d;
    }
    return s * h;
  }
  for (long i = -1; i <= nn; ++i)
    for (long j = -1; j <= nn; ++j) {
      double d = (z(i + 1, j) + z(i - 1, j) + z(i, j + 1) + z(i, j - 1) - 4 * z(i, j)) / h2;
      s += d * d;
    }
  return s * h2;
}

double GridFunction::hessian_ball_form() const {
  Z z{*this, static_cast<long>(n)};
  const long nn = static_cast<long>(n);
  const double h2 = h * h;
  double s = 0;
  if (dim == 1) {
    for (long i = -1; i <= nn; ++i) {
      double d = (z(i + 1) - 2 * z(i) + z(i - 1)) / h2;
      s += 0.4 * d * d;
    }
    return s * h;
  }
  for (long i = -1; i <= nn; ++i)
    for (long j = -1; j <= nn; ++j) {
      double a = (z(i + 1, j) - 2 * z(i, j) + z(i - 1, j)) / h2;
      double b = (z(i, j + 1) - 2 * z(i, j) + z(i, j - 1)) / h2;
      double c = (z(i + 1, j + 1) - z(i + 1, j - 1) - z(i - 1, j + 1) + z(i - 1, j - 1)) / (4 * h2);
      s += kPi / 8 * (a * a + b * b) + kPi / 24 * (4 * c * c + 2 * a * b);
    }
  return s * h2;
}

std::vector<std::size_t> GridFunction::support_box() const {
  std::size_t lo_i = n, hi_i = 0, lo_j = n, hi_j = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < (dim == 1 ? 1 : n); ++j)
      if (at(i, j) != 0) {
        lo_i = std::min(lo_i, i);
        hi_i = std::max(hi_i, i);
        lo_j = std::min(lo_j, j);
        hi_j = std::max(hi_j, j);
      }
  if (lo_i > hi_i) return {};
  if (dim == 1) return {lo_i, hi_i};
  return {lo_i, hi_i, lo_j, hi_j};
}

void GridFunction::validate() const {
  if (dim != 1 && dim != 2) throw PreconditionError("grid function: dim must be 1 or 2");
  if (values.size() != size()) throw PreconditionError("grid function: value count does not match the grid");
  if (!(h > 0) || !std::isfinite(lo)) throw PreconditionError("grid function: bad spacing or origin");
  for (double v : values)
    if (!std::isfinite(v)) throw PreconditionError("grid function: non-finite value");
  const std::size_t band = static_cast<std::size_t>(std::ceil(0.1 * static_cast<double>(n)));
  auto box = support_box();
  if (box.empty()) return;
  for (std::size_t a = 0; a < box.size(); a += 2)
    if (box[a] < band || box[a + 1] + band >= n)
      throw PreconditionError("grid function: support must leave a zero margin of 10% of the window");
}

GridFunction GridFunction::translated(long di, long dj) const {
  GridFunction g = *this;
  std::fill(g.values.begin(), g.values.end(), 0.0);
  const long nn = static_cast<long>(n);
  for (long i = 0; i < nn; ++i) {
    long p = i + di;
    if (p < 0 || p >= nn) continue;
    if (dim == 1) {
      g.values[p] = values[i];
      continue;
    }
    for (long j = 0; j < nn; ++j) {
      long q = j + dj;
      if (q >= 0 && q < nn) g.values[p * nn + q] = values[i * nn + j];
    }
  }
  return g;
}

GridFunction GridFunction::scaled(double lambda) const {
  GridFunction g = *this;
  for (double& v : g.values) v *= lambda;
  return g;
}

GridFunction GridFunction::with_slope(double target) const {
  double s = slope();
  if (!(s > 0)) throw PreconditionError("with_slope: function is constant");
  return scaled(target / s);
}

GridFunction bump_function(int dim, std::size_t n, double window, double radius, double height) {
  GridFunction f = blank(dim, n, window);
  for (std::size_t i = 0; i < n; ++i) {
    if (dim == 1) {
      f.values[i] = height * cbump(f.x(i) / radius);
      continue;
    }
    for (std::size_t j = 0; j < n; ++j) f.values[i * n + j] = height * cbump(std::hypot(f.x(i), f.x(j)) / radius);
  }
  f.validate();
  return f;
}

GridFunction smoothed_tent(int dim, std::size_t n, double window, double radius, double smoothing, double height) {
  GridFunction f = blank(dim, n, window);
  for (std::size_t i = 0; i < n; ++i) {
    if (dim == 1) {
      f.values[i] = height * std::max(0.0, 1 - std::fabs(f.x(i)) / radius);
      continue;
    }
    for (std::size_t j = 0; j < n; ++j)
      f.values[i * n + j] = height * std::max(0.0, 1 - std::hypot(f.x(i), f.x(j)) / radius);
  }
  mollify(f, smoothing);
  f.validate();
  return f;
}

GridFunction random_lipschitz(int dim, std::size_t n, double window, double radius, int knots, std::uint64_t seed,
                              double smoothing) {
  if (knots < 2) throw PreconditionError("random_lipschitz: need at least 2 knot intervals");
  GridFunction f = blank(dim, n, window);
  Rng rng(seed);
  const int K = knots;
  std::vector<double> kv(dim == 1 ? K + 1 : (K + 1) * (K + 1), 0.0);
  for (int a = 1; a < K; ++a) {
    if (dim == 1) {
      kv[a] = rng.uniform(-1, 1);
      continue;
    }
    for (int b = 1; b < K; ++b) kv[a * (K + 1) + b] = rng.uniform(-1, 1);
  }
  const double step = 2 * radius / K;
  auto locate = [&](double x, int& k, double& u) {
    double t = (x + radius) / step;
    if (t <= 0 || t >= K) return false;
    k = std::min(K - 1, static_cast<int>(std::floor(t)));
    u = t - k;
    return true;
  };
  for (std::size_t i = 0; i < n; ++i) {
    int ka, kb;
    double ua, ub;
    if (!locate(f.x(i), ka, ua)) continue;
    if (dim == 1) {
      f.values[i] = (1 - ua) * kv[ka] + ua * kv[ka + 1];
      continue;
    }
    for (std::size_t j = 0; j < n; ++j) {
      if (!locate(f.x(j), kb, ub)) continue;
      auto v = [&](int a, int b) { return kv[a * (K + 1) + b]; };
      f.values[i * n + j] = (1 - ua) * ((1 - ub) * v(ka, kb) + ub * v(ka, kb + 1)) +
                            ua * ((1 - ub) * v(ka + 1, kb) + ub * v(ka + 1, kb + 1));
    }
  }
  mollify(f, smoothing);
  f.validate();
  return f;
}

void write_grid_csv(const std::string& path, const GridFunction& f) {
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < f.n; ++i) {
    if (f.dim == 1) {
      rows.push_back({f.x(i), f.values[i]});
      continue;
    }
    for (std::size_t j = 0; j < f.n; ++j) rows.push_back({f.x(i), f.x(j), f.values[i * f.n + j]});
  }
  write_csv(path, f.dim == 1 ? std::vector<std::string>{"x", "f"} : std::vector<std::string>{"x", "y", "f"}, rows);
}

GridFunction read_grid_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open grid file");
  std::string line;
  if (!std::getline(in, line)) throw ConfigError(path + ": empty grid file");
  int dim;
  if (line == "x,f") dim = 1;
  else if (line == "x,y,f") dim = 2;
  else throw ConfigError(path + ":1: header must be 'x,f' or 'x,y,f'");
  std::vector<std::array<double, 3>> rows;
  std::size_t ln = 1;
  while (std::getline(in, line)) {
    ++ln;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::array<double, 3> r{};
    int k = 0;
    while (std::getline(ss, cell, ',')) {
      if (k > dim) throw ConfigError(path + ":" + std::to_string(ln) + ": too many columns");
      try {
        std::size_t used = 0;
        r[k] = std::stod(cell, &used);
        if (used != cell.size()) throw std::invalid_argument(cell);
      } catch (const std::exception&) {
        throw ConfigError(path + ":" + std::to_string(ln) + ": not a number: '" + cell + "'");
      }
      ++k;
    }
    if (k != dim + 1) throw ConfigError(path + ":" + std::to_string(ln) + ": expected " + std::to_string(dim + 1) + " columns");
    rows.push_back(r);
  }
  GridFunction f;
  f.dim = dim;
  std::size_t n = rows.size();
  if (dim == 2) {
    n = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(rows.size()))));
    if (n * n != rows.size()) throw ConfigError(path + ": 2D grid needs n^2 rows");
  }
  if (n < 16) throw ConfigError(path + ": need at least 16 points per axis");
  f.n = n;
  f.lo = rows[0][0];
  f.h = dim == 1 ? rows[1][0] - rows[0][0] : rows[n][0] - rows[0][0];
  if (!(f.h > 0)) throw ConfigError(path + ": grid spacing must be positive");
  const double tol = 1e-9 * std::max(f.h, std::fabs(f.lo));
  f.values.resize(rows.size());
  for (std::size_t q = 0; q < rows.size(); ++q) {
    std::size_t i = dim == 1 ? q : q / n, j = dim == 1 ? 0 : q % n;
    bool ok = std::fabs(rows[q][0] - f.x(i)) <= tol * (1 + i) && (dim == 1 || std::fabs(rows[q][1] - f.x(j)) <= tol * (1 + j));
    if (!ok) throw ConfigError(path + ":" + std::to_string(q + 2) + ": sample off the uniform grid");
    f.values[q] = rows[q][dim];
  }
  try {
    f.validate();
  } catch (const PreconditionError& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return f;
}

}  // namespace eps2
