#include "eps2/kernel.hpp"

#include <cmath>

#include "eps2/errors.hpp"
#include "eps2/numerics.hpp"
#include "eps2/vec.hpp"

namespace eps2 {

double bump_profile(double t) {
  t = std::fabs(t);
  if (t <= 1.0) return 1.0;
  if (t >= 1.1) return 0.0;
  double u = (1.1 - t) / 0.1;
  double a = std::exp(-1.0 / u), b = std::exp(-1.0 / (1.0 - u));
  return a / (a + b);
}

double Kernel::profile(double t) const {
  return kind == Kind::Gaussian ? std::exp(-t * t) : bump_profile(t);
}

double Kernel::c_psi(int dim) const {
  if (kind == Kind::Gaussian) return std::pow(kPi, 0.5 * dim) / 2.0;
  const int n = dim - 1;
  double rad = 1.0 / (n + 1.0);  // integral of t^n over [0, 1]
  rad += adaptive_gk([n](double t) { return bump_profile(t) * std::pow(t, n); }, 1.0, 1.1, 1e-15);
  return 0.5 * sphere_area(dim) * rad;
}

double Kernel::tail_bound(int dim) const { return kind == Kind::Gaussian ? std::exp(-16.0) * sphere_area(dim) : 0.0; }

Kernel parse_kernel(const std::string& s) {
  Kernel k;
  if (s == "gaussian") k.kind = Kernel::Kind::Gaussian;
  else if (s == "bump") k.kind = Kernel::Kind::Bump;
  else throw ConfigError("unknown kernel '" + s + "'");
  return k;
}

}  // namespace eps2
