#pragma once

#include <string>

namespace eps2 {

// Bump profile: 1 on [-1, 1], 0 outside [-1.1, 1.1], C-infinity monotone joins.
double bump_profile(double t);

// Radial smoothing kernel psi(y) = phi(|y|).
struct Kernel {
  enum class Kind { Gaussian, Bump };
  Kind kind = Kind::Gaussian;

  double profile(double t) const;  // phi(t), t >= 0
  // Radius (in units of r) beyond which the profile is dropped: 4 for the
  // Gaussian (tail bounded separately), 1.1 for the bump.
  double support() const { return kind == Kind::Gaussian ? 4.0 : 1.1; }
  // c_psi = integral of psi over a half-space of R^dim.
  double c_psi(int dim) const;
  // Bound on the dropped Gaussian tail in normalized units.
  double tail_bound(int dim) const;
  const char* name() const { return kind == Kind::Gaussian ? "gaussian" : "bump"; }
};

Kernel parse_kernel(const std::string& s);

}  // namespace eps2
