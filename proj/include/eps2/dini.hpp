#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "eps2/coefficients.hpp"
#include "eps2/report.hpp"

namespace eps2 {

struct DiniResult {
  std::string integrand;
  double r_min = 0, r_max = 0, factor = 0;
  int power = 2;  // integrand is f^power
  double value = 0;
  std::vector<std::pair<double, double>> per_scale;  // (r, f(r))

  // Trapezoid sum in log r of f(r)^power over per_scale.
  double recompute() const;
};

inline constexpr double kDefaultGridFactor = 1.0905077326652577;  // 2^(1/8)

// Trapezoid rule in u = log r for f(r)^2 on the grid r_min * factor^k.
DiniResult dini(const std::function<double(double)>& f, double r_min, double r_max, double factor = kDefaultGridFactor,
                const std::string& label = "f");
// Same, with f already tabulated on the grid (f evaluated in parallel by the
// caller or reused between integrals).
DiniResult dini_tabulated(const std::vector<double>& r, const std::vector<double>& f, double factor,
                          const std::string& label, int power = 2);

struct HarnessConfig {
  QuadSpec quad;
  SearchConfig search;
  RadialConfig radial;
  Kernel kernel;
  double r_min = 0;  // 0: 1e-3 * scene scale
  double factor = kDefaultGridFactor;
};

// 2a <= gamma <= 2eps at every grid radius, tolerance = 3 * quad_error.
Report verify_chain(const RegionPair& R, const Vec3& x, const std::vector<double>& radii, const HarnessConfig& cfg = {});

// int_0^R a_psi^i(r)^2 dr/r against int_0^{MR} eps(r)^2 dr/r plus the kernel
// tail term; reports the empirical constant for each side.
Report verify_smoothed_domination(const RegionPair& R, const Vec3& x, double R_max, double M,
                                  const HarnessConfig& cfg = {});

// int g^2 <= C1 int gamma^2 <= 4 C1 int eps^2 (second step is exact).
Report verify_g_domination(const RegionPair& R, const Vec3& x, double R_max, const HarnessConfig& cfg = {});

// sigma_n int_M^inf phi(t) t^n sqrt(log+(t/M)) dt.
double kernel_tail(const Kernel& K, int dim, double M);

}  // namespace eps2
