#pragma once

#include <array>
#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace eps2 {

struct GaussRule {
  std::vector<double> x, w;  // on [-1, 1]
};

const GaussRule& gauss_legendre(int n);

// Integral of f over [a, b] split at `cuts`. Each panel uses the substitution
// t = a + (b - a)(3s^2 - 2s^3), which smooths square-root endpoint behaviour,
// followed by an n-point Gauss rule.
double panel_integral(double a, double b, std::vector<double> cuts, const std::function<double(double)>& f, int n = 16);
// Same panels, several integrands evaluated together at each node.
std::vector<double> panel_integral_multi(double a, double b, std::vector<double> cuts,
                                         const std::function<void(double, std::vector<double>&)>& f, std::size_t k,
                                         int n = 16);
// Node/weight list for the panel rule (weights include the Jacobian).
std::vector<std::pair<double, double>> panel_nodes(double a, double b, std::vector<double> cuts, int n = 16);

// Plain composite Gauss-Legendre on [a, b] with `panels` equal panels.
double composite_gauss(double a, double b, int panels, int n, const std::function<double(double)>& f);

// Adaptive Gauss-Kronrod (7-15) on [a, b].
double adaptive_gk(const std::function<double(double)>& f, double a, double b, double tol, int max_depth = 40);

// Golden-section minimization of a unimodal f on [a, b].
std::pair<double, double> golden_min(const std::function<double(double)>& f, double a, double b, double tol);

// Nelder-Mead in two variables starting from p0 with initial step h.
std::pair<std::array<double, 2>, double> nelder_mead2(const std::function<double(const std::array<double, 2>&)>& f,
                                                      std::array<double, 2> p0, double h, int iters);

// Geometric grid r_min * factor^k, last point clipped to r_max.
std::vector<double> log_grid(double r_min, double r_max, double factor);

// Trapezoid rule in u = log r of g over the given grid.
double trapezoid_log(const std::vector<double>& r, const std::vector<double>& g);

// Shortest round-trip decimal for doubles.
std::string fmt_double(double v);

}  // namespace eps2
