#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "eps2/kernel.hpp"
#include "eps2/report.hpp"

namespace eps2 {

// Samples of f on the uniform grid lo + i h, i < n, along each of `dim` axes
// (row-major, last axis fastest). The window is [lo, lo + n h)^dim.
struct GridFunction {
  int dim = 1;
  std::size_t n = 0;
  double lo = 0, h = 0;
  std::vector<double> values;

  double window() const { return static_cast<double>(n) * h; }
  std::size_t size() const { return dim == 1 ? n : n * n; }
  double x(std::size_t i) const { return lo + static_cast<double>(i) * h; }
  double at(std::size_t i, std::size_t j = 0) const { return dim == 1 ? values[i] : values[i * n + j]; }

  // Cubic Lagrange interpolation; 0 outside the window.
  double eval(double x) const;
  double eval(double x, double y) const;

  double slope() const;      // max |grad f|, central differences
  double grad_l2sq() const;  // ||grad f||_2^2, fourth-order differences
  double l2sq() const;
  double integral() const;
  // Second-derivative norms used by the small-r estimates:
  // ||Laplacian f||^2 and int (pi/8 (f_xx^2 + f_yy^2) + pi/24 (4 f_xy^2 + 2 f_xx f_yy)) (n = 2),
  // int 2/5 f''^2 (n = 1).
  double laplacian_l2sq() const;
  double hessian_ball_form() const;
  // Smallest index box containing the nonzero samples: [first, last] per axis.
  std::vector<std::size_t> support_box() const;

  // Throws PreconditionError unless the outer 10% band of each side is zero
  // and every value is finite.
  void validate() const;

  GridFunction translated(long di, long dj = 0) const;  // shift by whole cells, zero fill
  GridFunction scaled(double lambda) const;
  GridFunction with_slope(double target) const;  // rescaled so slope() == target
};

// Generators on the window [-W/2, W/2)^dim, centred at 0.
// C-infinity bump height * exp(1 - 1 / (1 - |x/radius|^2)).
GridFunction bump_function(int dim, std::size_t n, double window, double radius, double height = 1);
// Tent (cone for dim 2) of the given radius, mollified by a tensor bump of radius `smoothing`.
GridFunction smoothed_tent(int dim, std::size_t n, double window, double radius, double smoothing, double height = 1);
// Piecewise linear interpolation of seeded uniform values on a knots^dim lattice
// over [-radius, radius]^dim (zero on its boundary), mollified like the tent.
GridFunction random_lipschitz(int dim, std::size_t n, double window, double radius, int knots, std::uint64_t seed,
                              double smoothing);

// CSV dump: header "x,f" (dim 1) or "x,y,f" (dim 2), one row per sample.
void write_grid_csv(const std::string& path, const GridFunction& f);
GridFunction read_grid_csv(const std::string& path);

// Radial profile on R^dim: phi(x) = weight * K.profile(|x| / scale).
struct RadialProfile {
  Kernel K{Kernel::Kind::Bump};
  int dim = 1;
  double scale = 1, weight = 1;

  double operator()(double t) const { return weight * K.profile(t / scale); }
  double support() const { return K.support() * scale; }
  double mass() const;     // c(phi) = int phi, by quadrature of the profile
  double moment2() const;  // int phi x_1^2
  double l2sq() const;     // int phi^2
  // phi-hat(t e_1) with the convention f-hat(xi) = int f e^{-2 pi i x.xi}.
  double transform(double t) const;
  RadialProfile unit_mass() const;
};

// phi-hat on [0, t_max] at step 1/256, cubic interpolation; direct evaluation beyond.
// dim 1 tables come from one long FFT of the sampled profile.
class TransformTable {
 public:
  TransformTable(const RadialProfile& p, double t_max);
  double operator()(double t) const;

 private:
  RadialProfile p_;
  double dt_ = 1.0 / 256, t_max_ = 0;
  std::vector<double> v_;
};

struct PlancherelConstant {
  double value = 0;  // c, with LHS = c ||grad f||^2
  double T = 0;      // int_0^inf |phi-hat(t) - phi-hat(0)|^2 dt / t^3 = 4 pi^2 c
  double tail = 0;   // analytic part beyond t_max
  double t_max = 0;
  int depth = 0;
};
struct ConstantOptions {
  int depth = 12;      // adaptive Gauss-Kronrod recursion limit per unit interval
  double t_max = 64;
  double tol = 1e-12;  // absolute, per unit interval
};
PlancherelConstant plancherel_constant(const RadialProfile& p, const ConstantOptions& o = {});
// c' of the compensated second-difference identity, for unit-mass profiles:
// I / (4 pi^2), I = int_0^inf int_{|y|<=t} |2 pi i y_1 phi-hat(t) + 1 - e^{2 pi i y_1}|^2 dy dt / t^{n+3}.
PlancherelConstant second_diff_constant(const RadialProfile& p, const ConstantOptions& o = {});

struct RadiusGrid {
  double factor = 1.0905077326652577;  // 2^(1/8)
  double min_cells = 4;                // r_min = min_cells * h
  double max_fraction = 0.25;          // r_max = window * max_fraction
  std::vector<double> radii(const GridFunction& f) const;
};

struct FourierOptions {
  RadiusGrid grid;
  double spectrum_floor = 1e-13;  // Fourier modes below floor * max |f-hat| are dropped
  bool serial = false;            // run the per-radius loop on one thread
};

// A truncated scale integral int_0^inf g(r) dr / r on the radius grid, plus
// the two end estimates; value = grid_part + head + tail.
struct ScaleIntegral {
  double value = 0, grid_part = 0, head = 0, tail = 0;
  std::vector<double> radii, per_radius;  // g(r_k)
  double plancherel_defect = 0;           // relative mismatch of sum |f|^2 and sum |F|^2 / M^n
  nlohmann::json to_json() const;
};

// int int |(f * phi_r - c(phi) f) / r|^2 dr/r dx with phi = p (not normalized).
ScaleIntegral plancherel_lhs(const GridFunction& f, const RadialProfile& p, const FourierOptions& o = {});
// Per-sample integrand at one radius, on the padded grid (length (pad n)^dim).
std::vector<double> plancherel_profile(const GridFunction& f, const RadialProfile& p, double r, int* pad = nullptr);

// int int int_{|y-x|<=r} |(c^-1 (phi_r * grad f)(x).(y-x) + f(x) - f(y)) / r|^2 dy/r^n dx dr/r.
ScaleIntegral second_diff_lhs(const GridFunction& f, const RadialProfile& p, const FourierOptions& o = {});
std::vector<double> second_diff_profile(const GridFunction& f, const RadialProfile& p, double r, int* pad = nullptr);

// Discrete Parseval check on the padded grid: |sum f^2 - sum |F|^2 / M^dim| / sum f^2.
double discrete_plancherel_defect(const GridFunction& f, int pad = 2);

Report verify_fourier_identity(const GridFunction& f, const RadialProfile& p, double tol = 0.02,
                               const FourierOptions& o = {});
Report verify_second_diff(const GridFunction& f, const RadialProfile& p, double tol = 0.03,
                          const FourierOptions& o = {});

// int_Gamma A_rho^2 over x_0 (the flat measure of the graph reduction): 2 * plancherel_lhs.
// Requires the bump kernel and slope <= 1/10.
double graph_square_function(const GridFunction& f, const Kernel& K, const FourierOptions& o = {});

struct McEstimate {
  double mean = 0, sigma = 0;  // sigma: standard error of the mean
};
// c_rho - r^-(n+1) int_{Omega+} rho((y - x)/r) dy at x = (x0, f(x0)) by uniform
// sampling of the slab between the graph and the horizontal plane through x.
McEstimate rho_coefficient_mc(const GridFunction& f, const Kernel& K, double x0, double y0, double r, int samples,
                              std::uint64_t seed);
// Signed (phi_r * f - c f)(x) / r at a grid node, via the transform.
double rho_coefficient_fft(const GridFunction& f, const Kernel& K, std::size_t i, std::size_t j, double r);

struct GraphSquare {
  double rho = 0, psi = 0;  // int_Gamma A^2 dH^n, grid part plus the rho end estimates
  double gap = 0;           // int_Gamma |A_rho - A_psi|^2 dH^n
  double grad_l2sq = 0, slope = 0;
  nlohmann::json to_json() const;
};
struct GapOptions {
  FourierOptions fourier;
  int radial_nodes = 24;   // Gauss nodes per panel across the kernel transition shell
  int height_nodes = 6;    // Gauss nodes in the vertical integral
  int angular_nodes = 64;  // dim 2 only
};
// Both square functions on Gamma: A_rho from the transform, A_psi = A_rho plus
// the directly integrated difference over the shell where psi and rho differ.
GraphSquare graph_square_pair(const GridFunction& f, const Kernel& K, const GapOptions& o = {});

// Slope sweep over a suite of shapes: each shape is rescaled to every slope.
struct LipsSuite {
  std::vector<GridFunction> shapes;
  std::vector<double> slopes{0.02, 0.05, 0.1};
  GapOptions options;
};
struct SweepEntry {
  std::size_t shape = 0;
  double slope = 0;
  GraphSquare g;
};
std::vector<SweepEntry> lips_sweep(const LipsSuite& s, const Kernel& K);
// int_Gamma |A_rho - A_psi|^2 <= C slope^4 ||grad f||^2 with C fit at the largest
// slope; every normalized gap within (1 +- slack) of its own largest-slope value.
Report rho_psi_gap(const std::vector<SweepEntry>& sweep, double slack = 0.5);
// int_Gamma A_psi^2 / ||grad f||^2 in [lo, hi], and its deviation from the
// rho ratio shrinking strictly as the slope decreases.
Report verify_lips(const std::vector<SweepEntry>& sweep, double lo = 0.125, double hi = 8);

}  // namespace eps2
