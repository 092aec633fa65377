#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "eps2/kernel.hpp"
#include "eps2/sphere.hpp"

namespace eps2 {

// H = {y : (y - anchor).normal > 0}; the normal points into H.
struct HalfSpace {
  Vec3 anchor;
  Vec3 normal;
};

struct Ball {
  Vec3 center;
  double radius = 1;
};

// {y : (y - point).normal = 0}
struct Hyperplane {
  Vec3 point;
  Vec3 normal;
};

struct SearchConfig {
  int grid2d = 720;
  double golden_tol = 1e-6;
  int grid3d = 2000;
  int nm_iters = 200;
  // 2D only: also probe every angle where the objective can change, which
  // makes the returned value the exact minimum for the given quadrature.
  bool breakpoints = true;
};

struct CoefficientRecord {
  Vec3 x;
  double r = 0;
  double eps = 0;
  HalfSpace eps_halfspace;
  double a_sym = 0;
  double gamma_sym = 0;
  double g_ball = 0;
  double a_psi_plus = 0, a_psi_minus = 0;
  double quad_error = 0;
};

struct EpsResult {
  double value = 0;
  HalfSpace H;
  long probes = 0;
};

double epsilon_given_H(const SphereView& v, const HalfSpace& H);
double epsilon_given_H(const RegionPair& R, const Vec3& x, double r, const HalfSpace& H, const QuadSpec& q);
EpsResult epsilon(const SphereView& v, const SearchConfig& cfg = {});
EpsResult epsilon(const RegionPair& R, const Vec3& x, double r, const QuadSpec& q, const SearchConfig& cfg = {});

// Per-side values; the coefficient is the max over the two sides.
std::pair<double, double> asym_a_sides(const SphereView& v);
std::pair<double, double> gamma_sides(const SphereView& v);
double asym_a(const SphereView& v);
double gamma_sym(const SphereView& v);
double asym_a(const RegionPair& R, const Vec3& x, double r, const QuadSpec& q);
double gamma_sym(const RegionPair& R, const Vec3& x, double r, const QuadSpec& q);

struct RadialConfig {
  int order = 16;   // Gauss points per panel (exact mode)
  int panels = 24;  // equal panels for sampled modes
  int sampled_order = 4;
};

double g_ball(const RegionPair& R, const Vec3& x, double r, const QuadSpec& q, const RadialConfig& rc = {});
std::pair<double, double> a_psi(const RegionPair& R, const Vec3& x, double r, const Kernel& K, const QuadSpec& q,
                                const RadialConfig& rc = {});

CoefficientRecord coefficients(const RegionPair& R, const Vec3& x, double r, const QuadSpec& q,
                               const SearchConfig& sc = {}, const Kernel& K = {}, const RadialConfig& rc = {});

// Volume integral over B(c, rho) of pred(y, label), by spherical shells.
// Exact in angle for 2D exact mode; `lines` lists extra boundaries the
// predicate depends on, as (normal, offset) pairs.
double shell_volume(const RegionPair& R, const Vec3& c, double rho, const QuadSpec& q,
                    const std::vector<std::pair<Vec3, double>>& lines,
                    const std::function<bool(const Vec3&, Label)>& pred, const RadialConfig& rc = {});

struct CorkscrewConfig {
  double c1 = 0.1;        // minimum radius ratio
  int screen_samples = 256;
  int samples = 4000;     // verification samples
  int max_candidates = 20000;
  double z = 1.645;       // one-sided confidence multiplier
  std::uint64_t seed = 7;
};

struct CorkscrewResult {
  bool found = false;
  Ball ball;
  double fraction = 0;      // estimated |B' \ Omega^side| / |B'|
  double upper_bound = 0;   // fraction + z * stderr
  double confidence = 0.95;
  long candidates = 0;
};

CorkscrewResult find_corkscrew(const RegionPair& R, const Ball& B, Label side, double beta, const CorkscrewConfig& cfg = {});

struct SplitFractions {
  double plus = 0, minus = 0;
  bool swapped = false;  // Omega+ matched with the negative side of L
};

SplitFractions splitting_fractions(const RegionPair& R, const Ball& B, const Hyperplane& L, double band,
                                   const QuadSpec& q = {}, const RadialConfig& rc = {});

std::vector<std::string> coefficient_csv_header(int dim);
std::vector<std::string> coefficient_csv_row(const CoefficientRecord& c, int dim);

}  // namespace eps2
