#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include <json.hpp>

#include "eps2/coefficients.hpp"
#include "eps2/kernels.hpp"
#include "eps2/region.hpp"

namespace eps2 {

// Probability measure on finitely many points; the Riesz kernel is
// truncated at `delta`: max(|x - y|, delta)^-s, and (1/2pi) log(1/max(.)) for s = 0.
struct DiscreteMeasure {
  std::vector<Vec3> support;
  std::vector<double> masses;
  double delta = 0;
};

struct Energy {
  double total = 0;
  double self = 0;   // diagonal terms sum m_i^2 k(delta)
  double cross = 0;  // off-diagonal terms
};

Energy riesz_energy(const DiscreteMeasure& mu, double s);

struct CapacityOptions {
  double delta = 0;      // 0: half the net spacing
  int max_iter = 10000;
  double rel_tol = 1e-8;  // stop when the relative energy decrease drops below this
};

struct CapacityEstimate {
  double s = 0;
  double value = 0;     // 1 / energy (Cap_s); Cap_L for the logarithmic estimate
  double energy = 0;
  Energy parts;
  int iterations = 0;
  double residual = 0;  // upper bound on energy - inf energy over the net
  double delta = 0;
  double spacing = 0;
  bool monotone = true;  // energy never increased between iterates
  bool diverged = false;
  std::vector<double> masses;
  nlohmann::json to_json() const;  // masses omitted
};

// Median nearest-neighbour distance (0 for fewer than two points).
double net_spacing(const std::vector<Vec3>& K);

// Minimizes the truncated energy over probability vectors on K by projected
// gradient with Armijo backtracking. s in (0, dim), dim = 2 or 3.
CapacityEstimate capacity_s(const std::vector<Vec3>& K, int dim, double s, const CapacityOptions& o = {});
// Cap_L = exp(-2 pi inf I_0): `value` is Cap_L, `energy` the minimal log energy.
CapacityEstimate capacity_log(const std::vector<Vec3>& K, const CapacityOptions& o = {});

// Euclidean projection onto the probability simplex.
void project_simplex(std::vector<double>& v);

// ---- Hausdorff content ----------------------------------------------------------

struct Cube {
  Vec3 lo;
  double side = 0;
};

struct ContentOptions {
  int depth = 8;
  double resolution = 0;          // net spacing added to every piece's diameter
  std::optional<Cube> root;       // default: the bounding cube of K
};

// Minimum over dyadic trees of depth <= `depth` under the root of
// sum over leaves Q meeting K of (diam box(K cap Q) + resolution)^s.
double hausdorff_content(const std::vector<Vec3>& K, int dim, double s, const ContentOptions& o = {});
Cube bounding_cube(const std::vector<Vec3>& K, int dim, double pad = 0);

struct ChoquetResult {
  double value = 0;
  double lower = 0, upper = 0;  // equal when every distinct value of f is a level
  int levels = 0;
  bool exact = false;
};
// int_A f^p dH^s_inf = int_0^inf H^s_inf({f > t}) p t^{p-1} dt over the net A.
// With more distinct values than `level_grid`, levels are taken at quantiles
// and the lower/upper step sums bracket the integral.
ChoquetResult choquet_integral(const std::vector<Vec3>& A, const std::vector<double>& f, int dim, double s, double p,
                               int level_grid, const ContentOptions& o = {});

// ---- capacity density -------------------------------------------------------------

struct NetOptions {
  int points_per_radius = 16;  // grid step r / points_per_radius
  int bisection_steps = 40;
};

// Net of closed B(x, r) \ (Omega+ cup Omega-): free grid points plus boundary
// points located by bisection on grid edges joining Plus and Minus.
std::vector<Vec3> complement_net(const RegionPair& R, const Vec3& x, double r, const NetOptions& o, double* step = nullptr);

struct CdcReport {
  bool holds = false;
  double margin = 0;  // Cap - c r^s (Cap_L - c r for s = 0)
  double capacity = 0;
  double threshold = 0;
  std::size_t net_points = 0;
  double residual = 0;
  nlohmann::json to_json() const;
};
CdcReport cdc_check(const RegionPair& R, const Vec3& x, double r, double s, double c, const NetOptions& o = {});

// ---- thick points and eps_s (dim = 3) ------------------------------------------------

struct ThickOptions {
  int sphere_nodes = 400;  // lattice on S(x, r)
  int local_nodes = 48;    // net of each probed cap
};

struct ThickPoint {
  Vec3 y;
  Label side = Label::Free;  // half-space side of y (Plus for H, Minus for its complement)
  double dist_plane = 0;     // delta_{L_H}(y)
  bool candidate = false;    // y in S_H^i \ Omega^i
  bool thick = false;
  double capacity = 0;       // Cap_L of the probed set
  double margin = 0;         // capacity - c0 dist_plane
};

struct ThickSet {
  std::vector<ThickPoint> points;
  double spacing = 0;  // lattice spacing on the sphere
  std::size_t count() const;
};

ThickSet thick_points(const RegionPair& R, const Vec3& x, double r, const HalfSpace& H, double c0, double a,
                      const ThickOptions& o = {});

struct EpsSConfig {
  ThickOptions thick;
  int directions = 64;  // sphere lattice of normals before refinement
  int nm_iters = 40;
  int content_depth = 6;
  int level_grid = 32;
};

struct EpsSResult {
  double value = 0;
  HalfSpace H;
  std::size_t thick = 0;
  int probes = 0;
};
// r^-s Choquet integral over the thick set of (dist/r)^{2-s}, minimized over H.
double epsilon_s_given_H(const RegionPair& R, const Vec3& x, double r, double s, double c0, double a,
                         const HalfSpace& H, const EpsSConfig& cfg, std::size_t* thick = nullptr);
EpsSResult epsilon_s(const RegionPair& R, const Vec3& x, double r, double s, double c0, double a,
                     const EpsSConfig& cfg = {});

// ---- slicing ------------------------------------------------------------------------------

struct SlicingInput {
  int dim = 3;
  double r0 = 1;
  double tau = 0;  // slope bound of the graph
  std::function<double(const Vec3&)> graph;  // height over the first dim-1 coordinates
  Ball B;
  std::vector<Vec3> K;
  std::vector<Vec3> G;           // points of G on the graph
  std::vector<double> G_weights;  // H^n of the cell of each G point
  double s = 1.5;
  std::vector<double> radii;      // annulus centres (ascending); empty: step = annulus width
  CapacityOptions cap;
};

struct SlicingReport {
  double lhs = 0, rhs = 0, ratio = 0;
  double cap_K = 0, measure_G = 0;
  double annulus_width = 0;
  bool radius_ok = false;    // rad(B) <= r0/10
  bool distance_ok = false;  // dist(B, graph) >= 100 tau r0 on a sampled graph
  double dist_B_graph = 0;
  nlohmann::json to_json() const;
};
SlicingReport slicing_check(const SlicingInput& in);

}  // namespace eps2
