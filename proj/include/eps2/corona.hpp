#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <json.hpp>

#include "eps2/cloud.hpp"

namespace eps2 {

// ---- densities, good balls, stopping heights ------------------------------

double theta_density(const WeightedCloud& mu, const Ball& B);

// Theta_mu(B) >= theta, E meets B, and the beta_inf plane of E in B makes an
// angle <= alpha with the reference normal.
bool ball_is_good(const WeightedCloud& mu, const std::vector<Vec3>& E, const Ball& B, double theta, double alpha,
                  const Vec3& ref_normal);

// Descending grid 50 r0 f^-k down to r0/128. When the scene is smaller than
// 50 r0 the grid starts at the smallest value >= max(diam, 2 r0) instead.
struct StopGrid {
  std::vector<double> radii;  // descending
  double requested_top = 0;   // 50 r0
  double top = 0;
  bool clipped = false;
  double factor = 0;
  static StopGrid make(double r0, double scene_diam, double factor, double top_multiple = 50,
                         double bottom_divisor = 128);
};

enum class StopCause { None, Density, Angle };

struct StopInfo {
  double h = 0;            // 0 when every grid radius is good
  int h_index = -1;        // grid index of the smallest very good radius
  int fail_index = -1;     // first failing grid index, -1 if none
  StopCause cause = StopCause::None;
  double stop_density = 0; // Theta at the failing radius
};

// Scan of the grid from the top. Balls of radius >= containing_radius
// (= |x - x0| + r0, so they contain B0) count as good without testing.
// `fits`, when given, receives the fit of every tested good ball by grid index.
struct GoodTester {
  std::function<double(const Ball&)> density;
  std::function<bool(const Ball&, BetaFit&)> fit;  // false when E misses B
  double theta = 0, alpha = 0;
  Vec3 ref;
};
StopInfo stopping_height(const GoodTester& t, const Vec3& x, double containing_radius, const StopGrid& grid,
                         std::vector<BetaFit>* fits = nullptr);

// ---- d and D ----------------------------------------------------------------

// d(x) = inf over (z, r) in VG of |x - z| + r; +inf for an empty family.
double d_function(const Vec3& x, const std::vector<Ball>& vg);

// min_i |p - c_i| + h_i over m-dimensional centres, with a kd-tree.
class ConeField {
 public:
  ConeField() = default;
  ConeField(int m, std::vector<Vec3> centres, std::vector<double> offsets);
  // value and minimizing index (-1 when empty)
  std::pair<double, int> min_point(const Vec3& p) const;
  // inf over the box [lo, hi] (first m coordinates)
  std::pair<double, int> min_box(const Vec3& lo, const Vec3& hi) const;
  double operator()(const Vec3& p) const { return min_point(p).first; }
  std::size_t size() const { return c_.size(); }

 private:
  struct Node {
    Vec3 lo, hi;
    double hmin = 0;
    int begin = 0, end = 0, left = -1, right = -1;
  };
  int build(int b, int e);
  template <class LB, class Leaf>
  std::pair<double, int> search(LB lower, Leaf leaf) const;

  int m_ = 1;
  std::vector<Vec3> c_;
  std::vector<double> h_;
  std::vector<int> perm_;
  std::vector<Node> nodes_;
};

// Coordinates on L0: u = tangent coordinates (first n components), v = normal.
struct Frame {
  int dim = 2;
  Vec3 origin, normal;
  std::array<Vec3, 2> tangent;
  Vec3 to_u(const Vec3& y) const;   // (u1, u2, 0)
  double to_v(const Vec3& y) const;
  Vec3 lift(const Vec3& u, double v) const;
  static Frame make(int dim, const Vec3& origin, const Vec3& normal);
};

// D(p) = inf over the fibre Pi^-1(p) of d, by a vertical segment grid
// v in [-half_height, half_height] with `steps` intervals.
double D_segment(const Frame& F, const Vec3& u, const std::function<double(const Vec3&)>& d, double half_height,
                 int steps);

// ---- Whitney cubes ------------------------------------------------------------

struct Box {
  Vec3 lo, hi;
};

struct DyadicCube {
  int level = 0;
  std::array<std::int64_t, 2> idx{0, 0};
  bool operator==(const DyadicCube& o) const { return level == o.level && idx == o.idx; }
};

struct WhitneyWindow {
  int n = 1;
  Vec3 lo;          // lower corner
  double side = 1;
  int max_level = 16;
  double cube_side(int level) const { return std::ldexp(side, -level); }
  Box box(const DyadicCube& q, double scale = 1) const;  // concentric scaled cube
};

struct WhitneyFamily {
  WhitneyWindow window;
  std::vector<DyadicCube> cubes;     // maximal cubes with side < D(I)/20
  std::vector<double> D_inf;         // D(R_i)
  std::vector<DyadicCube> residual;  // unresolved leaves (contain points with D below the finest scale)
  // cube lookup: key -> index into cubes (>= 0) or -1 - index into residual
  std::unordered_map<std::uint64_t, std::int64_t> lookup;

  void build_lookup();
  static std::uint64_t key(const DyadicCube& q);
  // (found, lookup code) of the leaf containing u; found is false outside the window.
  std::pair<bool, std::int64_t> locate(const Vec3& u) const;
};

// D_box(lo, hi) must return inf of D over the box; D_point is D itself
// (assumed 1-Lipschitz; used only to prune leaves that cannot hold a cube).
WhitneyFamily whitney(const WhitneyWindow& W, const std::function<double(const Box&)>& D_box,
                      const std::function<double(const Vec3&)>& D_point);

struct WhitneyCheck {
  bool partition = false;  // leaves tile the window, no overlaps
  double a_lower_min = 0;  // min over cubes of inf_{15R} D / l
  double a_upper_max = 0;  // max over cubes of sampled sup_{15R} D / l
  bool a_holds = false;
  double b_ratio = 0;      // max side ratio over pairs with 15R_i cap 15R_j != 0
  std::size_t c_count = 0; // max number of such neighbours (including itself)
  double residual_fraction = 0;
  bool residual_ok = false;  // every residual leaf has inf D <= 20 * finest side
  nlohmann::json to_json() const;
};
WhitneyCheck check_whitney(const WhitneyFamily& F, const std::function<double(const Box&)>& D_box,
                           const std::function<double(const Vec3&)>& D_point, int samples_per_axis = 7);

// Quintic smoothstep bumps equal to 1 on R_i and vanishing off 3R_i,
// normalized by their sum.
class PartitionOfUnity {
 public:
  explicit PartitionOfUnity(const WhitneyFamily& F) : F_(&F) {}
  // (cube index, phi_i(u)) for all cubes with phi_i(u) > 0
  std::vector<std::pair<std::size_t, double>> eval(const Vec3& u) const;
  double raw_bump(std::size_t i, const Vec3& u) const;

 private:
  const WhitneyFamily* F_;
};

// Affine map L0 -> L0^perp: v = c + g . u
struct Affine {
  double c = 0;
  std::array<double, 2> g{0, 0};
  double operator()(const Vec3& u) const { return c + g[0] * u[0] + g[1] * u[1]; }
};
// The graph of a hyperplane over the frame; fails for vertical planes.
bool plane_to_affine(const Frame& F, const Hyperplane& P, Affine& out);

// A(u) = sum_i phi_i(u) A_i(u) on cubes; `residual` defines A on unresolved leaves.
class ExtendedGraph {
 public:
  ExtendedGraph(const WhitneyFamily& F, std::vector<Affine> maps, std::function<double(const Vec3&)> residual);
  double operator()(const Vec3& u) const;
  const PartitionOfUnity& pou() const { return pou_; }

 private:
  const WhitneyFamily* F_;
  PartitionOfUnity pou_;
  std::vector<Affine> maps_;
  std::function<double(const Vec3&)> residual_;
};

// ---- corona -------------------------------------------------------------------

enum class PointClass { Z, LD, BA };
const char* point_class_name(PointClass c);
PointClass parse_point_class(const std::string& s);

PointClass classify_point(const StopInfo& s, double theta);

struct CoronaParams {
  double theta = 0.01;
  double alpha = 0.1;
  double eps = 0.1;
  double c0 = 0.01;
  double grid_factor = 1.189207115002721;  // 2^(1/4)
  double top_multiple = 50;
  double bottom_divisor = 128;
  int whitney_extra_levels = 5;  // finest Whitney side = smallest radius / 2^extra
  int graph_nodes = 2049;        // per axis for n = 1
  int graph_nodes_2d = 129;      // per axis for n = 2
  int lip_pairs = 10000;
  std::uint64_t seed = 1;
  nlohmann::json to_json() const;
  static CoronaParams from_json(const nlohmann::json& j);
};

struct GraphGrid {
  int n = 1;
  double lo = 0, hi = 0;  // same interval on every axis
  int nodes = 0;
  std::vector<double> values;  // row-major, first axis slowest
  double slope = 0;            // max |grad| of the piecewise-linear interpolant
  double at(int i, int j = 0) const { return values[static_cast<std::size_t>(i) * (n == 2 ? nodes : 1) + j]; }
  double coord(int i) const { return lo + (hi - lo) * i / (nodes - 1); }
  double interpolate(const Vec3& u) const;
};

struct CoronaStats {
  double mu_E0 = 0, mu_Z = 0, mu_LD = 0, mu_BA = 0;
  double max_grad = 0;
  nlohmann::json to_json() const;
};

struct CoronaResult {
  int dim = 2;
  Ball base_ball;
  Frame L0;
  CoronaParams params;
  StopGrid grid;
  GraphGrid graph;
  WhitneyWindow window;
  std::vector<DyadicCube> whitney;
  std::vector<DyadicCube> residual;
  std::vector<std::uint8_t> in_I0;
  std::vector<std::size_t> e0;  // indices into the input cloud
  std::vector<PointClass> labels;
  std::vector<double> h;
  CoronaStats stats;
  nlohmann::json diagnostics = nlohmann::json::object();
  nlohmann::json timings_ms = nlohmann::json::object();  // wall time per stage, not serialized

  nlohmann::json to_json() const;
  static CoronaResult from_json(const nlohmann::json& j);
};

// Full stopping-time construction. mu is restricted to B0 for densities;
// flatness uses every point of the cloud. Throws DensityTooLow.
CoronaResult corona(const WeightedCloud& cloud, const Ball& B0, const CoronaParams& p = {});

// ---- dyadic density ---------------------------------------------------------------

struct DyadicInterval {
  double a = 0, b = 0;
  int depth = 0;  // generation below I
};
// G is a finite union of intervals (any order, may overlap). Returns J subset
// of I with |G cap K| > (c2/2)|K| for every dyadic descendant K of J with
// |K| >= theta |J|.
DyadicInterval dense_dyadic_interval(double a, double b, std::vector<std::pair<double, double>> G, double c2,
                                     double theta, int max_depth = 40);
// |G cap [a, b]|
double interval_measure(const std::vector<std::pair<double, double>>& G, double a, double b);

}  // namespace eps2
