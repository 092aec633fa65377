#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "eps2/coefficients.hpp"
#include "eps2/vec.hpp"

namespace eps2 {

// Finite measure mu = sum_i w_i delta_{p_i} in R^dim (dim 2 or 3); n = dim - 1.
struct WeightedCloud {
  int dim = 2;
  std::vector<Vec3> points;
  std::vector<double> weights;
  double growth_const = 0;
  // Radii 2^k used by the growth check, from growth_rmin up to the bbox diagonal.
  double growth_rmin = 0;

  int n() const { return dim - 1; }
  double total_mass() const;
  double diameter_bound() const;  // bbox diagonal

  // Validates the data and checks mu(B(p_i, 2^k)) <= C0 2^{kn} for every data
  // point and every dyadic radius in [growth_rmin, diameter]. A nonpositive
  // growth_const is replaced by the smallest constant passing that check.
  static WeightedCloud make(int dim, std::vector<Vec3> pts, std::vector<double> w, double growth_const = 0,
                            double growth_rmin = 0);
};

// Equal weights summing to `total`.
WeightedCloud counting_cloud(int dim, std::vector<Vec3> pts, double total = 1.0, double growth_const = 0,
                             double growth_rmin = 0);

// CSV rows x_1..x_dim, weight; an optional non-numeric header line is skipped.
WeightedCloud read_cloud_csv(const std::string& path, int dim, double growth_const = 0, double growth_rmin = 0);
void write_cloud_csv(const std::string& path, const WeightedCloud& c);

// Static kd-tree over points with per-node weight sums. Queries use closed balls.
class PointIndex {
 public:
  PointIndex() = default;
  PointIndex(int dim, const std::vector<Vec3>& pts, const std::vector<double>& weights);

  double mass(const Vec3& c, double r) const;
  // Indices of points in the closed ball, ascending.
  void collect(const Vec3& c, double r, std::vector<std::size_t>& out) const;
  std::size_t size() const { return pts_.size(); }

 private:
  struct Node {
    Vec3 lo, hi;
    double w = 0;
    std::size_t begin = 0, end = 0;
    int left = -1, right = -1;
  };
  int build(std::size_t b, std::size_t e, int depth);

  int dim_ = 2;
  std::vector<Vec3> pts_;
  std::vector<double> w_;
  std::vector<std::size_t> perm_;
  std::vector<Node> nodes_;
};

struct BetaFit {
  double value = 0;  // sup over E cap B of dist(y, plane) / rad(B)
  Hyperplane plane;
  std::size_t count = 0;
};

// beta_inf of a point set inside B. In the plane the minimax line is exact
// (minimal-width strip from the convex hull); in R^3 it is a direction search
// with an exact support-set enumeration for at most dim + 2 points. `ref`
// breaks ties among planes through degenerate sets. The returned value is the
// exact sup distance of the returned plane. Throws EmptyIntersection.
BetaFit beta_inf(int dim, const std::vector<Vec3>& E, const Ball& B, const Vec3* ref = nullptr);
// Same on points already known to lie in B.
BetaFit beta_fit(int dim, std::vector<Vec3> pts, const Ball& B, const Vec3* ref = nullptr);
// Exact enumeration over support sets; only for pts.size() <= dim + 2.
BetaFit beta_exact_small(int dim, const std::vector<Vec3>& pts, const Ball& B, const Vec3* ref = nullptr);

// Half-width of the point set along a unit normal, and the mid offset.
std::pair<double, double> slab(const std::vector<Vec3>& pts, const Vec3& nu);

// Angle between hyperplanes via their unit normals, in [0, pi/2].
double plane_angle(const Vec3& n1, const Vec3& n2);

// Canonical orientation: last nonzero coordinate of the normal positive.
Vec3 orient_normal(Vec3 n, int dim);

}  // namespace eps2
