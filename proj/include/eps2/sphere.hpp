#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "eps2/region.hpp"

namespace eps2 {

enum class QuadMode : std::uint8_t { ExactArc, Stratified, Lattice };

const char* quad_mode_name(QuadMode m);
QuadMode parse_quad_mode(const std::string& s);

struct QuadSpec {
  QuadMode mode = QuadMode::ExactArc;
  int nodes = 720;  // node budget for sampled modes
  std::uint64_t seed = 1;
};

struct SphereSample {
  int dim = 2;
  Vec3 center;
  double radius = 1;
  QuadMode mode = QuadMode::Lattice;
  std::vector<Vec3> nodes;
  std::vector<double> weights;
  std::vector<int> antipode;  // index of 2x - y for every node
};

// Node sets are antipodally symmetric, so odd budgets are rounded up to even.
SphereSample sample_sphere(int dim, const Vec3& x, double r, QuadMode mode, int m, std::uint64_t seed = 1);

// Labeled arcs of a circle: arc k is [breaks[k], breaks[k+1]) and the last
// arc wraps to breaks[0] + 2pi. Angles are measured from the +x axis.
struct ArcSet {
  std::vector<double> breaks;
  std::vector<Label> labels;

  Label label_at(double theta) const;
  double length(std::size_t k) const;
  // Total angle where pred(theta_mid, label) holds, after splitting the arcs
  // at the extra angles.
  template <class Pred>
  double measure_if(std::vector<double> extra, Pred&& pred) const;
};

struct ArcDecomposition {
  ArcSet arcs;
  std::vector<std::pair<double, double>> plus, minus, free;  // merged (start, end), end may exceed 2pi
};

ArcSet arc_set(const RegionPair& R, const Vec3& x, double r);
ArcDecomposition arc_decomposition(const RegionPair& R, const Vec3& x, double r);
std::vector<std::pair<double, double>> merged_intervals(const ArcSet& a, Label l);

// Labeled view of S(x,r), either exact arcs (2D) or a labeled node set.
struct SphereView {
  int dim = 2;
  Vec3 x;
  double r = 1;
  bool exact = false;
  QuadMode mode = QuadMode::ExactArc;
  ArcSet arcs;
  SphereSample q;
  std::vector<Label> labels;

  double total() const;  // sigma_n r^n
  double norm_factor() const;  // r^{-n}
  double measure(Label l) const;
  // Estimated absolute error of any normalized coefficient built from this view.
  double quad_error() const;
};

SphereView view_sphere(const RegionPair& R, const Vec3& x, double r, const QuadSpec& spec);

struct Cone {
  Vec3 apex;
  Vec3 axis;
  double aperture = 0.5;
};

struct ConeReport {
  bool empty = true;
  long samples = 0;
  double angular_step = 0, radial_step = 0;
  Vec3 witness;  // a boundary crossing when !empty
};

ConeReport cone_empty(const RegionPair& R, const Cone& C, double r, int angular = 64, int radial = 64);

// --- template body ---

template <class Pred>
double ArcSet::measure_if(std::vector<double> extra, Pred&& pred) const {
  for (double& e : extra) e = wrap_angle(e);
  std::vector<double> cuts = breaks;
  cuts.insert(cuts.end(), extra.begin(), extra.end());
  std::sort(cuts.begin(), cuts.end());
  double total = 0;
  std::size_t n = cuts.size();
  for (std::size_t k = 0; k < n; ++k) {
    double a = cuts[k];
    double b = k + 1 < n ? cuts[k + 1] : cuts[0] + kTwoPi;
    if (!(b > a)) continue;
    double mid = wrap_angle(0.5 * (a + b));
    if (pred(mid, label_at(mid))) total += b - a;
  }
  return total;
}

}  // namespace eps2
