#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "eps2/vec.hpp"

namespace eps2 {

enum class Label : std::uint8_t { Free = 0, Plus = 1, Minus = 2 };

const char* label_name(Label l);

enum class PrimKind : std::uint8_t { HalfSpace, Ball, Box, Polytope, Graph, Graph3, Voxels, Empty, All };

// One open primitive. Only the fields relevant to `kind` are used.
struct Primitive {
  PrimKind kind = PrimKind::Empty;
  int dim = 2;

  Vec3 normal;  // halfspace: {y.normal > offset}
  double offset = 0;

  Vec3 center;  // ball
  double radius = 0;

  Vec3 lo, hi;  // box (open, per coordinate)

  std::vector<Vec3> normals;  // polytope: intersection of {y.normals[k] > offsets[k]}
  std::vector<double> offsets;

  // graph: y2 > g(y1) when above, y2 < g(y1) otherwise; g piecewise linear
  // through (knots, values) and constant outside the knot range.
  std::vector<double> knots, values;
  bool above = true;

  // graph3 (heights on a triangulated grid) and voxels share these.
  Vec3 origin, spacing;
  int nx = 0, ny = 0, nz = 1;
  std::vector<std::uint8_t> occupancy;

  bool contains(const Vec3& p) const;
  double graph_value(double t) const;
  double graph3_value(double u, double v) const;

  // Angles at which S(x,r) may meet the boundary (2D). A superset is fine:
  // extra angles only split arcs that carry the same label.
  void circle_crossings(const Vec3& x, double r, std::vector<double>& out) const;
  // Radii t at which the arc structure of S(x,t) can change (2D).
  void critical_radii(const Vec3& x, std::vector<double>& out) const;
  bool exact_arcs_supported() const;
  bool bounded(Vec3& blo, Vec3& bhi) const;
};

struct RegionNode {
  enum class Op : std::uint8_t { Leaf, Union, Intersection, Complement };
  Op op = Op::Leaf;
  Primitive prim;
  std::vector<RegionNode> children;

  bool contains(const Vec3& p) const;
  template <class F>
  void for_each_primitive(F&& f) const {
    if (op == Op::Leaf) {
      f(prim);
      return;
    }
    for (const auto& c : children) c.for_each_primitive(f);
  }
};

RegionNode leaf(const Primitive& p);
RegionNode union_of(std::vector<RegionNode> c);
RegionNode intersection_of(std::vector<RegionNode> c);
RegionNode complement_of(RegionNode c);

Primitive halfspace(int dim, Vec3 normal, double offset);
Primitive ball(int dim, Vec3 center, double radius);
Primitive box(int dim, Vec3 lo, Vec3 hi);
Primitive convex_polygon(const std::vector<Vec3>& vertices);
Primitive polytope(int dim, std::vector<Vec3> normals, std::vector<double> offsets);
Primitive graph2(std::vector<double> knots, std::vector<double> values, bool above);
Primitive empty_region(int dim);
Primitive whole_space(int dim);

class RegionPair {
 public:
  RegionPair() = default;
  // Checks disjointness on `samples` seeded points; throws SceneError on overlap.
  RegionPair(int dim, RegionNode plus, RegionNode minus, double scale = 0, int samples = 10000);

  int dim() const { return dim_; }
  const RegionNode& plus() const { return plus_; }
  const RegionNode& minus() const { return minus_; }
  const Vec3& bbox_lo() const { return lo_; }
  const Vec3& bbox_hi() const { return hi_; }
  bool bbox_bounded() const { return bounded_; }
  // Characteristic length: explicit scale, else finite-bbox diameter, else 1.
  double scale() const { return scale_; }
  double explicit_scale() const { return explicit_scale_; }

  Label classify(const Vec3& p) const;
  bool exact_arcs_supported() const;
  std::vector<double> circle_crossings(const Vec3& x, double r) const;
  std::vector<double> critical_radii(const Vec3& x) const;

 private:
  int dim_ = 2;
  RegionNode plus_, minus_;
  Vec3 lo_, hi_;
  bool bounded_ = false;
  double scale_ = 1, explicit_scale_ = 0;
};

Label classify(const Vec3& p, const RegionPair& R);

}  // namespace eps2
