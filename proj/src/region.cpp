#include "eps2/region.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "eps2/errors.hpp"
#include "eps2/rng.hpp"

namespace eps2 {

const char* label_name(Label l) {
  switch (l) {
    case Label::Plus: return "plus";
    case Label::Minus: return "minus";
    default: return "free";
  }
}

namespace {

// Angles where S(x,r) meets the line {y.u = c}.
void line_crossings(const Vec3& x, double r, const Vec3& u, double c, std::vector<double>& out) {
  double nu = std::hypot(u.x, u.y);
  if (nu == 0) return;
  double k = (c - (x.x * u.x + x.y * u.y)) / (r * nu);
  if (k < -1.0 || k > 1.0) return;
  double phi = std::atan2(u.y, u.x);
  double a = std::acos(k);
  out.push_back(wrap_angle(phi + a));
  out.push_back(wrap_angle(phi - a));
}

double line_distance(const Vec3& x, const Vec3& u, double c) {
  double nu = std::hypot(u.x, u.y);
  return nu == 0 ? 0.0 : std::fabs(x.x * u.x + x.y * u.y - c) / nu;
}

// Pairwise intersections of lines {y.u_k = c_k} in the plane.
std::vector<Vec3> line_vertices(const std::vector<Vec3>& u, const std::vector<double>& c) {
  std::vector<Vec3> v;
  for (std::size_t i = 0; i < u.size(); ++i)
    for (std::size_t j = i + 1; j < u.size(); ++j) {
      double det = u[i].x * u[j].y - u[i].y * u[j].x;
      if (std::fabs(det) < 1e-14) continue;
      v.push_back({(c[i] * u[j].y - c[j] * u[i].y) / det, (u[i].x * c[j] - u[j].x * c[i]) / det, 0});
    }
  return v;
}

}  // namespace

double Primitive::graph_value(double t) const {
  if (knots.empty()) return 0;
  if (t <= knots.front()) return values.front();
  if (t >= knots.back()) return values.back();
  auto it = std::upper_bound(knots.begin(), knots.end(), t);
  std::size_t k = static_cast<std::size_t>(it - knots.begin()) - 1;
  double s = (t - knots[k]) / (knots[k + 1] - knots[k]);
  return values[k] + s * (values[k + 1] - values[k]);
}

double Primitive::graph3_value(double u, double v) const {
  double fu = std::clamp((u - origin.x) / spacing.x, 0.0, static_cast<double>(nx - 1));
  double fv = std::clamp((v - origin.y) / spacing.y, 0.0, static_cast<double>(ny - 1));
  int i = std::min(static_cast<int>(fu), nx - 2), j = std::min(static_cast<int>(fv), ny - 2);
  double a = fu - i, b = fv - j;
  auto at = [&](int ii, int jj) { return values[static_cast<std::size_t>(jj) * nx + ii]; };
  // Each cell is split along the (i,j)-(i+1,j+1) diagonal.
  if (a >= b) return at(i, j) + a * (at(i + 1, j) - at(i, j)) + b * (at(i + 1, j + 1) - at(i + 1, j));
  return at(i, j) + b * (at(i, j + 1) - at(i, j)) + a * (at(i + 1, j + 1) - at(i, j + 1));
}

bool Primitive::contains(const Vec3& p) const {
  switch (kind) {
    case PrimKind::HalfSpace: return dot(p, normal) > offset;
    case PrimKind::Ball: return dot(p - center, p - center) < radius * radius;
    case PrimKind::Box:
      for (int i = 0; i < dim; ++i)
        if (!(p[i] > lo[i] && p[i] < hi[i])) return false;
      return true;
    case PrimKind::Polytope:
      for (std::size_t k = 0; k < normals.size(); ++k)
        if (!(dot(p, normals[k]) > offsets[k])) return false;
      return true;
    case PrimKind::Graph: {
      double g = graph_value(p.x);
      return above ? p.y > g : p.y < g;
    }
    case PrimKind::Graph3: {
      double g = graph3_value(p.x, p.y);
      return above ? p.z > g : p.z < g;
    }
    case PrimKind::Voxels: {
      long idx[3] = {0, 0, 0};
      int n[3] = {nx, ny, nz};
      for (int i = 0; i < dim; ++i) {
        idx[i] = std::lround((p[i] - origin[i]) / spacing[i]);
        if (idx[i] < 0 || idx[i] >= n[i]) return false;
      }
      return occupancy[static_cast<std::size_t>((idx[2] * ny + idx[1]) * nx + idx[0])] != 0;
    }
    case PrimKind::Empty: return false;
    case PrimKind::All: return true;
  }
  return false;
}

bool Primitive::exact_arcs_supported() const {
  return dim == 2 && kind != PrimKind::Graph3 && kind != PrimKind::Voxels;
}

void Primitive::circle_crossings(const Vec3& x, double r, std::vector<double>& out) const {
  if (!exact_arcs_supported()) throw UnsupportedPrimitive("arc_decomposition: primitive has no exact circle intersector");
  switch (kind) {
    case PrimKind::HalfSpace: line_crossings(x, r, normal, offset, out); break;
    case PrimKind::Ball: {
      Vec3 w = center - x;
      double d = std::hypot(w.x, w.y);
      if (d == 0) break;
      double k = (r * r + d * d - radius * radius) / (2 * r * d);
      if (k < -1.0 || k > 1.0) break;
      double phi = std::atan2(w.y, w.x), a = std::acos(k);
      out.push_back(wrap_angle(phi + a));
      out.push_back(wrap_angle(phi - a));
      break;
    }
    case PrimKind::Box:
      line_crossings(x, r, {1, 0, 0}, lo.x, out);
      line_crossings(x, r, {1, 0, 0}, hi.x, out);
      line_crossings(x, r, {0, 1, 0}, lo.y, out);
      line_crossings(x, r, {0, 1, 0}, hi.y, out);
      break;
    case PrimKind::Polytope:
      for (std::size_t k = 0; k < normals.size(); ++k) line_crossings(x, r, normals[k], offsets[k], out);
      break;
    case PrimKind::Graph: {
      // Supporting lines of every piece, including the two constant ends.
      line_crossings(x, r, {0, 1, 0}, values.front(), out);
      line_crossings(x, r, {0, 1, 0}, values.back(), out);
      for (std::size_t k = 0; k + 1 < knots.size(); ++k) {
        double s = (values[k + 1] - values[k]) / (knots[k + 1] - knots[k]);
        line_crossings(x, r, {-s, 1, 0}, values[k] - s * knots[k], out);
      }
      break;
    }
    default: break;
  }
}

void Primitive::critical_radii(const Vec3& x, std::vector<double>& out) const {
  if (!exact_arcs_supported()) throw UnsupportedPrimitive("critical_radii: primitive has no exact circle intersector");
  auto pt = [&](const Vec3& v) { out.push_back(std::hypot(v.x - x.x, v.y - x.y)); };
  switch (kind) {
    case PrimKind::HalfSpace: out.push_back(line_distance(x, normal, offset)); break;
    case PrimKind::Ball: {
      double d = std::hypot(center.x - x.x, center.y - x.y);
      out.push_back(std::fabs(d - radius));
      out.push_back(d + radius);
      break;
    }
    case PrimKind::Box:
      out.push_back(std::fabs(x.x - lo.x));
      out.push_back(std::fabs(x.x - hi.x));
      out.push_back(std::fabs(x.y - lo.y));
      out.push_back(std::fabs(x.y - hi.y));
      pt({lo.x, lo.y, 0});
      pt({lo.x, hi.y, 0});
      pt({hi.x, lo.y, 0});
      pt({hi.x, hi.y, 0});
      break;
    case PrimKind::Polytope:
      for (std::size_t k = 0; k < normals.size(); ++k) out.push_back(line_distance(x, normals[k], offsets[k]));
      for (const auto& v : line_vertices(normals, offsets)) pt(v);
      break;
    case PrimKind::Graph:
      out.push_back(std::fabs(x.y - values.front()));
      out.push_back(std::fabs(x.y - values.back()));
      for (std::size_t k = 0; k < knots.size(); ++k) {
        pt({knots[k], values[k], 0});
        if (k + 1 < knots.size()) {
          double s = (values[k + 1] - values[k]) / (knots[k + 1] - knots[k]);
          out.push_back(line_distance(x, {-s, 1, 0}, values[k] - s * knots[k]));
        }
      }
      break;
    default: break;
  }
}

bool Primitive::bounded(Vec3& blo, Vec3& bhi) const {
  switch (kind) {
    case PrimKind::Ball:
      blo = center - Vec3{radius, radius, dim == 3 ? radius : 0};
      bhi = center + Vec3{radius, radius, dim == 3 ? radius : 0};
      return true;
    case PrimKind::Box:
      blo = lo;
      bhi = hi;
      return true;
    case PrimKind::Voxels:
      blo = origin - spacing * 0.5;
      bhi = origin + Vec3{(nx - 0.5) * spacing.x, (ny - 0.5) * spacing.y, dim == 3 ? (nz - 0.5) * spacing.z : 0};
      return true;
    case PrimKind::Polytope: {
      if (dim != 2) return false;
      // Bounded iff the feasible vertices enclose it; test with the vertex hull
      // against the normals' cone (normals must positively span the plane).
      std::vector<double> ang;
      for (const auto& u : normals) ang.push_back(std::atan2(u.y, u.x));
      std::sort(ang.begin(), ang.end());
      if (ang.size() < 3) return false;
      for (std::size_t k = 0; k < ang.size(); ++k) {
        double gap = (k + 1 < ang.size() ? ang[k + 1] : ang[0] + kTwoPi) - ang[k];
        if (gap >= kPi) return false;
      }
      bool any = false;
      for (const auto& v : line_vertices(normals, offsets)) {
        bool feas = true;
        for (std::size_t k = 0; k < normals.size(); ++k)
          if (dot(v, normals[k]) < offsets[k] - 1e-9 * (1 + std::fabs(offsets[k]))) feas = false;
        if (!feas) continue;
        if (!any) {
          blo = bhi = v;
          any = true;
        }
        blo.x = std::min(blo.x, v.x);
        blo.y = std::min(blo.y, v.y);
        bhi.x = std::max(bhi.x, v.x);
        bhi.y = std::max(bhi.y, v.y);
      }
      return any;
    }
    default: return false;
  }
}

bool RegionNode::contains(const Vec3& p) const {
  switch (op) {
    case Op::Leaf: return prim.contains(p);
    case Op::Union:
      for (const auto& c : children)
        if (c.contains(p)) return true;
      return false;
    case Op::Intersection:
      for (const auto& c : children)
        if (!c.contains(p)) return false;
      return !children.empty();
    case Op::Complement: return !children.front().contains(p);
  }
  return false;
}

RegionNode leaf(const Primitive& p) {
  RegionNode n;
  n.prim = p;
  return n;
}
RegionNode union_of(std::vector<RegionNode> c) {
  RegionNode n;
  n.op = RegionNode::Op::Union;
  n.children = std::move(c);
  return n;
}
RegionNode intersection_of(std::vector<RegionNode> c) {
  RegionNode n;
  n.op = RegionNode::Op::Intersection;
  n.children = std::move(c);
  return n;
}
RegionNode complement_of(RegionNode c) {
  RegionNode n;
  n.op = RegionNode::Op::Complement;
  n.children.push_back(std::move(c));
  return n;
}

Primitive halfspace(int dim, Vec3 normal, double offset) {
  Primitive p;
  p.kind = PrimKind::HalfSpace;
  p.dim = dim;
  double n = norm(normal);
  if (!(n > 0)) throw SceneError("halfspace: zero normal");
  p.normal = normal * (1.0 / n);
  p.offset = offset / n;
  return p;
}

Primitive ball(int dim, Vec3 center, double radius) {
  if (!(radius > 0)) throw SceneError("ball: radius must be positive");
  Primitive p;
  p.kind = PrimKind::Ball;
  p.dim = dim;
  p.center = center;
  p.radius = radius;
  return p;
}

Primitive box(int dim, Vec3 lo, Vec3 hi) {
  for (int i = 0; i < dim; ++i)
    if (!(hi[i] > lo[i])) throw SceneError("box: hi must exceed lo");
  Primitive p;
  p.kind = PrimKind::Box;
  p.dim = dim;
  p.lo = lo;
  p.hi = hi;
  return p;
}

Primitive convex_polygon(const std::vector<Vec3>& v) {
  if (v.size() < 3) throw SceneError("polygon: need at least 3 vertices");
  double area = 0;
  for (std::size_t k = 0; k < v.size(); ++k) {
    const Vec3& a = v[k];
    const Vec3& b = v[(k + 1) % v.size()];
    area += a.x * b.y - b.x * a.y;
  }
  if (area == 0) throw SceneError("polygon: degenerate");
  double orient = area > 0 ? 1.0 : -1.0;
  std::vector<Vec3> normals;
  std::vector<double> offsets;
  for (std::size_t k = 0; k < v.size(); ++k) {
    const Vec3& a = v[k];
    const Vec3& b = v[(k + 1) % v.size()];
    Vec3 n{-(b.y - a.y) * orient, (b.x - a.x) * orient, 0};
    double l = norm(n);
    if (l == 0) throw SceneError("polygon: repeated vertex");
    n = n * (1.0 / l);
    normals.push_back(n);
    offsets.push_back(dot(a, n));
  }
  for (const auto& p : v)
    for (std::size_t k = 0; k < normals.size(); ++k)
      if (dot(p, normals[k]) < offsets[k] - 1e-9 * (1 + std::fabs(offsets[k])))
        throw SceneError("polygon: vertices are not convex");
  return polytope(2, std::move(normals), std::move(offsets));
}

Primitive polytope(int dim, std::vector<Vec3> normals, std::vector<double> offsets) {
  if (normals.empty() || normals.size() != offsets.size()) throw SceneError("polytope: normals/offsets mismatch");
  Primitive p;
  p.kind = PrimKind::Polytope;
  p.dim = dim;
  for (std::size_t k = 0; k < normals.size(); ++k) {
    double n = norm(normals[k]);
    if (!(n > 0)) throw SceneError("polytope: zero normal");
    normals[k] = normals[k] * (1.0 / n);
    offsets[k] /= n;
  }
  p.normals = std::move(normals);
  p.offsets = std::move(offsets);
  return p;
}

Primitive graph2(std::vector<double> knots, std::vector<double> values, bool above) {
  if (knots.empty() || knots.size() != values.size()) throw SceneError("graph: knots/values mismatch");
  for (std::size_t k = 0; k + 1 < knots.size(); ++k)
    if (!(knots[k + 1] > knots[k])) throw SceneError("graph: knots must be increasing");
  Primitive p;
  p.kind = PrimKind::Graph;
  p.dim = 2;
  p.knots = std::move(knots);
  p.values = std::move(values);
  p.above = above;
  return p;
}

Primitive empty_region(int dim) {
  Primitive p;
  p.kind = PrimKind::Empty;
  p.dim = dim;
  return p;
}

Primitive whole_space(int dim) {
  Primitive p;
  p.kind = PrimKind::All;
  p.dim = dim;
  return p;
}

RegionPair::RegionPair(int dim, RegionNode plus, RegionNode minus, double scale, int samples)
    : dim_(dim), plus_(std::move(plus)), minus_(std::move(minus)), explicit_scale_(scale) {
  if (dim != 2 && dim != 3) throw SceneError("dim: must be 2 or 3");
  bool any = false;
  const double inf = std::numeric_limits<double>::infinity();
  Vec3 lo{inf, inf, dim == 3 ? inf : 0}, hi{-inf, -inf, dim == 3 ? -inf : 0};
  bool unbounded = false;
  auto visit = [&](const Primitive& p) {
    if (p.dim != dim) throw SceneError("primitive dimension does not match scene dim");
    Vec3 a, b;
    if (p.bounded(a, b)) {
      any = true;
      for (int i = 0; i < dim; ++i) {
        lo[i] = std::min(lo[i], a[i]);
        hi[i] = std::max(hi[i], b[i]);
      }
    } else if (p.kind != PrimKind::Empty) {
      unbounded = true;
    }
  };
  plus_.for_each_primitive(visit);
  minus_.for_each_primitive(visit);
  bounded_ = any && !unbounded;
  if (any) {
    lo_ = lo;
    hi_ = hi;
  } else {
    lo_ = hi_ = Vec3{};
  }
  if (scale > 0) {
    scale_ = scale;
  } else if (any && norm(hi - lo) > 0) {
    scale_ = norm(hi - lo);
  } else {
    scale_ = 1.0;
  }
  if (unbounded) {
    for (int i = 0; i < dim; ++i) {
      lo_[i] = -inf;
      hi_[i] = inf;
    }
  }

  // Randomized disjointness check on a box covering the finite features.
  Vec3 slo = any ? lo : Vec3{}, shi = any ? hi : Vec3{};
  double pad = 0.25 * scale_ + 1e-9;
  Rng rng(0x5eed5eedULL);
  for (int s = 0; s < samples; ++s) {
    Vec3 p;
    for (int i = 0; i < dim; ++i) p[i] = rng.uniform(slo[i] - pad - (unbounded ? scale_ : 0), shi[i] + pad + (unbounded ? scale_ : 0));
    if (plus_.contains(p) && minus_.contains(p)) {
      std::ostringstream os;
      os << "plus and minus regions overlap at (" << p.x << ", " << p.y;
      if (dim == 3) os << ", " << p.z;
      os << ")";
      throw SceneError(os.str());
    }
  }
}

Label RegionPair::classify(const Vec3& p) const {
  if (plus_.contains(p)) return Label::Plus;
  if (minus_.contains(p)) return Label::Minus;
  return Label::Free;
}

Label classify(const Vec3& p, const RegionPair& R) { return R.classify(p); }

bool RegionPair::exact_arcs_supported() const {
  if (dim_ != 2) return false;
  bool ok = true;
  auto v = [&](const Primitive& p) { ok = ok && p.exact_arcs_supported(); };
  plus_.for_each_primitive(v);
  minus_.for_each_primitive(v);
  return ok;
}

std::vector<double> RegionPair::circle_crossings(const Vec3& x, double r) const {
  if (dim_ != 2) throw UnsupportedPrimitive("arc_decomposition: exact arcs need dim = 2");
  std::vector<double> out;
  auto v = [&](const Primitive& p) { p.circle_crossings(x, r, out); };
  plus_.for_each_primitive(v);
  minus_.for_each_primitive(v);
  return out;
}

std::vector<double> RegionPair::critical_radii(const Vec3& x) const {
  if (dim_ != 2) throw UnsupportedPrimitive("critical_radii: dim = 2 only");
  std::vector<double> out;
  auto v = [&](const Primitive& p) { p.critical_radii(x, out); };
  plus_.for_each_primitive(v);
  minus_.for_each_primitive(v);
  return out;
}

}  // namespace eps2
