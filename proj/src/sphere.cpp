#include "eps2/sphere.hpp"

#include <algorithm>
#include <cmath>

#include "eps2/errors.hpp"
#include "eps2/kernels.hpp"
#include "eps2/rng.hpp"

namespace eps2 {

const char* quad_mode_name(QuadMode m) {
  switch (m) {
    case QuadMode::ExactArc: return "exact";
    case QuadMode::Stratified: return "stratified";
    default: return "lattice";
  }
}

QuadMode parse_quad_mode(const std::string& s) {
  if (s == "exact" || s == "exact-arc") return QuadMode::ExactArc;
  if (s == "stratified" || s == "stratified-random" || s == "mc") return QuadMode::Stratified;
  if (s == "lattice") return QuadMode::Lattice;
  throw ConfigError("unknown quadrature mode '" + s + "'");
}

SphereSample sample_sphere(int dim, const Vec3& x, double r, QuadMode mode, int m, std::uint64_t seed) {
  if (m < 8) throw PreconditionError("sample_sphere: node budget must be at least 8");
  if (!(r > 0)) throw PreconditionError("sample_sphere: radius must be positive");
  if (dim != 2 && dim != 3) throw PreconditionError("sample_sphere: dim must be 2 or 3");
  if (mode == QuadMode::ExactArc) throw PreconditionError("sample_sphere: exact-arc mode has no nodes");
  if (m % 2) ++m;
  const int half = m / 2;
  SphereSample q;
  q.dim = dim;
  q.center = x;
  q.radius = r;
  q.mode = mode;
  q.nodes.resize(m);
  q.weights.resize(m);
  q.antipode.resize(m);
  std::vector<Vec3> dirs(half);
  std::vector<double> w(half);
  Rng rng(seed);
  if (dim == 2) {
    const double h = kTwoPi / m;
    for (int k = 0; k < half; ++k) {
      double t = mode == QuadMode::Lattice ? (k + 0.5) * h : (k + rng.uniform()) * h;
      dirs[k] = polar(t);
      w[k] = h * r;
    }
  } else if (mode == QuadMode::Lattice) {
    // Upper half of an m-point Fibonacci lattice, mirrored through the center.
    const double ga = kPi * (3.0 - std::sqrt(5.0));
    for (int k = 0; k < half; ++k) {
      double z = 1.0 - (2.0 * k + 1.0) / m;
      double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
      double ph = ga * k;
      dirs[k] = {rho * std::cos(ph), rho * std::sin(ph), z};
      w[k] = 4.0 * kPi * r * r / m;
    }
  } else {
    // Equal-height bands on the upper hemisphere, split into sectors; one
    // uniform node per cell, weighted by the cell area.
    int bands = std::max(1, static_cast<int>(std::floor(std::sqrt(half / 2.0))));
    int k = 0;
    for (int b = 0; b < bands; ++b) {
      int cells = half / bands + (b < half % bands ? 1 : 0);
      double z0 = static_cast<double>(b) / bands, z1 = static_cast<double>(b + 1) / bands;
      for (int c = 0; c < cells; ++c, ++k) {
        double z = z0 + (z1 - z0) * rng.uniform();
        double ph = kTwoPi * (c + rng.uniform()) / cells;
        double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
        dirs[k] = {rho * std::cos(ph), rho * std::sin(ph), z};
        w[k] = kTwoPi * (z1 - z0) / cells * r * r;
      }
    }
  }
  for (int k = 0; k < half; ++k) {
    q.nodes[k] = x + dirs[k] * r;
    q.nodes[k + half] = x - dirs[k] * r;
    q.weights[k] = q.weights[k + half] = w[k];
    q.antipode[k] = k + half;
    q.antipode[k + half] = k;
  }
  return q;
}

Label ArcSet::label_at(double theta) const {
  auto it = std::upper_bound(breaks.begin(), breaks.end(), theta);
  if (it == breaks.begin()) return labels.back();
  return labels[static_cast<std::size_t>(it - breaks.begin()) - 1];
}

double ArcSet::length(std::size_t k) const {
  double b = k + 1 < breaks.size() ? breaks[k + 1] : breaks[0] + kTwoPi;
  return b - breaks[k];
}

ArcSet arc_set(const RegionPair& R, const Vec3& x, double r) {
  if (!(r > 0)) throw PreconditionError("arc_decomposition: radius must be positive");
  if (R.dim() != 2) throw UnsupportedPrimitive("arc_decomposition: exact arcs need dim = 2");
  if (!R.exact_arcs_supported()) throw UnsupportedPrimitive("arc_decomposition: scene has a primitive without an exact circle intersector");
  std::vector<double> c = R.circle_crossings(x, r);
  for (double& t : c) t = wrap_angle(t);
  std::sort(c.begin(), c.end());
  std::vector<double> cuts;
  for (double t : c)
    if (cuts.empty() || t - cuts.back() > 1e-14) cuts.push_back(t);
  if (cuts.size() > 1 && cuts.front() + kTwoPi - cuts.back() <= 1e-14) cuts.pop_back();
  ArcSet raw;
  if (cuts.empty()) cuts.push_back(0.0);
  for (std::size_t k = 0; k < cuts.size(); ++k) {
    double a = cuts[k], b = k + 1 < cuts.size() ? cuts[k + 1] : cuts[0] + kTwoPi;
    double mid = 0.5 * (a + b);
    raw.breaks.push_back(a);
    raw.labels.push_back(R.classify(x + polar(mid) * r));
  }
  // Drop breaks that do not change the label.
  ArcSet out;
  std::size_t n = raw.breaks.size();
  for (std::size_t k = 0; k < n; ++k) {
    Label prev = raw.labels[(k + n - 1) % n];
    if (n == 1 || raw.labels[k] != prev) {
      out.breaks.push_back(raw.breaks[k]);
      out.labels.push_back(raw.labels[k]);
    }
  }
  if (out.breaks.empty()) {
    out.breaks.push_back(0.0);
    out.labels.push_back(raw.labels[0]);
  }
  return out;
}

std::vector<std::pair<double, double>> merged_intervals(const ArcSet& a, Label l) {
  std::vector<std::pair<double, double>> v;
  if (a.breaks.size() == 1) {
    if (a.labels[0] == l) v.emplace_back(0.0, kTwoPi);
    return v;
  }
  for (std::size_t k = 0; k < a.breaks.size(); ++k)
    if (a.labels[k] == l) v.emplace_back(a.breaks[k], a.breaks[k] + a.length(k));
  return v;
}

ArcDecomposition arc_decomposition(const RegionPair& R, const Vec3& x, double r) {
  ArcDecomposition d;
  d.arcs = arc_set(R, x, r);
  d.plus = merged_intervals(d.arcs, Label::Plus);
  d.minus = merged_intervals(d.arcs, Label::Minus);
  d.free = merged_intervals(d.arcs, Label::Free);
  return d;
}

double SphereView::total() const { return sphere_area(dim) * (dim == 2 ? r : r * r); }
double SphereView::norm_factor() const { return dim == 2 ? 1.0 / r : 1.0 / (r * r); }

double SphereView::measure(Label l) const {
  if (exact) {
    double s = 0;
    for (std::size_t k = 0; k < arcs.breaks.size(); ++k)
      if (arcs.labels[k] == l) s += arcs.length(k);
    return s * r;
  }
  double s = 0;
  for (std::size_t k = 0; k < labels.size(); ++k)
    if (labels[k] == l) s += q.weights[k];
  return s;
}

double SphereView::quad_error() const {
  if (exact) return 1e-12;
  const std::size_t m = labels.size();
  const double w = q.weights.empty() ? 0.0 : q.weights[0] * norm_factor();
  double boundary = 0;
  if (dim == 2) {
    std::vector<std::pair<double, Label>> ang(m);
    for (std::size_t k = 0; k < m; ++k) {
      Vec3 d = q.nodes[k] - x;
      ang[k] = {wrap_angle(std::atan2(d.y, d.x)), labels[k]};
    }
    std::sort(ang.begin(), ang.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    for (std::size_t k = 0; k < m; ++k)
      if (ang[k].second != ang[(k + 1) % m].second) boundary += 1;
  } else {
    // Nodes whose six nearest neighbours include another label.
    for (std::size_t i = 0; i < m; ++i) {
      std::vector<std::pair<double, std::size_t>> nn;
      nn.reserve(m);
      for (std::size_t j = 0; j < m; ++j)
        if (j != i) nn.emplace_back(dot(q.nodes[i] - q.nodes[j], q.nodes[i] - q.nodes[j]), j);
      std::size_t kk = std::min<std::size_t>(6, nn.size());
      std::partial_sort(nn.begin(), nn.begin() + static_cast<long>(kk), nn.end());
      for (std::size_t t = 0; t < kk; ++t)
        if (labels[nn[t].second] != labels[i]) {
          boundary += 0.5;
          break;
        }
    }
  }
  // Two extra cells for the boundary of the comparison half-space.
  boundary += 2;
  if (mode == QuadMode::Lattice) return boundary * w;
  return 3.0 * 0.5 * w * std::sqrt(boundary);
}

SphereView view_sphere(const RegionPair& R, const Vec3& x, double r, const QuadSpec& spec) {
  SphereView v;
  v.dim = R.dim();
  v.x = x;
  v.r = r;
  // No exact sphere intersector in 3D: exact requests use the lattice rule.
  v.mode = spec.mode == QuadMode::ExactArc && R.dim() == 3 ? QuadMode::Lattice : spec.mode;
  if (v.mode == QuadMode::ExactArc) {
    v.exact = true;
    v.arcs = arc_set(R, x, r);
    return v;
  }
  v.q = sample_sphere(R.dim(), x, r, v.mode, spec.nodes, spec.seed);
  kernels::classify_batch(R, v.q.nodes, v.labels);
  return v;
}

ConeReport cone_empty(const RegionPair& R, const Cone& C, double r, int angular, int radial) {
  if (!(r > 0)) throw PreconditionError("cone_empty: radius must be positive");
  if (!(C.aperture > 0 && C.aperture < 1)) throw PreconditionError("cone_empty: aperture must lie in (0,1)");
  ConeReport rep;
  const Vec3 u = normalized(C.axis);
  const double half_angle = std::acos(C.aperture);  // |cos| > a  <=>  angle to axis < acos(a)
  rep.radial_step = r / radial;
  auto check = [&](const Vec3& a, Label la, const Vec3& b, Label lb) {
    if (la != lb && rep.empty) {
      rep.empty = false;
      rep.witness = (a + b) * 0.5;
    }
  };
  for (int nappe = 0; nappe < 2; ++nappe) {
    const Vec3 ax = nappe == 0 ? u : -u;
    if (R.dim() == 2) {
      rep.angular_step = 2 * half_angle / angular;
      const double phi0 = std::atan2(ax.y, ax.x);
      std::vector<Label> lab(static_cast<std::size_t>(angular) * radial);
      std::vector<Vec3> pts(lab.size());
      for (int i = 0; i < angular; ++i)
        for (int j = 0; j < radial; ++j) {
          double t = phi0 - half_angle + (i + 0.5) * rep.angular_step;
          pts[i * radial + j] = C.apex + polar(t) * ((j + 0.5) * rep.radial_step);
        }
      kernels::classify_batch(R, pts, lab);
      rep.samples += static_cast<long>(lab.size());
      for (int i = 0; i < angular; ++i)
        for (int j = 0; j < radial; ++j) {
          std::size_t k = i * radial + j;
          if (j + 1 < radial) check(pts[k], lab[k], pts[k + 1], lab[k + 1]);
          if (i + 1 < angular) check(pts[k], lab[k], pts[k + radial], lab[k + radial]);
        }
    } else {
      Vec3 t1, t2;
      tangent_frame(ax, t1, t2);
      const int npol = angular / 2, naz = angular;
      rep.angular_step = half_angle / npol;
      std::vector<Vec3> pts(static_cast<std::size_t>(npol) * naz * radial);
      std::vector<Label> lab;
      auto idx = [&](int a, int b, int c) { return (static_cast<std::size_t>(a) * naz + b) * radial + c; };
      for (int a = 0; a < npol; ++a)
        for (int b = 0; b < naz; ++b)
          for (int c = 0; c < radial; ++c) {
            double psi = (a + 0.5) * rep.angular_step, az = kTwoPi * b / naz;
            Vec3 d = ax * std::cos(psi) + (t1 * std::cos(az) + t2 * std::sin(az)) * std::sin(psi);
            pts[idx(a, b, c)] = C.apex + d * ((c + 0.5) * rep.radial_step);
          }
      kernels::classify_batch(R, pts, lab);
      rep.samples += static_cast<long>(lab.size());
      for (int a = 0; a < npol; ++a)
        for (int b = 0; b < naz; ++b)
          for (int c = 0; c < radial; ++c) {
            std::size_t k = idx(a, b, c);
            if (c + 1 < radial) check(pts[k], lab[k], pts[idx(a, b, c + 1)], lab[idx(a, b, c + 1)]);
            if (a + 1 < npol) check(pts[k], lab[k], pts[idx(a + 1, b, c)], lab[idx(a + 1, b, c)]);
            std::size_t k2 = idx(a, (b + 1) % naz, c);
            check(pts[k], lab[k], pts[k2], lab[k2]);
          }
    }
  }
  return rep;
}

}  // namespace eps2
