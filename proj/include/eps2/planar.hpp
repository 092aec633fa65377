#pragma once

#include <utility>
#include <vector>

#include "eps2/dini.hpp"
#include "eps2/report.hpp"
#include "eps2/sphere.hpp"

namespace eps2 {

// Longest open arcs of S(x,r) inside each region and the matching
// characteristic constants alpha = pi / theta (+inf for an empty side).
struct ArcProfile {
  Vec3 x;
  double r = 0;
  double theta_plus = 0, theta_minus = 0;
  double start_plus = 0, start_minus = 0;  // start angle of the chosen arc
  double alpha_plus = 0, alpha_minus = 0;
};

ArcProfile arc_profile(const RegionPair& R, const Vec3& x, double r);

// min(1, alpha+ + alpha- - 2), written as
//   ((t+ - t-)^2 + s (2pi - s)) / (2 t+ t-),  s = t+ + t-,
// so it is nonnegative whenever s <= 2pi; an empty side gives 1.
double fh_term(const ArcProfile& p);

// (1/r) max(|pi r - H1(I+)|, |pi r - H1(I-)|)
double carleson_epsilon(const RegionPair& R, const Vec3& x, double r);
double carleson_epsilon(const ArcProfile& p);

// int min(1, alpha+ + alpha- - 2) dr/r (first power of the integrand).
DiniResult alpha_dini(const RegionPair& R, const Vec3& x, double r_min, double r_max,
                      double factor = kDefaultGridFactor);

// carleson eps^2 <= C min(1, alpha+ + alpha- - 2) on the grid; the
// empirical C is the max ratio over scales where the right side is positive.
Report akn_check(const RegionPair& R, const Vec3& x, const std::vector<double>& radii);

// Ratio table carleson_epsilon / epsilon at each radius (reported only).
Report carleson_ratio_table(const RegionPair& R, const Vec3& x, const std::vector<double>& radii);

// L1 distance on the unit ball between the rescaled regions (Omega - x)/r and
// the half-spaces {+-(y . u) > 0}: (plus defect, minus defect).
std::pair<double, double> l1_tangent_defect(const RegionPair& R, const Vec3& x, double r, const Vec3& u,
                                            const QuadSpec& q = {});

}  // namespace eps2
