#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>

namespace eps2 {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Points in R^2 or R^3. Planar data keeps z = 0 so every kernel can use
// the same three-component arithmetic.
struct Vec3 {
  double x = 0, y = 0, z = 0;

  constexpr double& operator[](std::size_t i) { return i == 0 ? x : (i == 1 ? y : z); }
  constexpr double operator[](std::size_t i) const { return i == 0 ? x : (i == 1 ? y : z); }

  constexpr Vec3& operator+=(const Vec3& o) { x += o.x; y += o.y; z += o.z; return *this; }
  constexpr Vec3& operator-=(const Vec3& o) { x -= o.x; y -= o.y; z -= o.z; return *this; }
  constexpr Vec3& operator*=(double s) { x *= s; y *= s; z *= s; return *this; }
};

constexpr Vec3 operator+(Vec3 a, const Vec3& b) { return a += b; }
constexpr Vec3 operator-(Vec3 a, const Vec3& b) { return a -= b; }
constexpr Vec3 operator-(const Vec3& a) { return {-a.x, -a.y, -a.z}; }
constexpr Vec3 operator*(Vec3 a, double s) { return a *= s; }
constexpr Vec3 operator*(double s, Vec3 a) { return a *= s; }
constexpr bool operator==(const Vec3& a, const Vec3& b) { return a.x == b.x && a.y == b.y && a.z == b.z; }

constexpr double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
constexpr Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }
inline double dist(const Vec3& a, const Vec3& b) { return norm(a - b); }
inline Vec3 normalized(const Vec3& a) {
  double n = norm(a);
  return n > 0 ? a * (1.0 / n) : a;
}

inline Vec3 polar(double theta) { return {std::cos(theta), std::sin(theta), 0.0}; }

// Angle folded into [0, 2pi).
inline double wrap_angle(double t) {
  t = std::fmod(t, kTwoPi);
  if (t < 0) t += kTwoPi;
  if (t >= kTwoPi) t = 0.0;
  return t;
}

// Surface measure of the unit sphere S^n in R^{n+1}: 2pi for the circle, 4pi for S^2.
inline double sphere_area(int dim) { return dim == 2 ? kTwoPi : 4.0 * kPi; }
inline double ball_volume(int dim) { return dim == 2 ? kPi : 4.0 * kPi / 3.0; }

// Orthonormal pair spanning the plane orthogonal to a unit vector.
inline void tangent_frame(const Vec3& n, Vec3& t1, Vec3& t2) {
  Vec3 a = std::fabs(n.x) < 0.9 ? Vec3{1, 0, 0} : Vec3{0, 1, 0};
  t1 = normalized(cross(n, a));
  t2 = cross(n, t1);
}

}  // namespace eps2
