#pragma once

// Hot loops, each with an OpenMP version and a serial reference twin.
// Every parallel kernel writes per-item results into preallocated slots and
// reduces in index order, so the worker count never changes the output.

#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

#include "eps2/region.hpp"

namespace eps2 {

void set_workers(int n);
int workers();

// max(d, delta)^-s; s = 0 gives (1/2pi) log(1/max(d, delta)).
inline double riesz_kernel(double d, double s, double delta) {
  const double t = d > delta ? d : delta;
  if (s == 0) return -std::log(t) / kTwoPi;
  if (s == 1) return 1 / t;
  if (s == 2) return 1 / (t * t);
  if (s == 0.5) return 1 / std::sqrt(t);
  if (s == 1.5) return 1 / (t * std::sqrt(t));
  return std::pow(t, -s);
}

namespace kernels {

void classify_batch(const RegionPair& R, const std::vector<Vec3>& pts, std::vector<Label>& out);
void classify_batch_serial(const RegionPair& R, const std::vector<Vec3>& pts, std::vector<Label>& out);

// Dense symmetric kernel matrix K_ij = k(|x_i - x_j|) for the mollified Riesz
// kernel max(d, delta)^{-s}; s = 0 gives (1/2pi) log(1/max(d, delta)).
void riesz_matrix(const std::vector<Vec3>& pts, double s, double delta, std::vector<double>& K);
void riesz_matrix_serial(const std::vector<Vec3>& pts, double s, double delta, std::vector<double>& K);

// y = K m for a dense n x n row-major matrix.
void matvec(const std::vector<double>& K, const std::vector<double>& m, std::vector<double>& y);
void matvec_serial(const std::vector<double>& K, const std::vector<double>& m, std::vector<double>& y);

// f(i) for i in [0, n); f writes only to its own slots. The first exception
// by index is rethrown after the loop.
void for_index(std::size_t n, const std::function<void(std::size_t)>& f);
void for_index_serial(std::size_t n, const std::function<void(std::size_t)>& f);

// out[i] = f(i) for i in [0, n); f must be pure.
void map_index(std::size_t n, const std::function<double(std::size_t)>& f, std::vector<double>& out);
void map_index_serial(std::size_t n, const std::function<double(std::size_t)>& f, std::vector<double>& out);

// Sum in index order (deterministic across worker counts).
double ordered_sum(const std::vector<double>& v);

}  // namespace kernels
}  // namespace eps2
