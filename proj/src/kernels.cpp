#include "eps2/kernels.hpp"

#include <cmath>
#include <exception>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace eps2 {

void set_workers(int n) {
#ifdef _OPENMP
  if (n > 0) omp_set_num_threads(n);
#else
  (void)n;
#endif
}

int workers() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

namespace kernels {

void classify_batch(const RegionPair& R, const std::vector<Vec3>& pts, std::vector<Label>& out) {
  out.resize(pts.size());
  const long n = static_cast<long>(pts.size());
#pragma omp parallel for schedule(static)
  for (long i = 0; i < n; ++i) out[i] = R.classify(pts[i]);
}

void classify_batch_serial(const RegionPair& R, const std::vector<Vec3>& pts, std::vector<Label>& out) {
  out.resize(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) out[i] = R.classify(pts[i]);
}


void riesz_matrix(const std::vector<Vec3>& pts, double s, double delta, std::vector<double>& K) {
  const long n = static_cast<long>(pts.size());
  K.assign(static_cast<std::size_t>(n * n), 0.0);
#pragma omp parallel for schedule(dynamic, 16)
  for (long i = 0; i < n; ++i)
    for (long j = 0; j < n; ++j) K[i * n + j] = riesz_kernel(dist(pts[i], pts[j]), s, delta);
}

void riesz_matrix_serial(const std::vector<Vec3>& pts, double s, double delta, std::vector<double>& K) {
  const std::size_t n = pts.size();
  K.assign(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) K[i * n + j] = riesz_kernel(dist(pts[i], pts[j]), s, delta);
}

void matvec(const std::vector<double>& K, const std::vector<double>& m, std::vector<double>& y) {
  const long n = static_cast<long>(m.size());
  y.assign(m.size(), 0.0);
#pragma omp parallel for schedule(static)
  for (long i = 0; i < n; ++i) {
    const double* row = K.data() + i * n;
    double acc = 0;
    for (long j = 0; j < n; ++j) acc += row[j] * m[j];
    y[i] = acc;
  }
}

void matvec_serial(const std::vector<double>& K, const std::vector<double>& m, std::vector<double>& y) {
  const std::size_t n = m.size();
  y.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0;
    for (std::size_t j = 0; j < n; ++j) acc += K[i * n + j] * m[j];
    y[i] = acc;
  }
}

void for_index(std::size_t n, const std::function<void(std::size_t)>& f) {
  const long nn = static_cast<long>(n);
  // An exception cannot leave an OpenMP region; keep the one with the lowest index.
  std::exception_ptr err;
  long err_at = nn;
#pragma omp parallel for schedule(dynamic, 1)
  for (long i = 0; i < nn; ++i) {
    try {
      f(static_cast<std::size_t>(i));
    } catch (...) {
#pragma omp critical(eps2_for_index)
      if (i < err_at) {
        err_at = i;
        err = std::current_exception();
      }
    }
  }
  if (err) std::rethrow_exception(err);
}

void for_index_serial(std::size_t n, const std::function<void(std::size_t)>& f) {
  for (std::size_t i = 0; i < n; ++i) f(i);
}

void map_index(std::size_t n, const std::function<double(std::size_t)>& f, std::vector<double>& out) {
  out.assign(n, 0.0);
  for_index(n, [&](std::size_t i) { out[i] = f(i); });
}

void map_index_serial(std::size_t n, const std::function<double(std::size_t)>& f, std::vector<double>& out) {
  out.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) out[i] = f(i);
}

double ordered_sum(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x;
  return s;
}

}  // namespace kernels
}  // namespace eps2
