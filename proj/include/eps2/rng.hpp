#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace eps2 {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Per-task seed: stable function of the master seed and the task index.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  return splitmix64(splitmix64(master) ^ (index * 0xd1b54a32d192ed03ULL + 1));
}

// mt19937_64 has a fixed output sequence by the standard; the conversions
// below are done by hand because library distributions are not portable.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }
  double uniform(double a, double b) { return a + (b - a) * uniform(); }
  std::uint64_t next() { return eng_(); }
  std::size_t index(std::size_t n) { return static_cast<std::size_t>(uniform() * static_cast<double>(n)) % n; }

  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform(), u2 = uniform();
    if (u1 < 1e-300) u1 = 1e-300;
    double m = std::sqrt(-2.0 * std::log(u1));
    spare_ = m * std::sin(2.0 * 3.14159265358979323846 * u2);
    have_spare_ = true;
    return m * std::cos(2.0 * 3.14159265358979323846 * u2);
  }

 private:
  std::mt19937_64 eng_;
  double spare_ = 0;
  bool have_spare_ = false;
};

}  // namespace eps2
