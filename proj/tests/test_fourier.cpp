#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "eps2/errors.hpp"
#include "eps2/fourier.hpp"
#include "eps2/rng.hpp"
#include "eps2/vec.hpp"

using namespace eps2;

namespace {

const Kernel kBump{Kernel::Kind::Bump};
const Kernel kGauss{Kernel::Kind::Gaussian};

RadialProfile prof(Kernel K, int dim, double scale = 1) { return RadialProfile{K, dim, scale, 1}; }

// 1D test functions on [-8, 8) with radius 1 features.
GridFunction bump1(std::size_t n = 4096) { return bump_function(1, n, 16, 1.0); }
GridFunction tent1(std::size_t n = 4096) { return smoothed_tent(1, n, 16, 1.0, 0.3); }

FourierOptions fine_2d() {
  FourierOptions o;
  o.grid.min_cells = 1;
  return o;
}

double rel(double a, double b) { return std::fabs(a - b) / std::fabs(b); }

}  // namespace

TEST_CASE("grid function basics") {
  GridFunction f = bump1(1024);
  CHECK_NOTHROW(f.validate());
  // C-infinity bump of radius 1: max slope at the inflection, sampled finely.
  CHECK(f.slope() > 0.5);
  CHECK(f.slope() < 3);
  CHECK(f.scaled(3).grad_l2sq() == doctest::Approx(9 * f.grad_l2sq()).epsilon(1e-12));
  CHECK(f.with_slope(0.05).slope() == doctest::Approx(0.05).epsilon(1e-12));
  CHECK(f.eval(0.0) == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(f.eval(100.0) == 0.0);

  CHECK_THROWS_AS(bump_function(1, 256, 4, 1.9), PreconditionError);
  GridFunction bad = f;
  bad.values[500] = NAN;
  CHECK_THROWS_AS(bad.validate(), PreconditionError);

  GridFunction g2 = smoothed_tent(2, 64, 8, 1.5, 0.4);
  CHECK_NOTHROW(g2.validate());
  CHECK(g2.at(32, 32) > 0.5);
  auto box = g2.support_box();
  REQUIRE(box.size() == 4);
  CHECK(box[0] > 6);
  CHECK(box[1] < 58);
}

TEST_CASE("random lipschitz generator is seeded") {
  auto a = random_lipschitz(1, 512, 16, 2, 8, 7, 0.2);
  auto b = random_lipschitz(1, 512, 16, 2, 8, 7, 0.2);
  auto c = random_lipschitz(1, 512, 16, 2, 8, 8, 0.2);
  CHECK(a.values == b.values);
  CHECK(a.values != c.values);
  CHECK_NOTHROW(a.validate());
}

TEST_CASE("grid csv round trip and diagnostics") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "eps2_fourier_csv";
  fs::create_directories(dir);
  GridFunction f = random_lipschitz(2, 32, 8, 2, 5, 3, 0.3);
  const std::string p = (dir / "g.csv").string();
  write_grid_csv(p, f);
  GridFunction g = read_grid_csv(p);
  CHECK(g.dim == 2);
  CHECK(g.n == f.n);
  CHECK(g.h == doctest::Approx(f.h).epsilon(1e-15));
  CHECK(g.values == f.values);

  const std::string q = (dir / "bad.csv").string();
  {
    std::FILE* fp = std::fopen(q.c_str(), "w");
    std::fputs("x,f\n0,1\n0.1,oops\n", fp);
    std::fclose(fp);
  }
  try {
    read_grid_csv(q);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find(":3:") != std::string::npos);
  }
  fs::remove_all(dir);
}

TEST_CASE("profile transform: table against direct quadrature") {
  for (auto K : {kBump, kGauss})
    for (int dim : {1, 2}) {
      RadialProfile p = prof(K, dim);
      TransformTable T(p, 6);
      CHECK(T(0) == doctest::Approx(p.mass()).epsilon(1e-9));
      for (double t : {0.0, 0.013, 0.3, 0.77, 1.5, 2.9, 5.1}) CHECK(std::fabs(T(t) - p.transform(t)) < 1e-7);
    }
}

TEST_CASE("plancherel constant: gaussian closed forms") {
  // exp(-|x|^2): phi-hat = pi^{n/2} exp(-pi^2 t^2) and int (1 - e^{-a t^2})^2 dt / t^3 = a ln 2.
  CHECK(plancherel_constant(prof(kGauss, 1)).value == doctest::Approx(kPi * std::log(2.0) / 4).epsilon(1e-6));
  CHECK(plancherel_constant(prof(kGauss, 2)).value == doctest::Approx(kPi * kPi * std::log(2.0) / 4).epsilon(1e-6));
}

TEST_CASE("plancherel constant: depth doubling and dilation") {
  for (int dim : {1, 2}) {
    RadialProfile p = prof(kBump, dim);
    ConstantOptions lo, hi;
    lo.depth = 6;
    hi.depth = 12;
    double a = plancherel_constant(p, lo).value, b = plancherel_constant(p, hi).value;
    CHECK(a > 0);
    CHECK(rel(a, b) < 0.005);
    // phi(x / lam) has transform lam^n phi-hat(lam t): c scales by lam^(2n+2).
    for (double lam : {0.5, 2.0}) {
      double c = plancherel_constant(prof(kBump, dim, lam)).value;
      CHECK(c == doctest::Approx(b * std::pow(lam, 2 * dim + 2)).epsilon(1e-5));
    }
  }
}

TEST_CASE("second-difference constant is positive and stable") {
  for (int dim : {1, 2}) {
    ConstantOptions lo, hi;
    lo.depth = 6;
    lo.t_max = 32;
    double a = second_diff_constant(prof(kBump, dim), lo).value, b = second_diff_constant(prof(kBump, dim), hi).value;
    CHECK(b > 0);
    CHECK(rel(a, b) < 0.005);
    // Normalized to unit mass: independent of the weight.
    RadialProfile heavy = prof(kBump, dim);
    heavy.weight = 3;
    CHECK(second_diff_constant(heavy).value == doctest::Approx(b).epsilon(1e-9));
  }
}

TEST_CASE("discrete plancherel gate") {
  CHECK(discrete_plancherel_defect(bump1()) < 1e-13);
  CHECK(discrete_plancherel_defect(random_lipschitz(2, 64, 8, 2, 6, 11, 0.3)) < 1e-13);
}

TEST_CASE("plancherel lhs of zero is zero") {
  GridFunction z = bump1(1024).scaled(0);
  auto s = plancherel_lhs(z, prof(kBump, 1));
  CHECK(s.value == 0.0);
  auto rep = verify_fourier_identity(z, prof(kBump, 1));
  CHECK(rep.pass);
  CHECK(second_diff_lhs(z, prof(kBump, 1)).value == 0.0);
}

TEST_CASE("fourier identity holds on the 1D suite") {
  for (auto K : {kBump, kGauss})
    for (const auto& f : {bump1(16384), tent1(16384), random_lipschitz(1, 16384, 16, 2, 8, 5, 0.25)}) {
      auto a = verify_fourier_identity(f, prof(K, 1));
      CHECK_MESSAGE(a.pass, a.to_json().dump());
      auto b = verify_second_diff(f, prof(K, 1));
      CHECK_MESSAGE(b.pass, b.to_json().dump());
    }
}

TEST_CASE("fourier identity holds in 2D at reduced grid") {
  GridFunction f = smoothed_tent(2, 128, 16, 1.5, 0.45);
  auto a = verify_fourier_identity(f, prof(kBump, 2), 0.02, fine_2d());
  CHECK_MESSAGE(a.pass, a.values.dump());
  auto b = verify_second_diff(f, prof(kBump, 2), 0.03, fine_2d());
  CHECK_MESSAGE(b.pass, b.values.dump());
}

TEST_CASE("plancherel lhs: resolution, translation, scaling") {
  RadialProfile p = prof(kBump, 1);
  const double coarse = plancherel_lhs(bump1(2048), p).value, fine = plancherel_lhs(bump1(4096), p).value;
  CHECK(rel(coarse, fine) < 0.02);

  GridFunction f = tent1();
  const double v = plancherel_lhs(f, p).value;
  CHECK(rel(plancherel_lhs(f.translated(37), p).value, v) < 1e-9);
  CHECK(rel(plancherel_lhs(f.translated(-120), p).value, v) < 1e-9);

  auto a = verify_fourier_identity(f, p), b = verify_fourier_identity(f.scaled(2.5), p);
  CHECK(b.values["lhs"].get<double>() == doctest::Approx(6.25 * a.values["lhs"].get<double>()).epsilon(1e-10));
  CHECK(b.values["relative_error"].get<double>() == doctest::Approx(a.values["relative_error"].get<double>()).epsilon(1e-6));
}

TEST_CASE("second difference: resolution halving") {
  RadialProfile p = prof(kBump, 1);
  CHECK(rel(second_diff_lhs(tent1(2048), p).value, second_diff_lhs(tent1(4096), p).value) < 0.02);
}

TEST_CASE("second difference vanishes where f is affine") {
  // f = 0.3 x + 0.1 on |x| <= 2, smoothly cut off by |x| = 3.
  GridFunction f = bump_function(1, 4096, 16, 1.0);
  for (std::size_t i = 0; i < f.n; ++i) {
    double x = f.x(i), ax = std::fabs(x);
    double cut = ax <= 2 ? 1 : ax >= 3 ? 0 : bump_profile(1 + 0.1 * (ax - 2));
    f.values[i] = (0.3 * x + 0.1) * cut;
  }
  const double r = 0.25;
  int pad = 0;
  auto d = second_diff_profile(f, prof(kBump, 1), r, &pad);
  REQUIRE(pad >= 1);
  // Scale of the density just outside the affine part, for comparison.
  double outside = 0;
  for (std::size_t i = 0; i < f.n; ++i)
    if (std::fabs(f.x(i)) > 2.3 && std::fabs(f.x(i)) < 2.9) outside = std::max(outside, d[i]);
  double inside = 0;
  for (std::size_t i = 0; i < f.n; ++i)
    if (std::fabs(f.x(i)) + 1.1 * r < 2) inside = std::max(inside, std::fabs(d[i]));
  CHECK(outside > 1e-4);
  CHECK(inside < 1e-6 * outside);
}

TEST_CASE("graph square function reduces to the plancherel lhs") {
  GridFunction f = tent1(2048).with_slope(0.08);
  const double g = graph_square_function(f, kBump);
  CHECK(g == doctest::Approx(2 * plancherel_lhs(f, prof(kBump, 1)).value).epsilon(1e-9));
  CHECK(graph_square_function(f.scaled(0), kBump) == 0.0);
  CHECK_THROWS_AS(graph_square_function(f.with_slope(0.2), kBump), PreconditionError);
  CHECK_THROWS_AS(graph_square_function(f, kGauss), PreconditionError);
}

TEST_CASE("graph coefficient: transform against monte carlo volume") {
  GridFunction f = random_lipschitz(1, 2048, 16, 2, 8, 21, 0.25).with_slope(0.1);
  Rng pick(99);
  int inside = 0;
  double worst = 0;
  for (int k = 0; k < 50; ++k) {
    std::size_t i = 794 + pick.index(460);
    double r = 0.1 * std::pow(20.0, pick.uniform());
    double v = rho_coefficient_fft(f, kBump, i, 0, r);
    McEstimate mc = rho_coefficient_mc(f, kBump, f.x(i), 0, r, 20000, 1000 + k);
    REQUIRE(mc.sigma > 0);
    double z = std::fabs(mc.mean - v) / mc.sigma;
    worst = std::max(worst, z);
    inside += z <= 3;
  }
  INFO("worst z " << worst);
  CHECK(inside == 50);
}

TEST_CASE("rho and psi square functions over a slope sweep") {
  LipsSuite s;
  s.shapes = {bump1(2048), tent1(2048), random_lipschitz(1, 2048, 16, 2, 8, 7, 0.2)};
  auto sweep = lips_sweep(s, kBump);
  REQUIRE(sweep.size() == 9);
  auto gap = rho_psi_gap(sweep);
  CHECK_MESSAGE(gap.pass, gap.to_json().dump());
  auto lips = verify_lips(sweep);
  CHECK_MESSAGE(lips.pass, lips.to_json().dump());
  const double c = plancherel_constant(prof(kBump, 1)).value;
  for (const auto& e : sweep) {
    // Both ratios approach 2c as the slope goes to zero.
    CHECK(rel(e.g.rho / e.g.grad_l2sq, 2 * c) < 0.01);
    CHECK(e.g.gap >= 0);
  }

  // Gap invariant under horizontal translation; zero for f = 0.
  GridFunction f = tent1(2048).with_slope(0.1);
  auto a = graph_square_pair(f, kBump), b = graph_square_pair(f.translated(53), kBump);
  CHECK(b.gap == doctest::Approx(a.gap).epsilon(1e-6));
  CHECK(graph_square_pair(f.scaled(0), kBump).gap == 0.0);
}

TEST_CASE("lips ratio is stable under resolution doubling") {
  GapOptions o;
  auto a = graph_square_pair(tent1(1024).with_slope(0.05), kBump, o);
  auto b = graph_square_pair(tent1(2048).with_slope(0.05), kBump, o);
  CHECK(rel(a.psi / a.grad_l2sq, b.psi / b.grad_l2sq) < 0.03);
}

TEST_CASE("serial and parallel radius loops agree exactly") {
  FourierOptions s, p;
  s.serial = true;
  GridFunction f = tent1(2048);
  auto a = plancherel_lhs(f, prof(kBump, 1), s), b = plancherel_lhs(f, prof(kBump, 1), p);
  CHECK(a.per_radius == b.per_radius);
  CHECK(a.value == b.value);
  auto c = second_diff_lhs(f, prof(kBump, 1), s), d = second_diff_lhs(f, prof(kBump, 1), p);
  CHECK(c.value == d.value);
  GapOptions gs, gp;
  gs.fourier.serial = true;
  auto e = graph_square_pair(f.with_slope(0.1), kBump, gs), g = graph_square_pair(f.with_slope(0.1), kBump, gp);
  CHECK(e.psi == g.psi);
  CHECK(e.gap == g.gap);
}
