#include "eps2/suites.hpp"

#include <algorithm>
#include <cmath>

#include "eps2/capacity.hpp"
#include "eps2/coefficients.hpp"
#include "eps2/corona.hpp"
#include "eps2/dini.hpp"
#include "eps2/errors.hpp"
#include "eps2/fixtures.hpp"
#include "eps2/fourier.hpp"
#include "eps2/numerics.hpp"
#include "eps2/planar.hpp"
#include "eps2/rng.hpp"

namespace eps2 {

void SuiteResult::check(const std::string& what, bool ok) {
  checks.emplace_back(what, ok);
  pass = pass && ok;
}

nlohmann::json SuiteResult::to_json() const {
  nlohmann::json c = nlohmann::json::array();
  for (const auto& [k, v] : checks) c.push_back({{"check", k}, {"pass", v}});
  nlohmann::json r = nlohmann::json::array();
  for (const auto& rep : reports) r.push_back(rep.to_json());
  return {{"suite", name}, {"verdict", pass ? "PASS" : "FAIL"}, {"checks", c}, {"values", values}, {"reports", r}};
}

namespace {

using namespace fixtures;

const QuadSpec kExact{QuadMode::ExactArc, 0, 0};

// n geometric radii from a to b inclusive.
std::vector<double> geometric(double a, double b, int n) {
  std::vector<double> r(n);
  for (int k = 0; k < n; ++k) r[k] = a * std::pow(b / a, static_cast<double>(k) / (n - 1));
  return r;
}

double max_abs(std::initializer_list<double> v) {
  double m = 0;
  for (double x : v) m = std::max(m, std::fabs(x));
  return m;
}

}  // namespace

// ---- symmetric model -------------------------------------------------------------------

SuiteResult suite_exactness(const SuiteContext&) {
  SuiteResult S;
  S.name = "exactness";
  const std::vector<double> radii = geometric(1e-3, 10, 9);

  // 2D, exact arcs: every quantity must vanish to rounding.
  {
    RegionPair R = half_pair(2);
    double worst = 0;
    for (Vec3 x : {Vec3{0, 0, 0}, Vec3{0.3, 0, 0}, Vec3{-1.2, 0, 0}}) {
      std::vector<double> eps, a, g, gb, ap, am, ce, fh;
      for (double r : radii) {
        for (Kernel K : {Kernel{Kernel::Kind::Gaussian}, Kernel{Kernel::Kind::Bump}}) {
          CoefficientRecord c = coefficients(R, x, r, kExact, {}, K);
          worst = std::max(worst, max_abs({c.eps, c.a_sym, c.gamma_sym, c.g_ball, c.a_psi_plus, c.a_psi_minus}));
          if (K.kind == Kernel::Kind::Gaussian) {
            eps.push_back(c.eps);
            a.push_back(c.a_sym);
            g.push_back(c.gamma_sym);
            gb.push_back(c.g_ball);
            ap.push_back(c.a_psi_plus);
            am.push_back(c.a_psi_minus);
          }
        }
        ArcProfile p = arc_profile(R, x, r);
        ce.push_back(carleson_epsilon(p));
        fh.push_back(p.alpha_plus + p.alpha_minus - 2);
        worst = std::max(worst, max_abs({ce.back(), fh.back(), fh_term(p)}));
      }
      const double f = radii[1] / radii[0];
      for (const auto* v : {&eps, &a, &g, &gb, &ap, &am, &ce})
        worst = std::max(worst, dini_tabulated(radii, *v, f, "f").value);
      worst = std::max(worst, alpha_dini(R, x, radii.front(), radii.back()).value);
    }
    HarnessConfig hc;
    hc.factor = std::pow(2.0, 0.5);
    Report sm = verify_smoothed_domination(R, {0, 0, 0}, 1, 2, hc);
    Report gd = verify_g_domination(R, {0, 0, 0}, 1, hc);
    worst = std::max(worst, max_abs({sm.values["lhs_plus"].get<double>(), sm.values["lhs_minus"].get<double>(),
                                     sm.values["rhs_eps"].get<double>(), gd.values["int_g2"].get<double>(),
                                     gd.values["int_gamma2"].get<double>(), gd.values["int_eps2"].get<double>()}));
    S.reports.push_back(sm);
    S.reports.push_back(gd);
    S.values["max_2d_exact"] = worst;
    S.check("2D half-plane pair, exact arcs: all coefficients and Dini integrals <= 1e-12", worst <= 1e-12);
  }

  // 3D, Fibonacci lattice.
  {
    RegionPair R = half_pair(3);
    QuadSpec q{QuadMode::Lattice, 2000, 1};
    double worst = 0;
    std::vector<double> rr = geometric(1e-2, 1, 3);
    for (Vec3 x : {Vec3{0, 0, 0}, Vec3{0.4, -0.2, 0}}) {
      std::vector<double> eps;
      for (double r : rr) {
        CoefficientRecord c = coefficients(R, x, r, q);
        worst = std::max(worst, max_abs({c.eps, c.a_sym, c.gamma_sym, c.g_ball, c.a_psi_plus, c.a_psi_minus}));
        eps.push_back(c.eps);
      }
      worst = std::max(worst, dini_tabulated(rr, eps, rr[1] / rr[0], "eps").value);
    }
    S.values["max_3d_lattice"] = worst;
    S.check("3D half-space pair, lattice: all coefficients and Dini integrals <= 1e-6", worst <= 1e-6);
  }
  return S;
}

// ---- chain inequality -------------------------------------------------------------------------

SuiteResult suite_chain(const SuiteContext& c) {
  SuiteResult S;
  S.name = "chain";
  const std::vector<double> radii = geometric(0.02, 2, 16);
  int failed = 0;
  double worst = 0;
  std::vector<double> bad;
  for (int i = 0; i < 100; ++i) {
    const std::uint64_t seed = derive_seed(c.seed, static_cast<std::uint64_t>(i));
    Report r = verify_chain(random_scene(seed), {0.1, 0.1, 0}, radii);
    worst = std::max(worst, r.values["max_violation"].get<double>());
    if (!r.pass) {
      ++failed;
      bad.push_back(static_cast<double>(i));
    }
  }
  S.values["scenes"] = 100;
  S.values["scales"] = radii.size();
  S.values["failed_scenes"] = failed;
  S.values["failed_indices"] = bad;
  S.values["max_violation"] = worst;
  S.check("2a <= gamma <= 2 eps on 100 random scenes x 16 scales (within quadrature tolerance)", failed == 0);

  Report g = verify_chain(gap_strip(0.1), {0, 0, 0}, radii);
  double dev = 0;
  for (const auto& row : g.rows) dev = std::max({dev, std::fabs(2 * row[1] - row[2]), std::fabs(row[2] - 2 * row[3])});
  S.values["gap_strip_equality_deviation"] = dev;
  S.reports.push_back(g);
  S.check("gap strip: 2a = gamma = 2 eps within 1e-9", dev <= 1e-9);
  return S;
}

// ---- gap strip closed forms -------------------------------------------------------------------

SuiteResult suite_gap_strip(const SuiteContext& c) {
  SuiteResult S;
  S.name = "gap_strip";
  const int replicas = 256;
  Report rep;
  rep.lemma = "gap_strip_closed_forms";
  rep.columns = {"h_over_r", "r", "eps", "a", "gamma", "exact_err", "mc_eps", "mc_a", "mc_gamma", "sigma_eps",
                 "sigma_a", "sigma_gamma", "max_z"};
  double exact_worst = 0, z_worst = 0;
  int block = 0;
  for (double t : {0.05, 0.1, 0.2})
    for (double r : {1.0, 3.0}) {
      RegionPair R = gap_strip(t * r);
      const Vec3 x{0, 0, 0};
      const double as = std::asin(t);
      const double want[3] = {2 * as, 2 * as, 4 * as};
      SphereView v = view_sphere(R, x, r, kExact);
      const double got[3] = {epsilon(v).value, asym_a(v), gamma_sym(v)};
      double err = 0;
      for (int k = 0; k < 3; ++k) err = std::max(err, std::fabs(got[k] - want[k]));
      exact_worst = std::max(exact_worst, err);

      // Monte-Carlo: one run at the derived seed; sigma from independent replicas.
      auto mc = [&](std::uint64_t seed, double out[3]) {
        SphereView w = view_sphere(R, x, r, {QuadMode::Stratified, 720, seed});
        out[0] = epsilon(w).value;
        out[1] = asym_a(w);
        out[2] = gamma_sym(w);
      };
      const std::uint64_t base = derive_seed(c.seed, static_cast<std::uint64_t>(block++));
      double run[3];
      mc(base, run);
      double s1[3] = {0, 0, 0}, s2[3] = {0, 0, 0};
      for (int k = 0; k < replicas; ++k) {
        double o[3];
        mc(derive_seed(base, static_cast<std::uint64_t>(k + 1)), o);
        for (int j = 0; j < 3; ++j) {
          s1[j] += o[j];
          s2[j] += o[j] * o[j];
        }
      }
      double sig[3], z = 0;
      for (int j = 0; j < 3; ++j) {
        const double m = s1[j] / replicas;
        sig[j] = std::sqrt(std::max(0.0, (s2[j] - replicas * m * m) / (replicas - 1)));
        z = std::max(z, sig[j] > 0 ? std::fabs(run[j] - want[j]) / sig[j] : (run[j] == want[j] ? 0.0 : INFINITY));
      }
      z_worst = std::max(z_worst, z);
      rep.add_row({t, r, got[0], got[1], got[2], err, run[0], run[1], run[2], sig[0], sig[1], sig[2], z});
    }
  rep.values = {{"max_exact_error", exact_worst}, {"max_z", z_worst}};
  rep.tolerances = {{"exact", 1e-6}, {"monte_carlo_sigmas", 3}};
  rep.pass = exact_worst <= 1e-6 && z_worst <= 3;
  S.reports.push_back(rep);
  S.values = rep.values;
  S.check("exact mode: eps = a = 2 asin(h/r), gamma = 4 asin(h/r) within 1e-6", exact_worst <= 1e-6);
  S.check("Monte-Carlo mode: within 3 sigma", z_worst <= 3);
  return S;
}

// ---- smoothed domination ----------------------------------------------------------------------

SuiteResult suite_smoothed(const SuiteContext&) {
  SuiteResult S;
  S.name = "smoothed";
  HarnessConfig hc;
  hc.factor = std::pow(2.0, 0.25);
  std::vector<double> Cs, Cg;
  bool all = true;
  for (double h : {0.02, 0.05, 0.1, 0.2}) {
    Report a = verify_smoothed_domination(gap_strip(h), {0, 0, 0}, 1, 2, hc);
    Report b = verify_g_domination(gap_strip(h), {0, 0, 0}, 1, hc);
    all = all && a.pass && b.pass;
    Cs.push_back(a.empirical_constant.get<double>());
    Cg.push_back(b.empirical_constant.get<double>());
    S.reports.push_back(a);
    S.reports.push_back(b);
  }
  auto spread = [](const std::vector<double>& v) {
    return *std::max_element(v.begin(), v.end()) / *std::min_element(v.begin(), v.end());
  };
  S.values = {{"smoothed_constants", Cs}, {"g_constants", Cg}, {"smoothed_spread", spread(Cs)}, {"g_spread", spread(Cg)}};
  S.check("smoothed and g domination hold on the gap-strip family", all);
  S.check("empirical constants agree within a factor 2 across h", spread(Cs) <= 2 && spread(Cg) <= 2);
  return S;
}

// ---- Fourier identities -------------------------------------------------------------------------

SuiteResult suite_fourier(const SuiteContext&) {
  SuiteResult S;
  S.name = "fourier";
  const std::size_t n = 16384;
  const GridFunction fs[2] = {bump_function(1, n, 16, 1.0), smoothed_tent(1, n, 16, 1.0, 0.3)};
  const char* names[2] = {"bump", "smoothed_tent"};
  nlohmann::json errs = nlohmann::json::object();
  for (Kernel K : {Kernel{Kernel::Kind::Bump}, Kernel{Kernel::Kind::Gaussian}})
    for (int i = 0; i < 2; ++i) {
      const RadialProfile p{K, 1};
      Report a = verify_fourier_identity(fs[i], p, 0.02);
      Report b = verify_second_diff(fs[i], p, 0.03);
      const std::string tag = std::string(names[i]) + "/" + K.name();
      errs[tag] = {{"plancherel", a.values["relative_error"]}, {"second_difference", b.values["relative_error"]}};
      S.check(tag + ": plancherel identity within 2%", a.pass);
      S.check(tag + ": second-difference identity within 3%", b.pass);
      S.reports.push_back(a);
      S.reports.push_back(b);
    }
  S.values["relative_errors"] = errs;
  return S;
}

SuiteResult suite_lips(const SuiteContext& c) {
  SuiteResult S;
  S.name = "lips";
  const std::size_t n = 4096;
  LipsSuite L;
  L.shapes = {bump_function(1, n, 16, 1.0), smoothed_tent(1, n, 16, 1.0, 0.3),
              random_lipschitz(1, n, 16, 2.0, 8, derive_seed(c.seed, 0), 0.2)};
  const Kernel K{Kernel::Kind::Bump};
  auto sweep = lips_sweep(L, K);
  Report gap = rho_psi_gap(sweep);
  Report lips = verify_lips(sweep);
  S.values = {{"gap_C", gap.values["C"]}, {"gap_max_relative_drift", gap.values["max_relative_drift"]},
              {"spread", lips.values["spread"]}};
  S.check("ratio in [1/8, 8] and its spread shrinks monotonically with the slope", lips.pass);
  S.check("rho-psi gap <= C slope^4 ||grad f||^2, C fit at slope 0.1, +-50% at smaller slopes", gap.pass);
  S.reports.push_back(gap);
  S.reports.push_back(lips);
  return S;
}

// ---- corona -------------------------------------------------------------------------------------

SuiteResult suite_corona(const SuiteContext& c) {
  SuiteResult S;
  S.name = "corona";
  CoronaParams p;
  p.theta = 0.01;
  p.alpha = 0.1;
  p.lip_pairs = 10000;
  p.seed = derive_seed(c.seed, 1);
  {
    WeightedCloud mu = graph_cloud(10000, 0.03, derive_seed(c.seed, 0));
    CoronaResult R = corona(mu, {{0, 0, 0}, 0.5}, p);
    const auto& dg = R.diagnostics;
    const auto& w = dg["whitney"];
    // Neighbours of R_i have side >= l/10 and sit in a box of half-width 82.5 l.
    const double c_bound = std::pow(1650.0, R.dim - 1);
    S.values["stats"] = R.stats.to_json();
    S.values["whitney"] = w;
    S.values["partition_of_unity"] = dg["partition_of_unity"];
    S.values["piperp_lip"] = dg["piperp_lip"];
    S.check("mu(Z) >= 0.9 mu(E0)", R.stats.mu_Z >= 0.9 * R.stats.mu_E0);
    S.check("slope(A) <= 0.5", R.stats.max_grad <= 0.5);
    S.check("Whitney (a): 5 l <= D <= 50 l on 15R", w["a_holds"].get<bool>());
    S.check("Whitney (b): neighbour sides within a factor 10", w["b_ratio"].get<double>() <= 10);
    S.check("Whitney (c): bounded overlap of 15R", w["c_count"].get<double>() <= c_bound);
    S.check("Whitney (d): cubes tile the window, residual leaves near E", w["partition"].get<bool>() && w["residual_ok"].get<bool>());
    S.check("partition of unity sums to 1 within 1e-9", dg["partition_of_unity"]["max_sum_deviation"].get<double>() <= 1e-9);
    S.check("Pi-perp Lipschitz bound on 10^4 pairs", dg["piperp_lip"]["violations"].get<int>() == 0 &&
                                                          dg["piperp_lip"]["pairs"].get<int>() == 10000);
  }
  {
    // A horizontal segment carrying 95% of the mass and a vertical spike with 5%.
    std::vector<Vec3> pts;
    for (int i = 0; i < 9500; ++i) pts.push_back({-1 + 2.0 * i / 9499, 0, 0});
    const std::size_t first = pts.size();
    for (int i = 1; i <= 500; ++i) pts.push_back({0.2, 0.3 * i / 500, 0});
    CoronaParams q = p;
    q.lip_pairs = 1000;
    CoronaResult R = corona(counting_cloud(2, pts), {{0, 0, 0}, 0.5}, q);
    std::size_t spike = 0, ba = 0;
    for (std::size_t a = 0; a < R.e0.size(); ++a)
      if (R.e0[a] >= first) {
        ++spike;
        ba += R.labels[a] == PointClass::BA;
      }
    const double frac = spike ? static_cast<double>(ba) / static_cast<double>(spike) : 0.0;
    S.values["spike"] = {{"points_in_E0", spike}, {"labelled_BA", ba}, {"fraction", frac}};
    S.check("spike of mass 5%: BA captures >= 80% of it", spike > 0 && frac >= 0.8);
  }
  return S;
}

// ---- capacity -------------------------------------------------------------------------------

SuiteResult suite_capacity(const SuiteContext& c) {
  SuiteResult S;
  S.name = "capacity";
  {
    Rng g(derive_seed(c.seed, 0));
    std::vector<Vec3> K;
    for (int i = 0; i < 300; ++i) K.push_back({g.uniform(-1, 1), g.uniform(-1, 1), 0});
    double worst = 0;
    nlohmann::json rows = nlohmann::json::array();
    for (double s : {0.5, 1.0, 1.5}) {
      const double base = capacity_s(K, 2, s).value;
      for (double l : {0.5, 2.0}) {
        std::vector<Vec3> L = K;
        for (auto& p : L) p = l * p;
        const double ratio = capacity_s(L, 2, s).value / base / std::pow(l, s);
        worst = std::max(worst, std::fabs(ratio - 1));
        rows.push_back({{"s", s}, {"lambda", l}, {"ratio_over_lambda_s", ratio}});
      }
    }
    S.values["scaling"] = rows;
    S.check("Cap_s(lambda K) = lambda^s Cap_s(K) within 2%", worst <= 0.02);
  }
  {
    auto K = ball_net(2000, 7);
    const double v = capacity_s(K, 3, 1.0).value;
    auto Sph = sphere_net(16000);
    std::vector<double> m(Sph.size(), 1.0 / static_cast<double>(Sph.size()));
    const double oracle = 1 / riesz_energy({Sph, m, net_spacing(Sph) / 2}, 1.0).total;
    S.values["newtonian"] = {{"net", v}, {"oracle", oracle}, {"relative", std::fabs(v / oracle - 1)}};
    S.check("Newtonian capacity of the unit-ball net within 5% of the fine-net oracle", std::fabs(v / oracle - 1) <= 0.05);
  }
  {
    const double s = 0.5, t = 1.0;
    double c1[2], c2[2];
    for (int lv = 0; lv < 2; ++lv) {
      auto K = four_corner_cantor(4 + lv);
      ContentOptions o;
      o.depth = 2 * (4 + lv) + 2;
      o.resolution = std::pow(0.25, 4 + lv);
      o.root = Cube{{0, 0, 0}, 1};
      const double Ht = hausdorff_content(K, 2, t, o), Hs = hausdorff_content(K, 2, s, o);
      const double cap = capacity_s(K, 2, s).value;
      c1[lv] = std::pow(Ht, s / t) / cap;
      c2[lv] = cap / Hs;
    }
    const double d1 = std::max(c1[0] / c1[1], c1[1] / c1[0]), d2 = std::max(c2[0] / c2[1], c2[1] / c2[0]);
    S.values["sandwich"] = {{"lower", {c1[0], c1[1]}}, {"upper", {c2[0], c2[1]}}};
    S.check("capacity/content sandwich constants stable within a factor 2 under refinement", d1 <= 2 && d2 <= 2);
  }
  return S;
}

SuiteResult suite_slicing(const SuiteContext&) {
  SuiteResult S;
  S.name = "slicing";
  auto make = [](int ball_pts) {
    SlicingInput in;
    in.dim = 3;
    in.r0 = 1;
    in.tau = 0;
    in.graph = [](const Vec3&) { return 0.0; };
    in.B = {{0, 0, 0.5}, 0.1};
    in.K = ball_net(ball_pts, 4, 0.1, in.B.center);
    disk_net(0.3, 4, 0.0, in.G, in.G_weights);
    in.s = 1.5;
    return in;
  };
  SlicingReport a = slicing_check(make(250)), b = slicing_check(make(600));
  S.values["coarse"] = a.to_json();
  S.values["fine"] = b.to_json();
  const bool finite = std::isfinite(a.lhs) && std::isfinite(a.rhs) && std::isfinite(b.lhs) && std::isfinite(b.rhs) &&
                      a.ratio > 0 && b.ratio > 0;
  S.check("LHS and RHS finite and positive", finite);
  S.check("hypotheses on B hold", a.radius_ok && a.distance_ok);
  S.check("LHS/RHS stable within a factor 2 under net refinement",
          finite && std::max(a.ratio / b.ratio, b.ratio / a.ratio) <= 2);
  auto e = make(250);
  e.K.clear();
  SlicingReport z = slicing_check(e);
  S.check("K empty gives 0 = 0", z.lhs == 0 && z.rhs == 0);
  return S;
}

// ---- AKN --------------------------------------------------------------------------------------

SuiteResult suite_akn(const SuiteContext& c) {
  SuiteResult S;
  S.name = "akn";
  const std::vector<double> radii = log_grid(1e-3, 1, std::pow(2.0, 0.25));
  double C = 0, fh_min = INFINITY;
  bool finite = true;
  auto take = [&](const Report& r) {
    C = std::max(C, r.empirical_constant.get<double>());
    fh_min = std::min(fh_min, r.values["fh_min"].get<double>());
    finite = finite && std::isfinite(r.empirical_constant.get<double>());
  };
  double C_strip = 0;
  for (double h : {0.02, 0.05, 0.1, 0.2}) {
    Report r = akn_check(gap_strip(h), {0, 0, 0}, radii);
    take(r);
    C_strip = std::max(C_strip, r.empirical_constant.get<double>());
    S.reports.push_back(r);
  }
  for (int i = 0; i < 50; ++i) take(akn_check(random_scene(derive_seed(c.seed, static_cast<std::uint64_t>(i))), {0.1, 0, 0}, radii));
  S.values = {{"C", C}, {"C_gap_strip", C_strip}, {"fh_min", fh_min}, {"random_scenes", 50}};
  S.check("one finite C bounds eps^2 / min(1, alpha+ + alpha- - 2) on the gap strips and 50 random scenes", finite);
  S.check("min(1, alpha+ + alpha- - 2) >= 0 exactly", fh_min >= 0);
  return S;
}

// ---- registry ------------------------------------------------------------------------------------

const std::vector<SuiteEntry>& suite_registry() {
  static const std::vector<SuiteEntry> r = {
      {"exactness", "chain", suite_exactness}, {"chain", "chain", suite_chain},
      {"gap_strip", "chain", suite_gap_strip}, {"smoothed", "smoothed", suite_smoothed},
      {"fourier", "fourier", suite_fourier},   {"lips", "fourier", suite_lips},
      {"corona", "corona", suite_corona},      {"capacity", "capacity", suite_capacity},
      {"slicing", "capacity", suite_slicing},  {"akn", "akn", suite_akn},
  };
  return r;
}

std::vector<std::string> suite_group(const std::string& group) {
  std::vector<std::string> out;
  for (const auto& e : suite_registry())
    if (group == "all" || e.group == group) out.push_back(e.id);
  if (out.empty()) throw ConfigError("unknown suite '" + group + "' (chain, smoothed, fourier, corona, capacity, akn, all)");
  return out;
}

const SuiteEntry& find_suite(const std::string& id) {
  for (const auto& e : suite_registry())
    if (e.id == id) return e;
  throw ConfigError("unknown suite id '" + id + "'");
}

}  // namespace eps2
