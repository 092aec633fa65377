#include "eps2/runner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>

#include "eps2/capacity.hpp"
#include "eps2/coefficients.hpp"
#include "eps2/dini.hpp"
#include "eps2/errors.hpp"
#include "eps2/fixtures.hpp"
#include "eps2/fourier.hpp"
#include "eps2/kernels.hpp"
#include "eps2/numerics.hpp"
#include "eps2/planar.hpp"
#include "eps2/rng.hpp"
#include "eps2/scene_io.hpp"
#include "eps2/suites.hpp"

namespace eps2 {

namespace fs = std::filesystem;
using json = nlohmann::json;
using kernels::for_index;

// ---- ConfigView -------------------------------------------------------------------------------

namespace {
const json& empty_object() {
  static const json e = json::object();
  return e;
}
}  // namespace

ConfigView::ConfigView(const json& src, json& resolved, std::string path)
    : src_(&src), out_(&resolved), path_(std::move(path)), used_(std::make_shared<std::set<std::string>>()) {
  if (!src.is_object()) throw ConfigError(path_ + ": expected an object");
  if (!out_->is_object()) *out_ = json::object();
}

bool ConfigView::has(const std::string& key) const { return src_->contains(key); }

void ConfigView::fail(const std::string& key, const std::string& msg) const {
  throw ConfigError((key.empty() ? path_ : key_path(key)) + ": " + msg);
}

const json& ConfigView::need(const std::string& key, bool optional_present) {
  used_->insert(key);
  if (!src_->contains(key)) {
    if (!optional_present) fail(key, "missing");
    return empty_object();
  }
  return src_->at(key);
}

const json& ConfigView::raw(const std::string& key) {
  const json& j = need(key, false);
  (*out_)[key] = j;
  return j;
}

double ConfigView::number(const std::string& key, std::optional<double> def) {
  used_->insert(key);
  double v;
  if (!has(key)) {
    if (!def) fail(key, "missing");
    v = *def;
  } else {
    const json& j = src_->at(key);
    if (!j.is_number()) fail(key, "expected a number");
    v = j.get<double>();
    if (!std::isfinite(v)) fail(key, "expected a finite number");
  }
  (*out_)[key] = v;
  return v;
}

double ConfigView::positive(const std::string& key, std::optional<double> def) {
  double v = number(key, def);
  if (!(v > 0)) fail(key, "expected a positive number");
  return v;
}

long ConfigView::integer(const std::string& key, std::optional<long> def, long min) {
  used_->insert(key);
  long v;
  if (!has(key)) {
    if (!def) fail(key, "missing");
    v = *def;
  } else {
    const json& j = src_->at(key);
    if (!j.is_number_integer()) fail(key, "expected an integer");
    v = j.get<long>();
  }
  if (v < min) fail(key, "expected an integer >= " + std::to_string(min));
  (*out_)[key] = v;
  return v;
}

std::uint64_t ConfigView::seed(const std::string& key, std::optional<std::uint64_t> def) {
  used_->insert(key);
  std::uint64_t v;
  if (!has(key)) {
    if (!def) fail(key, "missing");
    v = *def;
  } else {
    const json& j = src_->at(key);
    if (j.is_number_unsigned()) v = j.get<std::uint64_t>();
    else if (j.is_number_integer() && j.get<long long>() >= 0) v = static_cast<std::uint64_t>(j.get<long long>());
    else fail(key, "expected a non-negative 64-bit integer");
  }
  (*out_)[key] = v;
  return v;
}

bool ConfigView::flag(const std::string& key, bool def) {
  used_->insert(key);
  bool v = def;
  if (has(key)) {
    if (!src_->at(key).is_boolean()) fail(key, "expected true or false");
    v = src_->at(key).get<bool>();
  }
  (*out_)[key] = v;
  return v;
}

namespace {
std::string join(const std::vector<std::string>& v) {
  std::string s;
  for (const auto& x : v) s += (s.empty() ? "" : ", ") + x;
  return s;
}
}  // namespace

std::string ConfigView::text(const std::string& key, std::optional<std::string> def,
                             const std::vector<std::string>& choices) {
  used_->insert(key);
  std::string v;
  if (!has(key)) {
    if (!def) fail(key, "missing");
    v = *def;
  } else {
    if (!src_->at(key).is_string()) fail(key, "expected a string");
    v = src_->at(key).get<std::string>();
  }
  if (!choices.empty() && std::find(choices.begin(), choices.end(), v) == choices.end())
    fail(key, "'" + v + "' is not one of " + join(choices));
  (*out_)[key] = v;
  return v;
}

std::vector<std::string> ConfigView::texts(const std::string& key, const std::vector<std::string>& def,
                                           const std::vector<std::string>& choices) {
  used_->insert(key);
  std::vector<std::string> v = def;
  if (has(key)) {
    const json& j = src_->at(key);
    if (!j.is_array()) fail(key, "expected an array of strings");
    v.clear();
    for (std::size_t i = 0; i < j.size(); ++i) {
      const std::string at = key + "[" + std::to_string(i) + "]";
      if (!j[i].is_string()) fail(at, "expected a string");
      v.push_back(j[i].get<std::string>());
      if (std::find(choices.begin(), choices.end(), v.back()) == choices.end())
        fail(at, "'" + v.back() + "' is not one of " + join(choices));
    }
  }
  (*out_)[key] = v;
  return v;
}

namespace {
Vec3 to_point(const json& j, int dim, const ConfigView& cv, const std::string& key) {
  if (!j.is_array() || static_cast<int>(j.size()) != dim)
    cv.fail(key, "expected an array of " + std::to_string(dim) + " numbers");
  Vec3 p{0, 0, 0};
  for (int k = 0; k < dim; ++k) {
    if (!j[k].is_number()) cv.fail(key + "[" + std::to_string(k) + "]", "expected a number");
    p[k] = j[k].get<double>();
  }
  return p;
}
json from_point(const Vec3& p, int dim) {
  json a = json::array();
  for (int k = 0; k < dim; ++k) a.push_back(p[k]);
  return a;
}
}  // namespace

Vec3 ConfigView::point(const std::string& key, int dim, std::optional<Vec3> def) {
  used_->insert(key);
  Vec3 p;
  if (!has(key)) {
    if (!def) fail(key, "missing");
    p = *def;
  } else {
    p = to_point(src_->at(key), dim, *this, key);
  }
  (*out_)[key] = from_point(p, dim);
  return p;
}

std::vector<Vec3> ConfigView::points(const std::string& key, int dim, std::optional<std::vector<Vec3>> def) {
  used_->insert(key);
  std::vector<Vec3> v;
  if (!has(key)) {
    if (!def) fail(key, "missing");
    v = *def;
  } else {
    const json& j = src_->at(key);
    if (!j.is_array() || j.empty()) fail(key, "expected a non-empty array of points");
    for (std::size_t i = 0; i < j.size(); ++i) v.push_back(to_point(j[i], dim, *this, key + "[" + std::to_string(i) + "]"));
  }
  json a = json::array();
  for (const auto& p : v) a.push_back(from_point(p, dim));
  (*out_)[key] = a;
  return v;
}

std::vector<double> ConfigView::numbers(const std::string& key, std::optional<std::vector<double>> def) {
  used_->insert(key);
  std::vector<double> v;
  if (!has(key)) {
    if (!def) fail(key, "missing");
    v = *def;
  } else {
    const json& j = src_->at(key);
    if (!j.is_array()) fail(key, "expected an array of numbers");
    for (std::size_t i = 0; i < j.size(); ++i) {
      if (!j[i].is_number()) fail(key + "[" + std::to_string(i) + "]", "expected a number");
      v.push_back(j[i].get<double>());
    }
  }
  (*out_)[key] = v;
  return v;
}

ConfigView ConfigView::object(const std::string& key) {
  const json& j = need(key, true);
  if (!j.is_object()) fail(key, "expected an object");
  return ConfigView(j, (*out_)[key], key_path(key));
}

std::vector<ConfigView> ConfigView::objects(const std::string& key) {
  const json& j = need(key, false);
  if (!j.is_array()) fail(key, "expected an array of objects");
  json& o = (*out_)[key];
  o = json::array();
  for (std::size_t i = 0; i < j.size(); ++i) o.push_back(json::object());  // sized before any reference is taken
  std::vector<ConfigView> v;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string at = key + "[" + std::to_string(i) + "]";
    if (!j[i].is_object()) fail(at, "expected an object");
    v.emplace_back(j[i], o[i], key_path(at));
  }
  return v;
}

void ConfigView::finish(const std::vector<std::string>& pending) const {
  for (auto it = src_->begin(); it != src_->end(); ++it)
    if (!used_->count(it.key()) && std::find(pending.begin(), pending.end(), it.key()) == pending.end())
      fail(it.key(), "unknown key");
}

// ---- output helpers --------------------------------------------------------------------------

namespace {

std::vector<std::string> cells(const std::vector<double>& row) {
  std::vector<std::string> c;
  for (double v : row) c.push_back(csv_cell(v));
  return c;
}

TaskFile json_file(const std::string& name, json doc) {
  TaskFile f;
  f.name = name;
  f.doc = std::move(doc);
  return f;
}

}  // namespace

TaskFile plotdata(const std::string& name, const Report& r) {
  TaskFile f;
  f.name = name;
  f.header = r.columns;
  for (const auto& row : r.rows) f.rows.push_back(cells(row));
  return f;
}

void write_task_file(const std::string& dir, const TaskFile& f) {
  const std::string path = (fs::path(dir) / f.name).string();
  if (f.doc) write_text(path, dump_json(*f.doc));
  else write_csv(path, f.header, f.rows);
}

void emit_plotdata(const Report& r, const std::string& path) {
  const fs::path p(path);
  write_task_file(p.has_parent_path() ? p.parent_path().string() : ".", plotdata(p.filename().string(), r));
}

TaskFile corona_plotdata(const std::string& name, const CoronaResult& r, const WeightedCloud& cloud) {
  TaskFile f;
  f.name = name;
  f.header = r.dim == 2 ? std::vector<std::string>{"x1", "x2", "label", "h", "graph_height"}
                        : std::vector<std::string>{"x1", "x2", "x3", "label", "h", "graph_height"};
  for (std::size_t a = 0; a < r.e0.size(); ++a) {
    const Vec3& p = cloud.points[r.e0[a]];
    std::vector<std::string> row;
    for (int k = 0; k < r.dim; ++k) row.push_back(csv_cell(p[k]));
    row.push_back(point_class_name(r.labels[a]));
    row.push_back(csv_cell(r.h[a]));
    // height of A over the projection of p, measured along the normal of L0
    row.push_back(csv_cell(r.graph.interpolate(r.L0.to_u(p))));
    f.rows.push_back(std::move(row));
  }
  return f;
}

// ---- task parsing -------------------------------------------------------------------------------

namespace {

struct PlanCtx {
  std::string base_dir;
  std::optional<std::string> scene_path;  // top-level default
  std::uint64_t seed = 0;                 // this task's derived seed
};

std::string resolve(const PlanCtx& c, const std::string& p) {
  fs::path q(p);
  return q.is_absolute() ? p : (fs::path(c.base_dir) / q).lexically_normal().string();
}

RegionPair scene_for(ConfigView& v, const PlanCtx& c) {
  std::string path;
  if (v.has("scene")) path = v.text("scene");
  else if (c.scene_path) path = *c.scene_path;
  else v.fail("scene", "missing (set it on the task or at the top level)");
  const std::string file = resolve(c, path);
  try {
    return load_scene(file);
  } catch (const SceneError& e) {
    throw SceneError(file + ": " + e.what());
  }
}

std::vector<double> radii_for(ConfigView& v, const std::string& key, double rmin, double rmax, double factor) {
  std::vector<double> r;
  if (v.has(key) && v.raw(key).is_array()) {
    r = v.numbers(key);
    if (r.empty()) v.fail(key, "expected at least one radius");
    for (std::size_t i = 0; i < r.size(); ++i) {
      if (!(r[i] > 0)) v.fail(key + "[" + std::to_string(i) + "]", "expected a positive radius");
      if (i && !(r[i] > r[i - 1])) v.fail(key + "[" + std::to_string(i) + "]", "radii must increase");
    }
    return r;
  }
  ConfigView g = v.object(key);
  const double lo = g.positive("min", rmin), hi = g.positive("max", rmax), f = g.number("factor", factor);
  if (!(hi >= lo)) g.fail("max", "must be >= min");
  if (!(f > 1)) g.fail("factor", "must exceed 1");
  g.finish();
  return log_grid(lo, hi, f);
}

QuadSpec quad_for(ConfigView& v, int dim, std::uint64_t seed) {
  ConfigView q = v.object("quad");
  QuadSpec s;
  const std::string mode = q.text("mode", dim == 2 ? "exact" : "lattice", {"exact", "stratified", "lattice"});
  s.mode = parse_quad_mode(mode);
  if (dim == 3 && s.mode == QuadMode::ExactArc) q.fail("mode", "exact arcs exist only in 2D");
  s.nodes = static_cast<int>(q.integer("nodes", dim == 2 ? 720 : 2000, 8));
  s.seed = seed;
  q.finish();
  return s;
}

Kernel kernel_for(ConfigView& v, const std::string& def) {
  return parse_kernel(v.text("kernel", def, {"gaussian", "bump"}));
}

int dim_for(ConfigView& v, int def) { return static_cast<int>(v.integer("dim", def, 2)); }

// Point clouds: {"csv": path, "dim": d} or a generator.
WeightedCloud cloud_for(ConfigView& v, const PlanCtx& c) {
  ConfigView g = v.object("cloud");
  WeightedCloud mu;
  if (g.has("csv")) {
    const int dim = dim_for(g, 2);
    if (dim > 3) g.fail("dim", "expected 2 or 3");
    mu = read_cloud_csv(resolve(c, g.text("csv")), dim);
  } else {
    const std::string kind = g.text("generator", "graph", {"graph", "line"});
    const int n = static_cast<int>(g.integer("n", 10000, 2));
    const double slope = g.number("slope", 0.03);
    if (kind == "graph") {
      mu = fixtures::graph_cloud(n, slope, c.seed);
    } else {
      mu = fixtures::line_cloud(n, slope, g.number("noise", 0.0), c.seed);
    }
  }
  g.finish();
  return mu;
}

Ball ball_for(ConfigView& v, const std::string& key, int dim, Ball def) {
  ConfigView b = v.object(key);
  Ball B;
  B.center = b.point("center", dim, def.center);
  B.radius = b.positive("radius", def.radius);
  b.finish();
  return B;
}

std::vector<double> partial_sums(const std::vector<double>& r, const std::vector<double>& f) {
  std::vector<double> s(r.size(), 0.0);
  for (std::size_t k = 1; k < r.size(); ++k)
    s[k] = s[k - 1] + 0.5 * (f[k] * f[k] + f[k - 1] * f[k - 1]) * std::log(r[k] / r[k - 1]);
  return s;
}

// ---- tasks --------------------------------------------------------------------------------------

std::function<TaskOutput()> plan_coeff(ConfigView& v, const PlanCtx& c) {
  RegionPair R = scene_for(v, c);
  const int dim = R.dim();
  auto pts = v.points("points", dim, std::vector<Vec3>{Vec3{0, 0, 0}});
  auto radii = radii_for(v, "radii", 1e-3, 1, kDefaultGridFactor);
  QuadSpec q = quad_for(v, dim, c.seed);
  Kernel K = kernel_for(v, "gaussian");
  return [=]() {
    const std::size_t nr = radii.size(), N = pts.size() * nr;
    std::vector<CoefficientRecord> rec(N);
    for_index(N, [&](std::size_t i) { rec[i] = coefficients(R, pts[i / nr], radii[i % nr], q, {}, K); });
    TaskOutput out;
    TaskFile full;
    full.name = "coeff.csv";
    full.header = coefficient_csv_header(dim);
    TaskFile plot;
    plot.name = "coeff_plot.csv";
    plot.header = {"point", "r", "eps", "a", "gamma", "g", "a_psi_plus", "a_psi_minus"};
    double mx[6] = {0, 0, 0, 0, 0, 0};
    for (std::size_t i = 0; i < N; ++i) {
      const auto& r = rec[i];
      full.rows.push_back(coefficient_csv_row(r, dim));
      const double v6[6] = {r.eps, r.a_sym, r.gamma_sym, r.g_ball, r.a_psi_plus, r.a_psi_minus};
      std::vector<double> row{static_cast<double>(i / nr), r.r};
      for (int k = 0; k < 6; ++k) {
        row.push_back(v6[k]);
        mx[k] = std::max(mx[k], v6[k]);
      }
      plot.rows.push_back(cells(row));
    }
    out.files = {full, plot};
    out.summary = {{"evaluations", N},
                   {"max", {{"eps", mx[0]}, {"a", mx[1]}, {"gamma", mx[2]}, {"g", mx[3]}, {"a_psi_plus", mx[4]},
                            {"a_psi_minus", mx[5]}}}};
    return out;
  };
}

std::function<TaskOutput()> plan_dini(ConfigView& v, const PlanCtx& c) {
  RegionPair R = scene_for(v, c);
  const int dim = R.dim();
  const Vec3 x = v.point("point", dim, Vec3{0, 0, 0});
  const double rmin = v.positive("r_min", 1e-3), rmax = v.positive("r_max", 1.0);
  const double factor = v.number("factor", kDefaultGridFactor);
  if (!(factor > 1)) v.fail("factor", "must exceed 1");
  if (!(rmax > rmin)) v.fail("r_max", "must exceed r_min");
  HarnessConfig hc;
  hc.quad = quad_for(v, dim, c.seed);
  hc.kernel = kernel_for(v, "gaussian");
  hc.r_min = rmin;
  hc.factor = factor;
  const std::vector<std::string> names = {"eps", "a", "gamma", "g", "a_psi_plus", "a_psi_minus"};
  auto integrands = v.texts("integrands", names, names);
  auto checks = v.texts("checks", {}, {"chain", "smoothed", "g"});
  const double M = v.positive("M", 2.0);
  return [=]() {
    const auto radii = log_grid(rmin, rmax, factor);
    std::vector<CoefficientRecord> rec(radii.size());
    for_index(radii.size(), [&](std::size_t i) { rec[i] = coefficients(R, x, radii[i], hc.quad, {}, hc.kernel); });
    auto pick = [&](const std::string& n, const CoefficientRecord& r) {
      if (n == "eps") return r.eps;
      if (n == "a") return r.a_sym;
      if (n == "gamma") return r.gamma_sym;
      if (n == "g") return r.g_ball;
      if (n == "a_psi_plus") return r.a_psi_plus;
      return r.a_psi_minus;
    };
    TaskOutput out;
    TaskFile plot;
    plot.name = "dini.csv";
    plot.header = {"r"};
    std::vector<std::vector<double>> cols{radii};
    json vals = json::object();
    for (const auto& n : integrands) {
      std::vector<double> f;
      for (const auto& r : rec) f.push_back(pick(n, r));
      DiniResult d = dini_tabulated(radii, f, factor, n);
      vals[n] = d.value;
      plot.header.push_back(n);
      plot.header.push_back("partial_" + n);
      cols.push_back(f);
      cols.push_back(partial_sums(radii, f));
    }
    for (std::size_t k = 0; k < radii.size(); ++k) {
      std::vector<double> row;
      for (const auto& col : cols) row.push_back(col[k]);
      plot.rows.push_back(cells(row));
    }
    out.files.push_back(plot);
    json reports = json::object();
    for (const auto& ch : checks) {
      Report rep = ch == "chain"      ? verify_chain(R, x, radii, hc)
                   : ch == "smoothed" ? verify_smoothed_domination(R, x, rmax, M, hc)
                                      : verify_g_domination(R, x, rmax, hc);
      reports[ch] = rep.to_json();
      out.files.push_back(plotdata("dini_" + ch + ".csv", rep));
    }
    out.summary = {{"integrals", vals}, {"scales", radii.size()}};
    if (!checks.empty()) {
      json verdicts = json::object();
      for (const auto& [k, r] : reports.items()) verdicts[k] = r["verdict"];
      out.summary["checks"] = verdicts;
    }
    out.files.push_back(json_file("dini.json", {{"point", from_point(x, dim)}, {"integrals", vals}, {"checks", reports}}));
    return out;
  };
}

std::function<TaskOutput()> plan_beta(ConfigView& v, const PlanCtx& c) {
  WeightedCloud mu = cloud_for(v, c);
  const int dim = mu.dim;
  std::vector<Ball> balls;
  for (auto& b : v.objects("balls")) {
    Ball B;
    B.center = b.point("center", dim);
    B.radius = b.positive("radius");
    b.finish();
    balls.push_back(B);
  }
  return [=]() {
    TaskOutput out;
    TaskFile f;
    f.name = "beta.csv";
    f.header = dim == 2 ? std::vector<std::string>{"ball", "c1", "c2", "radius", "beta", "n1", "n2", "theta"}
                        : std::vector<std::string>{"ball", "c1", "c2", "c3", "radius", "beta", "n1", "n2", "n3", "theta"};
    std::vector<BetaFit> fits(balls.size());
    for_index(balls.size(), [&](std::size_t i) { fits[i] = beta_inf(dim, mu.points, balls[i]); });
    double worst = 0;
    for (std::size_t i = 0; i < balls.size(); ++i) {
      std::vector<double> row{static_cast<double>(i)};
      for (int k = 0; k < dim; ++k) row.push_back(balls[i].center[k]);
      row.push_back(balls[i].radius);
      row.push_back(fits[i].value);
      for (int k = 0; k < dim; ++k) row.push_back(fits[i].plane.normal[k]);
      row.push_back(theta_density(mu, balls[i]));
      f.rows.push_back(cells(row));
      worst = std::max(worst, fits[i].value);
    }
    out.files = {f};
    out.summary = {{"balls", balls.size()}, {"max_beta", worst}};
    return out;
  };
}

std::function<TaskOutput()> plan_corona(ConfigView& v, const PlanCtx& c) {
  WeightedCloud mu = cloud_for(v, c);
  const Ball B0 = ball_for(v, "ball", mu.dim, Ball{{0, 0, 0}, 0.5});
  ConfigView pv = v.object("params");
  CoronaParams d;
  json pj = json::object();
  pj["theta"] = pv.positive("theta", d.theta);
  pj["alpha"] = pv.positive("alpha", d.alpha);
  pj["eps"] = pv.positive("eps", d.eps);
  pj["c0"] = pv.positive("c0", d.c0);
  pj["grid_factor"] = pv.number("grid_factor", d.grid_factor);
  pj["top_multiple"] = pv.positive("top_multiple", d.top_multiple);
  pj["bottom_divisor"] = pv.positive("bottom_divisor", d.bottom_divisor);
  pj["whitney_extra_levels"] = pv.integer("whitney_extra_levels", d.whitney_extra_levels, 0);
  pj["graph_nodes"] = pv.integer("graph_nodes", d.graph_nodes, 2);
  pj["graph_nodes_2d"] = pv.integer("graph_nodes_2d", d.graph_nodes_2d, 2);
  pj["lip_pairs"] = pv.integer("lip_pairs", d.lip_pairs, 0);
  pj["seed"] = pv.seed("seed", derive_seed(c.seed, 1));
  pv.finish();
  CoronaParams p;
  try {
    p = CoronaParams::from_json(pj);
  } catch (const ConfigError& e) {
    pv.fail("", e.what());
  }
  return [=]() {
    CoronaResult r = corona(mu, B0, p);
    TaskOutput out;
    out.files.push_back(json_file("corona.json", r.to_json()));
    out.files.push_back(corona_plotdata("corona_points.csv", r, mu));
    if (r.dim == 2) {
      TaskFile g;
      g.name = "corona_graph.csv";
      g.header = {"u", "A"};
      for (int i = 0; i < r.graph.nodes; ++i) g.rows.push_back(cells({r.graph.coord(i), r.graph.at(i)}));
      out.files.push_back(g);
    }
    out.summary = {{"stats", r.stats.to_json()}, {"whitney_cubes", r.whitney.size()}};
    return out;
  };
}

std::function<TaskOutput()> plan_capacity(ConfigView& v, const PlanCtx& c) {
  ConfigView sv = v.object("set");
  std::vector<Vec3> K;
  int dim = 2;
  if (sv.has("csv")) {
    dim = dim_for(sv, 2);
    if (dim > 3) sv.fail("dim", "expected 2 or 3");
    K = read_cloud_csv(resolve(c, sv.text("csv")), dim).points;
  } else {
    const std::string kind = sv.text("generator", "cantor", {"cantor", "ball_net", "sphere_net", "square"});
    if (kind == "cantor") {
      K = fixtures::four_corner_cantor(static_cast<int>(sv.integer("level", 4, 0)));
    } else if (kind == "ball_net") {
      dim = 3;
      K = fixtures::ball_net(static_cast<int>(sv.integer("points", 2000, 2)), static_cast<int>(sv.integer("shells", 7, 1)),
                             sv.positive("radius", 1.0));
    } else if (kind == "sphere_net") {
      dim = 3;
      K = fixtures::sphere_net(static_cast<int>(sv.integer("points", 2000, 2)), sv.positive("radius", 1.0));
    } else {
      const int n = static_cast<int>(sv.integer("points", 300, 2));
      const double w = sv.positive("half_width", 1.0);
      Rng g(c.seed);
      for (int i = 0; i < n; ++i) K.push_back({g.uniform(-w, w), g.uniform(-w, w), 0});
    }
  }
  sv.finish();
  auto S = v.numbers("s", std::vector<double>{1.0});
  for (std::size_t i = 0; i < S.size(); ++i)
    if (!(S[i] > 0) || !(S[i] < dim)) v.fail("s[" + std::to_string(i) + "]", "expected 0 < s < dim");
  const bool with_log = v.flag("log", false);
  ConfigView ov = v.object("solver");
  CapacityOptions co;
  co.delta = ov.number("delta", 0.0);
  co.max_iter = static_cast<int>(ov.integer("max_iter", co.max_iter, 1));
  co.rel_tol = ov.positive("rel_tol", co.rel_tol);
  ov.finish();
  std::optional<ContentOptions> content;
  if (v.has("content")) {
    ConfigView cv = v.object("content");
    ContentOptions o;
    o.depth = static_cast<int>(cv.integer("depth", o.depth, 0));
    o.resolution = cv.number("resolution", 0.0);
    content = o;
    cv.finish();
  }
  return [=]() {
    TaskOutput out;
    TaskFile f;
    f.name = "capacity.csv";
    f.header = {"s", "capacity", "energy", "residual", "iterations", "delta", "spacing", "monotone"};
    if (content) f.header.push_back("content");
    json caps = json::array();
    auto add = [&](double s, const CapacityEstimate& e) {
      std::vector<double> row{s, e.value, e.energy, e.residual, static_cast<double>(e.iterations), e.delta, e.spacing,
                              e.monotone ? 1.0 : 0.0};
      if (content) row.push_back(s > 0 ? hausdorff_content(K, dim, s, *content) : std::nan(""));
      f.rows.push_back(cells(row));
      caps.push_back({{"s", s}, {"capacity", e.value}});
    };
    for (double s : S) add(s, capacity_s(K, dim, s, co));
    if (with_log) add(0, capacity_log(K, co));
    out.files = {f};
    out.summary = {{"points", K.size()}, {"dim", dim}, {"capacities", caps}};
    return out;
  };
}

std::function<TaskOutput()> plan_slice(ConfigView& v, const PlanCtx&) {
  SlicingInput in;
  in.dim = 3;
  v.integer("dim", 3, 3);
  in.r0 = v.positive("r0", 1.0);
  const std::vector<double> slope = v.numbers("graph_slope", std::vector<double>{0, 0});
  if (slope.size() != 2) v.fail("graph_slope", "expected 2 numbers");
  in.tau = v.number("tau", std::hypot(slope[0], slope[1]));
  if (in.tau < 0) v.fail("tau", "expected a non-negative number");
  const double a = slope[0], b = slope[1];
  in.graph = [a, b](const Vec3& u) { return a * u.x + b * u.y; };
  in.B = ball_for(v, "ball", 3, Ball{{0, 0, 0.5}, 0.1});
  ConfigView kv = v.object("K");
  const int kpts = static_cast<int>(kv.integer("points", 250, 0)), shells = static_cast<int>(kv.integer("shells", 4, 1));
  kv.finish();
  if (kpts > 0) in.K = fixtures::ball_net(kpts, shells, in.B.radius, in.B.center);
  ConfigView gv = v.object("G");
  const double rho = gv.positive("radius", 0.3);
  const int per = static_cast<int>(gv.integer("per_radius", 4, 1));
  gv.finish();
  fixtures::disk_net(rho, per, 0.0, in.G, in.G_weights);
  for (auto& p : in.G) p.z = in.graph(p);
  for (auto& w : in.G_weights) w *= std::sqrt(1 + a * a + b * b);  // area element of the tilted plane
  in.s = v.positive("s", 1.5);
  if (!(in.s < 3)) v.fail("s", "expected s < 3");
  if (v.has("radii")) in.radii = v.numbers("radii");
  return [in]() {
    SlicingReport r = slicing_check(in);
    TaskOutput out;
    TaskFile f;
    f.name = "slice.csv";
    f.header = {"lhs", "rhs", "ratio", "cap_K", "measure_G", "annulus_width", "dist_B_graph", "radius_ok", "distance_ok"};
    f.rows.push_back(cells({r.lhs, r.rhs, r.ratio, r.cap_K, r.measure_G, r.annulus_width, r.dist_B_graph,
                            r.radius_ok ? 1.0 : 0.0, r.distance_ok ? 1.0 : 0.0}));
    out.files = {f, json_file("slice.json", r.to_json())};
    out.summary = r.to_json();
    return out;
  };
}

std::function<TaskOutput()> plan_spectral(ConfigView& v, const PlanCtx& c) {
  RegionPair R = scene_for(v, c);
  if (R.dim() != 2) v.fail("scene", "spectral task needs a planar scene");
  const Vec3 x = v.point("point", 2, Vec3{0, 0, 0});
  auto radii = radii_for(v, "radii", 1e-3, 1, std::pow(2.0, 0.25));
  return [=]() {
    std::vector<ArcProfile> prof(radii.size());
    for_index(radii.size(), [&](std::size_t i) { prof[i] = arc_profile(R, x, radii[i]); });
    TaskOutput out;
    TaskFile f;
    f.name = "spectral.csv";
    f.header = {"r", "theta_plus", "theta_minus", "alpha_plus", "alpha_minus", "fh", "carleson_eps"};
    for (std::size_t i = 0; i < radii.size(); ++i) {
      const auto& p = prof[i];
      f.rows.push_back(cells({radii[i], p.theta_plus, p.theta_minus, p.alpha_plus, p.alpha_minus, fh_term(p),
                              carleson_epsilon(p)}));
    }
    Report akn = akn_check(R, x, radii);
    Report ratio = carleson_ratio_table(R, x, radii);
    const double ad = radii.size() > 1 ? alpha_dini(R, x, radii.front(), radii.back(), radii[1] / radii[0]).value : 0.0;
    out.files = {f, plotdata("spectral_akn.csv", akn), plotdata("spectral_ratio.csv", ratio),
                 json_file("spectral.json", {{"akn", akn.to_json()}, {"carleson_ratio", ratio.to_json()}, {"alpha_dini", ad}})};
    out.summary = {{"akn", akn.pass ? "PASS" : "FAIL"}, {"akn_constant", akn.empirical_constant}, {"alpha_dini", ad}};
    return out;
  };
}

GridFunction function_for(ConfigView& v, const PlanCtx& c) {
  ConfigView fv = v.object("function");
  GridFunction f;
  if (fv.has("csv")) {
    f = read_grid_csv(resolve(c, fv.text("csv")));
  } else {
    const std::string kind = fv.text("generator", "bump", {"bump", "tent", "lipschitz"});
    const int dim = static_cast<int>(fv.integer("dim", 1, 1));
    if (dim > 2) fv.fail("dim", "expected 1 or 2");
    const std::size_t n = static_cast<std::size_t>(fv.integer("n", dim == 1 ? 16384 : 128, 16));
    const double window = fv.positive("window", 16), radius = fv.positive("radius", 1);
    try {
      if (kind == "bump") {
        f = bump_function(dim, n, window, radius, fv.number("height", 1));
      } else if (kind == "tent") {
        f = smoothed_tent(dim, n, window, radius, fv.number("smoothing", 0.3), fv.number("height", 1));
      } else {
        f = random_lipschitz(dim, n, window, radius, static_cast<int>(fv.integer("knots", 8, 2)), c.seed,
                             fv.number("smoothing", 0.2));
      }
    } catch (const PreconditionError& e) {
      fv.fail("", e.what());
    }
  }
  if (fv.has("slope")) {
    const double s = fv.positive("slope");
    f = f.with_slope(s);
  }
  fv.finish();
  return f;
}

std::function<TaskOutput()> plan_fourier(ConfigView& v, const PlanCtx& c) {
  GridFunction f = function_for(v, c);
  RadialProfile p;
  p.K = kernel_for(v, "bump");
  p.dim = f.dim;
  p.scale = v.positive("scale", 1.0);
  auto checks = v.texts("checks", {"plancherel", "second_diff"}, {"plancherel", "second_diff", "graph_square", "lips"});
  ConfigView gv = v.object("grid");
  FourierOptions fo;
  fo.grid.factor = gv.number("factor", fo.grid.factor);
  if (!(fo.grid.factor > 1)) gv.fail("factor", "must exceed 1");
  fo.grid.min_cells = gv.positive("min_cells", fo.grid.min_cells);
  fo.grid.max_fraction = gv.positive("max_fraction", fo.grid.max_fraction);
  gv.finish();
  ConfigView tv = v.object("tolerances");
  const double tol1 = tv.positive("plancherel", 0.02), tol2 = tv.positive("second_diff", 0.03);
  tv.finish();
  auto slopes = v.numbers("slopes", std::vector<double>{0.02, 0.05, 0.1});
  for (std::size_t i = 0; i < slopes.size(); ++i)
    if (!(slopes[i] > 0)) v.fail("slopes[" + std::to_string(i) + "]", "expected a positive slope");
  return [=]() {
    TaskOutput out;
    json reports = json::object(), summary = json::object();
    auto keep = [&](const std::string& name, const Report& r) {
      reports[name] = r.to_json();
      summary[name] = r.pass ? "PASS" : "FAIL";
      out.files.push_back(plotdata("fourier_" + name + ".csv", r));
    };
    for (const auto& ch : checks) {
      if (ch == "plancherel") {
        keep(ch, verify_fourier_identity(f, p, tol1, fo));
      } else if (ch == "second_diff") {
        keep(ch, verify_second_diff(f, p, tol2, fo));
      } else if (ch == "graph_square") {
        const double g = graph_square_function(f, p.K, fo);
        reports[ch] = g;
        summary[ch] = g;
      } else {
        LipsSuite L;
        L.shapes = {f};
        L.slopes = slopes;
        L.options.fourier = fo;
        auto sweep = lips_sweep(L, p.K);
        keep("rho_psi_gap", rho_psi_gap(sweep));
        keep("lips", verify_lips(sweep));
      }
    }
    out.files.push_back(json_file("fourier.json", reports));
    out.summary = summary;
    return out;
  };
}

std::function<TaskOutput()> plan_verify(ConfigView& v, const PlanCtx& c) {
  std::vector<std::string> suites;
  if (v.has("suite")) {
    const std::string g = v.text("suite", {}, {"chain", "smoothed", "fourier", "corona", "capacity", "akn", "all"});
    suites = suite_group(g);
  }
  const bool scene_mode = v.has("checks") || v.has("point") || v.has("scene") || (suites.empty() && c.scene_path);
  if (suites.empty() && !scene_mode) v.fail("suite", "missing (give a suite or a scene to check)");
  std::optional<RegionPair> R;
  Vec3 x;
  std::vector<double> radii;
  std::vector<std::string> checks;
  double zero_tol = -1;
  QuadSpec q;
  if (scene_mode) {
    R = scene_for(v, c);
    x = v.point("point", R->dim(), Vec3{0, 0, 0});
    radii = radii_for(v, "radii", 1e-3, 1, std::pow(2.0, 0.25));
    q = quad_for(v, R->dim(), c.seed);
    std::vector<std::string> def = {"chain", "smoothed", "g"};
    if (R->dim() == 2) def.push_back("akn");
    checks = v.texts("checks", def, {"chain", "smoothed", "g", "akn", "zero"});
    if (v.has("zero_tol")) zero_tol = v.positive("zero_tol");
    if (std::find(checks.begin(), checks.end(), "zero") != checks.end() && zero_tol < 0)
      zero_tol = R->dim() == 2 && q.mode == QuadMode::ExactArc ? 1e-12 : 1e-6;
    if (R->dim() != 2 && std::find(checks.begin(), checks.end(), "akn") != checks.end())
      v.fail("checks", "akn needs a planar scene");
  }
  const std::uint64_t seed = c.seed;
  return [=]() {
    TaskOutput out;
    out.has_verdict = true;
    TaskFile table;
    table.name = "verify.csv";
    table.header = {"suite", "check", "pass"};
    json verdicts = json::object();
    for (const auto& id : suites) {
      SuiteResult s = find_suite(id).fn(SuiteContext{seed});
      for (const auto& [what, ok] : s.checks) table.rows.push_back({id, what, ok ? "1" : "0"});
      out.files.push_back(json_file("verify_" + id + ".json", s.to_json()));
      verdicts[id] = s.pass ? "PASS" : "FAIL";
      out.pass = out.pass && s.pass;
    }
    if (R) {
      HarnessConfig hc;
      hc.quad = q;
      hc.r_min = radii.front();
      hc.factor = radii.size() > 1 ? radii[1] / radii[0] : kDefaultGridFactor;
      json reps = json::object();
      for (const auto& ch : checks) {
        bool ok;
        if (ch == "zero") {
          std::vector<CoefficientRecord> rec(radii.size());
          for_index(radii.size(), [&](std::size_t i) { rec[i] = coefficients(*R, x, radii[i], q); });
          double worst = 0;
          for (const auto& r : rec)
            worst = std::max({worst, r.eps, r.a_sym, r.gamma_sym, r.g_ball, r.a_psi_plus, r.a_psi_minus});
          ok = worst <= zero_tol;
          reps[ch] = {{"max_coefficient", worst}, {"tolerance", zero_tol}, {"verdict", ok ? "PASS" : "FAIL"}};
        } else {
          Report r = ch == "chain"      ? verify_chain(*R, x, radii, hc)
                     : ch == "smoothed" ? verify_smoothed_domination(*R, x, radii.back(), 2, hc)
                     : ch == "g"        ? verify_g_domination(*R, x, radii.back(), hc)
                                        : akn_check(*R, x, radii);
          ok = r.pass;
          reps[ch] = r.to_json();
          out.files.push_back(plotdata("verify_scene_" + ch + ".csv", r));
        }
        table.rows.push_back({"scene", ch, ok ? "1" : "0"});
        verdicts["scene:" + ch] = ok ? "PASS" : "FAIL";
        out.pass = out.pass && ok;
      }
      out.files.push_back(json_file("verify_scene.json", reps));
    }
    out.files.insert(out.files.begin(), table);
    out.summary = {{"verdicts", verdicts}};
    return out;
  };
}

std::function<TaskOutput()> plan_task(const std::string& kind, ConfigView& v, const PlanCtx& c) {
  if (kind == "coeff") return plan_coeff(v, c);
  if (kind == "dini") return plan_dini(v, c);
  if (kind == "beta") return plan_beta(v, c);
  if (kind == "corona") return plan_corona(v, c);
  if (kind == "capacity") return plan_capacity(v, c);
  if (kind == "slice") return plan_slice(v, c);
  if (kind == "spectral") return plan_spectral(v, c);
  if (kind == "fourier") return plan_fourier(v, c);
  return plan_verify(v, c);
}

}  // namespace

// ---- run --------------------------------------------------------------------------------------

RunConfig plan_run(const json& doc, const Overrides& o, const std::string& base_dir) {
  RunConfig cfg;
  cfg.resolved = json::object();
  ConfigView top(doc, cfg.resolved, "config");
  top.text("tool", std::string(kToolName), {kToolName});
  PlanCtx ctx;
  ctx.base_dir = base_dir;
  cfg.seed = top.seed("seed", std::uint64_t{1});
  cfg.jobs = static_cast<int>(top.integer("jobs", 1, 1));
  cfg.out = top.text("out", std::string("eps2_out"));
  if (o.seed) cfg.resolved["seed"] = cfg.seed = *o.seed;
  if (o.jobs) cfg.resolved["jobs"] = cfg.jobs = *o.jobs;
  if (o.out) cfg.resolved["out"] = cfg.out = *o.out;
  if (cfg.jobs < 1) throw ConfigError("jobs: expected a positive worker count");
  if (top.has("scene")) ctx.scene_path = top.text("scene");
  top.finish({"tasks"});
  auto tasks = top.objects("tasks");
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    ConfigView& t = tasks[i];
    const std::string kind = t.text("task", {}, task_kinds());
    ctx.seed = derive_seed(cfg.seed, i);
    auto fn = plan_task(kind, t, ctx);
    t.finish();
    if (!o.only.empty() && kind != o.only) continue;
    cfg.tasks.push_back({kind, static_cast<int>(i), ctx.seed, std::move(fn)});
  }
  if (!o.only.empty() && cfg.tasks.empty()) throw ConfigError("config.tasks: no '" + o.only + "' task");
  if (cfg.tasks.empty()) throw ConfigError("config.tasks: empty task list");
  return cfg;
}

RunConfig load_run_config(const std::string& path, const Overrides& o) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open config file");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
  const fs::path p(path);
  return plan_run(doc, o, p.has_parent_path() ? p.parent_path().string() : ".");
}

namespace {
std::string task_dir_name(const TaskPlan& t) {
  std::ostringstream s;
  s << "task" << (t.index < 10 ? "0" : "") << t.index << "_" << t.kind;
  return s.str();
}
}  // namespace

RunResult run(const RunConfig& cfg) {
  std::error_code ec;
  fs::create_directories(cfg.out, ec);
  if (ec || !fs::is_directory(cfg.out)) throw ConfigError("out: cannot create output directory '" + cfg.out + "'");
  {
    const fs::path probe = fs::path(cfg.out) / ".eps2_write_probe";
    std::ofstream t(probe);
    if (!t) throw ConfigError("out: output directory '" + cfg.out + "' is not writable");
    t.close();
    fs::remove(probe, ec);
  }
  set_workers(cfg.jobs);
  RunResult res;
  json tasks = json::array();
  bool ok = true;
  for (const auto& t : cfg.tasks) {
    json entry = {{"index", t.index}, {"task", t.kind}, {"seed", t.seed}};
    const std::string dir = (fs::path(cfg.out) / task_dir_name(t)).string();
    try {
      TaskOutput out = t.run();
      fs::create_directories(dir);
      json files = json::array();
      for (const auto& f : out.files) {
        write_task_file(dir, f);
        files.push_back(task_dir_name(t) + "/" + f.name);
      }
      entry["status"] = "ok";
      entry["files"] = files;
      entry["summary"] = out.summary;
      if (out.has_verdict) {
        entry["verdict"] = out.pass ? "PASS" : "FAIL";
        ok = ok && out.pass;
      }
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      entry["status"] = "error";
      entry["error"] = e.what();
      ok = false;
    }
    tasks.push_back(entry);
  }
  res.exit_code = ok ? 0 : 1;
  res.manifest = {{"tool", kToolName}, {"version", kToolVersion}, {"config", cfg.resolved},
                  {"tasks", tasks},    {"exit_code", res.exit_code}};
  write_text((fs::path(cfg.out) / "manifest.json").string(), dump_json(res.manifest));
  return res;
}

int run_main(const std::optional<std::string>& config_path, const std::optional<std::string>& suite, Overrides o,
             std::ostream& log) {
  try {
    if (!o.jobs) {
      if (const char* e = std::getenv("EPS2_JOBS"); e && *e) {
        char* end = nullptr;
        const long j = std::strtol(e, &end, 10);
        if (*end || j < 1 || j > 4096) throw ConfigError(std::string("EPS2_JOBS: expected a positive integer, got '") + e + "'");
        o.jobs = static_cast<int>(j);
      }
    }
    if (!o.out) {
      if (const char* e = std::getenv("EPS2_OUT"); e && *e) o.out = e;
    }
    RunConfig cfg;
    if (config_path) {
      cfg = load_run_config(*config_path, o);
    }
    if (suite && config_path) throw ConfigError("--suite and --config are exclusive (put verify tasks in the config)");
    if (suite) cfg = plan_run(json{{"tasks", json::array({{{"task", "verify"}, {"suite", *suite}}})}}, o);
    if (!config_path && !suite) throw ConfigError("--config is required");
    RunResult r = run(cfg);
    for (const auto& t : r.manifest["tasks"]) {
      log << t["task"].get<std::string>() << "[" << t["index"].get<int>() << "]: ";
      if (t["status"] == "error") log << "ERROR " << t["error"].get<std::string>();
      else if (t.contains("verdict")) log << t["verdict"].get<std::string>();
      else log << "done";
      log << "\n";
    }
    log << "wrote " << cfg.out << "/manifest.json\n";
    return r.exit_code;
  } catch (const ConfigError& e) {
    log << "config error: " << e.what() << "\n";
  } catch (const SceneError& e) {
    log << "scene error: " << e.what() << "\n";
  } catch (const UnsupportedPrimitive& e) {
    log << "scene error: " << e.what() << "\n";
  }
  return 2;
}

}  // namespace eps2
