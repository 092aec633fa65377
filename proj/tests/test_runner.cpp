#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "eps2/errors.hpp"
#include "eps2/runner.hpp"
#include "eps2/suites.hpp"

using namespace eps2;
using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

const std::string kData = EPS2_DATA_DIR;

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("eps2_runner_" + name);
  fs::remove_all(p);
  return p;
}

std::string config_error(const json& doc) {
  try {
    plan_run(doc, {}, kData + "/configs");
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

json half_plane_doc() {
  return {{"scene", "../scenes/half_plane.json"},
          {"tasks", json::array({{{"task", "coeff"}, {"radii", json::array({0.1, 1.0})}}})}};
}

}  // namespace

TEST_CASE("config view: defaults are echoed, unknown keys rejected with their path") {
  json src = {{"a", 1.5}, {"nested", {{"k", 3}}}}, out;
  ConfigView v(src, out, "config");
  CHECK(v.number("a") == 1.5);
  CHECK(v.number("b", 2.0) == 2.0);
  ConfigView n = v.object("nested");
  CHECK(n.integer("k") == 3);
  CHECK(n.text("mode", std::string("x")) == "x");
  n.finish();
  v.finish();
  CHECK(out["b"] == 2.0);
  CHECK(out["nested"]["mode"] == "x");

  json bad = {{"a", 1}, {"zz", 2}}, o2;
  ConfigView w(bad, o2, "config.tasks[3]");
  w.number("a");
  CHECK_THROWS_WITH_AS(w.finish(), "config.tasks[3].zz: unknown key", ConfigError);
}

TEST_CASE("config view: type errors name the key") {
  json src = {{"n", "three"}, {"p", json::array({1, "x"})}}, out;
  ConfigView v(src, out, "config");
  CHECK_THROWS_WITH_AS(v.integer("n"), "config.n: expected an integer", ConfigError);
  CHECK_THROWS_WITH_AS(v.point("p", 2), "config.p[1]: expected a number", ConfigError);
  CHECK_THROWS_WITH_AS(v.number("missing"), "config.missing: missing", ConfigError);
}

TEST_CASE("plan: nested unknown key, bad choice and missing scene") {
  json d = half_plane_doc();
  d["tasks"][0]["quad"] = {{"mode", "exact"}, {"nodez", 4}};
  CHECK(config_error(d) == "config.tasks[0].quad.nodez: unknown key");
  d = half_plane_doc();
  d["tasks"][0]["kernel"] = "cauchy";
  CHECK(config_error(d).rfind("config.tasks[0].kernel: 'cauchy' is not one of", 0) == 0);
  d = half_plane_doc();
  d.erase("scene");
  CHECK(config_error(d).rfind("config.tasks[0].scene: missing", 0) == 0);
  d = half_plane_doc();
  d["tasks"][0]["task"] = "plot";
  CHECK(config_error(d).rfind("config.tasks[0].task: 'plot'", 0) == 0);
  CHECK(config_error({{"tasks", json::array()}}) == "config.tasks: empty task list");
  CHECK(config_error({{"seed", -3}, {"tasks", json::array()}}) == "config.seed: expected a non-negative 64-bit integer");
}

TEST_CASE("plan: corrupted scene carries the JSON path into the tree") {
  json d = half_plane_doc();
  d["scene"] = "../scenes/corrupted.json";
  try {
    plan_run(d, {}, kData + "/configs");
    FAIL("expected a scene error");
  } catch (const SceneError& e) {
    CHECK(std::string(e.what()).find("minus.children[1].params.radius") != std::string::npos);
  }
}

TEST_CASE("plan: overrides win, seeds derive from the task index") {
  Overrides o;
  o.seed = 99;
  o.jobs = 3;
  o.out = "elsewhere";
  json d = half_plane_doc();
  d["seed"] = 5;
  d["tasks"].push_back({{"task", "coeff"}});
  RunConfig c = plan_run(d, o, kData + "/configs");
  CHECK(c.seed == 99);
  CHECK(c.jobs == 3);
  CHECK(c.resolved["out"] == "elsewhere");
  REQUIRE(c.tasks.size() == 2);
  CHECK(c.tasks[0].seed != c.tasks[1].seed);
  o.only = "dini";
  CHECK_THROWS_AS(plan_run(d, o, kData + "/configs"), ConfigError);
}

TEST_CASE("plotdata: empty report gives a header-only file") {
  Report r;
  r.columns = {"r", "eps"};
  fs::path dir = scratch("plot");
  fs::create_directories(dir);
  emit_plotdata(r, (dir / "empty.csv").string());
  CHECK(slurp(dir / "empty.csv") == "r,eps\n");
  r.add_row({0.5, 0.25});
  emit_plotdata(r, (dir / "one.csv").string());
  CHECK(slurp(dir / "one.csv") == "r,eps\n0.5,0.25\n");
  fs::remove_all(dir);
}

TEST_CASE("run: half-plane scene gives zero coefficients and a passing verify") {
  json d = half_plane_doc();
  d["tasks"].push_back({{"task", "verify"}, {"checks", json::array({"zero", "chain", "akn"})}});
  Overrides o;
  o.out = scratch("half").string();
  RunResult r = run(plan_run(d, o, kData + "/configs"));
  CHECK(r.exit_code == 0);
  CHECK(r.manifest["version"] == kToolVersion);
  CHECK(r.manifest["config"]["tasks"][0]["quad"]["mode"] == "exact");
  CHECK(r.manifest["tasks"][0]["summary"]["max"]["eps"] == 0.0);
  CHECK(r.manifest["tasks"][1]["verdict"] == "PASS");
  CHECK(fs::exists(fs::path(*o.out) / "task00_coeff" / "coeff_plot.csv"));
  fs::remove_all(*o.out);
}

TEST_CASE("run: gap-strip coefficient table and a failing zero check") {
  json d = {{"scene", "../scenes/gap_strip.json"},
            {"tasks", json::array({{{"task", "coeff"}, {"radii", json::array({0.5, 1.0})}},
                                   {{"task", "verify"}, {"checks", json::array({"zero"})}}})}};
  Overrides o;
  o.out = scratch("gap").string();
  RunResult r = run(plan_run(d, o, kData + "/configs"));
  CHECK(r.exit_code == 1);
  CHECK(r.manifest["tasks"][1]["verdict"] == "FAIL");
  const std::string t = slurp(fs::path(*o.out) / "task00_coeff" / "coeff_plot.csv");
  CHECK(t.rfind("point,r,eps,a,gamma,", 0) == 0);
  // h/r = 0.2 at r = 0.5: eps = 2 asin(0.2)
  CHECK(t.find(csv_cell(2 * std::asin(0.2)).substr(0, 10)) != std::string::npos);
  fs::remove_all(*o.out);
}

TEST_CASE("run: a task error is exit 1, later tasks still run") {
  json d = {{"tasks", json::array({{{"task", "fourier"}, {"function", {{"generator", "bump"}, {"n", 1024}}},
                                    {"checks", json::array({"graph_square"})}},
                                   {{"task", "capacity"}, {"set", {{"generator", "cantor"}, {"level", 2}}}}})}};
  Overrides o;
  o.out = scratch("err").string();
  RunResult r = run(plan_run(d, o, "."));
  CHECK(r.exit_code == 1);
  CHECK(r.manifest["tasks"][0]["status"] == "error");
  CHECK(r.manifest["tasks"][1]["status"] == "ok");
  fs::remove_all(*o.out);
}

TEST_CASE("run: corona plot data has point, label and graph-height columns") {
  json d = {{"tasks", json::array({{{"task", "corona"},
                                    {"cloud", {{"generator", "graph"}, {"n", 2000}, {"slope", 0.03}}},
                                    {"params", {{"lip_pairs", 200}}}}})}};
  Overrides o;
  o.out = scratch("corona").string();
  RunResult r = run(plan_run(d, o, "."));
  CHECK(r.exit_code == 0);
  const std::string t = slurp(fs::path(*o.out) / "task00_corona" / "corona_points.csv");
  CHECK(t.rfind("x1,x2,label,h,graph_height\n", 0) == 0);
  CHECK(t.find(",Z,") != std::string::npos);
  fs::remove_all(*o.out);
}

TEST_CASE("run: identical config and seed give identical bytes, worker count included") {
  json d = {{"scene", "../scenes/wedge_and_disk.json"},
            {"tasks", json::array({{{"task", "coeff"}, {"points", json::array({json::array({0, 0.1})})},
                                    {"radii", {{"min", 0.05}, {"max", 1}, {"factor", 2}}},
                                    {"quad", {{"mode", "stratified"}, {"nodes", 256}}}},
                                   {{"task", "capacity"}, {"set", {{"generator", "square"}, {"points", 60}}}}})}};
  std::vector<fs::path> dirs;
  for (int jobs : {1, 1, 3}) {
    Overrides o;
    o.jobs = jobs;
    o.out = scratch("det" + std::to_string(dirs.size())).string();
    run(plan_run(d, o, kData + "/configs"));
    dirs.push_back(*o.out);
  }
  for (const char* f : {"task00_coeff/coeff.csv", "task00_coeff/coeff_plot.csv", "task01_capacity/capacity.csv"}) {
    CHECK(slurp(dirs[0] / f) == slurp(dirs[1] / f));
    CHECK(slurp(dirs[0] / f) == slurp(dirs[2] / f));
  }
  for (const auto& p : dirs) fs::remove_all(p);
}

TEST_CASE("suite registry: groups map onto suite ids") {
  CHECK(suite_group("chain") == std::vector<std::string>{"exactness", "chain", "gap_strip"});
  CHECK(suite_group("capacity") == std::vector<std::string>{"capacity", "slicing"});
  CHECK(suite_group("all").size() == suite_registry().size());
  CHECK_THROWS_AS(suite_group("nope"), ConfigError);
}
