#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

const std::string kBin = EPS2_BIN;
const std::string kData = EPS2_DATA_DIR;

fs::path tmp(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("eps2_cli_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// Runs eps2 with stderr captured; returns the exit status.
int eps2(const std::string& args, std::string* err = nullptr, const std::string& env = "") {
  const fs::path log = tmp("stderr.txt");
  const std::string cmd = env + (env.empty() ? "" : " ") + kBin + " " + args + " >/dev/null 2>" + log.string();
  const int st = std::system(cmd.c_str());
  if (err) *err = slurp(log);
  return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

std::string config(const std::string& name) { return kData + "/configs/" + name; }

void write(const fs::path& p, const json& j) {
  fs::create_directories(p.parent_path());
  std::ofstream(p) << j.dump(2);
}

// Every file under a, compared with its twin under b; the manifest without the
// fields that name the run (out dir, worker count).
void same_tree(const fs::path& a, const fs::path& b) {
  int files = 0;
  for (const auto& e : fs::recursive_directory_iterator(a)) {
    if (!e.is_regular_file()) continue;
    const fs::path rel = fs::relative(e.path(), a);
    REQUIRE(fs::exists(b / rel));
    if (rel == "manifest.json") {
      json ma = json::parse(slurp(e.path())), mb = json::parse(slurp(b / rel));
      for (auto* m : {&ma, &mb}) {
        (*m)["config"].erase("out");
        (*m)["config"].erase("jobs");
      }
      CHECK(ma == mb);
    } else {
      INFO(rel.string());
      CHECK(slurp(e.path()) == slurp(b / rel));
    }
    ++files;
  }
  CHECK(files > 1);
}

}  // namespace

TEST_CASE("version and usage") {
  CHECK(eps2("--version") == 0);
  CHECK(eps2("") == 2);
  CHECK(eps2("coeff") == 2);  // --config required
  CHECK(eps2("verify --suite nope") == 2);
  CHECK(eps2("verify") == 2);
}

TEST_CASE("bundled half-plane scene: exit 0 and all-zero coefficients") {
  const fs::path out = tmp("half");
  REQUIRE(eps2("run --config " + config("half_plane_verify.json") + " --out " + out.string()) == 0);
  json m = json::parse(slurp(out / "manifest.json"));
  CHECK(m["exit_code"] == 0);
  CHECK(m["tasks"][1]["verdict"] == "PASS");
  for (const auto& [k, v] : m["tasks"][0]["summary"]["max"].items()) CHECK(v.get<double>() == 0.0);
  fs::remove_all(out);
}

TEST_CASE("corrupted scene: exit 2 with the path into the tree") {
  const fs::path cfg = tmp("corrupt") / "c.json";
  write(cfg, {{"scene", kData + "/scenes/corrupted.json"}, {"tasks", json::array({{{"task", "coeff"}}})}});
  std::string err;
  CHECK(eps2("coeff --config " + cfg.string() + " --out " + (cfg.parent_path() / "o").string(), &err) == 2);
  CHECK(err.find("minus.children[1].params.radius") != std::string::npos);
  CHECK_FALSE(fs::exists(cfg.parent_path() / "o" / "manifest.json"));
  fs::remove_all(cfg.parent_path());
}

TEST_CASE("unknown key and malformed config: exit 2") {
  const fs::path dir = tmp("badcfg");
  write(dir / "a.json", {{"scene", kData + "/scenes/half_plane.json"},
                         {"tasks", json::array({{{"task", "coeff"}, {"radii", {{"min", 0.1}, {"mx", 1}}}}})}});
  std::string err;
  CHECK(eps2("run --config " + (dir / "a.json").string(), &err) == 2);
  CHECK(err.find("config.tasks[0].radii.mx: unknown key") != std::string::npos);
  std::ofstream(dir / "b.json") << "{\"tasks\": [";
  CHECK(eps2("run --config " + (dir / "b.json").string()) == 2);
  CHECK(eps2("run --config " + config("half_plane_verify.json") + " --out " + (dir / "o").string(), nullptr,
             "EPS2_JOBS=zero") == 2);
  fs::remove_all(dir);
}

TEST_CASE("failing verify task: exit 1") {
  const fs::path dir = tmp("fail");
  write(dir / "f.json", {{"scene", kData + "/scenes/gap_strip.json"},
                         {"tasks", json::array({{{"task", "verify"}, {"checks", json::array({"zero"})}}})}});
  CHECK(eps2("verify --config " + (dir / "f.json").string() + " --out " + (dir / "o").string()) == 1);
  json m = json::parse(slurp(dir / "o" / "manifest.json"));
  CHECK(m["tasks"][0]["verdict"] == "FAIL");
  fs::remove_all(dir);
}

TEST_CASE("same seed twice, any worker count: byte-identical outputs") {
  const fs::path a = tmp("det_a"), b = tmp("det_b"), c = tmp("det_c");
  const std::string cfg = config("gap_strip_coeff.json");
  REQUIRE(eps2("run --config " + cfg + " --seed 11 --jobs 1 --out " + a.string()) == 0);
  REQUIRE(eps2("run --config " + cfg + " --seed 11 --out " + b.string(), nullptr, "EPS2_JOBS=4") == 0);
  REQUIRE(eps2("run --config " + cfg + " --seed 11", nullptr, "EPS2_JOBS=2 EPS2_OUT=" + c.string()) == 0);
  same_tree(a, b);
  same_tree(a, c);
  json mc = json::parse(slurp(c / "manifest.json"));
  CHECK(mc["config"]["jobs"] == 2);
  CHECK(mc["config"]["seed"] == 11);
  for (const auto& p : {a, b, c}) fs::remove_all(p);
}

TEST_CASE("verify --suite runs standalone and is reproducible") {
  const fs::path a = tmp("suite_a"), b = tmp("suite_b");
  REQUIRE(eps2("verify --suite akn --out " + a.string()) == 0);
  REQUIRE(eps2("verify --suite akn --jobs 3 --out " + b.string()) == 0);
  same_tree(a, b);
  CHECK(fs::exists(a / "task00_verify" / "verify_akn.json"));
  for (const auto& p : {a, b}) fs::remove_all(p);
}
