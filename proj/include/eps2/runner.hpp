#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "eps2/cloud.hpp"
#include "eps2/corona.hpp"
#include "eps2/report.hpp"
#include "eps2/vec.hpp"

namespace eps2 {

inline constexpr const char* kToolName = "eps2";
inline constexpr const char* kToolVersion = "0.4.0";

// One JSON object of a run config. Every key read is remembered and finish()
// rejects the others. Values, defaults included, are mirrored into `resolved`.
// Errors are ConfigError with the full path: "config.tasks[0].radii.min: ...".
class ConfigView {
 public:
  ConfigView(const nlohmann::json& src, nlohmann::json& resolved, std::string path);

  const std::string& path() const { return path_; }
  std::string key_path(const std::string& key) const { return path_ + "." + key; }
  bool has(const std::string& key) const;
  const nlohmann::json& raw(const std::string& key);  // marks the key used, echoes it verbatim

  double number(const std::string& key, std::optional<double> def = {});
  double positive(const std::string& key, std::optional<double> def = {});
  long integer(const std::string& key, std::optional<long> def = {}, long min = 0);
  std::uint64_t seed(const std::string& key, std::optional<std::uint64_t> def = {});
  bool flag(const std::string& key, bool def);
  std::string text(const std::string& key, std::optional<std::string> def = {},
                   const std::vector<std::string>& choices = {});
  std::vector<std::string> texts(const std::string& key, const std::vector<std::string>& def,
                                 const std::vector<std::string>& choices);
  Vec3 point(const std::string& key, int dim, std::optional<Vec3> def = {});
  std::vector<Vec3> points(const std::string& key, int dim, std::optional<std::vector<Vec3>> def = {});
  std::vector<double> numbers(const std::string& key, std::optional<std::vector<double>> def = {});
  // Nested object; a missing key reads as {} (and echoes the defaults taken from it).
  ConfigView object(const std::string& key);
  std::vector<ConfigView> objects(const std::string& key);

  [[noreturn]] void fail(const std::string& key, const std::string& msg) const;
  void finish(const std::vector<std::string>& pending = {}) const;  // pending: keys read later

 private:
  const nlohmann::json* src_;
  nlohmann::json* out_;
  std::string path_;
  std::shared_ptr<std::set<std::string>> used_;
  const nlohmann::json& need(const std::string& key, bool optional_present);
};

// A file produced by a task: CSV (header + rows) or a JSON document.
struct TaskFile {
  std::string name;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::optional<nlohmann::json> doc;
};

struct TaskOutput {
  std::vector<TaskFile> files;
  nlohmann::json summary = nlohmann::json::object();
  bool has_verdict = false;  // verify tasks only
  bool pass = true;
};

struct TaskPlan {
  std::string kind;
  int index = 0;
  std::uint64_t seed = 0;  // derive_seed(master seed, index)
  std::function<TaskOutput()> run;
};

struct RunConfig {
  std::uint64_t seed = 1;
  int jobs = 1;
  std::string out = "eps2_out";
  std::vector<TaskPlan> tasks;
  nlohmann::json resolved;  // echoed in the manifest
};

// Command-line and environment values; they win over the config file.
struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<int> jobs;
  std::optional<std::string> out;
  std::string only;  // keep only tasks of this kind ("" keeps all)
};

inline const std::vector<std::string>& task_kinds() {
  static const std::vector<std::string> k = {"coeff", "dini",     "beta",    "corona", "capacity",
                                             "slice", "spectral", "fourier", "verify"};
  return k;
}

// Parses and validates the whole config, loading scenes and input files.
// Relative paths resolve against base_dir. Throws ConfigError or SceneError.
RunConfig plan_run(const nlohmann::json& doc, const Overrides& o, const std::string& base_dir = ".");
RunConfig load_run_config(const std::string& path, const Overrides& o);

struct RunResult {
  int exit_code = 0;  // 0 ok, 1 a task failed or a verify task did not pass
  nlohmann::json manifest;
};
// Executes every task in order and writes its files plus manifest.json.
RunResult run(const RunConfig& cfg);

// CLI driver: env overrides (EPS2_JOBS, EPS2_OUT), error-to-exit-code mapping
// (config/scene errors -> 2). Diagnostics go to `log`.
int run_main(const std::optional<std::string>& config_path, const std::optional<std::string>& suite,
             Overrides o, std::ostream& log);

// Columnar plot data.
TaskFile plotdata(const std::string& name, const Report& r);  // header-only when r has no rows
void emit_plotdata(const Report& r, const std::string& path);
TaskFile corona_plotdata(const std::string& name, const CoronaResult& r, const WeightedCloud& cloud);
void write_task_file(const std::string& dir, const TaskFile& f);

}  // namespace eps2
