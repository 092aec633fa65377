#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "eps2/runner.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Flatness coefficients, square functions and corona checks for planar and spatial region pairs"};
  app.set_version_flag("--version", std::string(eps2::kToolName) + " " + eps2::kToolVersion);
  app.require_subcommand(1);

  std::string config, suite, out;
  std::uint64_t seed = 0;
  int jobs = 0;

  auto common = [&](CLI::App* sub, bool need_config) {
    auto* c = sub->add_option("--config", config, "run config (JSON)")->check(CLI::ExistingFile);
    if (need_config) c->required();
    sub->add_option("--seed", seed, "master seed (overrides the config)");
    sub->add_option("--jobs", jobs, "worker threads (overrides EPS2_JOBS and the config)")->check(CLI::Range(1, 4096));
    sub->add_option("--out", out, "output directory (overrides EPS2_OUT and the config)");
  };

  for (const auto& kind : eps2::task_kinds()) {
    if (kind == "verify") continue;
    common(app.add_subcommand(kind, "run the '" + kind + "' tasks of the config"), true);
  }
  common(app.add_subcommand("run", "run every task of the config"), true);
  auto* verify = app.add_subcommand("verify", "run verification suites, or the verify tasks of a config");
  common(verify, false);
  verify->add_option("--suite", suite, "suite group")
      ->check(CLI::IsMember({"chain", "smoothed", "fourier", "corona", "capacity", "akn", "all"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  CLI::App* sub = app.get_subcommands().front();
  eps2::Overrides o;
  if (sub->count("--seed")) o.seed = seed;
  if (sub->count("--jobs")) o.jobs = jobs;
  if (sub->count("--out")) o.out = out;
  if (sub->get_name() != "run") o.only = sub->get_name();

  std::optional<std::string> cfg, st;
  if (sub->count("--config")) cfg = config;
  if (sub == verify && verify->count("--suite")) st = suite;
  if (sub == verify && !cfg && !st) {
    std::cerr << "config error: verify needs --suite or --config\n";
    return 2;
  }
  return eps2::run_main(cfg, st, o, std::cerr);
}
