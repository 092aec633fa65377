#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "eps2/report.hpp"

namespace eps2 {

// Outcome of one verification suite: named boolean checks, the measured
// values behind them and the module reports they were read from.
struct SuiteResult {
  std::string name;
  bool pass = true;
  std::vector<std::pair<std::string, bool>> checks;
  nlohmann::json values = nlohmann::json::object();
  std::vector<Report> reports;

  void check(const std::string& what, bool ok);
  nlohmann::json to_json() const;  // reports included
};

struct SuiteContext {
  std::uint64_t seed = 1;
};

using SuiteFn = std::function<SuiteResult(const SuiteContext&)>;

SuiteResult suite_exactness(const SuiteContext& c);    // symmetric model: every coefficient and Dini integral vanishes
SuiteResult suite_chain(const SuiteContext& c);        // 2a <= gamma <= 2 eps on random scenes, equality on the gap strip
SuiteResult suite_gap_strip(const SuiteContext& c);    // closed forms, exact and Monte-Carlo modes
SuiteResult suite_smoothed(const SuiteContext& c);     // smoothed and g domination on the gap-strip family
SuiteResult suite_fourier(const SuiteContext& c);      // both Fourier identities at 2^14 samples
SuiteResult suite_lips(const SuiteContext& c);         // rho/psi comparability over the slope sweep
SuiteResult suite_corona(const SuiteContext& c);       // corona construction on a 3% graph and a spike scene
SuiteResult suite_capacity(const SuiteContext& c);     // scaling, Newtonian ball, capacity/content sandwich
SuiteResult suite_slicing(const SuiteContext& c);      // slicing under net refinement, empty K
SuiteResult suite_akn(const SuiteContext& c);          // carleson eps^2 against min(1, alpha+ + alpha- - 2)

struct SuiteEntry {
  std::string id;
  std::string group;  // verify --suite name
  SuiteFn fn;
};
const std::vector<SuiteEntry>& suite_registry();
// Suite ids of a group; "all" selects every suite. Throws ConfigError on an unknown group.
std::vector<std::string> suite_group(const std::string& group);
const SuiteEntry& find_suite(const std::string& id);

}  // namespace eps2
