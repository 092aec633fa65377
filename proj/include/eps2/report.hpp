#pragma once

#include <string>
#include <vector>

#include <json.hpp>

namespace eps2 {

// Common shape of every verification report. `pass` must be a pure function
// of the numbers in `per_scale`/`values` and of `tolerances`.
struct Report {
  std::string lemma;
  nlohmann::json tolerances = nlohmann::json::object();
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
  nlohmann::json empirical_constant = nullptr;
  nlohmann::json values = nlohmann::json::object();
  bool pass = true;

  void add_row(std::vector<double> r) { rows.push_back(std::move(r)); }
  nlohmann::json to_json() const;
  static Report from_json(const nlohmann::json& j);
};

// Doubles are written with the shortest round-trip decimal form; infinities
// and NaN as "inf", "-inf", "nan".
std::string csv_cell(double v);
void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);
void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows);
// Stable text rendering (sorted keys, 2-space indent, trailing newline).
std::string dump_json(const nlohmann::json& j);
void write_text(const std::string& path, const std::string& text);

}  // namespace eps2
