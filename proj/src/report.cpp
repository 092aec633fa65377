#include "eps2/report.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include "eps2/numerics.hpp"

namespace eps2 {

namespace {

nlohmann::json num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

double from_num(const nlohmann::json& j) {
  if (j.is_string()) {
    std::string s = j.get<std::string>();
    if (s == "inf") return INFINITY;
    if (s == "-inf") return -INFINITY;
    return NAN;
  }
  return j.get<double>();
}

}  // namespace

nlohmann::json Report::to_json() const {
  nlohmann::json table = nlohmann::json::array();
  for (const auto& r : rows) {
    nlohmann::json row = nlohmann::json::array();
    for (double v : r) row.push_back(num(v));
    table.push_back(row);
  }
  return {{"lemma", lemma},
          {"tolerances", tolerances},
          {"per_scale", {{"columns", columns}, {"rows", table}}},
          {"empirical_constant", empirical_constant},
          {"values", values},
          {"verdict", pass ? "PASS" : "FAIL"}};
}

Report Report::from_json(const nlohmann::json& j) {
  Report r;
  r.lemma = j.at("lemma").get<std::string>();
  r.tolerances = j.at("tolerances");
  r.columns = j.at("per_scale").at("columns").get<std::vector<std::string>>();
  for (const auto& row : j.at("per_scale").at("rows")) {
    std::vector<double> v;
    for (const auto& c : row) v.push_back(from_num(c));
    r.rows.push_back(v);
  }
  r.empirical_constant = j.at("empirical_constant");
  r.values = j.value("values", nlohmann::json::object());
  r.pass = j.at("verdict") == "PASS";
  return r;
}

std::string csv_cell(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return fmt_double(v);
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
  std::string text;
  for (std::size_t i = 0; i < header.size(); ++i) text += (i ? "," : "") + header[i];
  text += '\n';
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < r.size(); ++i) text += (i ? "," : "") + r[i];
    text += '\n';
  }
  write_text(path, text);
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows) {
  std::vector<std::vector<std::string>> s;
  for (const auto& r : rows) {
    std::vector<std::string> c;
    for (double v : r) c.push_back(csv_cell(v));
    s.push_back(std::move(c));
  }
  write_csv(path, header, s);
}

std::string dump_json(const nlohmann::json& j) { return j.dump(2) + "\n"; }

void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << text;
  if (!f) throw std::runtime_error("write failed: " + path);
}

}  // namespace eps2
