#include "util.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <set>
#include <sstream>

#include "mcboost/common.hpp"

namespace mcb_cli {

using mcboost::ConfigError;
using mcboost::DataError;

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

}  // namespace

std::string infer_schema(const std::string& csv_text) {
  std::istringstream in(csv_text);
  std::string line;
  if (!std::getline(in, line)) throw DataError("empty CSV file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto names = split_line(line);
  if (names.empty()) throw DataError("CSV header has no columns");

  const std::size_t d = names.size();
  std::vector<bool> integral(d, true);
  std::vector<std::set<double>> distinct(d);
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split_line(line);
    if (cells.size() != d) throw DataError("CSV row has wrong number of cells");
    for (std::size_t j = 0; j < d; ++j) {
      char* end = nullptr;
      const double v = std::strtod(cells[j].c_str(), &end);
      if (end == cells[j].c_str() || *end != '\0')
        throw DataError("non-numeric cell in column '" + names[j] + "'");
      if (!(v == std::floor(v)) || std::fabs(v) > 1e9) integral[j] = false;
      if (integral[j] && distinct[j].size() <= 32) distinct[j].insert(v);
    }
  }

  std::string schema;
  bool have_y = false;
  for (std::size_t j = 0; j < d; ++j) {
    const std::string name = lower(names[j]);
    std::string role;
    if (name == "y") {
      role = "y";
      have_y = true;
    } else if (name == "weight") {
      role = "weight";
    } else if (name == "init" || name == "q0") {
      role = "init";
    } else if (name == "truth" || name == "f_star") {
      role = "truth";
    } else if (integral[j] && distinct[j].size() <= 32) {
      role = "cat";
    } else {
      role = "cont";
    }
    if (!schema.empty()) schema += ",";
    schema += role + ":" + names[j];
  }
  if (!have_y) throw DataError("cannot infer schema: no column named 'y'; pass --schema");
  return schema;
}

mcboost::Dataset load_data(const std::string& path, const std::string& schema) {
  std::string text = schema;
  if (text.empty()) text = infer_schema(mcboost::read_file(path));
  return mcboost::load_csv(path, mcboost::parse_schema(text));
}

mcboost::GroupSpec parse_group_columns(const std::string& names, const mcboost::Dataset& data) {
  mcboost::GroupSpec spec;
  if (names.empty() || names == "none") return spec;
  std::istringstream in(names);
  std::string name;
  while (std::getline(in, name, ',')) spec.cat_columns.push_back(cat_column_index(data, name));
  return spec;
}

std::pair<double, double> parse_range(const std::string& text, const std::string& flag) {
  const auto sep = text.find(':');
  if (sep == std::string::npos)
    throw ConfigError(flag + " expects 'lo:hi', got '" + text + "'");
  try {
    const double lo = std::stod(text.substr(0, sep));
    const double hi = std::stod(text.substr(sep + 1));
    if (!(lo < hi)) throw ConfigError(flag + " needs lo < hi, got '" + text + "'");
    return {lo, hi};
  } catch (const std::invalid_argument&) {
    throw ConfigError(flag + " expects 'lo:hi', got '" + text + "'");
  }
}

std::int32_t cont_column_index(const mcboost::Dataset& data, const std::string& name) {
  const auto it = std::find(data.cont_names.begin(), data.cont_names.end(), name);
  if (it == data.cont_names.end())
    throw ConfigError("no continuous column named '" + name + "'");
  return static_cast<std::int32_t>(it - data.cont_names.begin());
}

std::int32_t cat_column_index(const mcboost::Dataset& data, const std::string& name) {
  const auto it = std::find(data.cat_names.begin(), data.cat_names.end(), name);
  if (it == data.cat_names.end())
    throw ConfigError("no categorical column named '" + name + "'");
  return static_cast<std::int32_t>(it - data.cat_names.begin());
}

}  // namespace mcb_cli
