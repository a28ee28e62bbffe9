#include "mcboost/dataset.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <sstream>

#include "mcboost/common.hpp"

namespace mcboost {

namespace {

std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t hash_accum(std::uint64_t h, double v) {
  return mix64(h ^ std::bit_cast<std::uint64_t>(v));
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cell);
      cell.clear();
    } else if (c != '\r') {
      cell.push_back(c);
    }
  }
  out.push_back(cell);
  return out;
}

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t");
  return s.substr(a, b - a + 1);
}

double parse_cell(const std::string& raw, std::size_t row, const std::string& col) {
  const std::string s = trim(raw);
  double v = 0.0;
  const char* begin = s.data();
  const char* end = begin + s.size();
  auto [ptr, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc() || ptr != end)
    throw DataError("row " + std::to_string(row) + ", column '" + col +
                    "': cannot parse '" + s + "'");
  if (!std::isfinite(v))
    throw DataError("row " + std::to_string(row) + ", column '" + col + "': non-finite value");
  return v;
}

void format_cell(std::string& out, double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  out += buf;
}

}  // namespace

Dataset Dataset::subset(std::span<const std::int32_t> rows) const {
  Dataset out;
  out.cont_names = cont_names;
  out.cat_names = cat_names;
  out.cat_levels = cat_levels;
  const std::size_t dc = d_cont(), dd = d_cat();
  out.x_cont.reserve(rows.size() * dc);
  out.x_cat.reserve(rows.size() * dd);
  out.y.reserve(rows.size());
  for (std::int32_t r : rows) {
    const auto i = static_cast<std::size_t>(r);
    for (std::size_t j = 0; j < dc; ++j) out.x_cont.push_back(cont(i, j));
    for (std::size_t j = 0; j < dd; ++j) out.x_cat.push_back(cat(i, j));
    out.y.push_back(y[i]);
    if (!weight.empty()) out.weight.push_back(weight[i]);
    if (!init.empty()) out.init.push_back(init[i]);
    if (!truth.empty()) out.truth.push_back(truth[i]);
  }
  return out;
}

std::vector<SchemaEntry> parse_schema(const std::string& text) {
  std::vector<SchemaEntry> schema;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    const auto colon = item.find(':');
    if (colon == std::string::npos)
      throw ConfigError("schema entry '" + item + "' must be role:column");
    const std::string role = item.substr(0, colon);
    const std::string col = trim(item.substr(colon + 1));
    if (col.empty()) throw ConfigError("schema entry '" + item + "' has empty column name");
    ColumnRole r;
    if (role == "cont")
      r = ColumnRole::Continuous;
    else if (role == "cat")
      r = ColumnRole::Categorical;
    else if (role == "y")
      r = ColumnRole::Outcome;
    else if (role == "weight")
      r = ColumnRole::Weight;
    else if (role == "init")
      r = ColumnRole::Init;
    else if (role == "truth")
      r = ColumnRole::Truth;
    else
      throw ConfigError("unknown schema role '" + role + "' (use cont/cat/y/weight/init/truth)");
    schema.push_back({r, col});
  }
  if (schema.empty()) throw ConfigError("empty schema");
  return schema;
}

Dataset load_csv(const std::string& path, const std::vector<SchemaEntry>& schema) {
  const std::string content = read_file(path);
  std::vector<std::string> lines;
  {
    std::stringstream ss(content);
    std::string line;
    while (std::getline(ss, line)) {
      if (!line.empty() && !(line.size() == 1 && line[0] == '\r')) lines.push_back(line);
    }
  }
  if (lines.empty()) throw DataError(path + ": empty file");
  const std::vector<std::string> header = split_line(lines[0]);
  if (lines.size() == 1) throw DataError(path + ": empty dataset (header only)");

  auto col_index = [&](const std::string& name) -> std::size_t {
    for (std::size_t j = 0; j < header.size(); ++j)
      if (trim(header[j]) == name) return j;
    throw DataError(path + ": column '" + name + "' not found");
  };

  Dataset out;
  std::vector<std::size_t> cont_idx, cat_idx;
  std::size_t y_idx = SIZE_MAX, w_idx = SIZE_MAX, init_idx = SIZE_MAX, truth_idx = SIZE_MAX;
  for (const auto& e : schema) {
    const std::size_t j = col_index(e.column);
    switch (e.role) {
      case ColumnRole::Continuous:
        out.cont_names.push_back(e.column);
        cont_idx.push_back(j);
        break;
      case ColumnRole::Categorical:
        out.cat_names.push_back(e.column);
        cat_idx.push_back(j);
        break;
      case ColumnRole::Outcome:
        if (y_idx != SIZE_MAX) throw ConfigError("schema declares two outcome columns");
        y_idx = j;
        break;
      case ColumnRole::Weight:
        w_idx = j;
        break;
      case ColumnRole::Init:
        init_idx = j;
        break;
      case ColumnRole::Truth:
        truth_idx = j;
        break;
    }
  }
  if (y_idx == SIZE_MAX) throw ConfigError("schema must declare an outcome column (y:)");

  const std::size_t n = lines.size() - 1;
  std::vector<std::vector<double>> cat_raw(cat_idx.size());
  out.x_cont.reserve(n * cont_idx.size());
  out.y.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::vector<std::string> cells = split_line(lines[i + 1]);
    if (cells.size() != header.size())
      throw DataError(path + ": row " + std::to_string(i + 1) + " has " +
                      std::to_string(cells.size()) + " cells, expected " +
                      std::to_string(header.size()));
    for (std::size_t k = 0; k < cont_idx.size(); ++k)
      out.x_cont.push_back(parse_cell(cells[cont_idx[k]], i + 1, out.cont_names[k]));
    for (std::size_t k = 0; k < cat_idx.size(); ++k)
      cat_raw[k].push_back(parse_cell(cells[cat_idx[k]], i + 1, out.cat_names[k]));
    out.y.push_back(parse_cell(cells[y_idx], i + 1, "y"));
    if (w_idx != SIZE_MAX) out.weight.push_back(parse_cell(cells[w_idx], i + 1, "weight"));
    if (init_idx != SIZE_MAX) out.init.push_back(parse_cell(cells[init_idx], i + 1, "init"));
    if (truth_idx != SIZE_MAX) out.truth.push_back(parse_cell(cells[truth_idx], i + 1, "truth"));
  }

  // Dense re-indexing: per-column sorted unique values become codes 0..K-1.
  out.cat_levels.resize(cat_idx.size());
  out.x_cat.resize(n * cat_idx.size());
  for (std::size_t k = 0; k < cat_idx.size(); ++k) {
    std::vector<double> levels = cat_raw[k];
    std::sort(levels.begin(), levels.end());
    levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
    out.cat_levels[k] = levels;
    for (std::size_t i = 0; i < n; ++i) {
      const auto it = std::lower_bound(levels.begin(), levels.end(), cat_raw[k][i]);
      out.x_cat[i * cat_idx.size() + k] = static_cast<std::int32_t>(it - levels.begin());
    }
  }
  return out;
}

std::string to_csv(const Dataset& data) {
  std::string out;
  bool first = true;
  auto add_name = [&](const std::string& name) {
    if (!first) out += ',';
    out += name;
    first = false;
  };
  for (const auto& name : data.cont_names) add_name(name);
  for (const auto& name : data.cat_names) add_name(name);
  add_name("y");
  if (!data.weight.empty()) add_name("weight");
  if (!data.init.empty()) add_name("init");
  if (!data.truth.empty()) add_name("truth");
  out += '\n';
  for (std::size_t i = 0; i < data.n(); ++i) {
    for (std::size_t j = 0; j < data.d_cont(); ++j) {
      if (j > 0) out += ',';
      format_cell(out, data.cont(i, j));
    }
    for (std::size_t j = 0; j < data.d_cat(); ++j) {
      if (j > 0 || data.d_cont() > 0) out += ',';
      format_cell(out, data.cat_levels[j][static_cast<std::size_t>(data.cat(i, j))]);
    }
    if (data.d_cont() + data.d_cat() > 0) out += ',';
    format_cell(out, data.y[i]);
    if (!data.weight.empty()) {
      out += ',';
      format_cell(out, data.weight[i]);
    }
    if (!data.init.empty()) {
      out += ',';
      format_cell(out, data.init[i]);
    }
    if (!data.truth.empty()) {
      out += ',';
      format_cell(out, data.truth[i]);
    }
    out += '\n';
  }
  return out;
}

void write_csv(const std::string& path, const Dataset& data) {
  write_file_atomic(path, to_csv(data));
}

SplitResult split(const Dataset& data, const SplitSpec& spec) {
  const std::size_t n = data.n();
  if (n < 2) throw DataError("split requires n >= 2");
  if (!(spec.calib_fraction > 0.0 && spec.calib_fraction < 1.0))
    throw ConfigError("calib_fraction must be in (0,1)");
  if (!(spec.valid_fraction >= 0.0 && spec.valid_fraction < 1.0))
    throw ConfigError("valid_fraction must be in [0,1)");
  if (spec.calib_fraction + spec.valid_fraction > 1.0 + 1e-12)
    throw ConfigError("calib_fraction + valid_fraction must be <= 1");

  // Content-keyed ordering: each row hashes its full content together with
  // the seed, so a permutation of the input rows yields the same multiset of
  // rows per split. Hash ties fall back to full content comparison; rows with
  // identical content are interchangeable.
  std::vector<std::uint64_t> key(n);
  const std::uint64_t seed_mix = mix64(spec.seed ^ 0x5bf03635ULL);
  for (std::size_t i = 0; i < n; ++i) {
    std::uint64_t h = seed_mix;
    for (std::size_t j = 0; j < data.d_cont(); ++j) h = hash_accum(h, data.cont(i, j));
    for (std::size_t j = 0; j < data.d_cat(); ++j)
      h = hash_accum(h, data.cat_levels[j][static_cast<std::size_t>(data.cat(i, j))]);
    h = hash_accum(h, data.y[i]);
    if (!data.weight.empty()) h = hash_accum(h, data.weight[i]);
    if (!data.init.empty()) h = hash_accum(h, data.init[i]);
    if (!data.truth.empty()) h = hash_accum(h, data.truth[i]);
    key[i] = h;
  }
  auto row_less = [&](std::int32_t a, std::int32_t b) {
    if (key[a] != key[b]) return key[a] < key[b];
    const auto ia = static_cast<std::size_t>(a), ib = static_cast<std::size_t>(b);
    for (std::size_t j = 0; j < data.d_cont(); ++j)
      if (data.cont(ia, j) != data.cont(ib, j)) return data.cont(ia, j) < data.cont(ib, j);
    for (std::size_t j = 0; j < data.d_cat(); ++j)
      if (data.cat(ia, j) != data.cat(ib, j)) return data.cat(ia, j) < data.cat(ib, j);
    if (data.y[ia] != data.y[ib]) return data.y[ia] < data.y[ib];
    return false;
  };
  std::vector<std::int32_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), row_less);

  const auto n_calib = static_cast<std::size_t>(
      std::llround(spec.calib_fraction * static_cast<double>(n)));
  if (n_calib < 1 || n_calib >= n) throw ConfigError("calib_fraction yields an empty split");
  std::size_t n_valid = 0;
  if (!spec.share_calib_valid && spec.valid_fraction > 0.0) {
    n_valid = static_cast<std::size_t>(
        std::llround(spec.valid_fraction * static_cast<double>(n)));
    if (n_valid < 1) throw ConfigError("valid_fraction yields an empty split");
    n_valid = std::min(n_valid, n - n_calib);
  }

  SplitResult out;
  out.calib_rows.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_calib));
  if (spec.share_calib_valid) {
    out.valid_rows = out.calib_rows;
    out.holdout_rows.assign(order.begin() + static_cast<std::ptrdiff_t>(n_calib), order.end());
  } else {
    out.valid_rows.assign(order.begin() + static_cast<std::ptrdiff_t>(n_calib),
                          order.begin() + static_cast<std::ptrdiff_t>(n_calib + n_valid));
    out.holdout_rows.assign(order.begin() + static_cast<std::ptrdiff_t>(n_calib + n_valid),
                            order.end());
  }
  out.calib = data.subset(out.calib_rows);
  out.valid = data.subset(out.valid_rows);
  out.holdout = data.subset(out.holdout_rows);
  return out;
}

}  // namespace mcboost
