#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mcboost/baselines.hpp"
#include "mcboost/dataset.hpp"
#include "mcboost/partitions.hpp"

namespace mcb_cli {

// Role assignment by column name and content: y/weight/init/q0/truth/f_star
// are reserved names; remaining columns are categorical when every value is
// a small integer with at most 32 distinct levels, else continuous.
std::string infer_schema(const std::string& csv_text);

// Loads with the explicit schema string when given, otherwise infers one.
mcboost::Dataset load_data(const std::string& path, const std::string& schema);

// "x6,x7" -> categorical column indices; "" or "none" -> no grouping.
mcboost::GroupSpec parse_group_columns(const std::string& names, const mcboost::Dataset& data);

// "lo:hi" with lo < hi.
std::pair<double, double> parse_range(const std::string& text, const std::string& flag);

// Continuous / categorical column name -> index.
std::int32_t cont_column_index(const mcboost::Dataset& data, const std::string& name);
std::int32_t cat_column_index(const mcboost::Dataset& data, const std::string& name);

}  // namespace mcb_cli
