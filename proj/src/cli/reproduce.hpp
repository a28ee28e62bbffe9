#pragma once

#include <cstdint>
#include <string>

namespace mcb_cli {

struct ReproduceArgs {
  std::int32_t figure = 0;
  std::int32_t reps = 0;  // 0 = figure default
  std::uint64_t seed = 1;
  std::string out;  // default figure<N>.csv
};

// Runs the desk-scale experiment grid behind one benchmark figure and writes
// its tidy long-format data table as CSV.
void run_reproduce(const ReproduceArgs& args);

}  // namespace mcb_cli
