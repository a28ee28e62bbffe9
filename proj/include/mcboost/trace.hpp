#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace mcboost {

// One executed boosting iteration. raw/delta describe the selected cell;
// max_delta is the round's maximum normalized violation over all candidates
// (the stopping quantity). holdout_loss is NaN when no holdout split exists.
struct TraceRecord {
  std::int32_t iter = 0;  // 1-based
  std::int32_t cell_g = -1;
  std::int32_t cell_l = -1;
  double raw = 0.0;
  double delta = 0.0;
  double max_delta = 0.0;
  double eta = 0.0;
  double cum_budget = 0.0;
  double calib_loss = 0.0;
  double valid_loss = 0.0;
  double holdout_loss = 0.0;
};

struct BoostTrace {
  double initial_calib_loss = 0.0;
  double initial_valid_loss = 0.0;
  double initial_holdout_loss = 0.0;  // NaN when absent
  std::vector<TraceRecord> records;
  std::string terminated_by;   // alpha | budget | patience | max_iters | stalled
  std::int32_t rollback_iter = -1;  // patience: index the model was rolled back to
  double final_max_delta = 0.0;     // last audited round's stopping quantity
};

// CSV with columns iter,cell_g,cell_l,raw_violation,delta,eta,cum_budget,
// calib_loss,valid_loss,holdout_loss; row iter=0 carries the initial losses.
std::string trace_to_csv(const BoostTrace& trace);
void write_trace_csv(const std::string& path, const BoostTrace& trace);

}  // namespace mcboost
