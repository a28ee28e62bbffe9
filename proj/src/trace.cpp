#include "mcboost/trace.hpp"

#include <cmath>
#include <cstdio>

#include "mcboost/common.hpp"

namespace mcboost {

namespace {

void append_num(std::string& out, double v) {
  if (std::isnan(v)) return;  // absent holdout -> empty field
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  out += buf;
}

}  // namespace

std::string trace_to_csv(const BoostTrace& trace) {
  std::string out =
      "iter,cell_g,cell_l,raw_violation,delta,eta,cum_budget,calib_loss,valid_loss,"
      "holdout_loss\n";
  out += "0,-1,-1,0,0,0,0,";
  append_num(out, trace.initial_calib_loss);
  out += ',';
  append_num(out, trace.initial_valid_loss);
  out += ',';
  append_num(out, trace.initial_holdout_loss);
  out += '\n';
  for (const TraceRecord& r : trace.records) {
    char head[64];
    std::snprintf(head, sizeof head, "%d,%d,%d,", r.iter, r.cell_g, r.cell_l);
    out += head;
    append_num(out, r.raw);
    out += ',';
    append_num(out, r.delta);
    out += ',';
    append_num(out, r.eta);
    out += ',';
    append_num(out, r.cum_budget);
    out += ',';
    append_num(out, r.calib_loss);
    out += ',';
    append_num(out, r.valid_loss);
    out += ',';
    append_num(out, r.holdout_loss);
    out += '\n';
  }
  return out;
}

void write_trace_csv(const std::string& path, const BoostTrace& trace) {
  write_file_atomic(path, trace_to_csv(trace));
}

}  // namespace mcboost
