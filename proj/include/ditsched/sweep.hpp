#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "ditsched/simulator.hpp"
#include "ditsched/workload.hpp"

namespace ditsched {

struct SweepCell {
  Policy policy;
  double slo_scale = 1.0;
  double rate_rpm = 12;
  double tau = 0;  // 0: default round length
  int granularity = 5;
  std::uint64_t seed = 1;
};

/// Cartesian grid of cells. Every cell regenerates its trace from
/// (`trace` with rate, scale and seed replaced), so cells are independent.
struct SweepGrid {
  std::vector<Policy> policies{Policy::round_based()};
  std::vector<double> slo_scales{1.0};
  std::vector<double> rates{12};
  std::vector<double> taus{0};
  std::vector<int> granularities{5};
  std::vector<std::uint64_t> seeds{1};
  TraceParams trace;
  SimConfig sim;

  std::vector<SweepCell> cells() const;  // policy-major order
};

struct SweepRow {
  SweepCell cell;
  SimMetrics metrics;
};

SimMetrics run_cell(const CostProfile& profile, const SweepCell& cell, const TraceParams& trace_base,
                    const SimConfig& sim_base);

/// Runs cells on up to `jobs` threads; rows come back in cell order.
std::vector<SweepRow> sweep(const CostProfile& profile, const std::vector<SweepCell>& cells,
                            const TraceParams& trace_base, const SimConfig& sim_base, int jobs = 1);
inline std::vector<SweepRow> sweep(const CostProfile& profile, const SweepGrid& grid, int jobs = 1) {
  return sweep(profile, grid.cells(), grid.trace, grid.sim, jobs);
}

// policy,slo_scale,rate_rpm,tau_s,granularity,seed,resolution,requests,sar
void write_metrics_header(std::ostream& out);
// One row per resolution followed by an "all" row.
void write_metrics_rows(std::ostream& out, const SweepCell& cell, const SimMetrics& m);

}  // namespace ditsched
