#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include "ditsched/cost_model.hpp"
#include "ditsched/workload.hpp"

namespace ditsched {

struct Segment {
  int steps;
  Degree degree;
  bool operator==(const Segment&) const = default;
};

/// Ordered segments covering a request's remaining steps. Segments run in
/// order; the lower degree comes first.
struct AllocationPlan {
  std::int64_t request_id = 0;
  Resolution res;
  std::vector<Segment> segments;
  bool feasible = true;  // false: no plan meets the deadline, latency-optimal fallback

  int total_steps() const;
  int max_degree() const;
};

struct PlannerOptions {
  // Split points between segments fall on multiples of this many steps.
  int granularity = 1;
  // When positive, latency is counted the way a round-based executor runs
  // the plan: each round of `round_length` seconds starts with
  // `round_length - round_window` seconds of overhead, then fits
  // floor(window / T) steps (rounded down to the granularity unless the
  // segment finishes), and a new segment starts at the next round. Degrees
  // that cannot fit a single block are skipped.
  double round_length = 0;
  double round_window = 0;
};

/// Cheapest plan (in GPU-seconds) with at most two distinct degrees that
/// finishes `remaining_steps` by the request's deadline when started at `now`.
/// Queuing is not modelled here; the caller re-plans as time advances.
/// With no plan meeting the deadline, returns the fastest single-degree plan
/// flagged infeasible.
AllocationPlan min_gpu_hour_plan(const Request& req, int remaining_steps, double now, const CostProfile& profile,
                                 int n_gpus, const PlannerOptions& options = {});

double plan_latency(const AllocationPlan& plan, const CostProfile& profile);
double plan_gpu_hours(const AllocationPlan& plan, const CostProfile& profile);

}  // namespace ditsched
