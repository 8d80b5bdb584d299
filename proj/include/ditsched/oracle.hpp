#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "ditsched/cost_model.hpp"
#include "ditsched/planner.hpp"
#include "ditsched/round_scheduler.hpp"
#include "ditsched/workload.hpp"

// Exact, exponential-time references used to certify the scheduler on small
// instances. Nothing here is used on the scheduling path.

namespace ditsched::oracle {

struct PackOptimum {
  int survivors = 0;
  int total_steps = 0;
  int total_width = 0;
  std::vector<int> choice;          // option index per request, input order
  std::int64_t combinations = 0;    // assignments within capacity that were visited
};

/// Exhaustive search over one-option-per-request assignments with total width
/// <= N. Best is lexicographic: survivors, then steps, then fewer GPUs.
/// Throws Capacity when the product of option counts exceeds `guard`.
PackOptimum brute_force_pack(const std::vector<RequestOptions>& requests, int n_gpus,
                             std::int64_t guard = 1'000'000);

struct PlanOptimum {
  bool feasible = false;
  double gpu_hours = 0;
  double latency = 0;
  std::map<int, int> steps_per_degree;  // degree -> steps
  AllocationPlan plan;                  // segments in increasing degree
};

/// Minimum GPU-seconds over every multiset of per-step degrees (any number of
/// distinct degrees) with total latency <= slack. Infeasible when even the
/// fastest degree misses. Throws Capacity for more than 12 steps.
PlanOptimum brute_force_plan(const Request& req, int steps, const CostProfile& profile, double slack, int n_gpus);

/// A request with one non-preemptive step, as in the single-step 0-1 program.
struct ZilpJob {
  std::int64_t id = 0;
  double arrival = 0;
  double deadline = 0;
  std::map<int, double> step_time;  // degree -> seconds
};

struct ZilpAssignment {
  std::int64_t id;
  int start_slot;
  int degree;
};

struct ZilpResult {
  int optimum = 0;
  double slot = 0;
  int horizon = 0;  // number of slots
  std::vector<ZilpAssignment> schedule;
  std::int64_t states = 0;
};

/// Exact optimum of the 0-1 program over start slots and degrees: each job
/// starts at most once, not before arrival, finishes by its deadline, and
/// per-slot GPU usage stays within N. Times are mapped to slots by rounding
/// arrivals, durations and deadlines down, which relaxes the continuous
/// problem, so the result bounds any continuous-time schedule from above.
/// `slot` <= 0 picks the smallest step time rounded to 0.01 s.
/// Guards: <= 8 jobs, <= 24 slots, <= 4 degrees.
ZilpResult zilp_exact(const std::vector<ZilpJob>& jobs, int n_gpus, double slot = 0);

/// Converts single-step requests via the profile.
std::vector<ZilpJob> zilp_jobs(const std::vector<Request>& requests, const CostProfile& profile, int n_gpus);

}  // namespace ditsched::oracle
