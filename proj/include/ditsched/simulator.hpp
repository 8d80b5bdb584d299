#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "ditsched/cost_model.hpp"
#include "ditsched/placement.hpp"
#include "ditsched/workload.hpp"

namespace ditsched {

/// Either the round-based deadline-aware scheduler or a fixed-degree FCFS
/// baseline that runs every request at `degree` GPUs start to finish.
struct Policy {
  enum class Kind { RoundBased, Fixed };
  Kind kind = Kind::RoundBased;
  int degree = 0;

  static Policy round_based() { return {}; }
  static Policy fixed(int k);
  static Policy parse(std::string_view text);  // "tetriserve" | "fixed:<k>"
  std::string label() const;
  bool operator==(const Policy&) const = default;
};

struct SimConfig {
  int n_gpus = 8;
  double tau = 0;              // round length; <= 0 picks default_round_length()
  int granularity = 5;         // steps per scheduling block
  double sched_overhead = 0.02;  // per-round control-plane cost at the start of each round
  double window = 60;          // sliding window for the SAR time series
  double series_step = 10;     // spacing of time-series samples
  bool record_log = true;      // keep per-round execution records
};

/// Smallest round length (rounded up to 10 ms) in which a fresh request of
/// every profiled resolution with a known SLO baseline completes one block of
/// `granularity` steps at the fastest degree of its min-GPU-hour plan, after
/// `overhead` seconds of per-round scheduling cost.
double default_round_length(const CostProfile& profile, int n_gpus, int granularity, double overhead = 0,
                            const SloTable& slo = SloTable{});

struct RequestOutcome {
  std::int64_t id = 0;
  Resolution res;
  double arrival = 0;
  double deadline = 0;
  double completion = 0;
  double queue_time = 0;  // sum of waits between consecutive executions
  double exec_time = 0;   // sum of executed step times
  int steps_done = 0;
  bool met = false;
};

/// One contiguous stretch of steps a request ran on a fixed GPU set.
/// `round` is -1 for request-level (fixed policy) execution.
struct ExecRecord {
  std::int64_t round = 0;
  std::int64_t request_id = 0;
  GpuSet gpus;
  int degree = 0;
  int steps = 0;
  double start = 0;
  double end = 0;
};

struct DegreeSample {
  std::int64_t round;
  std::int64_t request_id;
  int degree;
  int steps;
};

struct RoundStat {
  std::int64_t round = 0;
  double start = 0;
  int pending = 0;
  int busy_gpus = 0;
  double utilization = 0;  // busy GPU-seconds / (N * tau)
  int survivors = 0;
};

struct SeriesPoint {
  double t;
  double window_sar;
  int completions;
};

struct ResolutionStat {
  int requests = 0;
  int met = 0;
  double sar() const { return requests == 0 ? 1.0 : static_cast<double>(met) / requests; }
};

struct InvariantCounters {
  int capacity = 0;
  int dependency = 0;
  int power_of_two = 0;
  int preservation = 0;
  int work_conservation = 0;
  int accounting = 0;
  int total() const { return capacity + dependency + power_of_two + preservation + work_conservation + accounting; }
};

struct SimMetrics {
  std::string policy;
  double tau = 0;
  int granularity = 1;
  int requests = 0;
  int met = 0;
  double sar = 1.0;
  bool empty = true;  // no requests: SAR reported as 1.0
  std::map<Resolution, ResolutionStat> per_resolution;
  std::vector<RequestOutcome> outcomes;  // trace order
  std::vector<std::int64_t> late;
  std::vector<SeriesPoint> series;
  std::vector<DegreeSample> degree_trace;
  std::vector<RoundStat> rounds;
  std::vector<ExecRecord> log;
  InvariantCounters violations;  // checked live during the run
};

/// Deterministic discrete-event simulation of one trace under one policy.
SimMetrics run(const std::vector<Request>& trace, const CostProfile& profile, const Policy& policy,
               const SimConfig& config);

/// Offline re-check of an execution log: capacity at every instant,
/// per-request non-overlap and step totals, power-of-two degrees, placement
/// preservation between consecutive rounds, and the completion-time identity
/// C - arrival = queue + exec. Work conservation is only checked live.
InvariantCounters audit_execution(const SimMetrics& metrics, const std::vector<Request>& trace, int n_gpus);

// CSV writers for the artifact's output formats.
void write_series_csv(std::ostream& out, const SimMetrics& m);         // t_s,window_sar
void write_degree_trace_csv(std::ostream& out, const SimMetrics& m);   // round,request_id,degree,steps
void write_assignment_csv(std::ostream& out, const SimMetrics& m);     // round,gpu,request_id

}  // namespace ditsched
