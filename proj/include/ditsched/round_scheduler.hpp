#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <utility>
#include <vector>

#include "ditsched/cost_model.hpp"
#include "ditsched/planner.hpp"
#include "ditsched/workload.hpp"

namespace ditsched {

/// One round-level choice for a request: idle (`segment == kNone`) or run the
/// head segment of its plan for `steps` steps on `width` GPUs.
struct RoundOption {
  static constexpr int kNone = -1;

  std::int64_t request_id = 0;
  int segment = kNone;
  int width = 0;
  int steps = 0;             // q: steps finished this round
  bool survives = false;     // not definitely late at the next round start
  double lower_bound = 0;    // residual time after this round at the fastest degree

  bool is_none() const { return segment == kNone; }
};

struct RequestOptions {
  std::int64_t request_id = 0;
  std::vector<RoundOption> options;
};

/// Request id -> chosen option, kept as a vector sorted by id. Same lookup
/// interface as std::map for the operations the scheduler needs.
class Selections {
 public:
  using value_type = std::pair<std::int64_t, RoundOption>;
  using iterator = std::vector<value_type>::iterator;
  using const_iterator = std::vector<value_type>::const_iterator;

  iterator begin() { return items_.begin(); }
  iterator end() { return items_.end(); }
  const_iterator begin() const { return items_.begin(); }
  const_iterator end() const { return items_.end(); }
  std::size_t size() const { return items_.size(); }
  bool empty() const { return items_.empty(); }

  iterator find(std::int64_t id);
  const_iterator find(std::int64_t id) const;
  std::size_t count(std::int64_t id) const { return find(id) == end() ? 0 : 1; }
  RoundOption& at(std::int64_t id);
  const RoundOption& at(std::int64_t id) const;
  RoundOption& operator[](std::int64_t id);  // inserts a default option if absent

  // Bulk fill: ids must arrive in strictly decreasing order, then call
  // finish_descending() once.
  void reserve(std::size_t n) { items_.reserve(n); }
  void push_descending(std::int64_t id, const RoundOption& opt) { items_.emplace_back(id, opt); }
  void finish_descending();

 private:
  std::vector<value_type> items_;
};

/// Output of the per-round packing: one option per request.
struct RoundPlan {
  double start = 0;
  double duration = 0;
  Selections selections;
  int survivors = 0;
  int total_steps = 0;
  int total_width = 0;

  double next_start() const { return start + duration; }
};

/// Inputs shared by every request in one round.
struct RoundContext {
  double now = 0;          // t_r
  double tau = 1.0;        // round length
  double exec_window = 0;  // time usable for steps inside the round (tau minus overhead)
  int n_gpus = 8;
  int granularity = 1;
};

/// q = min(s, floor(window / T)), then rounded down to a multiple of the
/// granularity unless it finishes the segment.
int steps_in_round(int segment_steps, double window, double step_time, int granularity = 1);

/// None-option first, then (if it can make progress) the plan's head segment.
/// An option survives when the residual lower bound still fits between the
/// next round start and the deadline; an option that finishes the request
/// survives when its actual completion time is on time.
std::vector<RoundOption> build_options(const Request& req, const AllocationPlan& plan, const RoundContext& ctx,
                                       const CostProfile& profile);

/// Composite DP value: survivors dominate, steps break ties.
constexpr std::int64_t kSurvivalWeight = std::int64_t{1} << 32;
constexpr std::int64_t pack_value(bool survives, int steps) {
  return (survives ? kSurvivalWeight : 0) + steps;
}

/// Capacity level to reconstruct from: the best DP value, smallest capacity
/// on ties. With pack_value() this maximises survivors, then steps this
/// round, then minimises GPUs used.
int tie_break(std::span<const std::int64_t> dp);

/// Group-knapsack packing: at most one option per request, total width <= N,
/// maximising survivors. Requests are processed in id order so the result
/// does not depend on input order. Options wider than N are ignored.
RoundPlan dp_pack(const std::vector<RequestOptions>& requests, int n_gpus);

}  // namespace ditsched
