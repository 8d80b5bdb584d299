#include "ditsched/round_scheduler.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ditsched/error.hpp"
#include "ditsched/kernels/knapsack_relax.hpp"

namespace ditsched {

namespace {
constexpr double kTimeEps = 1e-9;
}

Selections::iterator Selections::find(std::int64_t id) {
  auto it = std::lower_bound(items_.begin(), items_.end(), id,
                             [](const value_type& v, std::int64_t key) { return v.first < key; });
  return it != items_.end() && it->first == id ? it : items_.end();
}

Selections::const_iterator Selections::find(std::int64_t id) const {
  auto it = std::lower_bound(items_.begin(), items_.end(), id,
                             [](const value_type& v, std::int64_t key) { return v.first < key; });
  return it != items_.end() && it->first == id ? it : items_.end();
}

RoundOption& Selections::at(std::int64_t id) {
  auto it = find(id);
  if (it == end()) fail(ErrorKind::Internal, "no selection for request " + std::to_string(id));
  return it->second;
}

const RoundOption& Selections::at(std::int64_t id) const {
  auto it = find(id);
  if (it == end()) fail(ErrorKind::Internal, "no selection for request " + std::to_string(id));
  return it->second;
}

RoundOption& Selections::operator[](std::int64_t id) {
  auto it = std::lower_bound(items_.begin(), items_.end(), id,
                             [](const value_type& v, std::int64_t key) { return v.first < key; });
  if (it == items_.end() || it->first != id) {
    RoundOption o;
    o.request_id = id;
    it = items_.insert(it, {id, o});
  }
  return it->second;
}

void Selections::finish_descending() { std::reverse(items_.begin(), items_.end()); }

int steps_in_round(int segment_steps, double window, double step_time, int granularity) {
  if (!(step_time > 0)) fail(ErrorKind::Config, "step time must be positive");
  if (segment_steps <= 0 || window <= 0) return 0;
  const double fit = std::floor((window + kTimeEps) / step_time);
  int q = fit >= segment_steps ? segment_steps : static_cast<int>(fit);
  if (granularity > 1 && q < segment_steps) q -= q % granularity;
  return q;
}

std::vector<RoundOption> build_options(const Request& req, const AllocationPlan& plan, const RoundContext& ctx,
                                       const CostProfile& profile) {
  const int remaining = plan.total_steps();
  const double next_round = ctx.now + ctx.tau;
  const double deadline = req.deadline();

  // T_min over the degrees this cluster can actually run.
  double t_min = profile.lookup(req.res, Degree{1});
  for (Degree k : degrees_up_to(std::min(ctx.n_gpus, profile.gpu_count())))
    t_min = std::min(t_min, profile.lookup(req.res, k));

  std::vector<RoundOption> out;
  RoundOption none;
  none.request_id = req.id;
  none.lower_bound = remaining * t_min;
  none.survives = next_round + none.lower_bound <= deadline + kTimeEps;
  out.push_back(none);

  if (plan.segments.empty()) return out;
  const Segment& head = plan.segments.front();
  if (head.degree.value() > ctx.n_gpus) return out;
  const double t = profile.lookup(req.res, head.degree);
  const int q = steps_in_round(head.steps, ctx.exec_window, t, ctx.granularity);
  if (q == 0) return out;

  RoundOption run;
  run.request_id = req.id;
  run.segment = 0;
  run.width = head.degree.value();
  run.steps = q;
  run.lower_bound = (remaining - q) * t_min;
  if (q == remaining) {
    // Finishes inside this round: judge the real completion time.
    const double done = ctx.now + (ctx.tau - ctx.exec_window) + q * t;
    run.survives = done <= deadline + kTimeEps;
  } else {
    run.survives = next_round + run.lower_bound <= deadline + kTimeEps;
  }
  out.push_back(run);
  return out;
}

int tie_break(std::span<const std::int64_t> dp) {
  int best = 0;
  for (std::size_t c = 1; c < dp.size(); ++c)
    if (dp[c] > dp[best]) best = static_cast<int>(c);
  return best;
}

RoundPlan dp_pack(const std::vector<RequestOptions>& requests, int n_gpus) {
  if (n_gpus < 0) fail(ErrorKind::Config, "capacity must be non-negative");
  const std::size_t R = requests.size();
  const std::size_t cells = static_cast<std::size_t>(n_gpus) + 1;

  std::vector<std::size_t> order(R);
  std::iota(order.begin(), order.end(), 0);
  auto by_id = [&](std::size_t a, std::size_t b) { return requests[a].request_id < requests[b].request_id; };
  if (!std::is_sorted(order.begin(), order.end(), by_id)) std::stable_sort(order.begin(), order.end(), by_id);

  std::vector<std::int64_t> dp(cells, kernels::kUnreachable), next(cells);
  dp[0] = 0;
  // back[layer * cells + c]: option index chosen for that request at capacity c.
  std::vector<std::int32_t> back(R * cells, -1);
  const kernels::RelaxFn relax = kernels::relax_kernel(kernels::active_isa());

  std::int64_t step_budget = 0;
  for (std::size_t layer = 0; layer < R; ++layer) {
    const auto& opts = requests[order[layer]].options;
    std::fill(next.begin(), next.end(), kernels::kUnreachable);
    std::span<std::int32_t> choice(back.data() + layer * cells, cells);
    int most = 0;
    for (std::size_t o = 0; o < opts.size(); ++o) {
      const auto& opt = opts[o];
      if (opt.steps < 0 || opt.width < 0) fail(ErrorKind::Config, "option with negative steps or width");
      most = std::max(most, opt.steps);
      if (opt.width > n_gpus) continue;
      if (opt.width > 0 && opt.steps == 0) continue;
      relax(dp, next, choice, opt.width, pack_value(opt.survives, opt.steps), static_cast<std::int32_t>(o));
    }
    step_budget += most;
    // Past this the composite value could let steps outweigh a survivor.
    if (step_budget >= kSurvivalWeight) fail(ErrorKind::Capacity, "too many steps in one round to pack");
    dp.swap(next);
  }

  RoundPlan plan;
  int c = tie_break(dp);
  std::int64_t last_id = 0;
  plan.selections.reserve(R);
  if (dp[c] < 0) fail(ErrorKind::Internal, "dp_pack: a request has no usable option (missing none-option?)");
  for (std::size_t layer = R; layer-- > 0;) {
    const auto& req = requests[order[layer]];
    const std::int32_t o = back[layer * cells + static_cast<std::size_t>(c)];
    if (o < 0) fail(ErrorKind::Internal, "dp_pack: broken back-pointer");
    const RoundOption& opt = req.options[static_cast<std::size_t>(o)];
    if (layer + 1 < R && req.request_id == last_id) fail(ErrorKind::Config, "duplicate request id in packing input");
    last_id = req.request_id;
    plan.selections.push_descending(req.request_id, opt);
    plan.survivors += opt.survives ? 1 : 0;
    plan.total_steps += opt.steps;
    plan.total_width += opt.width;
    c -= opt.width;
  }
  if (c != 0) fail(ErrorKind::Internal, "dp_pack: reconstruction did not return to capacity 0");
  plan.selections.finish_descending();
  return plan;
}

}  // namespace ditsched
