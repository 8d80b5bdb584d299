#include "ditsched/planner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ditsched/error.hpp"

namespace ditsched {

namespace {

constexpr double kTimeEps = 1e-9;

struct Candidate {
  int low_steps = 0;  // steps at `low`, run first
  int low = 1;
  int high = 1;
  double cost = 0;
  double latency = 0;
};

bool better(const Candidate& a, const Candidate& b) {
  const double tol = 1e-12 * std::max(1.0, std::abs(b.cost));
  if (a.cost < b.cost - tol) return true;
  if (a.cost > b.cost + tol) return false;
  const int amax = a.low_steps == 0 ? a.high : std::max(a.low, a.high);
  const int bmax = b.low_steps == 0 ? b.high : std::max(b.low, b.high);
  if (amax != bmax) return amax < bmax;
  return a.latency < b.latency - kTimeEps;
}

}  // namespace

int AllocationPlan::total_steps() const {
  int n = 0;
  for (const auto& s : segments) n += s.steps;
  return n;
}

int AllocationPlan::max_degree() const {
  int k = 0;
  for (const auto& s : segments) k = std::max(k, s.degree.value());
  return k;
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Rounds a segment of `n` steps needs and the steps left for its last round;
// rounds == 0 when the degree cannot make progress.
struct RoundUse {
  int rounds = 0;
  int last = 0;
};

RoundUse round_use(int n, double t, const PlannerOptions& o) {
  const double fit = std::floor((o.round_window + kTimeEps) / t);
  if (fit >= n) return {1, n};
  int q = static_cast<int>(fit);
  if (o.granularity > 1) q -= q % o.granularity;
  if (q <= 0) return {};
  const int rounds = (n + q - 1) / q;
  return {rounds, n - (rounds - 1) * q};
}

// Wall time from `now` to completion of (n1 steps at t1, then n2 at t2).
double segments_latency(int n1, double t1, int n2, double t2, const PlannerOptions& o) {
  if (o.round_length <= 0) return n1 * t1 + n2 * t2;
  const double overhead = o.round_length - o.round_window;
  double lat = 0;
  if (n1 > 0) {
    const RoundUse a = round_use(n1, t1, o);
    if (a.rounds == 0) return kInf;
    if (n2 == 0) return (a.rounds - 1) * o.round_length + overhead + a.last * t1;
    lat = a.rounds * o.round_length;
  }
  const RoundUse b = round_use(n2, t2, o);
  if (b.rounds == 0) return kInf;
  return lat + (b.rounds - 1) * o.round_length + overhead + b.last * t2;
}

}  // namespace

AllocationPlan min_gpu_hour_plan(const Request& req, int remaining_steps, double now, const CostProfile& profile,
                                 int n_gpus, const PlannerOptions& options) {
  if (remaining_steps < 1) fail(ErrorKind::Config, "planner needs at least one remaining step");
  if (options.granularity < 1) fail(ErrorKind::Config, "granularity must be >= 1");
  if (options.round_length > 0 && !(options.round_window > 0 && options.round_window <= options.round_length))
    fail(ErrorKind::Config, "round window must be in (0, round length]");

  std::vector<int> ks;
  std::vector<double> ts;
  for (Degree k : degrees_up_to(std::min(n_gpus, profile.gpu_count()))) {
    ks.push_back(k.value());
    ts.push_back(profile.lookup(req.res, k));
  }

  AllocationPlan plan;
  plan.request_id = req.id;
  plan.res = req.res;
  const double budget = req.deadline() - now + kTimeEps;
  const int S = remaining_steps;
  const int g = options.granularity;

  bool found = false;
  Candidate best;
  auto consider = [&](const Candidate& c) {
    if (c.latency > budget) return;
    if (!found || better(c, best)) {
      best = c;
      found = true;
    }
  };

  for (std::size_t i = 0; i < ks.size(); ++i) {
    consider({0, ks[i], ks[i], S * ks[i] * ts[i], segments_latency(0, ts[i], S, ts[i], options)});
    for (std::size_t j = i + 1; j < ks.size(); ++j) {
      for (int low = g; low < S; low += g) {
        const int high = S - low;
        Candidate c;
        c.low_steps = low;
        c.low = ks[i];
        c.high = ks[j];
        c.cost = low * ks[i] * ts[i] + high * ks[j] * ts[j];
        c.latency = segments_latency(low, ts[i], high, ts[j], options);
        consider(c);
      }
    }
  }

  if (found) {
    if (best.low_steps > 0) plan.segments.push_back({best.low_steps, Degree{best.low}});
    plan.segments.push_back({S - best.low_steps, Degree{best.high}});
    return plan;
  }

  // Nothing meets the deadline: run everything at the quickest degree.
  std::size_t fastest = 0;
  double fastest_lat = kInf;
  for (std::size_t i = 0; i < ks.size(); ++i) {
    const double lat = segments_latency(0, ts[i], S, ts[i], options);
    if (lat < fastest_lat || (lat == kInf && fastest_lat == kInf && ts[i] < ts[fastest])) {
      fastest = i;
      fastest_lat = lat;
    }
  }
  plan.segments.push_back({S, Degree{ks[fastest]}});
  plan.feasible = false;
  return plan;
}

double plan_latency(const AllocationPlan& plan, const CostProfile& profile) {
  double t = 0;
  for (const auto& s : plan.segments) t += s.steps * profile.lookup(plan.res, s.degree);
  return t;
}

double plan_gpu_hours(const AllocationPlan& plan, const CostProfile& profile) {
  double h = 0;
  for (const auto& s : plan.segments) h += gpu_hours(profile, plan.res, s.degree, s.steps);
  return h;
}

}  // namespace ditsched
