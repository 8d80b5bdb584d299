#include "ditsched/oracle.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <unordered_map>

#include "ditsched/error.hpp"

namespace ditsched::oracle {

namespace {
constexpr double kEps = 1e-9;

bool usable(const RoundOption& o, int n_gpus) { return o.width <= n_gpus && (o.width == 0 || o.steps > 0); }
}  // namespace

PackOptimum brute_force_pack(const std::vector<RequestOptions>& requests, int n_gpus, std::int64_t guard) {
  PackOptimum best;
  best.survivors = -1;
  std::int64_t space = 1;
  for (const auto& r : requests) {
    space *= std::max<std::int64_t>(1, static_cast<std::int64_t>(r.options.size()));
    if (space > guard) fail(ErrorKind::Capacity, "packing instance too large for exhaustive search");
  }

  std::vector<int> current(requests.size(), -1);
  std::function<void(std::size_t, int, int, int)> dfs = [&](std::size_t i, int width, int surv, int steps) {
    if (i == requests.size()) {
      ++best.combinations;
      const bool better = surv > best.survivors || (surv == best.survivors && steps > best.total_steps) ||
                          (surv == best.survivors && steps == best.total_steps && width < best.total_width);
      if (better) {
        best.survivors = surv;
        best.total_steps = steps;
        best.total_width = width;
        best.choice = current;
      }
      return;
    }
    const auto& opts = requests[i].options;
    for (std::size_t o = 0; o < opts.size(); ++o) {
      if (!usable(opts[o], n_gpus) || width + opts[o].width > n_gpus) continue;
      current[i] = static_cast<int>(o);
      dfs(i + 1, width + opts[o].width, surv + (opts[o].survives ? 1 : 0), steps + opts[o].steps);
    }
    current[i] = -1;
  };
  dfs(0, 0, 0, 0);
  if (best.survivors < 0) fail(ErrorKind::Config, "packing instance has a request without a usable option");
  return best;
}

PlanOptimum brute_force_plan(const Request& req, int steps, const CostProfile& profile, double slack, int n_gpus) {
  if (steps < 1 || steps > 12) fail(ErrorKind::Capacity, "brute_force_plan supports 1..12 steps");
  std::vector<int> ks;
  std::vector<double> ts;
  for (Degree k : degrees_up_to(std::min(n_gpus, profile.gpu_count()))) {
    ks.push_back(k.value());
    ts.push_back(profile.lookup(req.res, k));
  }

  PlanOptimum best;
  std::vector<int> counts(ks.size(), 0);
  std::function<void(std::size_t, int)> rec = [&](std::size_t i, int left) {
    if (i + 1 == ks.size()) {
      counts[i] = left;
      double lat = 0, cost = 0;
      for (std::size_t j = 0; j < ks.size(); ++j) {
        lat += counts[j] * ts[j];
        cost += counts[j] * ks[j] * ts[j];
      }
      if (lat <= slack + kEps && (!best.feasible || cost < best.gpu_hours - 1e-12 * std::max(1.0, cost))) {
        best.feasible = true;
        best.gpu_hours = cost;
        best.latency = lat;
        best.steps_per_degree.clear();
        for (std::size_t j = 0; j < ks.size(); ++j)
          if (counts[j] > 0) best.steps_per_degree[ks[j]] = counts[j];
      }
      return;
    }
    for (int n = 0; n <= left; ++n) {
      counts[i] = n;
      rec(i + 1, left - n);
    }
  };
  rec(0, steps);

  best.plan.request_id = req.id;
  best.plan.res = req.res;
  if (!best.feasible) {
    std::size_t f = 0;
    for (std::size_t j = 1; j < ks.size(); ++j)
      if (ts[j] < ts[f]) f = j;
    best.steps_per_degree = {{ks[f], steps}};
    best.gpu_hours = steps * ks[f] * ts[f];
    best.latency = steps * ts[f];
  }
  best.plan.feasible = best.feasible;
  for (const auto& [k, n] : best.steps_per_degree) best.plan.segments.push_back({n, Degree{k}});
  return best;
}

std::vector<ZilpJob> zilp_jobs(const std::vector<Request>& requests, const CostProfile& profile, int n_gpus) {
  std::vector<ZilpJob> out;
  for (const auto& r : requests) {
    if (r.total_steps != 1) fail(ErrorKind::Config, "the 0-1 program only covers single-step requests");
    ZilpJob j;
    j.id = r.id;
    j.arrival = r.arrival;
    j.deadline = r.deadline();
    for (Degree k : degrees_up_to(std::min(n_gpus, profile.gpu_count())))
      j.step_time[k.value()] = profile.lookup(r.res, k);
    out.push_back(std::move(j));
  }
  return out;
}

ZilpResult zilp_exact(const std::vector<ZilpJob>& jobs, int n_gpus, double slot) {
  constexpr int kMaxJobs = 8, kMaxSlots = 24, kMaxDegrees = 4;
  if (jobs.size() > kMaxJobs) fail(ErrorKind::Capacity, "0-1 program oracle supports at most 8 jobs");
  if (n_gpus < 1 || n_gpus > 15) fail(ErrorKind::Capacity, "0-1 program oracle supports 1..15 GPUs");

  ZilpResult result;
  if (slot <= 0) {
    double t_min = 0;
    for (const auto& j : jobs)
      for (const auto& [k, t] : j.step_time)
        if (k <= n_gpus && (t_min == 0 || t < t_min)) t_min = t;
    slot = std::max(0.01, std::round(t_min * 100) / 100);
  }
  result.slot = slot;
  auto to_slot = [&](double x) { return static_cast<int>(std::floor(x / slot + kEps)); };

  struct Option {
    int start, dur, degree;
  };
  std::vector<std::vector<Option>> options(jobs.size());
  int horizon = 0;
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    const auto& j = jobs[i];
    if (j.step_time.size() > kMaxDegrees) fail(ErrorKind::Capacity, "0-1 program oracle supports at most 4 degrees");
    const int a = std::max(0, to_slot(j.arrival));
    const int d = to_slot(j.deadline);
    horizon = std::max(horizon, d);
    for (const auto& [k, t] : j.step_time) {
      if (k > n_gpus || !is_power_of_two(k)) continue;
      const int dur = to_slot(t);
      for (int s = a; s + dur <= d; ++s) options[i].push_back({s, dur, k});
    }
  }
  if (horizon > kMaxSlots) fail(ErrorKind::Capacity, "0-1 program oracle supports at most 24 slots");
  result.horizon = horizon;

  // usage[u] packed 4 bits per slot into 96 bits.
  struct Key {
    std::uint64_t lo, hi;
    std::uint32_t job;
    bool operator==(const Key&) const = default;
  };
  struct KeyHash {
    std::size_t operator()(const Key& k) const {
      std::uint64_t h = k.lo * 0x9E3779B97F4A7C15ull ^ (k.hi + 0x632BE59BD9B4E019ull + (std::uint64_t{k.job} << 40));
      return static_cast<std::size_t>(h ^ (h >> 29));
    }
  };
  std::array<int, kMaxSlots> usage{};
  auto key = [&](std::size_t job) {
    Key k{0, 0, static_cast<std::uint32_t>(job)};
    for (int u = 0; u < kMaxSlots; ++u) {
      const std::uint64_t v = static_cast<std::uint64_t>(usage[static_cast<std::size_t>(u)]);
      if (u < 16) k.lo |= v << (4 * u);
      else k.hi |= v << (4 * (u - 16));
    }
    return k;
  };
  auto fits = [&](const Option& o) {
    for (int u = o.start; u < o.start + o.dur; ++u)
      if (usage[static_cast<std::size_t>(u)] + o.degree > n_gpus) return false;
    return true;
  };
  auto apply = [&](const Option& o, int sign) {
    for (int u = o.start; u < o.start + o.dur; ++u) usage[static_cast<std::size_t>(u)] += sign * o.degree;
  };

  std::unordered_map<Key, int, KeyHash> memo;
  std::function<int(std::size_t)> best_from = [&](std::size_t i) -> int {
    if (i == jobs.size()) return 0;
    const Key k = key(i);
    if (auto it = memo.find(k); it != memo.end()) return it->second;
    const int cap = static_cast<int>(jobs.size() - i);
    int best = best_from(i + 1);
    for (const auto& o : options[i]) {
      if (best == cap) break;
      if (!fits(o)) continue;
      apply(o, +1);
      best = std::max(best, 1 + best_from(i + 1));
      apply(o, -1);
    }
    memo.emplace(k, best);
    return best;
  };
  result.optimum = best_from(0);
  result.states = static_cast<std::int64_t>(memo.size());

  // Reconstruct one optimal schedule as the certificate.
  int need = result.optimum;
  for (std::size_t i = 0; i < jobs.size() && need > 0; ++i) {
    if (best_from(i + 1) == need) continue;
    for (const auto& o : options[i]) {
      if (!fits(o)) continue;
      apply(o, +1);
      if (1 + best_from(i + 1) == need) {
        result.schedule.push_back({jobs[i].id, o.start, o.degree});
        --need;
        break;
      }
      apply(o, -1);
    }
  }
  return result;
}

}  // namespace ditsched::oracle
