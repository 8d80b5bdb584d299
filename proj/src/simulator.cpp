#include "ditsched/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "ditsched/error.hpp"
#include "ditsched/format.hpp"
#include "ditsched/planner.hpp"
#include "ditsched/round_scheduler.hpp"

namespace ditsched {

namespace {

constexpr double kEps = 1e-9;
constexpr std::int64_t kMaxRounds = 100'000'000;

struct Live {
  const Request* req;
  std::size_t index;  // position in trace / outcomes
  int steps_done = 0;
  double ready = 0;   // when the previous execution ended (arrival at first)
};

void validate_inputs(const std::vector<Request>& trace, const CostProfile& profile, const SimConfig& cfg) {
  if (cfg.n_gpus < 1 || cfg.n_gpus > kMaxGpus) fail(ErrorKind::Config, "n_gpus must be in [1, 64]");
  if (profile.gpu_count() < cfg.n_gpus)
    fail(ErrorKind::Config, "profile covers " + std::to_string(profile.gpu_count()) + " GPUs but the cluster has " +
                                std::to_string(cfg.n_gpus));
  if (cfg.granularity < 1) fail(ErrorKind::Config, "granularity must be >= 1");
  if (cfg.sched_overhead < 0) fail(ErrorKind::Config, "scheduling overhead must be >= 0");
  if (!(cfg.window > 0) || !(cfg.series_step > 0)) fail(ErrorKind::Config, "series window and step must be positive");
  for (std::size_t i = 0; i < trace.size(); ++i) {
    validate(trace[i]);
    if (!profile.contains(trace[i].res))
      fail(ErrorKind::Lookup, "trace resolution " + trace[i].res.label() + " is not in the profile");
    if (i > 0 && trace[i].arrival < trace[i - 1].arrival) fail(ErrorKind::Config, "trace must be sorted by arrival");
  }
}

void finalize(SimMetrics& m, const SimConfig& cfg) {
  m.requests = static_cast<int>(m.outcomes.size());
  m.empty = m.requests == 0;
  m.met = 0;
  for (const auto& o : m.outcomes) {
    auto& pr = m.per_resolution[o.res];
    ++pr.requests;
    if (o.met) {
      ++m.met;
      ++pr.met;
    } else {
      m.late.push_back(o.id);
    }
  }
  m.sar = m.empty ? 1.0 : static_cast<double>(m.met) / m.requests;

  // Sliding-window SAR over completion times.
  std::vector<std::pair<double, bool>> done;
  for (const auto& o : m.outcomes) done.emplace_back(o.completion, o.met);
  std::sort(done.begin(), done.end());
  if (done.empty()) return;
  const double last = done.back().first;
  std::size_t lo = 0, hi = 0;
  int met = 0;
  const auto steps = static_cast<std::int64_t>(std::ceil(last / cfg.series_step - kEps));
  for (std::int64_t i = 1; i <= steps; ++i) {
    const double t = static_cast<double>(i) * cfg.series_step;
    while (hi < done.size() && done[hi].first <= t + kEps) met += done[hi++].second ? 1 : 0;
    while (lo < hi && done[lo].first <= t - cfg.window + kEps) met -= done[lo++].second ? 1 : 0;
    const int n = static_cast<int>(hi - lo);
    if (n > 0) m.series.push_back({t, static_cast<double>(met) / n, n});
  }
}

RequestOutcome make_outcome(const Request& r) {
  RequestOutcome o;
  o.id = r.id;
  o.res = r.res;
  o.arrival = r.arrival;
  o.deadline = r.deadline();
  return o;
}

void check_accounting(SimMetrics& m, const RequestOutcome& o) {
  const double lhs = o.completion - o.arrival;
  const double rhs = o.queue_time + o.exec_time;
  if (std::abs(lhs - rhs) > 1e-9 * std::max(1.0, std::abs(lhs))) ++m.violations.accounting;
}

SimMetrics run_fixed(const std::vector<Request>& trace, const CostProfile& profile, const Policy& policy,
                     const SimConfig& cfg) {
  SimMetrics m;
  m.policy = policy.label();
  m.granularity = cfg.granularity;
  const int k = policy.degree;
  const int slots = cfg.n_gpus / k;
  std::vector<double> free_at(static_cast<std::size_t>(slots), 0.0);

  for (const auto& r : trace) {
    const std::size_t slot = static_cast<std::size_t>(std::min_element(free_at.begin(), free_at.end()) - free_at.begin());
    const double t = profile.lookup(r.res, Degree{k});
    auto o = make_outcome(r);
    const double start = std::max(r.arrival, free_at[slot]);
    o.exec_time = r.total_steps * t;
    o.completion = start + o.exec_time;
    o.queue_time = start - r.arrival;
    o.steps_done = r.total_steps;
    o.met = o.completion <= o.deadline + kEps;
    free_at[slot] = o.completion;
    check_accounting(m, o);
    if (cfg.record_log) {
      ExecRecord rec;
      rec.round = -1;
      rec.request_id = r.id;
      rec.degree = k;
      rec.steps = r.total_steps;
      rec.start = start;
      rec.end = o.completion;
      for (int g = 0; g < k; ++g) rec.gpus.insert(static_cast<int>(slot) * k + g);
      m.log.push_back(rec);
      m.degree_trace.push_back({-1, r.id, k, r.total_steps});
    }
    m.outcomes.push_back(o);
  }
  finalize(m, cfg);
  return m;
}

SimMetrics run_rounds(const std::vector<Request>& trace, const CostProfile& profile, const SimConfig& cfg) {
  SimMetrics m;
  m.policy = Policy::round_based().label();
  m.granularity = cfg.granularity;
  const double tau = cfg.tau > 0 ? cfg.tau : default_round_length(profile, cfg.n_gpus, cfg.granularity, cfg.sched_overhead);
  m.tau = tau;
  const double window = tau - cfg.sched_overhead;
  if (!(window > 0)) fail(ErrorKind::Config, "round length must exceed the scheduling overhead");

  for (const auto& r : trace) {
    const auto fastest = fastest_step_time(profile, r.res);
    double t_min = fastest.seconds;
    for (Degree k : degrees_up_to(cfg.n_gpus)) t_min = std::min(t_min, profile.lookup(r.res, k));
    if (std::floor((window + kEps) / t_min) < std::min(cfg.granularity, r.total_steps))
      fail(ErrorKind::Config, "round length " + format_double(tau) + " s cannot fit one block of " +
                                  std::to_string(cfg.granularity) + " steps for " + r.res.label());
  }

  m.outcomes.reserve(trace.size());
  for (const auto& r : trace) m.outcomes.push_back(make_outcome(r));

  std::vector<Live> pending;
  std::size_t next_arrival = 0;
  ClusterState prev;
  prev.n_gpus = cfg.n_gpus;
  std::int64_t round = 0;

  while (next_arrival < trace.size() || !pending.empty()) {
    if (pending.empty()) {
      const auto r_arr = static_cast<std::int64_t>(std::ceil((trace[next_arrival].arrival - kEps) / tau));
      round = std::max(round, r_arr);
      prev.assignment.clear();
    }
    if (round > kMaxRounds) fail(ErrorKind::Internal, "simulation did not terminate");
    const double now = static_cast<double>(round) * tau;
    while (next_arrival < trace.size() && trace[next_arrival].arrival <= now + kEps) {
      pending.push_back({&trace[next_arrival], next_arrival, 0, trace[next_arrival].arrival});
      ++next_arrival;
    }
    if (pending.empty()) {
      ++round;
      continue;
    }

    RoundContext ctx;
    ctx.now = now;
    ctx.tau = tau;
    ctx.exec_window = window;
    ctx.n_gpus = cfg.n_gpus;
    ctx.granularity = cfg.granularity;

    std::vector<RequestOptions> all;
    all.reserve(pending.size());
    ScaleUpContext up;
    up.profile = &profile;
    up.exec_window = window;
    up.granularity = cfg.granularity;
    for (const auto& p : pending) {
      const int remaining = p.req->total_steps - p.steps_done;
      PlannerOptions popt;
      popt.granularity = cfg.granularity;
      popt.round_length = tau;
      popt.round_window = window;
      const auto plan = min_gpu_hour_plan(*p.req, remaining, now, profile, cfg.n_gpus, popt);
      all.push_back({p.req->id, build_options(*p.req, plan, ctx, profile)});
      up.requests[p.req->id] = {p.req->res, remaining};
    }

    RoundPlan rp = dp_pack(all, cfg.n_gpus);
    rp.start = now;
    rp.duration = tau;
    elastic_scale_up(rp, cfg.n_gpus, up);
    ClusterState state = place(rp, prev);

    // Live invariant checks.
    if (state.busy().size() > cfg.n_gpus || rp.total_width > cfg.n_gpus) ++m.violations.capacity;
    for (const auto& [id, gpus] : state.assignment) {
      if (!is_power_of_two(gpus.size()) || gpus.size() != rp.selections[id].width) ++m.violations.power_of_two;
      auto it = prev.assignment.find(id);
      if (it != prev.assignment.end() && it->second.size() == gpus.size() && !(it->second == gpus))
        ++m.violations.preservation;
      if (qualifies_for_scale_up(rp, cfg.n_gpus, up, id)) ++m.violations.work_conservation;
    }

    RoundStat stat;
    stat.round = round;
    stat.start = now;
    stat.pending = static_cast<int>(pending.size());
    stat.busy_gpus = state.busy().size();
    stat.survivors = rp.survivors;
    double busy_time = 0;

    const double exec_start = now + cfg.sched_overhead;
    for (auto& p : pending) {
      const auto& opt = rp.selections.at(p.req->id);
      if (opt.is_none()) continue;
      const double t = profile.lookup(p.req->res, Degree{opt.width});
      const int q = std::min(opt.steps, p.req->total_steps - p.steps_done);
      const double end = exec_start + q * t;
      if (q < 1 || end > now + tau + kEps || exec_start < p.ready - kEps) ++m.violations.dependency;
      auto& o = m.outcomes[p.index];
      o.queue_time += exec_start - p.ready;
      o.exec_time += q * t;
      p.ready = end;
      p.steps_done += q;
      busy_time += opt.width * q * t;
      if (p.steps_done == p.req->total_steps) {
        o.completion = end;
        o.steps_done = p.steps_done;
        o.met = o.completion <= o.deadline + kEps;
        check_accounting(m, o);
      }
      if (cfg.record_log) {
        m.log.push_back({round, p.req->id, state.assignment.at(p.req->id), opt.width, q, exec_start, end});
        m.degree_trace.push_back({round, p.req->id, opt.width, q});
      }
    }
    stat.utilization = busy_time / (cfg.n_gpus * tau);
    m.rounds.push_back(stat);

    std::erase_if(pending, [](const Live& p) { return p.steps_done == p.req->total_steps; });
    prev = std::move(state);
    ++round;
  }
  finalize(m, cfg);
  return m;
}

}  // namespace

Policy Policy::fixed(int k) {
  if (!is_power_of_two(k)) fail(ErrorKind::Config, "fixed degree " + std::to_string(k) + " is not a power of two");
  return {Kind::Fixed, k};
}

Policy Policy::parse(std::string_view text) {
  text = trim(text);
  if (text == "tetriserve") return round_based();
  constexpr std::string_view prefix = "fixed:";
  if (text.substr(0, prefix.size()) == prefix)
    return fixed(static_cast<int>(parse_int(text.substr(prefix.size()), "policy '" + std::string(text) + "'")));
  fail(ErrorKind::Config, "unknown policy '" + std::string(text) + "' (expected tetriserve or fixed:<k>)");
}

std::string Policy::label() const { return kind == Kind::RoundBased ? "tetriserve" : "fixed:" + std::to_string(degree); }

double default_round_length(const CostProfile& profile, int n_gpus, int granularity, double overhead,
                            const SloTable& slo) {
  double worst = 0;
  for (const auto& res : profile.resolutions()) {
    double baseline = 0;
    try {
      baseline = slo.baseline(res);
    } catch (const Error&) {
      continue;
    }
    Request fresh;
    fresh.res = res;
    fresh.slo_baseline = baseline;
    fresh.total_steps = TraceParams{}.steps_per_request;
    PlannerOptions opt;
    opt.granularity = granularity;
    const auto plan = min_gpu_hour_plan(fresh, fresh.total_steps, 0.0, profile, n_gpus, opt);
    double fastest = std::numeric_limits<double>::infinity();
    for (const auto& s : plan.segments) fastest = std::min(fastest, profile.lookup(res, s.degree));
    worst = std::max(worst, fastest);
  }
  if (worst == 0) fail(ErrorKind::Config, "cannot derive a round length: no profiled resolution has an SLO baseline");
  return std::ceil((granularity * worst + overhead) / 0.01 - kEps) * 0.01;
}

SimMetrics run(const std::vector<Request>& trace, const CostProfile& profile, const Policy& policy,
               const SimConfig& config) {
  validate_inputs(trace, profile, config);
  if (policy.kind == Policy::Kind::Fixed) {
    if (policy.degree < 1 || policy.degree > config.n_gpus)
      fail(ErrorKind::Config, "fixed degree " + std::to_string(policy.degree) + " exceeds the cluster size");
    return run_fixed(trace, profile, policy, config);
  }
  return run_rounds(trace, profile, config);
}

InvariantCounters audit_execution(const SimMetrics& m, const std::vector<Request>& trace, int n_gpus) {
  InvariantCounters v;
  std::map<std::int64_t, const Request*> by_id;
  for (const auto& r : trace) by_id[r.id] = &r;

  // Capacity: sweep execution intervals; ends sort before starts at equal times.
  std::vector<std::pair<double, int>> events;
  for (const auto& e : m.log) {
    if (!is_power_of_two(e.degree) || e.gpus.size() != e.degree) ++v.power_of_two;
    if (e.end < e.start - kEps) ++v.dependency;
    events.emplace_back(e.start, e.degree);
    events.emplace_back(e.end - kEps, -e.degree);
  }
  std::sort(events.begin(), events.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first < b.first;
    return a.second < b.second;
  });
  int in_use = 0;
  for (const auto& [_, d] : events) {
    in_use += d;
    if (in_use > n_gpus) ++v.capacity;
  }
  // Each GPU runs one thing at a time.
  std::vector<std::vector<std::pair<double, double>>> per_gpu(static_cast<std::size_t>(n_gpus));
  for (const auto& e : m.log)
    for (int g : e.gpus.ids()) {
      if (g >= n_gpus) {
        ++v.capacity;
        continue;
      }
      per_gpu[static_cast<std::size_t>(g)].emplace_back(e.start, e.end);
    }
  for (auto& iv : per_gpu) {
    std::sort(iv.begin(), iv.end());
    for (std::size_t i = 1; i < iv.size(); ++i)
      if (iv[i].first < iv[i - 1].second - kEps) ++v.capacity;
  }

  // Per-request ordering, step totals, preservation.
  std::map<std::int64_t, std::vector<const ExecRecord*>> per_req;
  for (const auto& e : m.log) per_req[e.request_id].push_back(&e);
  for (auto& [id, recs] : per_req) {
    std::sort(recs.begin(), recs.end(), [](auto a, auto b) { return a->start < b->start; });
    int steps = 0;
    for (std::size_t i = 0; i < recs.size(); ++i) {
      steps += recs[i]->steps;
      if (i > 0) {
        if (recs[i]->start < recs[i - 1]->end - kEps) ++v.dependency;
        if (recs[i]->round >= 0 && recs[i]->round == recs[i - 1]->round + 1 &&
            recs[i]->degree == recs[i - 1]->degree && !(recs[i]->gpus == recs[i - 1]->gpus))
          ++v.preservation;
      }
    }
    auto it = by_id.find(id);
    if (it == by_id.end() || steps != it->second->total_steps) ++v.dependency;
    if (it != by_id.end() && !recs.empty() && recs.front()->start < it->second->arrival - kEps) ++v.dependency;
  }

  for (const auto& o : m.outcomes) {
    const double lhs = o.completion - o.arrival;
    const double rhs = o.queue_time + o.exec_time;
    if (std::abs(lhs - rhs) > 1e-9 * std::max(1.0, std::abs(lhs))) ++v.accounting;
    auto recs = per_req.find(o.id);
    if (!m.log.empty() && recs != per_req.end()) {
      double exec = 0;
      for (auto* e : recs->second) exec += e->end - e->start;
      if (std::abs(exec - o.exec_time) > 1e-9 * std::max(1.0, exec)) ++v.accounting;
      if (std::abs(recs->second.back()->end - o.completion) > kEps) ++v.accounting;
    }
  }
  return v;
}

void write_series_csv(std::ostream& out, const SimMetrics& m) {
  out << "t_s,window_sar\n";
  for (const auto& p : m.series) out << format_double(p.t) << ',' << format_double(p.window_sar) << '\n';
}

void write_degree_trace_csv(std::ostream& out, const SimMetrics& m) {
  out << "round,request_id,degree,steps\n";
  for (const auto& d : m.degree_trace) out << d.round << ',' << d.request_id << ',' << d.degree << ',' << d.steps << '\n';
}

void write_assignment_csv(std::ostream& out, const SimMetrics& m) {
  out << "round,gpu,request_id\n";
  for (const auto& e : m.log)
    for (int g : e.gpus.ids()) out << e.round << ',' << g << ',' << e.request_id << '\n';
}

}  // namespace ditsched
