// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits non-zero if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <limits>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "ditsched/error.hpp"
#include "ditsched/format.hpp"
#include "ditsched/kernels/knapsack_relax.hpp"
#include "ditsched/oracle.hpp"
#include "ditsched/planner.hpp"
#include "ditsched/round_scheduler.hpp"
#include "ditsched/simulator.hpp"
#include "ditsched/sweep.hpp"

using namespace ditsched;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

int failures = 0;
bool quiet = false;  // reruns for the determinism check do not report

void report(int id, const std::string& name, bool ok, const std::string& detail) {
  if (quiet) return;
  std::printf("%s %2d %s: %s\n", ok ? "PASS" : "FAIL", id, name.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

std::string fmt(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

// ---------------------------------------------------------------- packing

std::vector<RequestOptions> random_pack_instance(std::mt19937_64& rng, int max_r, int n, int max_opts) {
  const int r_count = 1 + static_cast<int>(rng() % static_cast<std::uint64_t>(max_r));
  std::vector<RequestOptions> reqs;
  for (int i = 0; i < r_count; ++i) {
    RequestOptions r;
    r.request_id = static_cast<std::int64_t>(rng() % 1000);
    for (const auto& other : reqs)
      if (other.request_id == r.request_id) r.request_id += 1000 + i;
    RoundOption none;
    none.request_id = r.request_id;
    none.survives = rng() % 3 == 0;
    r.options.push_back(none);
    const int extra = static_cast<int>(rng() % static_cast<std::uint64_t>(max_opts));  // total <= max_opts
    for (int k = 0; k < extra; ++k) {
      RoundOption o;
      o.request_id = r.request_id;
      o.segment = 0;
      do o.width = 1 << (rng() % 4);
      while (o.width > n && o.width > 1);
      o.steps = 1 + static_cast<int>(rng() % 8);
      o.survives = rng() % 4 != 0;
      r.options.push_back(o);
    }
    reqs.push_back(std::move(r));
  }
  return reqs;
}

std::string digest(const RoundPlan& p) {
  std::string s = std::to_string(p.survivors) + "/" + std::to_string(p.total_steps) + "/" +
                  std::to_string(p.total_width);
  for (const auto& [id, o] : p.selections) s += " " + std::to_string(id) + ":" + std::to_string(o.width) + "x" +
                                                std::to_string(o.steps);
  return s;
}

std::string criterion_dp_exactness() {
  std::mt19937_64 rng(1001);
  int equal = 0;
  const int total = 1000;
  std::string trace;
  const auto t0 = Clock::now();
  for (int i = 0; i < total; ++i) {
    const int n = 1 + static_cast<int>(rng() % 8);
    auto inst = random_pack_instance(rng, 6, n, 3);
    const auto dp = dp_pack(inst, n);
    const auto bf = oracle::brute_force_pack(inst, n);
    if (dp.survivors == bf.survivors && dp.total_steps == bf.total_steps && dp.total_width == bf.total_width) ++equal;
    trace += digest(dp) + "\n";
  }
  const double secs = seconds_since(t0);
  report(1, "dp exactness", equal == total && secs < 10,
         std::to_string(equal) + "/" + std::to_string(total) + " instances match the exhaustive optimum, " +
             fmt(secs, 3) + " s");
  return trace;
}

// ---------------------------------------------------------------- planner

const Resolution kRes{1024, 1024};

CostProfile random_profile(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const auto resolutions = standard_resolutions();
  for (;;) {
    const Resolution res = resolutions[rng() % resolutions.size()];
    SyntheticParams p;
    p.seconds_per_tflop = (0.2 + 2.0 * u(rng)) / 24964.72;
    p.fixed_overhead = 0.01 * u(rng);
    p.log_comm = 0.03 * u(rng);
    p.seq_comm = 0.02 * u(rng);
    try {
      const std::vector<Resolution> one{res};
      auto full = gen_synthetic(one, 8, p);
      // Re-key under one resolution so requests can share a label.
      CostProfile out(8);
      for (Degree k : full.degrees()) out.set(kRes, k, full.lookup(res, k));
      return out;
    } catch (const Error&) {
      continue;
    }
  }
}

std::string criterion_planner_audit() {
  std::mt19937_64 rng(2002);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const int total = 10000;
  int compared = 0, matched = 0, missed = 0, restricted_feasible = 0;
  std::vector<double> gaps;
  std::string trace;
  for (int i = 0; i < total; ++i) {
    auto profile = random_profile(rng);
    const int steps = 1 + static_cast<int>(rng() % 12);
    const double lo = steps * profile.lookup(kRes, Degree{8});
    const double hi = steps * profile.lookup(kRes, Degree{1});
    const double slack = lo * 0.95 + u(rng) * (hi - lo * 0.95) * 1.05;
    Request req;
    req.id = i;
    req.res = kRes;
    req.total_steps = steps;
    req.slo_baseline = slack;
    const auto plan = min_gpu_hour_plan(req, steps, 0.0, profile, 8);
    const auto best = oracle::brute_force_plan(req, steps, profile, slack, 8);

    // Best plan in the two-degree space, by enumeration.
    bool two_feasible = false;
    const auto ks = profile.degrees();
    for (std::size_t a = 0; a < ks.size() && !two_feasible; ++a)
      for (std::size_t b = a; b < ks.size() && !two_feasible; ++b)
        for (int x = 0; x <= steps; ++x)
          if (x * profile.lookup(kRes, ks[a]) + (steps - x) * profile.lookup(kRes, ks[b]) <= slack + 1e-9)
            two_feasible = true;
    if (two_feasible) {
      ++restricted_feasible;
      if (!plan.feasible || plan_latency(plan, profile) > slack + 1e-9) ++missed;
    }
    trace += std::to_string(plan.feasible);
    for (const auto& s : plan.segments) trace += " " + std::to_string(s.steps) + "@" + std::to_string(s.degree.value());
    trace += "\n";

    if (!best.feasible) continue;
    ++compared;
    const double mine = plan_gpu_hours(plan, profile);
    const double gap = (mine - best.gpu_hours) / best.gpu_hours;
    if (gap <= 1e-9) {
      ++matched;
    } else {
      gaps.push_back(gap);
    }
  }
  const double rate = compared == 0 ? 0.0 : static_cast<double>(matched) / compared;
  double mean_gap = 0, max_gap = 0;
  for (double g : gaps) {
    mean_gap += g;
    max_gap = std::max(max_gap, g);
  }
  if (!gaps.empty()) mean_gap /= static_cast<double>(gaps.size());
  report(2, "planner optimality audit", rate >= 0.99 && missed == 0,
         std::to_string(matched) + "/" + std::to_string(compared) + " feasible instances optimal (" +
             fmt(100 * rate, 2) + "%), " + std::to_string(gaps.size()) + " mismatches with mean GPU-hour gap " +
             fmt(100 * mean_gap, 3) + "% and max " + fmt(100 * max_gap, 3) + "%, " + std::to_string(missed) +
             " missed deadlines out of " + std::to_string(restricted_feasible) + " meetable");
  return trace;
}

// ---------------------------------------------------------------- complexity

struct LinearFit {
  double intercept, slope, r2;
};

LinearFit fit_time_vs_cells(kernels::Isa isa) {
  kernels::set_active_isa(isa);
  std::mt19937_64 rng(3003);
  const std::vector<int> rs{10, 50, 100, 200, 400, 600, 800, 1000};
  const std::vector<int> ns{8, 16, 32, 64};
  std::vector<double> xs, ys;
  for (int r : rs) {
    for (int n : ns) {
      std::vector<RequestOptions> inst;
      for (int i = 0; i < r; ++i) {
        RequestOptions ro;
        ro.request_id = i;
        RoundOption none;
        none.request_id = i;
        ro.options.push_back(none);
        RoundOption run;
        run.request_id = i;
        run.segment = 0;
        run.width = 1 << (rng() % 4);
        run.steps = 1 + static_cast<int>(rng() % 10);
        run.survives = rng() % 2 == 0;
        ro.options.push_back(run);
        inst.push_back(std::move(ro));
      }
      double best = std::numeric_limits<double>::infinity();
      for (int rep = 0; rep < 25; ++rep) {
        const auto t0 = Clock::now();
        auto plan = dp_pack(inst, n);
        const double dt = seconds_since(t0);
        if (plan.total_width > n) std::abort();
        best = std::min(best, dt);
      }
      xs.push_back(static_cast<double>(r) * n);
      ys.push_back(best);
    }
  }
  const double m = static_cast<double>(xs.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
    sxx += xs[i] * xs[i];
    sxy += xs[i] * ys[i];
  }
  LinearFit f;
  f.slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  f.intercept = (sy - f.slope * sx) / m;
  double ss_res = 0, ss_tot = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double e = ys[i] - (f.intercept + f.slope * xs[i]);
    ss_res += e * e;
    ss_tot += (ys[i] - sy / m) * (ys[i] - sy / m);
  }
  f.r2 = 1 - ss_res / ss_tot;
  return f;
}

// Fitted on the portable scalar kernel. The vector kernel shrinks the per-cell
// term enough that fixed per-request work dominates at N = 8; its fit is
// printed alongside.
void criterion_dp_complexity() {
  const kernels::Isa saved = kernels::active_isa();
  const LinearFit scalar = fit_time_vs_cells(kernels::Isa::Scalar);
  std::string vec = "; avx2 kernel not available";
  if (kernels::isa_supported(kernels::Isa::Avx2)) {
    const LinearFit v = fit_time_vs_cells(kernels::Isa::Avx2);
    vec = "; avx2 kernel " + fmt(v.slope * 1e9, 3) + " ns per cell, R^2 = " + fmt(v.r2, 4);
  }
  kernels::set_active_isa(saved);
  report(3, "dp complexity", scalar.r2 >= 0.95,
         "scalar kernel time = " + fmt(scalar.intercept * 1e6, 2) + " us + " + fmt(scalar.slope * 1e9, 3) +
             " ns * R*N over R in 10..1000, N in 8..64, R^2 = " + fmt(scalar.r2, 4) + vec);
}

// ---------------------------------------------------------------- simulations

struct Cell {
  Policy policy;
  double scale;
  double rate;
  int granularity;
  std::uint64_t seed;
};

struct CellResult {
  SimMetrics metrics;
  InvariantCounters audit;
  double seconds = 0;
  std::string bytes;  // serialized outputs for the determinism check
};

TraceParams base_trace() {
  TraceParams t;
  t.rate_rpm = 12;
  t.duration_s = 1500;
  t.mix = MixSpec::uniform();
  return t;
}

CellResult run_one(const CostProfile& profile, const Cell& c) {
  TraceParams tp = base_trace();
  tp.rate_rpm = c.rate;
  tp.slo_scale = c.scale;
  tp.seed = c.seed;
  SimConfig sc;
  sc.granularity = c.granularity;
  CellResult out;
  const auto t0 = Clock::now();
  const auto trace = gen_poisson_trace(tp);
  out.metrics = run(trace, profile, c.policy, sc);
  out.seconds = seconds_since(t0);
  out.audit = audit_execution(out.metrics, trace, sc.n_gpus);
  std::ostringstream s;
  write_metrics_rows(s, SweepCell{c.policy, c.scale, c.rate, 0, c.granularity, c.seed}, out.metrics);
  write_series_csv(s, out.metrics);
  write_degree_trace_csv(s, out.metrics);
  write_assignment_csv(s, out.metrics);
  for (const auto& o : out.metrics.outcomes) s << o.id << ',' << format_double(o.completion) << '\n';
  out.bytes = s.str();
  return out;
}

const std::vector<Policy>& policies() {
  static const std::vector<Policy> p{Policy::fixed(1), Policy::fixed(2), Policy::fixed(4), Policy::fixed(8),
                                     Policy::round_based()};
  return p;
}

constexpr int kSeeds = 10;
const std::vector<double> kScales{1.0, 1.1, 1.2, 1.3, 1.4, 1.5};

struct SloSweep {
  // [policy][scale][seed]
  std::vector<std::vector<std::vector<CellResult>>> runs;
};

SloSweep run_slo_sweep(const CostProfile& profile) {
  SloSweep s;
  s.runs.resize(policies().size());
  for (std::size_t p = 0; p < policies().size(); ++p) {
    s.runs[p].resize(kScales.size());
    for (std::size_t k = 0; k < kScales.size(); ++k)
      for (int seed = 1; seed <= kSeeds; ++seed)
        s.runs[p][k].push_back(run_one(profile, {policies()[p], kScales[k], 12, 5, static_cast<std::uint64_t>(seed)}));
  }
  return s;
}

void criterion_directional(const SloSweep& s) {
  const std::size_t rounds = policies().size() - 1;
  int wins = 0;
  double gap_sum = 0, max_cell = 0;
  std::string per_seed;
  for (int seed = 0; seed < kSeeds; ++seed) {
    double best_fixed = 0;
    for (std::size_t p = 0; p < rounds; ++p) best_fixed = std::max(best_fixed, s.runs[p][0][seed].metrics.sar);
    const double t = s.runs[rounds][0][seed].metrics.sar;
    if (t >= best_fixed) ++wins;
    gap_sum += t - best_fixed;
  }
  for (const auto& by_scale : s.runs)
    for (const auto& by_seed : by_scale)
      for (const auto& r : by_seed) max_cell = std::max(max_cell, r.seconds);
  const double mean_gap = gap_sum / kSeeds;
  double mean_t = 0;
  for (int seed = 0; seed < kSeeds; ++seed) mean_t += s.runs[rounds][0][seed].metrics.sar / kSeeds;
  report(4, "directional reproduction", wins == kSeeds && mean_gap >= 0.05 && max_cell < 60,
         "round scheduler beats every fixed degree on " + std::to_string(wins) + "/" + std::to_string(kSeeds) +
             " seeds, mean SAR " + fmt(mean_t) + ", mean gain over best fixed " + fmt(100 * mean_gap, 2) +
             " points, slowest cell " + fmt(1000 * max_cell, 1) + " ms");
}

void criterion_per_resolution(const SloSweep& s) {
  auto pooled = [&](std::size_t p, Resolution res) {
    int n = 0, met = 0;
    for (const auto& r : s.runs[p][0]) {
      auto it = r.metrics.per_resolution.find(res);
      if (it == r.metrics.per_resolution.end()) continue;
      n += it->second.requests;
      met += it->second.met;
    }
    return n == 0 ? 1.0 : static_cast<double>(met) / n;
  };
  const Resolution small{256, 256}, large{2048, 2048};
  const std::size_t rounds = policies().size() - 1;
  const double f_small = pooled(0, small), f_large = pooled(0, large);
  const double t_small = pooled(rounds, small), t_large = pooled(rounds, large);
  report(5, "per-resolution shape", f_small >= 0.9 && f_large <= 0.1 && t_small >= 0.5 && t_large >= 0.5,
         "fixed:1 256x256 " + fmt(f_small) + " 2048x2048 " + fmt(f_large) + "; round scheduler 256x256 " +
             fmt(t_small) + " 2048x2048 " + fmt(t_large));
}

void criterion_monotone(const SloSweep& s) {
  int bad = 0, curves = 0;
  std::string where;
  for (std::size_t p = 0; p < policies().size(); ++p) {
    for (int seed = 0; seed < kSeeds; ++seed) {
      ++curves;
      for (std::size_t k = 1; k < kScales.size(); ++k) {
        if (s.runs[p][k][seed].metrics.sar < s.runs[p][k - 1][seed].metrics.sar) {
          ++bad;
          where += " " + policies()[p].label() + "/seed" + std::to_string(seed + 1) + "@" + fmt(kScales[k], 1);
          break;
        }
      }
    }
  }
  report(6, "SLO-scale monotonicity", bad == 0,
         std::to_string(curves - bad) + "/" + std::to_string(curves) + " SAR curves non-decreasing over scales 1.0-1.5" +
             (bad ? ";" + where : std::string()));
}

void criterion_invariants(const SloSweep& s) {
  InvariantCounters live, audit;
  int runs = 0;
  auto add = [](InvariantCounters& a, const InvariantCounters& b) {
    a.capacity += b.capacity;
    a.dependency += b.dependency;
    a.power_of_two += b.power_of_two;
    a.preservation += b.preservation;
    a.work_conservation += b.work_conservation;
    a.accounting += b.accounting;
  };
  for (const auto& by_scale : s.runs)
    for (const auto& by_seed : by_scale)
      for (const auto& r : by_seed) {
        add(live, r.metrics.violations);
        add(audit, r.audit);
        ++runs;
      }
  auto show = [](const InvariantCounters& c) {
    return "capacity=" + std::to_string(c.capacity) + " dependency=" + std::to_string(c.dependency) +
           " power_of_two=" + std::to_string(c.power_of_two) + " preservation=" + std::to_string(c.preservation) +
           " work_conservation=" + std::to_string(c.work_conservation) + " accounting=" + std::to_string(c.accounting);
  };
  report(7, "invariant suite", live.total() == 0 && audit.total() == 0,
         std::to_string(runs) + " runs; live " + show(live) + "; audited " + show(audit));
}

// ---------------------------------------------------------------- 0-1 program bound

std::string criterion_zilp_bound() {
  std::mt19937_64 rng(8008);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const auto profile = reference_profile();
  const auto resolutions = standard_resolutions();
  int exceeded = 0;
  double gap_sum = 0;
  std::string trace;
  const int total = 200;
  for (int i = 0; i < total; ++i) {
    std::vector<Request> reqs;
    const int count = 3 + static_cast<int>(rng() % 6);
    std::vector<double> arrivals;
    for (int j = 0; j < count; ++j) arrivals.push_back(std::round(u(rng) * 100) / 100);
    std::sort(arrivals.begin(), arrivals.end());
    for (int j = 0; j < count; ++j) {
      Request r;
      r.id = j;
      r.res = resolutions[rng() % resolutions.size()];
      r.total_steps = 1;
      r.arrival = arrivals[static_cast<std::size_t>(j)];
      r.slo_baseline = 0.05 + 0.45 * u(rng);
      r.slo_scale = 1.0;
      reqs.push_back(r);
    }
    double last = 0;
    for (const auto& r : reqs) last = std::max(last, r.deadline());
    const double slot = std::ceil(last / 24 / 0.01) * 0.01;
    const auto opt = oracle::zilp_exact(oracle::zilp_jobs(reqs, profile, 8), 8, slot);
    trace += std::to_string(opt.optimum);
    for (const auto& pol : policies()) {
      SimConfig sc;
      sc.granularity = 1;
      const auto m = run(reqs, profile, pol, sc);
      if (m.met > opt.optimum) ++exceeded;
      if (pol.kind == Policy::Kind::RoundBased) gap_sum += opt.optimum - m.met;
      trace += " " + std::to_string(m.met);
    }
    trace += "\n";
  }
  report(8, "0-1 program upper bound", exceeded == 0,
         std::to_string(exceeded) + " policy runs exceed the optimum over " + std::to_string(total) +
             " traces; round scheduler mean gap " + fmt(gap_sum / total, 3) + " requests");
  return trace;
}

// ---------------------------------------------------------------- granularity

std::string criterion_granularity(const CostProfile& profile) {
  const std::vector<int> gs{1, 2, 5, 10};
  std::vector<double> mean(gs.size(), 0);
  std::string bytes;
  for (std::size_t i = 0; i < gs.size(); ++i) {
    for (int seed = 1; seed <= kSeeds; ++seed) {
      auto r = run_one(profile, {Policy::round_based(), 1.0, 18, gs[i], static_cast<std::uint64_t>(seed)});
      mean[i] += r.metrics.sar / kSeeds;
      if (seed <= 2) bytes += r.bytes;
    }
  }
  // Unimodal or flat: rises (weakly) to a peak, then falls (weakly).
  std::size_t peak = static_cast<std::size_t>(std::max_element(mean.begin(), mean.end()) - mean.begin());
  bool unimodal = true;
  for (std::size_t i = 1; i <= peak; ++i) unimodal &= mean[i] >= mean[i - 1];
  for (std::size_t i = peak + 1; i < mean.size(); ++i) unimodal &= mean[i] <= mean[i - 1];
  const double best = mean[peak];
  const double g5 = mean[2];
  std::string curve;
  for (std::size_t i = 0; i < gs.size(); ++i) curve += " g" + std::to_string(gs[i]) + "=" + fmt(mean[i]);
  report(9, "granularity sensitivity", unimodal && best - g5 <= 0.02,
         "mean SAR at 18 rpm:" + curve + (unimodal ? " (unimodal)" : " (not unimodal)"));
  return bytes;
}

}  // namespace

int main() {
  const auto t_start = Clock::now();
  const auto profile = reference_profile();

  const std::string dp1 = criterion_dp_exactness();
  const std::string plan1 = criterion_planner_audit();
  criterion_dp_complexity();

  const SloSweep slo = run_slo_sweep(profile);
  criterion_directional(slo);
  criterion_per_resolution(slo);
  criterion_monotone(slo);
  criterion_invariants(slo);

  const std::string zilp1 = criterion_zilp_bound();
  const std::string gran1 = criterion_granularity(profile);

  // Determinism: rerun and compare bytes. The simulation sweep is re-checked
  // on its first two seeds for every policy and scale.
  int mismatches = 0, compared = 0;
  quiet = true;
  mismatches += criterion_dp_exactness() != dp1;
  mismatches += criterion_planner_audit() != plan1;
  mismatches += criterion_zilp_bound() != zilp1;
  mismatches += criterion_granularity(profile) != gran1;
  compared += 4;
  quiet = false;
  for (std::size_t p = 0; p < policies().size(); ++p)
    for (std::size_t k = 0; k < kScales.size(); ++k)
      for (int seed = 1; seed <= 2; ++seed) {
        auto again = run_one(profile, {policies()[p], kScales[k], 12, 5, static_cast<std::uint64_t>(seed)});
        mismatches += again.bytes != slo.runs[p][k][static_cast<std::size_t>(seed - 1)].bytes;
        ++compared;
      }
  report(10, "determinism", mismatches == 0,
         std::to_string(compared - mismatches) + "/" + std::to_string(compared) + " reruns byte-identical");

  std::printf("total %.1f s, %d failed\n", seconds_since(t_start), failures);
  return failures == 0 ? 0 : 1;
}
