#include "ditsched/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "ditsched/cost_model.hpp"
#include "ditsched/error.hpp"
#include "ditsched/format.hpp"
#include "ditsched/instance_json.hpp"
#include "ditsched/oracle.hpp"
#include "ditsched/planner.hpp"
#include "ditsched/round_scheduler.hpp"
#include "ditsched/simulator.hpp"
#include "ditsched/sweep.hpp"
#include "ditsched/workload.hpp"

namespace ditsched {

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) fail(ErrorKind::Io, "cannot write '" + path + "'");
  return f;
}

struct TraceFlags {
  double rate_rpm = 12;
  double duration = 1500;
  std::string mix = "uniform";
  double alpha = 1.0;
  int steps = 20;
  double slo_scale = 1.0;
  std::uint64_t seed = 1;
  double burst_period = 0;
  double burst_duty = 0;
  double burst_multiplier = 1;

  void attach(CLI::App* app, bool with_rate_scale_seed = true) {
    if (with_rate_scale_seed) {
      app->add_option("--rate-rpm", rate_rpm, "mean arrival rate, requests per minute")->capture_default_str();
      app->add_option("--slo-scale", slo_scale, "deadline multiplier on the SLO baseline")->capture_default_str();
      app->add_option("--seed", seed, "random seed")->capture_default_str();
    }
    app->add_option("--duration", duration, "trace length in seconds")->capture_default_str();
    app->add_option("--mix", mix, "uniform | skewed | homogeneous:<res>")->capture_default_str();
    app->add_option("--alpha", alpha, "skew of the skewed mix")->capture_default_str();
    app->add_option("--steps", steps, "denoising steps per request")->capture_default_str();
    app->add_option("--burst-period", burst_period, "burst overlay period in seconds (0 = off)");
    app->add_option("--burst-duty", burst_duty, "fraction of each period at the burst rate");
    app->add_option("--burst-multiplier", burst_multiplier, "rate multiplier during bursts");
  }

  TraceParams params() const {
    TraceParams p;
    p.rate_rpm = rate_rpm;
    p.duration_s = duration;
    p.mix = MixSpec::parse(mix, alpha);
    p.steps_per_request = steps;
    p.slo_scale = slo_scale;
    p.seed = seed;
    p.burst = {burst_period, burst_duty, burst_multiplier};
    return p;
  }
};

struct SimFlags {
  int n_gpus = 8;
  double tau = 0;
  int granularity = 5;
  double overhead = SimConfig{}.sched_overhead;

  void attach(CLI::App* app, bool with_tau_g = true) {
    app->add_option("--n-gpus", n_gpus, "GPUs in the cluster")->capture_default_str();
    if (with_tau_g) {
      app->add_option("--tau", tau, "round length in seconds (0 = automatic)")->capture_default_str();
      app->add_option("--granularity", granularity, "steps per scheduling block")->capture_default_str();
    }
    app->add_option("--sched-overhead", overhead, "per-round scheduling cost in seconds")->capture_default_str();
  }

  SimConfig config() const {
    SimConfig c;
    c.n_gpus = n_gpus;
    c.tau = tau;
    c.granularity = granularity;
    c.sched_overhead = overhead;
    return c;
  }
};

CostProfile load_or_reference(const std::string& path, int n_gpus, std::ostream& err) {
  if (path.empty()) return reference_profile(n_gpus);
  CostProfile p = load_profile_file(path);
  for (const auto& w : p.shape_warnings()) err << "warning: " << path << ": " << w << '\n';
  return p;
}

Request single_request(const std::string& res, int steps, double slo_scale, double deadline) {
  Request r;
  r.id = 0;
  r.res = Resolution::parse(res);
  r.total_steps = steps;
  r.arrival = 0;
  r.slo_baseline = slo_baseline(r.res);
  r.slo_scale = slo_scale;
  if (deadline > 0) {
    r.slo_baseline = deadline;
    r.slo_scale = 1;
  }
  validate(r);
  return r;
}

void log_summary(std::ostream& err, const SimMetrics& m, const InvariantCounters& audit) {
  err << m.policy << ": requests=" << m.requests << " met=" << m.met << " sar=" << format_double(m.sar)
      << " tau=" << format_double(m.tau) << '\n';
  auto report = [&](const char* what, const InvariantCounters& c) {
    if (c.total() == 0) return;
    err << "warning: " << what << " invariant violations: capacity=" << c.capacity << " dependency=" << c.dependency
        << " power_of_two=" << c.power_of_two << " preservation=" << c.preservation
        << " work_conservation=" << c.work_conservation << " accounting=" << c.accounting << '\n';
  };
  report("live", m.violations);
  report("audited", audit);
}

// Repro grids. Kept small enough to finish in about a minute on a laptop.
const std::vector<Policy>& all_policies() {
  static const std::vector<Policy> p{Policy::fixed(1), Policy::fixed(2), Policy::fixed(4), Policy::fixed(8),
                                     Policy::round_based()};
  return p;
}

void write_rows(std::ostream& out, const std::vector<SweepRow>& rows) {
  write_metrics_header(out);
  for (const auto& r : rows) write_metrics_rows(out, r.cell, r.metrics);
}

}  // namespace

// Load-level used by the granularity sweep in `repro`.
constexpr double kHighLoadRpm = 18;

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Deadline-aware round scheduler for multi-step diffusion requests", "ditsched"};
  app.set_config("--config", "", "INI file of option defaults ([subcommand] sections)");
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.require_subcommand(1);

  // gen-profile
  auto* gp = app.add_subcommand("gen-profile", "write the synthetic step-time table");
  int gp_n = 8;
  std::string gp_out;
  SyntheticParams sp = reference_params();
  gp->add_option("--n-gpus", gp_n, "largest profiled degree")->capture_default_str();
  gp->add_option("--out", gp_out, "output CSV (default stdout)");
  gp->add_option("--seconds-per-tflop", sp.seconds_per_tflop);
  gp->add_option("--fixed-overhead", sp.fixed_overhead);
  gp->add_option("--log-comm", sp.log_comm);
  gp->add_option("--seq-comm", sp.seq_comm);

  // gen-trace
  auto* gt = app.add_subcommand("gen-trace", "write a Poisson request trace");
  TraceFlags gt_flags;
  std::string gt_out;
  gt_flags.attach(gt);
  gt->add_option("--out", gt_out, "output CSV (default stdout)");

  // plan
  auto* pl = app.add_subcommand("plan", "print the min-GPU-hour plan for one request as JSON");
  std::string pl_profile, pl_res = "1024";
  int pl_steps = 20, pl_n = 8, pl_g = 1;
  double pl_scale = 1.0, pl_deadline = 0, pl_now = 0;
  pl->add_option("--profile", pl_profile, "profile CSV (default: reference profile)");
  pl->add_option("--resolution", pl_res, "HxW or H")->capture_default_str();
  pl->add_option("--steps", pl_steps)->capture_default_str();
  pl->add_option("--slo-scale", pl_scale)->capture_default_str();
  pl->add_option("--deadline", pl_deadline, "absolute deadline in seconds (overrides the SLO)");
  pl->add_option("--now", pl_now, "planning time")->capture_default_str();
  pl->add_option("--n-gpus", pl_n)->capture_default_str();
  pl->add_option("--granularity", pl_g)->capture_default_str();

  // pack
  auto* pk = app.add_subcommand("pack", "solve one round's packing instance (JSON)");
  std::string pk_instance;
  pk->add_option("--instance", pk_instance, "instance JSON")->required();

  // run
  auto* rn = app.add_subcommand("run", "simulate one trace under one policy; metrics CSV on stdout");
  std::string rn_profile, rn_trace, rn_policy = "tetriserve", rn_series, rn_degrees, rn_assign;
  TraceFlags rn_tf;
  SimFlags rn_sf;
  rn->add_option("--profile", rn_profile, "profile CSV (default: reference profile)");
  rn->add_option("--trace", rn_trace, "trace CSV (default: generate from the trace flags)");
  rn->add_option("--policy", rn_policy, "tetriserve | fixed:<k>")->capture_default_str();
  rn->add_option("--series-out", rn_series, "write the windowed SAR time series");
  rn->add_option("--degrees-out", rn_degrees, "write the per-round degree trace");
  rn->add_option("--assign-out", rn_assign, "write per-round GPU assignments");
  rn_tf.attach(rn);
  rn_sf.attach(rn);

  // sweep
  auto* sw = app.add_subcommand("sweep", "grid of runs; metrics CSV on stdout");
  std::string sw_profile;
  std::vector<std::string> sw_policies{"tetriserve"};
  std::vector<double> sw_scales{1.0}, sw_rates{12}, sw_taus{0};
  std::vector<int> sw_gs{5};
  std::vector<std::uint64_t> sw_seeds{1};
  int sw_jobs = 1;
  TraceFlags sw_tf;
  SimFlags sw_sf;
  sw->add_option("--profile", sw_profile, "profile CSV (default: reference profile)");
  sw->add_option("--policies", sw_policies)->delimiter(',');
  sw->add_option("--slo-scales", sw_scales)->delimiter(',');
  sw->add_option("--rates", sw_rates)->delimiter(',');
  sw->add_option("--taus", sw_taus)->delimiter(',');
  sw->add_option("--granularities", sw_gs)->delimiter(',');
  sw->add_option("--seeds", sw_seeds)->delimiter(',');
  sw->add_option("--jobs", sw_jobs, "worker threads")->capture_default_str();
  sw_tf.attach(sw, false);
  sw_sf.attach(sw, false);

  // oracle
  auto* orc = app.add_subcommand("oracle", "exact solvers for small instances");
  orc->require_subcommand(1);
  auto* op = orc->add_subcommand("pack", "exhaustive packing optimum");
  std::string op_instance;
  op->add_option("--instance", op_instance, "instance JSON")->required();
  auto* opl = orc->add_subcommand("plan", "unrestricted plan optimum (<= 12 steps)");
  std::string opl_profile, opl_res = "1024";
  int opl_steps = 10, opl_n = 8;
  double opl_scale = 1.0, opl_deadline = 0;
  opl->add_option("--profile", opl_profile);
  opl->add_option("--resolution", opl_res)->capture_default_str();
  opl->add_option("--steps", opl_steps)->capture_default_str();
  opl->add_option("--slo-scale", opl_scale)->capture_default_str();
  opl->add_option("--deadline", opl_deadline);
  opl->add_option("--n-gpus", opl_n)->capture_default_str();
  auto* oz = orc->add_subcommand("zilp", "0-1 program optimum for single-step jobs");
  std::string oz_instance;
  oz->add_option("--instance", oz_instance, "instance JSON")->required();

  // repro
  auto* rp = app.add_subcommand("repro", "regenerate the standard experiment tables");
  std::string rp_out = "repro";
  int rp_seeds = 3, rp_jobs = 1, rp_n = 8;
  std::uint64_t rp_seed = 1;
  double rp_duration = 1500;
  rp->add_option("--out", rp_out, "output directory")->capture_default_str();
  rp->add_option("--seed", rp_seed, "first seed")->capture_default_str();
  rp->add_option("--seeds", rp_seeds, "number of consecutive seeds")->capture_default_str();
  rp->add_option("--jobs", rp_jobs, "worker threads")->capture_default_str();
  rp->add_option("--n-gpus", rp_n)->capture_default_str();
  rp->add_option("--duration", rp_duration)->capture_default_str();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << '\n';
    return static_cast<int>(ErrorKind::Usage);
  }

  try {
    if (*gp) {
      const std::vector<Resolution> res = standard_resolutions();
      CostProfile p = gen_synthetic(res, gp_n, sp);
      if (gp_out.empty()) {
        save_profile(out, p);
      } else {
        save_profile_file(gp_out, p);
        err << "wrote " << gp_out << '\n';
      }
    } else if (*gt) {
      auto trace = gen_poisson_trace(gt_flags.params());
      if (gt_out.empty()) {
        save_trace(out, trace);
      } else {
        save_trace_file(gt_out, trace);
        err << "wrote " << trace.size() << " requests to " << gt_out << '\n';
      }
    } else if (*pl) {
      CostProfile profile = load_or_reference(pl_profile, pl_n, err);
      Request r = single_request(pl_res, pl_steps, pl_scale, pl_deadline);
      PlannerOptions opts;
      opts.granularity = pl_g;
      AllocationPlan plan = min_gpu_hour_plan(r, r.total_steps, pl_now, profile, pl_n, opts);
      out << plan_json(plan, profile).dump(2) << '\n';
    } else if (*pk) {
      PackInstance inst = load_pack_instance(pk_instance);
      RoundPlan plan = dp_pack(inst.requests, inst.n_gpus);
      out << pack_result_json(inst, plan).dump(2) << '\n';
    } else if (*rn) {
      CostProfile profile = load_or_reference(rn_profile, rn_sf.n_gpus, err);
      std::vector<Request> trace = rn_trace.empty() ? gen_poisson_trace(rn_tf.params()) : load_trace_file(rn_trace);
      SweepCell cell{Policy::parse(rn_policy), rn_tf.slo_scale, rn_tf.rate_rpm, rn_sf.tau, rn_sf.granularity,
                     rn_tf.seed};
      SimMetrics m = run(trace, profile, cell.policy, rn_sf.config());
      const InvariantCounters audit = audit_execution(m, trace, rn_sf.n_gpus);
      write_metrics_header(out);
      write_metrics_rows(out, cell, m);
      log_summary(err, m, audit);
      if (!rn_series.empty()) {
        auto f = open_out(rn_series);
        write_series_csv(f, m);
      }
      if (!rn_degrees.empty()) {
        auto f = open_out(rn_degrees);
        write_degree_trace_csv(f, m);
      }
      if (!rn_assign.empty()) {
        auto f = open_out(rn_assign);
        write_assignment_csv(f, m);
      }
    } else if (*sw) {
      CostProfile profile = load_or_reference(sw_profile, sw_sf.n_gpus, err);
      SweepGrid grid;
      grid.policies.clear();
      for (const auto& p : sw_policies) grid.policies.push_back(Policy::parse(p));
      grid.slo_scales = sw_scales;
      grid.rates = sw_rates;
      grid.taus = sw_taus;
      grid.granularities = sw_gs;
      grid.seeds = sw_seeds;
      grid.trace = sw_tf.params();
      grid.sim = sw_sf.config();
      grid.sim.record_log = false;
      auto rows = sweep(profile, grid, sw_jobs);
      write_rows(out, rows);
      err << "ran " << rows.size() << " cells\n";
    } else if (*op) {
      PackInstance inst = load_pack_instance(op_instance);
      auto best = oracle::brute_force_pack(inst.requests, inst.n_gpus);
      out << pack_result_json(inst, best).dump(2) << '\n';
    } else if (*opl) {
      CostProfile profile = load_or_reference(opl_profile, opl_n, err);
      Request r = single_request(opl_res, opl_steps, opl_scale, opl_deadline);
      auto best = oracle::brute_force_plan(r, opl_steps, profile, r.deadline(), opl_n);
      nlohmann::json j = plan_json(best.plan, profile);
      j["steps_per_degree"] = nlohmann::json::object();
      for (const auto& [k, n] : best.steps_per_degree) j["steps_per_degree"][std::to_string(k)] = n;
      out << j.dump(2) << '\n';
    } else if (*oz) {
      ZilpInstance inst = load_zilp_instance(oz_instance);
      auto result = oracle::zilp_exact(inst.jobs, inst.n_gpus, inst.slot);
      out << zilp_result_json(result).dump(2) << '\n';
    } else if (*rp) {
      namespace fs = std::filesystem;
      std::error_code ec;
      fs::create_directories(rp_out, ec);
      if (ec) fail(ErrorKind::Io, "cannot create '" + rp_out + "': " + ec.message());
      if (rp_seeds < 1) fail(ErrorKind::Config, "--seeds must be >= 1");
      const CostProfile profile = reference_profile(rp_n);
      {
        auto f = open_out((fs::path(rp_out) / "profile.csv").string());
        save_profile(f, profile);
      }

      std::vector<std::uint64_t> seeds;
      for (int i = 0; i < rp_seeds; ++i) seeds.push_back(rp_seed + static_cast<std::uint64_t>(i));
      SweepGrid base;
      base.policies = all_policies();
      base.seeds = seeds;
      base.trace.duration_s = rp_duration;
      base.sim.n_gpus = rp_n;
      base.sim.record_log = false;

      // Per-resolution SAR at the tight SLO.
      {
        auto f = open_out((fs::path(rp_out) / "per_resolution.csv").string());
        write_rows(f, sweep(profile, base, rp_jobs));
      }
      // SAR against SLO scale, both mixes.
      for (const char* mix : {"uniform", "skewed"}) {
        SweepGrid g = base;
        g.trace.mix = MixSpec::parse(mix);
        g.slo_scales = {1.0, 1.1, 1.2, 1.3, 1.4, 1.5};
        auto f = open_out((fs::path(rp_out) / (std::string("slo_scale_") + mix + ".csv")).string());
        write_rows(f, sweep(profile, g, rp_jobs));
      }
      // Time series and degree trace for the first seed.
      {
        auto series = open_out((fs::path(rp_out) / "sar_series.csv").string());
        series << "policy,t_s,window_sar\n";
        TraceParams tp = base.trace;
        tp.seed = seeds.front();
        const auto trace = gen_poisson_trace(tp);
        for (const auto& p : all_policies()) {
          SimConfig sc = base.sim;
          sc.record_log = true;
          SimMetrics m = run(trace, profile, p, sc);
          for (const auto& pt : m.series)
            series << p.label() << ',' << format_double(pt.t) << ',' << format_double(pt.window_sar) << '\n';
          if (p.kind == Policy::Kind::RoundBased) {
            auto deg = open_out((fs::path(rp_out) / "degree_trace.csv").string());
            write_degree_trace_csv(deg, m);
          }
        }
      }
      // Step granularity at high load.
      {
        SweepGrid g = base;
        g.policies = {Policy::round_based()};
        g.rates = {kHighLoadRpm};
        g.granularities = {1, 2, 5, 10};
        auto f = open_out((fs::path(rp_out) / "granularity.csv").string());
        write_rows(f, sweep(profile, g, rp_jobs));
      }
      err << "wrote tables to " << rp_out << '\n';
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return static_cast<int>(e.kind());
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return static_cast<int>(ErrorKind::Internal);
  }
  return 0;
}

}  // namespace ditsched
