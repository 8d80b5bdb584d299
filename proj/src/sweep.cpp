#include "ditsched/sweep.hpp"

#include <algorithm>
#include <future>
#include <ostream>

#include "ditsched/error.hpp"
#include "ditsched/format.hpp"

namespace ditsched {

std::vector<SweepCell> SweepGrid::cells() const {
  std::vector<SweepCell> out;
  for (const auto& p : policies)
    for (double scale : slo_scales)
      for (double rate : rates)
        for (double tau : taus)
          for (int g : granularities)
            for (auto seed : seeds) out.push_back({p, scale, rate, tau, g, seed});
  return out;
}

SimMetrics run_cell(const CostProfile& profile, const SweepCell& cell, const TraceParams& trace_base,
                    const SimConfig& sim_base) {
  TraceParams tp = trace_base;
  tp.rate_rpm = cell.rate_rpm;
  tp.slo_scale = cell.slo_scale;
  tp.seed = cell.seed;
  SimConfig sc = sim_base;
  sc.tau = cell.tau;
  sc.granularity = cell.granularity;
  return run(gen_poisson_trace(tp), profile, cell.policy, sc);
}

std::vector<SweepRow> sweep(const CostProfile& profile, const std::vector<SweepCell>& cells,
                            const TraceParams& trace_base, const SimConfig& sim_base, int jobs) {
  if (jobs < 1) fail(ErrorKind::Config, "jobs must be >= 1");
  std::vector<SweepRow> rows(cells.size());
  for (std::size_t i = 0; i < cells.size(); i += static_cast<std::size_t>(jobs)) {
    const std::size_t end = std::min(cells.size(), i + static_cast<std::size_t>(jobs));
    std::vector<std::future<SimMetrics>> batch;
    for (std::size_t j = i; j < end; ++j)
      batch.push_back(std::async(jobs == 1 ? std::launch::deferred : std::launch::async,
                                 [&, j] { return run_cell(profile, cells[j], trace_base, sim_base); }));
    for (std::size_t j = i; j < end; ++j) rows[j] = {cells[j], batch[j - i].get()};
  }
  return rows;
}

void write_metrics_header(std::ostream& out) {
  out << "policy,slo_scale,rate_rpm,tau_s,granularity,seed,resolution,requests,sar\n";
}

void write_metrics_rows(std::ostream& out, const SweepCell& cell, const SimMetrics& m) {
  const double tau = cell.policy.kind == Policy::Kind::RoundBased ? m.tau : cell.tau;
  const std::string prefix = cell.policy.label() + ',' + format_double(cell.slo_scale) + ',' +
                             format_double(cell.rate_rpm) + ',' + format_double(tau) + ',' +
                             std::to_string(cell.granularity) + ',' + std::to_string(cell.seed) + ',';
  for (const auto& [res, stat] : m.per_resolution)
    out << prefix << res.label() << ',' << stat.requests << ',' << format_double(stat.sar()) << '\n';
  out << prefix << "all," << m.requests << ',' << format_double(m.sar) << '\n';
}

}  // namespace ditsched
