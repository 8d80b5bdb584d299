#include "ditsched/workload.hpp"

#include <cmath>
#include <fstream>
#include <numeric>
#include <ostream>

#include "ditsched/error.hpp"
#include "ditsched/format.hpp"

namespace ditsched {

void validate(const Request& req) {
  validate(req.res);
  const std::string who = "request " + std::to_string(req.id);
  if (req.total_steps < 1) fail(ErrorKind::Config, who + ": needs at least one step");
  if (!std::isfinite(req.arrival) || req.arrival < 0) fail(ErrorKind::Config, who + ": arrival must be >= 0");
  if (!(req.deadline() > req.arrival))
    fail(ErrorKind::Config, who + ": deadline " + format_double(req.deadline()) + " is not after arrival " +
                                format_double(req.arrival));
}

SloTable::SloTable()
    : baselines_{{{256, 256}, 1.5}, {{512, 512}, 2.0}, {{1024, 1024}, 3.0}, {{2048, 2048}, 5.0}} {}

SloTable::SloTable(std::map<Resolution, double> baselines) : baselines_(std::move(baselines)) {}

double SloTable::baseline(const Resolution& res) const {
  auto it = baselines_.find(res);
  if (it == baselines_.end()) fail(ErrorKind::Lookup, "no SLO baseline for resolution " + res.label());
  return it->second;
}

double slo_baseline(const Resolution& res) { return SloTable{}.baseline(res); }

double Rng::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

double Rng::exponential(double mean) { return -mean * std::log1p(-uniform()); }

MixSpec MixSpec::uniform() { return MixSpec{}; }

MixSpec MixSpec::skewed(double alpha) {
  MixSpec m;
  m.kind = Kind::Skewed;
  m.alpha = alpha;
  return m;
}

MixSpec MixSpec::homogeneous(Resolution res) {
  validate(res);
  MixSpec m;
  m.kind = Kind::Homogeneous;
  m.resolutions = {res};
  return m;
}

MixSpec MixSpec::weighted(std::vector<Resolution> res, std::vector<double> weights) {
  if (res.empty() || res.size() != weights.size())
    fail(ErrorKind::Config, "weighted mix needs one weight per resolution");
  for (double w : weights)
    if (!(w > 0)) fail(ErrorKind::Config, "mix weights must be positive");
  MixSpec m;
  m.kind = Kind::Weighted;
  m.resolutions = std::move(res);
  m.weights = std::move(weights);
  return m;
}

MixSpec MixSpec::parse(std::string_view text, double alpha) {
  text = trim(text);
  if (text == "uniform") return uniform();
  if (text == "skewed") return skewed(alpha);
  constexpr std::string_view homo = "homogeneous:";
  if (text.substr(0, homo.size()) == homo) return homogeneous(Resolution::parse(text.substr(homo.size())));
  fail(ErrorKind::Config, "unknown mix '" + std::string(text) + "' (expected uniform, skewed, homogeneous:<res>)");
}

std::string MixSpec::label() const {
  switch (kind) {
    case Kind::Uniform: return "uniform";
    case Kind::Skewed: return "skewed";
    case Kind::Homogeneous: return "homogeneous:" + resolutions.front().label();
    case Kind::Weighted: return "weighted";
  }
  return "?";
}

std::vector<double> MixSpec::probabilities() const {
  std::vector<double> w(resolutions.size(), 1.0);
  if (kind == Kind::Skewed) {
    std::int64_t max_len = 0;
    for (const auto& r : resolutions) max_len = std::max(max_len, r.latent_length());
    for (std::size_t i = 0; i < w.size(); ++i)
      w[i] = std::exp(alpha * static_cast<double>(resolutions[i].latent_length()) / static_cast<double>(max_len));
  } else if (kind == Kind::Weighted) {
    w = weights;
  }
  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  for (double& x : w) x /= total;
  return w;
}

Resolution sample_mix(const MixSpec& spec, Rng& rng) {
  if (spec.resolutions.size() == 1) return spec.resolutions.front();
  const auto p = spec.probabilities();
  const double u = rng.uniform();
  double acc = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    acc += p[i];
    if (u < acc) return spec.resolutions[i];
  }
  return spec.resolutions.back();
}

std::vector<Request> gen_poisson_trace(const TraceParams& params, const SloTable& slo) {
  if (!(params.rate_rpm > 0)) fail(ErrorKind::Config, "arrival rate must be positive");
  if (params.steps_per_request < 1) fail(ErrorKind::Config, "steps per request must be >= 1");
  if (!(params.slo_scale > 0)) fail(ErrorKind::Config, "SLO scale must be positive");
  if (params.duration_s < 0) fail(ErrorKind::Config, "duration must be >= 0");
  const auto& burst = params.burst;
  if (burst.active() && (burst.duty > 1 || burst.multiplier <= 0))
    fail(ErrorKind::Config, "burst duty must be in (0,1] and multiplier positive");

  Rng rng(params.seed);
  const double base_rate = params.rate_rpm / 60.0;  // per second
  const double peak = burst.active() ? base_rate * std::max(1.0, burst.multiplier) : base_rate;
  auto rate_at = [&](double t) {
    if (!burst.active()) return base_rate;
    const double phase = std::fmod(t, burst.period_s) / burst.period_s;
    return phase < burst.duty ? base_rate * burst.multiplier : base_rate;
  };

  std::vector<Request> out;
  double t = 0;
  for (;;) {
    t += rng.exponential(1.0 / peak);
    if (t >= params.duration_s) break;
    // Thinning keeps the overlay an inhomogeneous Poisson process.
    if (burst.active() && rng.uniform() * peak >= rate_at(t)) continue;
    Request r;
    r.id = static_cast<std::int64_t>(out.size());
    r.arrival = t;
    r.res = sample_mix(params.mix, rng);
    r.total_steps = params.steps_per_request;
    r.slo_baseline = slo.baseline(r.res);
    r.slo_scale = params.slo_scale;
    out.push_back(r);
  }
  return out;
}

std::vector<Request> load_trace(std::istream& in, const std::string& source) {
  CsvReader csv(in, source, {"id", "arrival_s", "height", "width", "steps", "slo_baseline_s", "slo_scale"});
  std::vector<Request> out;
  std::vector<std::string_view> f;
  while (csv.next(f)) {
    Request r;
    r.id = parse_int(f[0], csv.where("id"));
    r.arrival = parse_double(f[1], csv.where("arrival_s"));
    r.res.height = static_cast<int>(parse_int(f[2], csv.where("height")));
    r.res.width = static_cast<int>(parse_int(f[3], csv.where("width")));
    r.total_steps = static_cast<int>(parse_int(f[4], csv.where("steps")));
    r.slo_baseline = parse_double(f[5], csv.where("slo_baseline_s"));
    r.slo_scale = parse_double(f[6], csv.where("slo_scale"));
    try {
      validate(r);
    } catch (const Error& e) {
      fail(ErrorKind::Format, source + ":" + std::to_string(csv.line()) + ": " + e.what());
    }
    if (!out.empty() && r.arrival < out.back().arrival)
      fail(ErrorKind::Format, source + ":" + std::to_string(csv.line()) + ": arrivals must be sorted");
    out.push_back(r);
  }
  return out;
}

std::vector<Request> load_trace_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open trace '" + path + "'");
  return load_trace(in, path);
}

void save_trace(std::ostream& out, const std::vector<Request>& trace) {
  out << "id,arrival_s,height,width,steps,slo_baseline_s,slo_scale\n";
  for (const auto& r : trace)
    out << r.id << ',' << format_double(r.arrival) << ',' << r.res.height << ',' << r.res.width << ','
        << r.total_steps << ',' << format_double(r.slo_baseline) << ',' << format_double(r.slo_scale) << '\n';
}

void save_trace_file(const std::string& path, const std::vector<Request>& trace) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::Io, "cannot write trace '" + path + "'");
  save_trace(out, trace);
}

}  // namespace ditsched
