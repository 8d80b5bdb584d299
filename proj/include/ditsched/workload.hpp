#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "ditsched/cost_model.hpp"

namespace ditsched {

/// One image-generation job: `total_steps` identical dependent denoising
/// steps at a single resolution, due `slo_baseline * slo_scale` seconds
/// after arrival.
struct Request {
  std::int64_t id = 0;
  Resolution res;
  int total_steps = 1;
  double arrival = 0;
  double slo_baseline = 0;
  double slo_scale = 1;

  double deadline() const { return arrival + slo_baseline * slo_scale; }
  bool operator==(const Request&) const = default;
};

void validate(const Request& req);

/// Per-resolution latency targets. The defaults cover the four standard sizes.
class SloTable {
 public:
  SloTable();
  explicit SloTable(std::map<Resolution, double> baselines);
  double baseline(const Resolution& res) const;

 private:
  std::map<Resolution, double> baselines_;
};

double slo_baseline(const Resolution& res);

/// Deterministic random source. Built on mt19937_64 with hand-rolled
/// transforms so traces are identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  double uniform();                       // [0, 1)
  double exponential(double mean);        // inverse CDF
  std::uint64_t bits() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

struct MixSpec {
  enum class Kind { Uniform, Skewed, Homogeneous, Weighted };

  Kind kind = Kind::Uniform;
  double alpha = 1.0;
  std::vector<Resolution> resolutions = standard_resolutions();
  std::vector<double> weights;  // Weighted only

  static MixSpec uniform();
  static MixSpec skewed(double alpha = 1.0);
  static MixSpec homogeneous(Resolution res);
  static MixSpec weighted(std::vector<Resolution> res, std::vector<double> weights);

  // "uniform", "skewed", "homogeneous:<res>"
  static MixSpec parse(std::string_view text, double alpha = 1.0);
  std::string label() const;

  // Normalized sampling probabilities, parallel to `resolutions`. Skewed
  // weights are exp(alpha * L_i / L_max).
  std::vector<double> probabilities() const;
};

Resolution sample_mix(const MixSpec& spec, Rng& rng);

/// Optional periodic rate multiplier on top of the Poisson process: during the
/// first `duty` fraction of every `period_s`, the rate is scaled by `multiplier`.
struct BurstOverlay {
  double period_s = 0;
  double duty = 0;
  double multiplier = 1;
  bool active() const { return period_s > 0 && duty > 0 && multiplier != 1; }
};

struct TraceParams {
  double rate_rpm = 12;
  double duration_s = 1500;
  MixSpec mix = MixSpec::uniform();
  int steps_per_request = 20;
  double slo_scale = 1.0;
  std::uint64_t seed = 1;
  BurstOverlay burst;
};

/// Poisson arrivals over [0, duration). Ids follow arrival order.
std::vector<Request> gen_poisson_trace(const TraceParams& params, const SloTable& slo = SloTable{});

// CSV: id,arrival_s,height,width,steps,slo_baseline_s,slo_scale
std::vector<Request> load_trace(std::istream& in, const std::string& source = "<trace>");
std::vector<Request> load_trace_file(const std::string& path);
void save_trace(std::ostream& out, const std::vector<Request>& trace);
void save_trace_file(const std::string& path, const std::vector<Request>& trace);

}  // namespace ditsched
