#include "ditsched/cost_model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <ostream>
#include <set>

#include "ditsched/error.hpp"
#include "ditsched/format.hpp"

namespace ditsched {

std::string Resolution::label() const { return std::to_string(height) + "x" + std::to_string(width); }

Resolution Resolution::parse(std::string_view text) {
  text = trim(text);
  auto x = text.find_first_of("xX");
  Resolution res;
  const std::string where = "resolution '" + std::string(text) + "'";
  if (x == std::string_view::npos) {
    res.height = res.width = static_cast<int>(parse_int(text, where));
  } else {
    res.height = static_cast<int>(parse_int(trim(text.substr(0, x)), where));
    res.width = static_cast<int>(parse_int(trim(text.substr(x + 1)), where));
  }
  validate(res);
  return res;
}

void validate(const Resolution& res) {
  if (res.height <= 0 || res.width <= 0 || res.height % 16 != 0 || res.width % 16 != 0)
    fail(ErrorKind::Config, "invalid resolution " + res.label() + ": sides must be positive multiples of 16");
}

std::vector<Resolution> standard_resolutions() { return {{256, 256}, {512, 512}, {1024, 1024}, {2048, 2048}}; }

Degree::Degree(int k) : k_(k) {
  if (!is_power_of_two(k)) fail(ErrorKind::Config, "degree " + std::to_string(k) + " is not a power of two");
}

int Degree::log2() const { return std::countr_zero(static_cast<unsigned>(k_)); }

std::vector<Degree> degrees_up_to(int n) {
  std::vector<Degree> out;
  for (int k = 1; k > 0 && k <= n; k *= 2) out.emplace_back(k);
  return out;
}

CostProfile::CostProfile(int gpu_count) : gpu_count_(gpu_count), degrees_(degrees_up_to(gpu_count)) {
  if (gpu_count < 1) fail(ErrorKind::Config, "gpu count must be >= 1");
}

int CostProfile::column(Degree k, const Resolution& res) const {
  if (k.value() > gpu_count_)
    fail(ErrorKind::Lookup, "no profile entry for " + res.label() + " at degree " + std::to_string(k.value()) +
                                " (profile covers up to " + std::to_string(gpu_count_) + " GPUs)");
  return k.log2();
}

void CostProfile::set(const Resolution& res, Degree k, double seconds) { set(res, k, seconds, format_double(seconds)); }

void CostProfile::set(const Resolution& res, Degree k, double seconds, std::string text) {
  validate(res);
  if (!(seconds > 0) || !std::isfinite(seconds))
    fail(ErrorKind::Config, "step time for " + res.label() + " at degree " + std::to_string(k.value()) +
                                " must be positive");
  int col = column(k, res);
  auto& r = rows_[res];
  if (r.seconds.empty()) {
    r.seconds.assign(degrees_.size(), 0.0);
    r.text.assign(degrees_.size(), {});
    r.present.assign(degrees_.size(), false);
  }
  r.seconds[col] = seconds;
  r.text[col] = std::move(text);
  r.present[col] = true;
}

const CostProfile::Row& CostProfile::row(const Resolution& res) const {
  auto it = rows_.find(res);
  if (it == rows_.end()) fail(ErrorKind::Lookup, "resolution " + res.label() + " is not in the profile");
  return it->second;
}

double CostProfile::lookup(const Resolution& res, Degree k) const {
  const auto& r = row(res);
  int col = column(k, res);
  if (!r.present[col])
    fail(ErrorKind::Lookup, "no profile entry for " + res.label() + " at degree " + std::to_string(k.value()));
  return r.seconds[col];
}

const std::string& CostProfile::text(const Resolution& res, Degree k) const {
  lookup(res, k);
  return row(res).text[k.log2()];
}

std::vector<Resolution> CostProfile::resolutions() const {
  std::vector<Resolution> out;
  for (const auto& [res, _] : rows_) out.push_back(res);
  return out;
}

void CostProfile::check_complete() const {
  for (const auto& [res, r] : rows_)
    for (std::size_t i = 0; i < degrees_.size(); ++i)
      if (!r.present[i])
        fail(ErrorKind::Format,
             "profile is missing " + res.label() + " at degree " + std::to_string(degrees_[i].value()));
}

std::vector<std::string> CostProfile::shape_warnings() const {
  std::vector<std::string> out;
  for (const auto& [res, r] : rows_) {
    for (std::size_t i = 1; i < degrees_.size(); ++i) {
      double k0 = degrees_[i - 1].value(), k1 = degrees_[i].value();
      if (k1 * r.seconds[i] < k0 * r.seconds[i - 1])
        out.push_back(res.label() + ": GPU-seconds drop from degree " + format_double(k0) + " to " +
                      format_double(k1) + " (superlinear scaling)");
      if (res.latent_length() >= 4096 && r.seconds[i] > r.seconds[i - 1])
        out.push_back(res.label() + ": step time rises from degree " + format_double(k0) + " to " +
                      format_double(k1));
    }
  }
  return out;
}

double gpu_hours(const CostProfile& profile, const Resolution& res, Degree k, std::int64_t steps) {
  if (steps < 0) fail(ErrorKind::Config, "step count must be non-negative");
  double t = profile.lookup(res, k);
  return static_cast<double>(steps) * k.value() * t;
}

StepTime fastest_step_time(const CostProfile& profile, const Resolution& res) {
  StepTime best{profile.lookup(res, Degree{1}), Degree{1}};
  for (Degree k : profile.degrees()) {
    double t = profile.lookup(res, k);
    if (t < best.seconds) best = {t, k};
  }
  return best;
}

double image_tflops(const Resolution& res) {
  // Per-image compute for FLUX.1-dev class models.
  static const std::map<Resolution, double> table = {
      {{256, 256}, 556.48},
      {{512, 512}, 1388.24},
      {{1024, 1024}, 5045.92},
      {{2048, 2048}, 24964.72},
  };
  auto it = table.find(res);
  if (it == table.end()) fail(ErrorKind::Lookup, "no TFLOP figure for resolution " + res.label());
  return it->second;
}

SyntheticParams reference_params() {
  SyntheticParams p;
  p.fixed_overhead = 0.0;
  p.log_comm = 0.015;
  p.seq_comm = 0.005;
  // Scaled so a 2048x2048 step takes exactly one second on one GPU.
  p.seconds_per_tflop = (1.0 - p.fixed_overhead) / 24964.72;
  return p;
}

CostProfile gen_synthetic(std::span<const Resolution> resolutions, int gpu_count, const SyntheticParams& params) {
  if (!(params.seconds_per_tflop > 0) || params.fixed_overhead < 0 || params.log_comm < 0 || params.seq_comm < 0)
    fail(ErrorKind::Config, "synthetic parameters must be non-negative with a positive compute coefficient");
  CostProfile profile(gpu_count);
  std::int64_t max_len = 0;
  for (const auto& res : resolutions) max_len = std::max(max_len, res.latent_length());

  for (const auto& res : resolutions) {
    validate(res);
    const double work = params.seconds_per_tflop * image_tflops(res);
    const double seq = static_cast<double>(res.latent_length()) / static_cast<double>(max_len);
    double prev_t = 0, prev_cost = 0;
    for (Degree k : profile.degrees()) {
      const double kk = k.value();
      const double t = work / kk + params.fixed_overhead + params.log_comm * k.log2() + params.seq_comm * seq * (kk - 1) / kk;
      if (k.value() > 1) {
        if (kk * t < prev_cost)
          fail(ErrorKind::Config, "synthetic parameters give superlinear scaling for " + res.label());
        if (res.latent_length() >= 4096 && t > prev_t)
          fail(ErrorKind::Config, "synthetic parameters make " + res.label() + " slower at degree " +
                                      std::to_string(k.value()));
      }
      profile.set(res, k, t);
      prev_t = t;
      prev_cost = kk * t;
    }
  }
  return profile;
}

CostProfile reference_profile(int gpu_count) {
  auto res = standard_resolutions();
  return gen_synthetic(res, gpu_count, reference_params());
}

CostProfile load_profile(std::istream& in, const std::string& source) {
  CsvReader csv(in, source, {"height", "width", "degree", "step_time_s"});
  struct Entry {
    Resolution res;
    int k;
    double t;
    std::string text;
    int line;
  };
  std::vector<Entry> entries;
  std::set<std::pair<Resolution, int>> seen;
  int max_k = 0;
  std::vector<std::string_view> f;
  while (csv.next(f)) {
    Entry e;
    e.res.height = static_cast<int>(parse_int(f[0], csv.where("height")));
    e.res.width = static_cast<int>(parse_int(f[1], csv.where("width")));
    e.k = static_cast<int>(parse_int(f[2], csv.where("degree")));
    e.t = parse_double(f[3], csv.where("step_time_s"));
    e.text = std::string(f[3]);
    e.line = csv.line();
    const std::string at = source + ":" + std::to_string(e.line) + ": ";
    if (e.res.height <= 0 || e.res.width <= 0 || e.res.height % 16 || e.res.width % 16)
      fail(ErrorKind::Format, at + "resolution " + e.res.label() + " must have positive sides divisible by 16");
    if (!is_power_of_two(e.k)) fail(ErrorKind::Format, at + "degree " + std::to_string(e.k) + " is not a power of two");
    if (!(e.t > 0)) fail(ErrorKind::Format, at + "step time must be positive");
    if (!seen.insert({e.res, e.k}).second)
      fail(ErrorKind::Format, at + "duplicate entry for " + e.res.label() + " degree " + std::to_string(e.k));
    max_k = std::max(max_k, e.k);
    entries.push_back(std::move(e));
  }
  if (entries.empty()) fail(ErrorKind::Format, source + ": profile has no entries");
  CostProfile profile(max_k);
  for (auto& e : entries) profile.set(e.res, Degree{e.k}, e.t, std::move(e.text));
  profile.check_complete();
  return profile;
}

CostProfile load_profile_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open profile '" + path + "'");
  return load_profile(in, path);
}

void save_profile(std::ostream& out, const CostProfile& profile) {
  out << "height,width,degree,step_time_s\n";
  for (const auto& res : profile.resolutions())
    for (Degree k : profile.degrees())
      out << res.height << ',' << res.width << ',' << k.value() << ',' << profile.text(res, k) << '\n';
}

void save_profile_file(const std::string& path, const CostProfile& profile) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::Io, "cannot write profile '" + path + "'");
  save_profile(out, profile);
}

}  // namespace ditsched
