#pragma once

#include <compare>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ditsched {

/// Output image size in pixels. Both sides are multiples of 16 so the latent
/// token count (16x16 patches) is an integer.
struct Resolution {
  int height = 0;
  int width = 0;

  std::int64_t latent_length() const { return std::int64_t{height} * width / 256; }
  std::string label() const;  // "1024x1024"

  // Accepts "HxW" or a single side "H" (square).
  static Resolution parse(std::string_view text);

  auto operator<=>(const Resolution&) const = default;
};

// Throws Config if the resolution breaks its invariants.
void validate(const Resolution& res);

/// The four image sizes used throughout the evaluation workloads.
std::vector<Resolution> standard_resolutions();

constexpr bool is_power_of_two(int k) { return k > 0 && (k & (k - 1)) == 0; }

/// GPU count assigned to one step; always a power of two.
class Degree {
 public:
  explicit Degree(int k);
  int value() const { return k_; }
  int log2() const;
  auto operator<=>(const Degree&) const = default;

 private:
  int k_;
};

// {1, 2, 4, ...} up to and including the largest power of two <= n.
std::vector<Degree> degrees_up_to(int n);

/// Profiled per-step execution time T(resolution, k), one row per resolution
/// and one column per power-of-two degree up to gpu_count(). Values keep the
/// decimal text they were loaded from so save(load(x)) reproduces x.
class CostProfile {
 public:
  explicit CostProfile(int gpu_count);

  int gpu_count() const { return gpu_count_; }
  std::span<const Degree> degrees() const { return degrees_; }

  void set(const Resolution& res, Degree k, double seconds);
  void set(const Resolution& res, Degree k, double seconds, std::string text);

  double lookup(const Resolution& res, Degree k) const;
  const std::string& text(const Resolution& res, Degree k) const;

  bool contains(const Resolution& res) const { return rows_.count(res) != 0; }
  std::vector<Resolution> resolutions() const;

  // Throws Format when some resolution lacks a degree column.
  void check_complete() const;

  // Shape checks that are reported rather than enforced on loaded tables:
  // GPU-seconds k*T(k) non-decreasing, and T(k) non-increasing for L >= 4096.
  std::vector<std::string> shape_warnings() const;

 private:
  struct Row {
    std::vector<double> seconds;
    std::vector<std::string> text;
    std::vector<bool> present;
  };
  const Row& row(const Resolution& res) const;
  int column(Degree k, const Resolution& res) const;

  int gpu_count_;
  std::vector<Degree> degrees_;
  std::map<Resolution, Row> rows_;
};

/// steps * k * T(k), in GPU-seconds.
double gpu_hours(const CostProfile& profile, const Resolution& res, Degree k, std::int64_t steps);

struct StepTime {
  double seconds;
  Degree degree;
};

/// Minimum T(k) over all profiled degrees; ties go to the smaller k.
StepTime fastest_step_time(const CostProfile& profile, const Resolution& res);

/// Parameters of the synthetic step-time model
///   T(k) = a*F/k + c0 + c1*log2(k) + c2*(L/Lmax)*(k-1)/k
/// where F is the per-image TFLOP count and L the latent length.
struct SyntheticParams {
  double seconds_per_tflop = 0;  // a
  double fixed_overhead = 0;     // c0
  double log_comm = 0;           // c1
  double seq_comm = 0;           // c2
};

/// Parameters behind the repository's reference profile.
SyntheticParams reference_params();

/// Per-image TFLOPs for the standard resolutions; throws Lookup otherwise.
double image_tflops(const Resolution& res);

/// Rejects (Config) parameter sets whose profile breaks the synthetic shape
/// invariants.
CostProfile gen_synthetic(std::span<const Resolution> resolutions, int gpu_count, const SyntheticParams& params);

/// gen_synthetic(standard_resolutions(), gpu_count, reference_params()).
CostProfile reference_profile(int gpu_count = 8);

// CSV: height,width,degree,step_time_s
CostProfile load_profile(std::istream& in, const std::string& source = "<profile>");
CostProfile load_profile_file(const std::string& path);
void save_profile(std::ostream& out, const CostProfile& profile);
void save_profile_file(const std::string& path, const CostProfile& profile);

}  // namespace ditsched
