#pragma once

#include <bit>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "ditsched/cost_model.hpp"
#include "ditsched/round_scheduler.hpp"

namespace ditsched {

inline constexpr int kMaxGpus = 64;

/// Set of GPU ids in [0, 64).
class GpuSet {
 public:
  GpuSet() = default;
  static GpuSet first(int n);  // {0, ..., n-1}
  static GpuSet from_bits(std::uint64_t bits) { GpuSet s; s.bits_ = bits; return s; }

  std::uint64_t bits() const { return bits_; }
  int size() const { return std::popcount(bits_); }
  bool empty() const { return bits_ == 0; }
  bool contains(int gpu) const { return (bits_ >> gpu) & 1u; }
  void insert(int gpu) { bits_ |= std::uint64_t{1} << gpu; }

  GpuSet operator|(GpuSet o) const { return from_bits(bits_ | o.bits_); }
  GpuSet operator&(GpuSet o) const { return from_bits(bits_ & o.bits_); }
  GpuSet minus(GpuSet o) const { return from_bits(bits_ & ~o.bits_); }

  // The `n` lowest-numbered members.
  GpuSet lowest(int n) const;
  std::vector<int> ids() const;
  std::string label() const;  // "0-3", "0 2 5", ...

  bool operator==(const GpuSet&) const = default;

 private:
  std::uint64_t bits_ = 0;
};

/// Which GPUs each running request holds during one round.
struct ClusterState {
  int n_gpus = 8;
  std::map<std::int64_t, GpuSet> assignment;

  GpuSet busy() const;
  int idle_count() const { return n_gpus - busy().size(); }
  // GPU id -> request id, or -1 when idle.
  std::vector<std::int64_t> owners() const;
};

// Throws Internal when sets overlap, exceed N, or have a non-power-of-two size.
void check_invariants(const ClusterState& state);

/// Maps the plan's widths onto GPU ids. Requests that ran last round keep
/// their GPUs (all of them when the width is unchanged, as many as fit
/// otherwise); the rest take the lowest-numbered free GPUs, in id order.
ClusterState place(const RoundPlan& plan, const ClusterState& prev);

/// What elastic scale-up needs to know about a running request.
struct ScaleUpInfo {
  Resolution res;
  int remaining_steps = 0;
};

struct ScaleUpContext {
  const CostProfile* profile = nullptr;
  std::map<std::int64_t, ScaleUpInfo> requests;
  double exec_window = 0;
  int granularity = 1;
};

/// True when the running request `id` at its current width could double onto
/// idle GPUs and get strictly faster steps.
bool qualifies_for_scale_up(const RoundPlan& plan, int n_gpus, const ScaleUpContext& ctx, std::int64_t id);

/// Work-conserving scale-up: while idle GPUs remain, double the degree of the
/// qualifying request with the largest relative step-time reduction (ties to
/// the smaller id). Survival flags in the plan are left untouched.
/// Works on widths only (idle = N minus the plan's total width), so it runs
/// before place() and placement preservation sees the final widths.
void elastic_scale_up(RoundPlan& plan, int n_gpus, const ScaleUpContext& ctx);

}  // namespace ditsched
