#include "ditsched/placement.hpp"

#include <algorithm>

#include "ditsched/error.hpp"

namespace ditsched {

GpuSet GpuSet::first(int n) {
  if (n < 0 || n > kMaxGpus) fail(ErrorKind::Config, "GPU count must be in [0, 64]");
  return from_bits(n == 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << n) - 1);
}

GpuSet GpuSet::lowest(int n) const {
  GpuSet out;
  std::uint64_t rest = bits_;
  for (int i = 0; i < n && rest; ++i) {
    out.insert(std::countr_zero(rest));
    rest &= rest - 1;
  }
  return out;
}

std::vector<int> GpuSet::ids() const {
  std::vector<int> out;
  for (std::uint64_t rest = bits_; rest; rest &= rest - 1) out.push_back(std::countr_zero(rest));
  return out;
}

std::string GpuSet::label() const {
  std::string out;
  auto v = ids();
  for (std::size_t i = 0; i < v.size();) {
    std::size_t j = i;
    while (j + 1 < v.size() && v[j + 1] == v[j] + 1) ++j;
    if (!out.empty()) out += ' ';
    out += std::to_string(v[i]);
    if (j > i) out += "-" + std::to_string(v[j]);
    i = j + 1;
  }
  return out;
}

GpuSet ClusterState::busy() const {
  GpuSet all;
  for (const auto& [_, s] : assignment) all = all | s;
  return all;
}

std::vector<std::int64_t> ClusterState::owners() const {
  std::vector<std::int64_t> out(static_cast<std::size_t>(n_gpus), -1);
  for (const auto& [id, s] : assignment)
    for (int g : s.ids()) out[static_cast<std::size_t>(g)] = id;
  return out;
}

void check_invariants(const ClusterState& state) {
  GpuSet seen;
  const GpuSet cluster = GpuSet::first(state.n_gpus);
  for (const auto& [id, s] : state.assignment) {
    if (!(s & seen).empty()) fail(ErrorKind::Internal, "GPU assigned to two requests");
    if (!s.minus(cluster).empty()) fail(ErrorKind::Internal, "GPU id outside the cluster");
    if (!is_power_of_two(s.size()))
      fail(ErrorKind::Internal, "request " + std::to_string(id) + " holds a non-power-of-two GPU set");
    seen = seen | s;
  }
}

ClusterState place(const RoundPlan& plan, const ClusterState& prev) {
  ClusterState next;
  next.n_gpus = prev.n_gpus;
  if (plan.total_width > prev.n_gpus) fail(ErrorKind::Internal, "round plan needs more GPUs than the cluster has");

  std::vector<std::pair<std::int64_t, int>> pending;  // (id, missing GPUs)
  GpuSet used;
  for (const auto& [id, opt] : plan.selections) {
    if (opt.is_none()) continue;
    auto it = prev.assignment.find(id);
    GpuSet keep;
    if (it != prev.assignment.end()) keep = it->second.lowest(opt.width);
    next.assignment[id] = keep;
    used = used | keep;
    if (keep.size() < opt.width) pending.emplace_back(id, opt.width - keep.size());
  }
  // Requests that grew come before brand-new ones at equal id order; both
  // draw from the lowest free ids.
  std::stable_sort(pending.begin(), pending.end(), [&](const auto& a, const auto& b) {
    const bool a_new = next.assignment[a.first].empty(), b_new = next.assignment[b.first].empty();
    if (a_new != b_new) return !a_new;
    return a.first < b.first;
  });
  for (const auto& [id, missing] : pending) {
    const GpuSet add = GpuSet::first(next.n_gpus).minus(used).lowest(missing);
    if (add.size() != missing) fail(ErrorKind::Internal, "placement ran out of GPUs");
    next.assignment[id] = next.assignment[id] | add;
    used = used | add;
  }
  check_invariants(next);
  return next;
}

namespace {

struct Upgrade {
  double gain;
  int new_width;
};

bool candidate(const RoundPlan& plan, int n_gpus, const ScaleUpContext& ctx, std::int64_t id, Upgrade& out) {
  auto sel = plan.selections.find(id);
  if (sel == plan.selections.end() || sel->second.is_none()) return false;
  auto info = ctx.requests.find(id);
  if (info == ctx.requests.end() || info->second.remaining_steps < 1) return false;
  const int k = sel->second.width;
  const int k2 = 2 * k;
  if (k2 > n_gpus || k2 > ctx.profile->gpu_count()) return false;
  if (n_gpus - plan.total_width < k) return false;
  const double t = ctx.profile->lookup(info->second.res, Degree{k});
  const double t2 = ctx.profile->lookup(info->second.res, Degree{k2});
  if (!(t2 < t)) return false;
  out = {(t - t2) / t, k2};
  return true;
}

}  // namespace

bool qualifies_for_scale_up(const RoundPlan& plan, int n_gpus, const ScaleUpContext& ctx, std::int64_t id) {
  Upgrade u;
  return candidate(plan, n_gpus, ctx, id, u);
}

void elastic_scale_up(RoundPlan& plan, int n_gpus, const ScaleUpContext& ctx) {
  if (ctx.profile == nullptr) fail(ErrorKind::Internal, "elastic_scale_up needs a profile");
  while (plan.total_width < n_gpus) {
    std::int64_t best_id = -1;
    Upgrade best{0, 0};
    for (const auto& [id, _] : plan.selections) {
      Upgrade u;
      if (candidate(plan, n_gpus, ctx, id, u) && (best_id < 0 || u.gain > best.gain)) {
        best = u;
        best_id = id;
      }
    }
    if (best_id < 0) return;

    auto& opt = plan.selections[best_id];
    const auto& info = ctx.requests.at(best_id);
    const double t2 = ctx.profile->lookup(info.res, Degree{best.new_width});
    const int q2 = steps_in_round(info.remaining_steps, ctx.exec_window, t2, ctx.granularity);
    plan.total_width += best.new_width - opt.width;
    plan.total_steps += std::max(opt.steps, q2) - opt.steps;
    opt.steps = std::max(opt.steps, q2);
    opt.width = best.new_width;
  }
}

}  // namespace ditsched
