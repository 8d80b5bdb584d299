#include <doctest.h>

#include <random>

#include "ditsched/cost_model.hpp"
#include "ditsched/error.hpp"
#include "ditsched/placement.hpp"

using namespace ditsched;

namespace {

RoundPlan plan_of(std::initializer_list<std::pair<std::int64_t, int>> widths) {
  RoundPlan p;
  for (auto [id, w] : widths) {
    RoundOption o;
    o.request_id = id;
    o.segment = w == 0 ? RoundOption::kNone : 0;
    o.width = w;
    o.steps = w == 0 ? 0 : 1;
    o.survives = true;
    p.selections[id] = o;
    p.total_width += w;
    p.total_steps += o.steps;
  }
  return p;
}

ClusterState empty_cluster(int n) {
  ClusterState s;
  s.n_gpus = n;
  return s;
}

}  // namespace

TEST_SUITE("placement") {

TEST_CASE("gpu set helpers") {
  auto s = GpuSet::first(4);
  CHECK(s.size() == 4);
  CHECK(s.label() == "0-3");
  auto t = GpuSet::from_bits(0b100101);
  CHECK(t.label() == "0 2 5");
  CHECK(t.lowest(2).ids() == std::vector<int>{0, 2});
  CHECK(GpuSet::first(64).size() == 64);
}

TEST_CASE("new requests take the lowest free GPUs in id order") {
  auto s = place(plan_of({{1, 4}, {2, 2}}), empty_cluster(8));
  CHECK(s.assignment.at(1) == GpuSet::first(4));
  CHECK(s.assignment.at(2).label() == "4-5");
  CHECK(s.idle_count() == 2);
  auto owners = s.owners();
  CHECK(owners[0] == 1);
  CHECK(owners[5] == 2);
  CHECK(owners[7] == -1);
}

TEST_CASE("unchanged widths keep their GPUs") {
  auto first = place(plan_of({{1, 2}, {2, 4}}), empty_cluster(8));
  auto again = place(plan_of({{1, 2}, {2, 4}}), first);
  CHECK(again.assignment == first.assignment);

  // A request that leaves does not disturb the ones that stay.
  auto later = place(plan_of({{2, 4}, {3, 2}}), first);
  CHECK(later.assignment.at(2) == first.assignment.at(2));
}

TEST_CASE("growing keeps the old GPUs") {
  auto first = place(plan_of({{5, 1}, {7, 2}}), empty_cluster(8));
  const GpuSet old = first.assignment.at(7);
  auto grown = place(plan_of({{5, 1}, {7, 4}}), first);
  CHECK((grown.assignment.at(7) & old) == old);
  CHECK(grown.assignment.at(7).size() == 4);
  CHECK(grown.assignment.at(5) == first.assignment.at(5));
}

TEST_CASE("shrinking keeps a subset") {
  auto first = place(plan_of({{1, 8}}), empty_cluster(8));
  auto shrunk = place(plan_of({{1, 2}}), first);
  CHECK(shrunk.assignment.at(1) == GpuSet::first(2));
}

TEST_CASE("idle selections get no GPUs and oversubscription is refused") {
  auto s = place(plan_of({{1, 0}, {2, 8}}), empty_cluster(8));
  CHECK(s.assignment.count(1) == 0);
  CHECK_THROWS_AS(place(plan_of({{1, 8}, {2, 1}}), empty_cluster(8)), Error);
}

TEST_CASE("invariant checker") {
  ClusterState s = empty_cluster(8);
  s.assignment[1] = GpuSet::first(2);
  s.assignment[2] = GpuSet::from_bits(0b110);
  CHECK_THROWS_AS(check_invariants(s), Error);
  s.assignment[2] = GpuSet::from_bits(0b11100);
  CHECK_THROWS_AS(check_invariants(s), Error);
  s.assignment[2] = GpuSet::from_bits(std::uint64_t{0b11} << 8);
  CHECK_THROWS_AS(check_invariants(s), Error);
}

TEST_CASE("random plans keep every placement invariant") {
  std::mt19937_64 rng(3);
  ClusterState state = empty_cluster(16);
  for (int round = 0; round < 500; ++round) {
    RoundPlan plan;
    int free = 16;
    for (std::int64_t id = 0; id < 10; ++id) {
      const int w = 1 << (rng() % 4);
      if (rng() % 3 == 0 || w > free) continue;
      RoundOption o;
      o.request_id = id;
      o.segment = 0;
      o.width = w;
      o.steps = 1;
      plan.selections[id] = o;
      plan.total_width += w;
      free -= w;
    }
    auto next = place(plan, state);
    CHECK_NOTHROW(check_invariants(next));
    for (const auto& [id, set] : next.assignment) {
      CHECK(set.size() == plan.selections.at(id).width);
      auto it = state.assignment.find(id);
      if (it == state.assignment.end()) continue;
      if (set.size() == it->second.size()) CHECK(set == it->second);
      if (set.size() > it->second.size()) CHECK((set & it->second) == it->second);
      if (set.size() < it->second.size()) CHECK((set & it->second) == set);
    }
    state = next;
  }
}

TEST_CASE("scale-up does nothing without enough idle GPUs") {
  auto profile = reference_profile();
  ScaleUpContext ctx;
  ctx.profile = &profile;
  ctx.exec_window = 0.9;
  ctx.requests[1] = {{2048, 2048}, 20};
  ctx.requests[2] = {{2048, 2048}, 20};

  auto full = plan_of({{1, 4}, {2, 4}});
  auto before = full;
  elastic_scale_up(full, 8, ctx);
  CHECK(full.selections.at(1).width == 4);
  CHECK(full.total_width == before.total_width);

  auto one_idle = plan_of({{1, 4}, {2, 2}, {3, 1}});
  ctx.requests[3] = {{256, 256}, 20};
  elastic_scale_up(one_idle, 8, ctx);
  CHECK(one_idle.selections.at(2).width == 2);  // doubling needs 2
  CHECK(one_idle.total_width == 7);
}

TEST_CASE("scale-up doubles the request with the biggest relative gain") {
  auto profile = reference_profile();
  ScaleUpContext ctx;
  ctx.profile = &profile;
  ctx.exec_window = 0.9;
  ctx.requests[10] = {{1024, 1024}, 20};  // k=2 -> 4 cuts T by about 30%
  ctx.requests[11] = {{512, 512}, 20};    // k=1 -> 2 cuts about 23%
  ctx.requests[12] = {{256, 256}, 20};    // slower at k=2
  ctx.requests[13] = {{256, 256}, 20};
  ctx.requests[14] = {{256, 256}, 20};
  auto plan = plan_of({{10, 2}, {11, 1}, {12, 1}, {13, 1}, {14, 1}});
  CHECK(qualifies_for_scale_up(plan, 8, ctx, 10));
  CHECK(qualifies_for_scale_up(plan, 8, ctx, 11));
  CHECK_FALSE(qualifies_for_scale_up(plan, 8, ctx, 12));

  elastic_scale_up(plan, 8, ctx);
  CHECK(plan.selections.at(10).width == 4);
  CHECK(plan.selections.at(11).width == 1);
  CHECK(plan.total_width == 8);
  // More steps fit at the faster degree: 0.9 / 0.08147 -> 11.
  CHECK(plan.selections.at(10).steps == 11);
  auto state = place(plan, empty_cluster(8));
  CHECK(state.idle_count() == 0);
}

}
