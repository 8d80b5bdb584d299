#pragma once

#include <initializer_list>

#include "ditsched/cost_model.hpp"
#include "ditsched/workload.hpp"

namespace testing_util {

// Profile with one row per given resolution, degrees 1, 2, 4, ... in order.
inline ditsched::CostProfile toy_profile(std::initializer_list<double> times,
                                         ditsched::Resolution res = {1024, 1024}) {
  ditsched::CostProfile p(1 << (static_cast<int>(times.size()) - 1));
  int k = 1;
  for (double t : times) {
    p.set(res, ditsched::Degree{k}, t);
    k *= 2;
  }
  return p;
}

inline ditsched::Request request(std::int64_t id, ditsched::Resolution res, int steps, double arrival,
                                 double slack) {
  ditsched::Request r;
  r.id = id;
  r.res = res;
  r.total_steps = steps;
  r.arrival = arrival;
  r.slo_baseline = slack;
  r.slo_scale = 1.0;
  return r;
}

}  // namespace testing_util
