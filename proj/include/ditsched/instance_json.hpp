#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "ditsched/oracle.hpp"
#include "ditsched/planner.hpp"
#include "ditsched/round_scheduler.hpp"

// JSON shapes shared by the `pack`, `plan` and `oracle` subcommands.
//
// Packing instance:
//   {"n_gpus": 8,
//    "requests": [{"id": 3, "options": [{"width": 0, "steps": 0, "survives": true},
//                                       {"width": 4, "steps": 2, "survives": true}]}]}
// A request without a width-0 option gets an idle option appended that does
// not survive.
//
// 0-1 program instance:
//   {"n_gpus": 4, "slot": 0.5,
//    "jobs": [{"id": 0, "arrival": 0, "deadline": 3, "step_time": {"1": 2.0, "2": 1.2}}]}

namespace ditsched {

struct PackInstance {
  int n_gpus = 0;
  std::vector<RequestOptions> requests;
};

PackInstance parse_pack_instance(const nlohmann::json& j);
nlohmann::json to_json(const PackInstance& inst);
PackInstance load_pack_instance(const std::string& path);

// {"objective", "total_steps", "total_width", "selections": [{"id", "option", "width", "steps", "survives"}]}
nlohmann::json pack_result_json(const PackInstance& inst, const RoundPlan& plan);
nlohmann::json pack_result_json(const PackInstance& inst, const oracle::PackOptimum& best);

nlohmann::json plan_json(const AllocationPlan& plan, const CostProfile& profile);

struct ZilpInstance {
  int n_gpus = 0;
  double slot = 0;
  std::vector<oracle::ZilpJob> jobs;
};
ZilpInstance parse_zilp_instance(const nlohmann::json& j);
ZilpInstance load_zilp_instance(const std::string& path);
nlohmann::json zilp_result_json(const oracle::ZilpResult& r);

}  // namespace ditsched
