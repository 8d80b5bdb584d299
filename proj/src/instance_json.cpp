#include "ditsched/instance_json.hpp"

#include <fstream>

#include "ditsched/error.hpp"

namespace ditsched {

using nlohmann::json;

namespace {

json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    fail(ErrorKind::Format, path + ": " + e.what());
  }
}

template <typename T>
T field(const json& j, const char* name, const std::string& where) {
  if (!j.contains(name)) fail(ErrorKind::Format, where + ": missing field '" + name + "'");
  try {
    return j.at(name).get<T>();
  } catch (const json::exception& e) {
    fail(ErrorKind::Format, where + ": field '" + name + "': " + e.what());
  }
}

}  // namespace

PackInstance parse_pack_instance(const json& j) {
  PackInstance inst;
  inst.n_gpus = field<int>(j, "n_gpus", "instance");
  if (inst.n_gpus < 0) fail(ErrorKind::Format, "instance: n_gpus must be >= 0");
  if (!j.contains("requests") || !j["requests"].is_array())
    fail(ErrorKind::Format, "instance: 'requests' must be an array");
  for (std::size_t i = 0; i < j["requests"].size(); ++i) {
    const auto& jr = j["requests"][i];
    const std::string where = "requests[" + std::to_string(i) + "]";
    RequestOptions r;
    r.request_id = field<std::int64_t>(jr, "id", where);
    if (!jr.contains("options") || !jr["options"].is_array())
      fail(ErrorKind::Format, where + ": 'options' must be an array");
    bool has_none = false;
    for (std::size_t k = 0; k < jr["options"].size(); ++k) {
      const auto& jo = jr["options"][k];
      const std::string ow = where + ".options[" + std::to_string(k) + "]";
      RoundOption o;
      o.request_id = r.request_id;
      o.width = field<int>(jo, "width", ow);
      o.steps = jo.value("steps", 0);
      o.survives = field<bool>(jo, "survives", ow);
      o.lower_bound = jo.value("lower_bound", 0.0);
      o.segment = o.width == 0 ? RoundOption::kNone : jo.value("segment", 0);
      if (o.width < 0 || o.steps < 0) fail(ErrorKind::Format, ow + ": width and steps must be >= 0");
      has_none |= o.width == 0;
      r.options.push_back(o);
    }
    if (!has_none) {
      RoundOption none;
      none.request_id = r.request_id;
      r.options.push_back(none);
    }
    inst.requests.push_back(std::move(r));
  }
  return inst;
}

json to_json(const PackInstance& inst) {
  json j;
  j["n_gpus"] = inst.n_gpus;
  j["requests"] = json::array();
  for (const auto& r : inst.requests) {
    json jr;
    jr["id"] = r.request_id;
    jr["options"] = json::array();
    for (const auto& o : r.options)
      jr["options"].push_back({{"width", o.width}, {"steps", o.steps}, {"survives", o.survives}});
    j["requests"].push_back(jr);
  }
  return j;
}

PackInstance load_pack_instance(const std::string& path) {
  const json j = read_json(path);
  return parse_pack_instance(j);
}

namespace {
json selection_json(std::int64_t id, int index, const RoundOption& o) {
  return {{"id", id}, {"option", index}, {"width", o.width}, {"steps", o.steps}, {"survives", o.survives}};
}
}  // namespace

json pack_result_json(const PackInstance& inst, const RoundPlan& plan) {
  json j;
  j["objective"] = plan.survivors;
  j["total_steps"] = plan.total_steps;
  j["total_width"] = plan.total_width;
  j["selections"] = json::array();
  for (const auto& r : inst.requests) {
    const auto& sel = plan.selections.at(r.request_id);
    int index = -1;
    for (std::size_t k = 0; k < r.options.size() && index < 0; ++k) {
      const auto& o = r.options[k];
      if (o.width == sel.width && o.steps == sel.steps && o.survives == sel.survives) index = static_cast<int>(k);
    }
    j["selections"].push_back(selection_json(r.request_id, index, sel));
  }
  return j;
}

json pack_result_json(const PackInstance& inst, const oracle::PackOptimum& best) {
  json j;
  j["objective"] = best.survivors;
  j["total_steps"] = best.total_steps;
  j["total_width"] = best.total_width;
  j["combinations"] = best.combinations;
  j["selections"] = json::array();
  for (std::size_t i = 0; i < inst.requests.size(); ++i) {
    const auto& r = inst.requests[i];
    const int idx = best.choice[i];
    j["selections"].push_back(selection_json(r.request_id, idx, r.options[static_cast<std::size_t>(idx)]));
  }
  return j;
}

json plan_json(const AllocationPlan& plan, const CostProfile& profile) {
  json j;
  j["request_id"] = plan.request_id;
  j["resolution"] = plan.res.label();
  j["feasible"] = plan.feasible;
  j["segments"] = json::array();
  for (const auto& s : plan.segments) j["segments"].push_back({{"steps", s.steps}, {"degree", s.degree.value()}});
  j["latency_s"] = plan_latency(plan, profile);
  j["gpu_seconds"] = plan_gpu_hours(plan, profile);
  return j;
}

ZilpInstance parse_zilp_instance(const json& j) {
  ZilpInstance inst;
  inst.n_gpus = field<int>(j, "n_gpus", "instance");
  inst.slot = j.value("slot", 0.0);
  if (!j.contains("jobs") || !j["jobs"].is_array()) fail(ErrorKind::Format, "instance: 'jobs' must be an array");
  for (std::size_t i = 0; i < j["jobs"].size(); ++i) {
    const auto& jj = j["jobs"][i];
    const std::string where = "jobs[" + std::to_string(i) + "]";
    oracle::ZilpJob job;
    job.id = field<std::int64_t>(jj, "id", where);
    job.arrival = field<double>(jj, "arrival", where);
    job.deadline = field<double>(jj, "deadline", where);
    if (!jj.contains("step_time") || !jj["step_time"].is_object())
      fail(ErrorKind::Format, where + ": 'step_time' must be an object keyed by degree");
    for (const auto& [k, v] : jj["step_time"].items()) {
      int degree = 0;
      try {
        degree = std::stoi(k);
      } catch (const std::exception&) {
        fail(ErrorKind::Format, where + ": bad degree key '" + k + "'");
      }
      if (!is_power_of_two(degree)) fail(ErrorKind::Format, where + ": degree " + k + " is not a power of two");
      const double t = v.get<double>();
      if (!(t > 0)) fail(ErrorKind::Format, where + ": step times must be positive");
      job.step_time[degree] = t;
    }
    inst.jobs.push_back(std::move(job));
  }
  return inst;
}

ZilpInstance load_zilp_instance(const std::string& path) {
  const json j = read_json(path);
  return parse_zilp_instance(j);
}

json zilp_result_json(const oracle::ZilpResult& r) {
  json j;
  j["optimum"] = r.optimum;
  j["slot_s"] = r.slot;
  j["slots"] = r.horizon;
  j["schedule"] = json::array();
  for (const auto& a : r.schedule)
    j["schedule"].push_back({{"id", a.id}, {"start_slot", a.start_slot}, {"degree", a.degree}});
  return j;
}

}  // namespace ditsched
