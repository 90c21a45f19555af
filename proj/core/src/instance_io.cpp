#include "fedcgd/instance_io.hpp"

#include <fstream>
#include <stdexcept>

namespace fedcgd {

namespace {

std::vector<double> number_array(const nlohmann::json& j, const char* field) {
  if (!j.contains(field) || !j[field].is_array()) {
    throw std::runtime_error(std::string("instance: missing or non-array field '") + field + "'");
  }
  std::vector<double> out;
  for (const auto& x : j[field]) {
    if (!x.is_number()) {
      throw std::runtime_error(std::string("instance: field '") + field + "' must contain numbers");
    }
    out.push_back(x.get<double>());
  }
  return out;
}

}  // namespace

nlohmann::json instance_to_json(const ProblemInstance& inst) {
  nlohmann::json j;
  j["global_dist"] = inst.global_dist.probs;
  j["devices"] = nlohmann::json::array();
  for (int v = 0; v < inst.num_devices(); ++v) {
    nlohmann::json d;
    d["dist"] = inst.device_dists[static_cast<std::size_t>(v)].probs;
    if (inst.feasible(v)) {
      d["min_bw_hz"] = inst.bw(v);
    } else {
      d["min_bw_hz"] = nullptr;
    }
    j["devices"].push_back(std::move(d));
  }
  j["sigma"] = inst.params.sigma;
  j["batch"] = inst.params.batch_size;
  j["g_weights"] = inst.params.class_weights;
  j["total_bw_hz"] = inst.total_bandwidth_hz;
  return j;
}

ProblemInstance instance_from_json(const nlohmann::json& j) {
  ProblemInstance inst;
  inst.global_dist.probs = number_array(j, "global_dist");
  if (!j.contains("devices") || !j["devices"].is_array() || j["devices"].empty()) {
    throw std::runtime_error("instance: missing or empty 'devices' array");
  }
  int index = 0;
  for (const auto& d : j["devices"]) {
    ClassDistribution dist;
    dist.probs = number_array(d, "dist");
    if (dist.num_classes() != inst.global_dist.num_classes()) {
      throw std::runtime_error("instance: devices[" + std::to_string(index) +
                               "].dist dimension differs from global_dist");
    }
    inst.device_dists.push_back(std::move(dist));
    if (!d.contains("min_bw_hz")) {
      throw std::runtime_error("instance: devices[" + std::to_string(index) +
                               "] missing 'min_bw_hz'");
    }
    if (d["min_bw_hz"].is_null()) {
      inst.min_bandwidths.emplace_back(std::nullopt);
    } else if (d["min_bw_hz"].is_number()) {
      inst.min_bandwidths.emplace_back(d["min_bw_hz"].get<double>());
    } else {
      throw std::runtime_error("instance: devices[" + std::to_string(index) +
                               "].min_bw_hz must be a number or null");
    }
    ++index;
  }
  if (!j.contains("sigma") || !j["sigma"].is_number()) {
    throw std::runtime_error("instance: missing numeric field 'sigma'");
  }
  inst.params.sigma = j["sigma"].get<double>();
  if (!j.contains("batch") || !j["batch"].is_number_integer()) {
    throw std::runtime_error("instance: missing integer field 'batch'");
  }
  inst.params.batch_size = j["batch"].get<int>();
  inst.params.class_weights = number_array(j, "g_weights");
  if (!j.contains("total_bw_hz") || !j["total_bw_hz"].is_number()) {
    throw std::runtime_error("instance: missing numeric field 'total_bw_hz'");
  }
  inst.total_bandwidth_hz = j["total_bw_hz"].get<double>();
  validate(inst);
  return inst;
}

ProblemInstance load_instance(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open instance file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw std::runtime_error("parse error in " + path + ": " + e.what());
  }
  try {
    return instance_from_json(j);
  } catch (const std::exception& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

void save_instance(const ProblemInstance& inst, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write instance file: " + path);
  out << instance_to_json(inst).dump(2) << "\n";
}

nlohmann::json report_to_json(const SolveReport& report) {
  nlohmann::json j;
  j["solver"] = report.solver_name;
  j["members"] = report.schedule.members;
  j["objective"] = report.schedule.objective;
  j["bandwidth_used_hz"] = report.schedule.bandwidth_used_hz;
  j["iterations"] = report.iterations;
  j["evaluations"] = report.evaluations;
  j["no_feasible_device"] = report.no_feasible_device;
  return j;
}

}  // namespace fedcgd
