#pragma once

// Run configuration: one JSON document deep-merged over an embedded default
// profile, so an empty config reproduces the benchmark exactly. Merging
// follows RFC 7386 (objects merge per key, arrays and scalars replace).

#include <cmath>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "gdiss/io.hpp"

namespace gdiss {

class config_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SimConfig {
  double t_start = 0.0;
  double t_end = 20.0;
  double dt = 1e-3;
  Vector e0;
  DisturbanceKind disturbance = DisturbanceKind::sinusoid;
  Limits limits;
  AntiWindup anti_windup = AntiWindup::conditional;
};

struct AuditConfig {
  bool enabled = false;
  int region = -1;     // index into regions; -1 selects the last (innermost)
  double eps_K = 2.0;  // storage-function scaling factor
};

struct RunConfig {
  std::string plant_name = "uav";
  UavParams plant;
  JacobianAt linearize_at = JacobianAt::trim;
  PiGains gains;
  std::vector<Region> regions;
  Region scan_region;
  SweepSpec sweep;
  SimConfig sim;
  AuditConfig audit;
  double lmi_tol = 1e-8;
  std::filesystem::path out_dir = "out";

  PlantModel model() const { return uav_model(plant, linearize_at); }

  int resolved_audit_region() const {
    return audit.region < 0 ? static_cast<int>(regions.size()) - 1
                            : audit.region;
  }
};

// Embedded benchmark profile: UAV guidance plant, reference PI gains, the
// four nested analysis regions, the wide scan window, the six-member gain
// family, and the disturbed 20 s simulation setup.
inline nlohmann::json default_config_json() {
  const double pi = M_PI;
  auto box = [](double half_x, double half_y) {
    return nlohmann::json{{"lo", {-half_x, -half_y}},
                          {"hi", {half_x, half_y}},
                          {"step", {0.05, 0.01}}};
  };
  nlohmann::json j;
  j["plant"] = {{"name", "uav"},
                {"V", 25.0},
                {"g", 9.81},
                {"gamma_c", pi / 12.0},
                {"chi_c", 0.0},
                {"d_amp_chi", 0.1},
                {"d_amp_gamma", 0.1},
                {"d_omega_chi", 0.15},
                {"d_omega_gamma", 0.15},
                {"linearize_at", "trim"}};
  j["gains"] = {{"K_P", {{1.6968, 0.5906}, {-0.5906, 1.9556}}},
                {"K_I", {{3.4869, 0.1784}, {-0.1784, 3.4869}}}};
  j["regions"] = nlohmann::json::array(
      {box(0.7, 0.3), box(0.5, 0.22), box(0.25, 0.15), box(0.1, 0.06)});
  j["scan_region"] = box(pi / 3.0, pi / 6.0);
  j["sweep"] = {{"mode", "epsilon_family"},
                {"epsilons", {-4.0, -2.0, -1.0, 0.5, 0.8, 1.0}},
                {"grid", nlohmann::json::array()},
                {"objective_region", -1}};
  j["simulation"] = {{"t_span", {0.0, 20.0}},
                     {"dt", 1e-3},
                     {"e0", {-pi / 3.0, -pi / 6.0}},
                     {"disturbance", "sinusoid"},
                     {"limits",
                      {{"u_min", {-pi / 4.0, -2.1}},
                       {"u_max", {pi / 4.0, 2.1}},
                       {"du_min", {-pi / 6.0, -1.0}},
                       {"du_max", {pi / 6.0, 1.0}}}},
                     {"anti_windup", "conditional"}};
  j["audit"] = {{"enabled", false}, {"region", -1}, {"eps_K", 2.0}};
  j["lmi"] = {{"tol", 1e-8}};
  j["out_dir"] = "out";
  return j;
}

namespace detail {

inline DisturbanceKind parse_disturbance(const std::string& s) {
  if (s == "sinusoid") return DisturbanceKind::sinusoid;
  if (s == "finite_energy") return DisturbanceKind::finite_energy;
  if (s == "none") return DisturbanceKind::none;
  throw config_error("unknown disturbance kind: " + s);
}

inline AntiWindup parse_anti_windup(const std::string& s) {
  if (s == "conditional") return AntiWindup::conditional;
  if (s == "none") return AntiWindup::none;
  throw config_error("unknown anti_windup mode: " + s);
}

inline JacobianAt parse_linearize_at(const std::string& s) {
  if (s == "trim") return JacobianAt::trim;
  if (s == "reference") return JacobianAt::reference;
  throw config_error("unknown linearize_at choice: " + s);
}

inline SweepSpec::Mode parse_sweep_mode(const std::string& s) {
  if (s == "epsilon_family") return SweepSpec::Mode::epsilon_family;
  if (s == "grid") return SweepSpec::Mode::grid;
  throw config_error("unknown sweep mode: " + s);
}

inline Region parse_region(const nlohmann::json& j) {
  Region r;
  r.lo = vector_from_json(j.at("lo"));
  r.hi = vector_from_json(j.at("hi"));
  r.step = vector_from_json(j.at("step"));
  return r;
}

inline EntryRange parse_entry_range(const nlohmann::json& j) {
  EntryRange er;
  const std::string block = j.at("block").get<std::string>();
  if (block == "K_P") {
    er.proportional = true;
  } else if (block == "K_I") {
    er.proportional = false;
  } else {
    throw config_error("entry range block must be \"K_P\" or \"K_I\"");
  }
  er.row = j.at("row").get<int>();
  er.col = j.at("col").get<int>();
  er.lo = j.at("lo").get<double>();
  er.hi = j.at("hi").get<double>();
  er.step = j.at("step").get<double>();
  return er;
}

}  // namespace detail

inline RunConfig parse_config(const nlohmann::json& user) {
  if (!user.is_object()) {
    throw config_error("config root must be a JSON object");
  }
  nlohmann::json j = default_config_json();
  j.merge_patch(user);

  try {
    RunConfig cfg;

    const nlohmann::json& plant = j.at("plant");
    cfg.plant_name = plant.at("name").get<std::string>();
    if (cfg.plant_name != "uav") {
      throw config_error("unknown plant: " + cfg.plant_name);
    }
    cfg.plant.V = plant.at("V").get<double>();
    cfg.plant.g = plant.at("g").get<double>();
    cfg.plant.gamma_c = plant.at("gamma_c").get<double>();
    cfg.plant.chi_c = plant.at("chi_c").get<double>();
    cfg.plant.d_amp_chi = plant.at("d_amp_chi").get<double>();
    cfg.plant.d_amp_gamma = plant.at("d_amp_gamma").get<double>();
    cfg.plant.d_omega_chi = plant.at("d_omega_chi").get<double>();
    cfg.plant.d_omega_gamma = plant.at("d_omega_gamma").get<double>();
    cfg.linearize_at =
        detail::parse_linearize_at(plant.at("linearize_at").get<std::string>());

    cfg.gains.K_P = matrix_from_json(j.at("gains").at("K_P"));
    cfg.gains.K_I = matrix_from_json(j.at("gains").at("K_I"));

    for (const auto& r : j.at("regions")) {
      cfg.regions.push_back(detail::parse_region(r));
    }
    cfg.scan_region = detail::parse_region(j.at("scan_region"));

    const nlohmann::json& sweep = j.at("sweep");
    cfg.sweep.base = cfg.gains;
    cfg.sweep.mode =
        detail::parse_sweep_mode(sweep.at("mode").get<std::string>());
    cfg.sweep.epsilons.clear();
    for (const auto& e : sweep.at("epsilons")) {
      cfg.sweep.epsilons.push_back(e.get<double>());
    }
    for (const auto& g : sweep.at("grid")) {
      cfg.sweep.grid_ranges.push_back(detail::parse_entry_range(g));
    }
    cfg.sweep.regions = cfg.regions;
    cfg.sweep.w_region = cfg.scan_region;
    cfg.sweep.objective_region = sweep.at("objective_region").get<int>();

    const nlohmann::json& sim = j.at("simulation");
    const nlohmann::json& span = sim.at("t_span");
    if (!span.is_array() || span.size() != 2) {
      throw config_error("simulation.t_span must be [start, end]");
    }
    cfg.sim.t_start = span[0].get<double>();
    cfg.sim.t_end = span[1].get<double>();
    cfg.sim.dt = sim.at("dt").get<double>();
    cfg.sim.e0 = vector_from_json(sim.at("e0"));
    cfg.sim.disturbance =
        detail::parse_disturbance(sim.at("disturbance").get<std::string>());
    const nlohmann::json& lim = sim.at("limits");
    cfg.sim.limits.u_min = vector_from_json(lim.at("u_min"));
    cfg.sim.limits.u_max = vector_from_json(lim.at("u_max"));
    cfg.sim.limits.du_min = vector_from_json(lim.at("du_min"));
    cfg.sim.limits.du_max = vector_from_json(lim.at("du_max"));
    cfg.sim.anti_windup =
        detail::parse_anti_windup(sim.at("anti_windup").get<std::string>());

    const nlohmann::json& audit = j.at("audit");
    cfg.audit.enabled = audit.at("enabled").get<bool>();
    cfg.audit.region = audit.at("region").get<int>();
    cfg.audit.eps_K = audit.at("eps_K").get<double>();

    cfg.lmi_tol = j.at("lmi").at("tol").get<double>();
    cfg.out_dir = j.at("out_dir").get<std::string>();

    // Semantic validation: everything the library would reject later fails
    // here, as a configuration error.
    PlantModel model = cfg.model();
    cfg.gains.validate(model.n, model.m);
    cfg.sim.limits.validate(model.m);
    if (cfg.regions.empty()) throw config_error("regions must be non-empty");
    for (const auto& r : cfg.regions) {
      r.validate();
      if (r.dims() != model.n) throw config_error("region dimension mismatch");
    }
    cfg.scan_region.validate();
    if (cfg.scan_region.dims() != model.n) {
      throw config_error("scan_region dimension mismatch");
    }
    cfg.sweep.validate(model.n, model.m);
    if (!(cfg.sim.t_end > cfg.sim.t_start) || cfg.sim.t_start != 0.0) {
      throw config_error("simulation.t_span must be [0, T] with T > 0");
    }
    if (!(cfg.sim.dt > 0.0)) throw config_error("simulation.dt must be positive");
    if (cfg.sim.e0.size() != model.n) {
      throw config_error("simulation.e0 dimension mismatch");
    }
    if (cfg.audit.region < -1 ||
        cfg.audit.region >= static_cast<int>(cfg.regions.size())) {
      throw config_error("audit.region out of range");
    }
    if (!(cfg.audit.eps_K > 1.0)) {
      throw config_error("audit.eps_K must exceed 1");
    }
    if (!(cfg.lmi_tol > 0.0)) throw config_error("lmi.tol must be positive");
    if (cfg.out_dir.empty()) throw config_error("out_dir must be non-empty");

    return cfg;
  } catch (const nlohmann::json::exception& ex) {
    throw config_error(std::string("malformed config: ") + ex.what());
  } catch (const io_error& ex) {
    throw config_error(std::string("malformed config: ") + ex.what());
  } catch (const std::invalid_argument& ex) {
    throw config_error(std::string("invalid config: ") + ex.what());
  }
}

// Missing or unreadable files are I/O errors; unparseable or semantically
// invalid content is a configuration error.
inline RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open config: " + path.string());
  nlohmann::json user;
  try {
    in >> user;
  } catch (const nlohmann::json::exception& ex) {
    throw config_error("config is not valid JSON: " + std::string(ex.what()));
  }
  return parse_config(user);
}

}  // namespace gdiss
