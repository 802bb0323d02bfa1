#pragma once

// Command-line surface. Subcommands map onto the library one-to-one:
//   heatmap   pointwise-index map over the scan window + width sidecar
//   gamma     per-region dissipativity reports for the configured gains
//   tune      candidate sweep with JSON/CSV artifacts
//   simulate  closed-loop trajectory, metrics, optional dissipation audit
//   verify    replay a stored trajectory against a stored report
//
// Exit codes: 0 success, 1 configuration error, 2 numerical/model error,
// 3 I/O error, 4 advisory (infeasible selection, divergence, failed audit).

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "gdiss/config.hpp"
#include "gdiss/io.hpp"

namespace gdiss {

namespace cli_detail {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitNumerical = 2;
constexpr int kExitIo = 3;
constexpr int kExitAdvisory = 4;

inline nlohmann::json region_to_json(const Region& region) {
  return {{"lo", vector_to_json(region.lo)},
          {"hi", vector_to_json(region.hi)},
          {"step", vector_to_json(region.step)}};
}

inline int cmd_heatmap(const RunConfig& cfg, std::ostream& out) {
  PlantModel model = cfg.model();
  const Region& region = cfg.scan_region;
  if (region.dims() != 2) {
    throw config_error("heatmap requires a two-dimensional scan_region");
  }

  ZeroLineScan scan = zero_line_scan(model, cfg.gains, region);
  AugmentedSystem origin = assemble(model, cfg.gains, Vector::Zero(model.n));
  const bool hurwitz = analyze_spectrum(origin.A_K).spectral_abscissa < 0.0;

  HeatmapResult hm;
  if (hurwitz) {
    hm = heatmap(model, cfg.gains, region);
  } else {
    // No origin envelope exists, so the pointwise index is unbounded
    // everywhere; emit the grid with +inf values rather than failing.
    hm.x = region.axis_grid(0);
    hm.y = region.axis_grid(1);
    hm.values.assign(hm.x.size() * hm.y.size(),
                     std::numeric_limits<double>::infinity());
  }

  const auto csv_path = cfg.out_dir / "heatmap.csv";
  const auto sidecar_path = cfg.out_dir / "heatmap.json";
  write_heatmap_csv(csv_path, hm);

  nlohmann::json sidecar;
  sidecar["W"] = scan.W;
  sidecar["crossings"] = scan.crossings;
  sidecar["hurwitz_at_origin"] = hurwitz;
  sidecar["region"] = region_to_json(region);
  sidecar["rows"] = hm.values.size();
  write_json(sidecar_path, sidecar);

  out << "wrote " << csv_path.string() << " (" << hm.values.size()
      << " grid points)\n";
  out << "wrote " << sidecar_path.string() << " (W = " << format_double(scan.W)
      << ")\n";
  return kExitOk;
}

inline int cmd_gamma(const RunConfig& cfg, std::ostream& out) {
  PlantModel model = cfg.model();
  const double W = zero_line_width(model, cfg.gains, cfg.scan_region);

  bool any_feasible = false;
  for (size_t i = 0; i < cfg.regions.size(); ++i) {
    ReportDocument doc;
    doc.report = build_report(model, cfg.gains, cfg.regions[i]);
    doc.region = cfg.regions[i];
    doc.gains = cfg.gains;
    doc.W = W;
    const auto path =
        cfg.out_dir / ("report_" + std::to_string(i + 1) + ".json");
    write_json(path, to_json(doc));
    if (doc.report.feasible && doc.report.gamma_star.has_value()) {
      any_feasible = true;
      out << "region " << (i + 1)
          << ": gamma* = " << format_double(*doc.report.gamma_star) << " ("
          << path.string() << ")\n";
    } else {
      out << "region " << (i + 1) << ": not certified (" << path.string()
          << ")\n";
    }
  }
  out << "W = " << format_double(W) << "\n";
  return any_feasible ? kExitOk : kExitAdvisory;
}

inline int cmd_tune(const RunConfig& cfg, std::ostream& out) {
  PlantModel model = cfg.model();
  TuneResult res = tune(model, cfg.sweep);

  const auto json_path = cfg.out_dir / "tune.json";
  const auto csv_path = cfg.out_dir / "tune.csv";
  write_json(json_path, to_json(res));
  write_tune_csv(csv_path, res);
  out << "wrote " << json_path.string() << " and " << csv_path.string()
      << "\n";

  if (!res.best.has_value()) {
    out << "selected: none (no candidate certified on the objective region)\n";
    return kExitAdvisory;
  }
  const auto& best = res.candidates[*res.best];
  out << "selected candidate " << (*res.best + 1);
  if (best.epsilon.has_value()) {
    out << " (epsilon = " << format_double(*best.epsilon) << ")";
  }
  out << ": gamma* = "
      << format_double(gamma_or_inf(best.reports[res.objective_region]))
      << ", W = " << format_double(best.W) << "\n";
  return kExitOk;
}

inline int cmd_simulate(const RunConfig& cfg, std::ostream& out) {
  PlantModel model = cfg.model();
  DisturbanceFn dist = make_disturbance(cfg.plant, cfg.sim.disturbance);
  SimOptions opt;
  opt.anti_windup = cfg.sim.anti_windup;
  Trajectory traj = simulate(model, cfg.gains, cfg.sim.limits, dist,
                             cfg.sim.t_end, cfg.sim.dt, cfg.sim.e0, opt);

  const auto traj_path = cfg.out_dir / "trajectory.csv";
  const auto metrics_path = cfg.out_dir / "metrics.json";
  // A run can be refused by the plant before the first sample lands; there
  // is then no trajectory to store, only the divergence verdict.
  if (traj.samples() > 0) write_trajectory_csv(traj_path, traj);

  nlohmann::json mj;
  mj["diverged"] = traj.diverged;
  if (!traj.diverged) {
    Metrics m = metrics(traj, cfg.sim.t_end);
    mj.update(to_json(m));
    if (cfg.audit.enabled) {
      const int ri = cfg.resolved_audit_region();
      const Region& region = cfg.regions[static_cast<size_t>(ri)];
      DissipativityReport rep = build_report(model, cfg.gains, region);
      if (!rep.feasible || !rep.gamma_star.has_value()) {
        throw numerical_error(
            "audit region is not certified; no dissipation budget to check");
      }
      Matrix P = construct_common_P(model, cfg.gains, region, cfg.audit.eps_K);
      AuditResult audit = dissipation_audit(traj, P, *rep.gamma_star);
      mj["audit"] = {{"region", ri},
                     {"gamma", *rep.gamma_star},
                     {"violation_fraction", audit.violation_fraction},
                     {"worst_excess", audit.worst_excess},
                     {"tolerance", audit.tolerance}};
    }
  }
  write_json(metrics_path, mj);

  if (traj.samples() > 0) {
    out << "wrote " << traj_path.string() << " (" << traj.samples()
        << " samples)\n";
  }
  out << "wrote " << metrics_path.string() << "\n";
  if (traj.diverged) {
    out << "diverged: state left the admissible domain before t = "
        << format_double(cfg.sim.t_end) << "\n";
    return kExitAdvisory;
  }
  return kExitOk;
}

inline int cmd_verify(const RunConfig& cfg, const std::string& trajectory_path,
                      const std::string& report_path,
                      const std::optional<double>& gamma_override,
                      std::ostream& out) {
  Trajectory traj = read_trajectory_csv(trajectory_path);
  if (traj.samples() < 3) {
    throw config_error("verify: trajectory needs at least 3 samples");
  }
  ReportDocument doc = report_document_from_json(read_json(report_path));
  if (!doc.report.feasible || doc.report.P_tilde.size() == 0) {
    throw config_error("verify: the report is not certified; nothing to check");
  }
  const Eigen::Index n = traj.e.front().size();
  if (doc.report.P_tilde.rows() != 2 * n) {
    throw config_error("verify: trajectory and report dimensions differ");
  }

  double gamma = 0.0;
  if (gamma_override.has_value()) {
    gamma = *gamma_override;
  } else if (doc.report.gamma_star.has_value()) {
    gamma = *doc.report.gamma_star;
  } else {
    throw config_error("verify: no gamma available (report uncertified)");
  }

  // Storage matrix from the stored origin solution, scaled exactly as the
  // common-P construction does.
  Matrix P =
      cfg.audit.eps_K * (1.0 - doc.report.S / doc.report.L) * doc.report.P_tilde;

  std::optional<double> l2 = empirical_l2_ratio(traj);
  AuditResult audit = dissipation_audit(traj, P, gamma);
  const bool gain_ok = !l2.has_value() || *l2 <= gamma;
  const bool pass = gain_ok && audit.violation_fraction == 0.0;

  nlohmann::json vj;
  vj["pass"] = pass;
  vj["gamma"] = gamma;
  vj["l2_ratio"] = optional_to_json(l2);
  vj["violation_fraction"] = audit.violation_fraction;
  vj["worst_excess"] = audit.worst_excess;
  vj["tolerance"] = audit.tolerance;
  vj["samples"] = traj.samples();
  const auto path = cfg.out_dir / "verify.json";
  write_json(path, vj);

  out << (pass ? "PASS" : "FAIL") << ": gamma = " << format_double(gamma);
  if (l2.has_value()) out << ", l2_ratio = " << format_double(*l2);
  out << ", violation_fraction = " << format_double(audit.violation_fraction)
      << " (" << path.string() << ")\n";
  return pass ? kExitOk : kExitAdvisory;
}

}  // namespace cli_detail

inline int run_cli(int argc, const char* const* argv, std::ostream& out,
                   std::ostream& err) {
  CLI::App app{"gamma-dissipativity analysis and PI-gain tuning toolkit"};
  app.require_subcommand(1);
  app.fallthrough(true);

  std::string config_path;
  std::string out_override;
  unsigned long long seed = 0;
  app.add_option("--config", config_path, "JSON configuration file");
  app.add_option("--out", out_override,
                 "output directory (overrides the config)");
  app.add_option("--seed", seed,
                 "seed for test utilities; commands themselves are "
                 "deterministic");

  CLI::App* heatmap_cmd = app.add_subcommand(
      "heatmap", "pointwise dissipativity index over the scan window");
  CLI::App* gamma_cmd = app.add_subcommand(
      "gamma", "per-region dissipativity reports for the configured gains");
  CLI::App* tune_cmd =
      app.add_subcommand("tune", "sweep gain candidates and select the best");
  CLI::App* simulate_cmd = app.add_subcommand(
      "simulate", "closed-loop run with metrics and optional audit");
  CLI::App* verify_cmd = app.add_subcommand(
      "verify", "check a stored trajectory against a stored report");

  std::string trajectory_path;
  std::string report_path;
  double gamma_override_value = 0.0;
  CLI::Option* gamma_override_opt =
      verify_cmd
          ->add_option("--gamma-override", gamma_override_value,
                       "check against this gain bound instead of the report's")
          ->check(CLI::NonNegativeNumber);
  verify_cmd->add_option("--trajectory", trajectory_path, "trajectory CSV")
      ->required();
  verify_cmd->add_option("--report", report_path, "report JSON")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return cli_detail::kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "argument error: " << e.what() << "\n";
    return cli_detail::kExitConfig;
  }

  try {
    RunConfig cfg = config_path.empty()
                        ? parse_config(nlohmann::json::object())
                        : load_config(config_path);
    if (!out_override.empty()) cfg.out_dir = out_override;
    std::filesystem::create_directories(cfg.out_dir);

    if (heatmap_cmd->parsed()) return cli_detail::cmd_heatmap(cfg, out);
    if (gamma_cmd->parsed()) return cli_detail::cmd_gamma(cfg, out);
    if (tune_cmd->parsed()) return cli_detail::cmd_tune(cfg, out);
    if (simulate_cmd->parsed()) return cli_detail::cmd_simulate(cfg, out);
    if (verify_cmd->parsed()) {
      std::optional<double> gamma_override;
      if (gamma_override_opt->count() > 0) {
        gamma_override = gamma_override_value;
      }
      return cli_detail::cmd_verify(cfg, trajectory_path, report_path,
                                    gamma_override, out);
    }
    err << "no subcommand given\n";
    return cli_detail::kExitConfig;
  } catch (const config_error& ex) {
    err << "config error: " << ex.what() << "\n";
    return cli_detail::kExitConfig;
  } catch (const numerical_error& ex) {
    err << "numerical error: " << ex.what() << "\n";
    return cli_detail::kExitNumerical;
  } catch (const io_error& ex) {
    err << "io error: " << ex.what() << "\n";
    return cli_detail::kExitIo;
  } catch (const std::filesystem::filesystem_error& ex) {
    err << "io error: " << ex.what() << "\n";
    return cli_detail::kExitIo;
  } catch (const std::invalid_argument& ex) {
    err << "config error: " << ex.what() << "\n";
    return cli_detail::kExitConfig;
  } catch (const std::exception& ex) {
    err << "error: " << ex.what() << "\n";
    return cli_detail::kExitNumerical;
  }
}

// In-process convenience entry point: args exclude the program name.
inline int run_cli(const std::vector<std::string>& args, std::ostream& out,
                   std::ostream& err) {
  std::vector<std::string> full;
  full.reserve(args.size() + 1);
  full.emplace_back("gdiss");
  full.insert(full.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  argv.reserve(full.size());
  for (const auto& s : full) argv.push_back(s.c_str());
  return run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace gdiss
