#pragma once

// File exchange formats: CSV for trajectories and heatmaps, JSON for
// reports, metrics, and tuning results. All numbers are written in the
// shortest decimal form that parses back to the identical IEEE-754 value.

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "gdiss/dissipativity.hpp"
#include "gdiss/sim.hpp"
#include "gdiss/tuner.hpp"

namespace gdiss {

class io_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Number formatting
// ---------------------------------------------------------------------------

// Shortest round-trip decimal form; infinities and NaN render as
// "inf"/"-inf"/"nan", which parse_double accepts back.
inline std::string format_double(double x) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), x);
  if (res.ec != std::errc{}) throw io_error("format_double: conversion failed");
  return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view text) {
  double x = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  auto res = std::from_chars(first, last, x);
  if (res.ec != std::errc{} || res.ptr != last) {
    throw io_error("parse_double: invalid number '" + std::string(text) + "'");
  }
  return x;
}

namespace detail {

inline std::ofstream open_for_write(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw io_error("cannot open for writing: " + path.string());
  return out;
}

inline std::ifstream open_for_read(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open for reading: " + path.string());
  return in;
}

inline void finish_write(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw io_error("write failed: " + path.string());
}

inline std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> fields;
  size_t start = 0;
  while (true) {
    size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return fields;
}

// Reads all non-empty lines, tolerating a trailing newline and CRLF endings.
inline std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in = open_for_read(path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) lines.push_back(line);
  }
  return lines;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// JSON helpers for Eigen types and optionals
// ---------------------------------------------------------------------------

inline nlohmann::json vector_to_json(const Vector& v) {
  nlohmann::json arr = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

inline Vector vector_from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw io_error("expected a JSON array of numbers");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw io_error("expected a JSON array of numbers");
    v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  }
  return v;
}

// Row-major nested arrays.
inline nlohmann::json matrix_to_json(const Matrix& M) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < M.cols(); ++j) row.push_back(M(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Matrix matrix_from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw io_error("expected a JSON array of rows");
  if (j.empty()) return Matrix(0, 0);
  const size_t rows = j.size();
  if (!j[0].is_array()) throw io_error("expected nested JSON arrays");
  const size_t cols = j[0].size();
  Matrix M(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (size_t i = 0; i < rows; ++i) {
    if (!j[i].is_array() || j[i].size() != cols) {
      throw io_error("matrix rows must have equal lengths");
    }
    for (size_t c = 0; c < cols; ++c) {
      if (!j[i][c].is_number()) throw io_error("matrix entries must be numbers");
      M(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) =
          j[i][c].get<double>();
    }
  }
  return M;
}

inline nlohmann::json optional_to_json(const std::optional<double>& v) {
  if (!v.has_value() || !std::isfinite(*v)) return nullptr;
  return *v;
}

inline std::optional<double> optional_from_json(const nlohmann::json& j) {
  if (j.is_null()) return std::nullopt;
  if (!j.is_number()) throw io_error("expected a number or null");
  return j.get<double>();
}

// NaN (from an unavailable quantity) serializes as null and parses back.
inline nlohmann::json nullable_to_json(double v) {
  if (!std::isfinite(v) && std::isnan(v)) return nullptr;
  return v;
}

inline double nullable_from_json(const nlohmann::json& j) {
  if (j.is_null()) return std::numeric_limits<double>::quiet_NaN();
  if (!j.is_number()) throw io_error("expected a number or null");
  return j.get<double>();
}

inline void write_json(const std::filesystem::path& path,
                       const nlohmann::json& doc) {
  std::ofstream out = detail::open_for_write(path);
  out << doc.dump(2) << '\n';
  detail::finish_write(out, path);
}

inline nlohmann::json read_json(const std::filesystem::path& path) {
  std::ifstream in = detail::open_for_read(path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& ex) {
    throw io_error("invalid JSON in " + path.string() + ": " + ex.what());
  }
  return doc;
}

// ---------------------------------------------------------------------------
// Trajectory CSV
// ---------------------------------------------------------------------------

namespace detail {

inline void append_header_group(std::string& header, const char* prefix,
                                Eigen::Index count) {
  for (Eigen::Index i = 1; i <= count; ++i) {
    header += ',';
    header += prefix;
    header += '_';
    header += std::to_string(i);
  }
}

}  // namespace detail

inline void write_trajectory_csv(const std::filesystem::path& path,
                                 const Trajectory& traj) {
  if (traj.samples() == 0) throw io_error("trajectory has no samples");
  const Eigen::Index n = traj.e.front().size();
  const Eigen::Index m = traj.u.front().size();
  const Eigen::Index l = traj.d.front().size();

  std::string header = "t";
  detail::append_header_group(header, "e", n);
  detail::append_header_group(header, "edot", n);
  detail::append_header_group(header, "u", m);
  detail::append_header_group(header, "d", l);
  detail::append_header_group(header, "ddot", l);

  std::ofstream out = detail::open_for_write(path);
  out << header << '\n';
  for (size_t k = 0; k < traj.samples(); ++k) {
    out << format_double(traj.t[k]);
    auto emit = [&out](const Vector& v) {
      for (Eigen::Index i = 0; i < v.size(); ++i) {
        out << ',' << format_double(v(i));
      }
    };
    emit(traj.e[k]);
    emit(traj.e_dot[k]);
    emit(traj.u[k]);
    emit(traj.d[k]);
    emit(traj.d_dot[k]);
    out << '\n';
  }
  detail::finish_write(out, path);
}

inline Trajectory read_trajectory_csv(const std::filesystem::path& path) {
  std::vector<std::string> lines = detail::read_lines(path);
  if (lines.size() < 2) throw io_error("trajectory CSV needs a header and data");

  // Infer dimensions from the header, then require it to match exactly.
  // The prefixes are unambiguous: "edot_*" does not start with "e_".
  std::vector<std::string> cols = detail::split_line(lines[0]);
  Eigen::Index n = 0, m = 0, l = 0;
  for (const auto& c : cols) {
    if (c.rfind("e_", 0) == 0) ++n;
    if (c.rfind("u_", 0) == 0) ++m;
    if (c.rfind("d_", 0) == 0) ++l;
  }
  std::string expected = "t";
  detail::append_header_group(expected, "e", n);
  detail::append_header_group(expected, "edot", n);
  detail::append_header_group(expected, "u", m);
  detail::append_header_group(expected, "d", l);
  detail::append_header_group(expected, "ddot", l);
  if (lines[0] != expected) {
    throw io_error("unexpected trajectory CSV header: " + lines[0]);
  }
  const size_t ncols = static_cast<size_t>(1 + 2 * n + m + 2 * l);

  Trajectory traj;
  for (size_t k = 1; k < lines.size(); ++k) {
    std::vector<std::string> f = detail::split_line(lines[k]);
    if (f.size() != ncols) {
      throw io_error("trajectory CSV row " + std::to_string(k) +
                     " has wrong field count");
    }
    size_t at = 0;
    traj.t.push_back(parse_double(f[at++]));
    auto take = [&](Eigen::Index len) {
      Vector v(len);
      for (Eigen::Index i = 0; i < len; ++i) v(i) = parse_double(f[at++]);
      return v;
    };
    traj.e.push_back(take(n));
    traj.e_dot.push_back(take(n));
    traj.u.push_back(take(m));
    traj.d.push_back(take(l));
    traj.d_dot.push_back(take(l));
  }
  traj.dt = traj.t.size() >= 2 ? traj.t[1] - traj.t[0] : 0.0;
  traj.diverged = false;
  return traj;
}

// ---------------------------------------------------------------------------
// Heatmap CSV (two-axis regions; second axis fastest, matching HeatmapResult)
// ---------------------------------------------------------------------------

inline void write_heatmap_csv(const std::filesystem::path& path,
                              const HeatmapResult& hm) {
  if (hm.values.size() != hm.x.size() * hm.y.size()) {
    throw io_error("heatmap value count does not match the grid");
  }
  std::ofstream out = detail::open_for_write(path);
  out << "e_chi,e_gamma,L_K\n";
  for (size_t i = 0; i < hm.x.size(); ++i) {
    for (size_t j = 0; j < hm.y.size(); ++j) {
      out << format_double(hm.x[i]) << ',' << format_double(hm.y[j]) << ','
          << format_double(hm.values[i * hm.y.size() + j]) << '\n';
    }
  }
  detail::finish_write(out, path);
}

inline HeatmapResult read_heatmap_csv(const std::filesystem::path& path) {
  std::vector<std::string> lines = detail::read_lines(path);
  if (lines.empty() || lines[0] != "e_chi,e_gamma,L_K") {
    throw io_error("unexpected heatmap CSV header");
  }
  HeatmapResult hm;
  for (size_t k = 1; k < lines.size(); ++k) {
    std::vector<std::string> f = detail::split_line(lines[k]);
    if (f.size() != 3) throw io_error("heatmap CSV rows need 3 fields");
    double x = parse_double(f[0]);
    double y = parse_double(f[1]);
    if (hm.x.empty() || hm.x.back() != x) hm.x.push_back(x);
    if (hm.x.size() == 1) hm.y.push_back(y);
    hm.values.push_back(parse_double(f[2]));
  }
  if (hm.values.size() != hm.x.size() * hm.y.size()) {
    throw io_error("heatmap CSV is not a complete grid");
  }
  return hm;
}

// ---------------------------------------------------------------------------
// Report JSON: one gain set over one region, with the width scan attached.
// ---------------------------------------------------------------------------

struct ReportDocument {
  DissipativityReport report;
  Region region;
  PiGains gains;
  std::optional<double> W;  // zero-line width, when a scan was requested
};

inline nlohmann::json to_json(const ReportDocument& doc) {
  nlohmann::json j;
  j["M0"] = nullable_to_json(doc.report.M0);
  j["S"] = nullable_to_json(doc.report.S);
  j["L"] = nullable_to_json(doc.report.L);
  j["gamma_star"] = optional_to_json(doc.report.gamma_star);
  j["W"] = optional_to_json(doc.W);
  j["feasible"] = doc.report.feasible;
  j["region"] = {{"lo", vector_to_json(doc.region.lo)},
                 {"hi", vector_to_json(doc.region.hi)},
                 {"step", vector_to_json(doc.region.step)}};
  j["K"] = {{"K_P", matrix_to_json(doc.gains.K_P)},
            {"K_I", matrix_to_json(doc.gains.K_I)}};
  j["P_tilde"] = matrix_to_json(doc.report.P_tilde);
  return j;
}

inline ReportDocument report_document_from_json(const nlohmann::json& j) {
  try {
    ReportDocument doc;
    doc.report.M0 = nullable_from_json(j.at("M0"));
    doc.report.S = nullable_from_json(j.at("S"));
    doc.report.L = nullable_from_json(j.at("L"));
    doc.report.gamma_star = optional_from_json(j.at("gamma_star"));
    doc.W = optional_from_json(j.at("W"));
    doc.report.feasible = j.at("feasible").get<bool>();
    doc.region.lo = vector_from_json(j.at("region").at("lo"));
    doc.region.hi = vector_from_json(j.at("region").at("hi"));
    doc.region.step = vector_from_json(j.at("region").at("step"));
    doc.gains.K_P = matrix_from_json(j.at("K").at("K_P"));
    doc.gains.K_I = matrix_from_json(j.at("K").at("K_I"));
    doc.report.P_tilde = matrix_from_json(j.at("P_tilde"));
    return doc;
  } catch (const nlohmann::json::exception& ex) {
    throw io_error(std::string("malformed report JSON: ") + ex.what());
  }
}

// ---------------------------------------------------------------------------
// Metrics JSON
// ---------------------------------------------------------------------------

inline nlohmann::json to_json(const Metrics& m) {
  nlohmann::json j;
  j["itae"] = m.itae;
  j["std_e"] = vector_to_json(m.std_e);
  j["final_error_norm"] = m.final_error_norm;
  j["l2_ratio"] = optional_to_json(m.l2_ratio);
  return j;
}

inline Metrics metrics_from_json(const nlohmann::json& j) {
  try {
    Metrics m;
    m.itae = j.at("itae").get<double>();
    m.std_e = vector_from_json(j.at("std_e"));
    m.final_error_norm = j.at("final_error_norm").get<double>();
    m.l2_ratio = optional_from_json(j.at("l2_ratio"));
    return m;
  } catch (const nlohmann::json::exception& ex) {
    throw io_error(std::string("malformed metrics JSON: ") + ex.what());
  }
}

// ---------------------------------------------------------------------------
// Tuning results: JSON document plus a flat CSV summary.
// ---------------------------------------------------------------------------

inline nlohmann::json to_json(const TuneResult& res) {
  nlohmann::json j;
  j["objective_region"] = res.objective_region;
  j["selected"] =
      res.best.has_value() ? nlohmann::json(*res.best) : nlohmann::json(nullptr);
  nlohmann::json cands = nlohmann::json::array();
  for (const auto& cand : res.candidates) {
    nlohmann::json c;
    c["K"] = {{"K_P", matrix_to_json(cand.K.K_P)},
              {"K_I", matrix_to_json(cand.K.K_I)}};
    c["epsilon"] = optional_to_json(cand.epsilon);
    c["W"] = cand.W;
    nlohmann::json regions = nlohmann::json::array();
    for (const auto& rep : cand.reports) {
      regions.push_back({{"L", nullable_to_json(rep.L)},
                         {"S", nullable_to_json(rep.S)},
                         {"gamma_star", optional_to_json(rep.gamma_star)},
                         {"feasible", rep.feasible}});
    }
    c["regions"] = std::move(regions);
    cands.push_back(std::move(c));
  }
  j["candidates"] = std::move(cands);
  return j;
}

// One row per candidate: identifier, epsilon (blank when not an
// epsilon-family member), width, then the per-region certified levels
// ("inf" where no certificate exists).
inline void write_tune_csv(const std::filesystem::path& path,
                           const TuneResult& res) {
  const size_t n_regions =
      res.candidates.empty() ? 0 : res.candidates.front().reports.size();
  std::ofstream out = detail::open_for_write(path);
  out << "candidate,epsilon,W_K";
  for (size_t r = 1; r <= n_regions; ++r) out << ",gamma_" << r;
  out << '\n';
  for (size_t i = 0; i < res.candidates.size(); ++i) {
    const auto& cand = res.candidates[i];
    out << (i + 1) << ',';
    if (cand.epsilon.has_value()) out << format_double(*cand.epsilon);
    out << ',' << format_double(cand.W);
    for (const auto& rep : cand.reports) {
      out << ',' << format_double(gamma_or_inf(rep));
    }
    out << '\n';
  }
  detail::finish_write(out, path);
}

}  // namespace gdiss
