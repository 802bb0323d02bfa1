#pragma once

// Candidate-gain sweeps: generate a family of PI gain sets, certify each
// over the analysis regions, and select the feasible candidate with the
// smallest dissipativity level on an objective region.

#include "gdiss/dissipativity.hpp"

#include <future>
#include <optional>
#include <vector>

namespace gdiss {

// One swept entry of a gain block for grid mode.
struct EntryRange {
  bool proportional = true;  // K_P entry if true, K_I entry otherwise
  int row = 0;
  int col = 0;
  double lo = 0.0;
  double hi = 0.0;
  double step = 1.0;
};

struct SweepSpec {
  enum class Mode { epsilon_family, grid };

  PiGains base;
  Mode mode = Mode::epsilon_family;
  // epsilon-family: K(eps) = base - eps [I, I] for each listed eps.
  std::vector<double> epsilons;
  // grid: Cartesian product over entry ranges, last range fastest.
  std::vector<EntryRange> grid_ranges;
  std::vector<Region> regions;
  Region w_region;              // scan window for the zero-line width
  int objective_region = -1;    // index into regions; -1 selects the last

  void validate(int n, int m) const {
    base.validate(n, m);
    detail::require(!regions.empty(), "SweepSpec: need at least one region");
    for (const auto& r : regions) {
      r.validate();
      detail::require(r.dims() == n, "SweepSpec: region dimension mismatch");
    }
    w_region.validate();
    detail::require(w_region.dims() == n,
                    "SweepSpec: scan window dimension mismatch");
    detail::require(objective_region >= -1 &&
                        objective_region < static_cast<int>(regions.size()),
                    "SweepSpec: objective region out of range");
    if (mode == Mode::epsilon_family) {
      detail::require(!epsilons.empty(),
                      "SweepSpec: epsilon family must list at least one value");
    } else {
      detail::require(!grid_ranges.empty(),
                      "SweepSpec: grid mode must list at least one entry range");
      for (const auto& g : grid_ranges) {
        detail::require(g.row >= 0 && g.row < m && g.col >= 0 && g.col < n,
                        "SweepSpec: grid entry index out of range");
        detail::require(g.step > 0.0 && g.lo <= g.hi,
                        "SweepSpec: grid entry range must be ordered with a "
                        "positive step");
      }
    }
  }

  int resolved_objective() const {
    return objective_region < 0 ? static_cast<int>(regions.size()) - 1
                                : objective_region;
  }
};

struct Candidate {
  PiGains K;
  std::optional<double> epsilon;  // set for epsilon-family candidates
};

inline std::vector<Candidate> generate_candidates(const SweepSpec& spec) {
  const int m = static_cast<int>(spec.base.K_P.rows());
  const int n = static_cast<int>(spec.base.K_P.cols());
  spec.validate(n, m);
  std::vector<Candidate> out;
  if (spec.mode == SweepSpec::Mode::epsilon_family) {
    detail::require(n == m,
                    "generate_candidates: epsilon family needs square gains");
    for (double eps : spec.epsilons) {
      Candidate c;
      c.K = spec.base;
      c.K.K_P -= eps * Matrix::Identity(m, n);
      c.K.K_I -= eps * Matrix::Identity(m, n);
      c.epsilon = eps;
      out.push_back(std::move(c));
    }
  } else {
    std::vector<std::vector<double>> nodes;
    for (const auto& g : spec.grid_ranges) {
      int npts = static_cast<int>(
                     std::floor((g.hi - g.lo) / g.step + 1e-9)) + 1;
      std::vector<double> axis(npts);
      for (int i = 0; i < npts; ++i) axis[i] = g.lo + i * g.step;
      nodes.push_back(std::move(axis));
    }
    std::vector<size_t> idx(nodes.size(), 0);
    while (true) {
      Candidate c;
      c.K = spec.base;
      for (size_t a = 0; a < nodes.size(); ++a) {
        const auto& g = spec.grid_ranges[a];
        Matrix& block = g.proportional ? c.K.K_P : c.K.K_I;
        block(g.row, g.col) = nodes[a][idx[a]];
      }
      out.push_back(std::move(c));
      int a = static_cast<int>(nodes.size()) - 1;
      while (a >= 0 && ++idx[a] == nodes[a].size()) {
        idx[a] = 0;
        --a;
      }
      if (a < 0) break;
    }
  }
  if (out.empty())
    throw std::invalid_argument("generate_candidates: empty candidate set");
  return out;
}

struct CandidateResult {
  PiGains K;
  std::optional<double> epsilon;
  std::vector<DissipativityReport> reports;  // one per region, same order
  double W = 0.0;
};

// Certifies one gain set over every region and scans its zero-line width.
// Infeasibility (including a non-Hurwitz origin matrix) is recorded in the
// reports rather than raised.
inline CandidateResult evaluate(const PlantModel& model, const PiGains& K,
                                const std::vector<Region>& regions,
                                const Region& w_region) {
  detail::require(!regions.empty(), "evaluate: need at least one region");
  CandidateResult res;
  res.K = K;
  res.reports.reserve(regions.size());
  for (const auto& region : regions)
    res.reports.push_back(build_report(model, K, region));
  res.W = zero_line_width(model, K, w_region);
  return res;
}

// Extended-real level for ordering: infeasible regions compare as +infinity.
inline double gamma_or_inf(const DissipativityReport& rep) {
  return rep.feasible && rep.gamma_star
             ? *rep.gamma_star
             : std::numeric_limits<double>::infinity();
}

// Index of the feasible candidate with the smallest level on the objective
// region; ties prefer the larger zero-line width, then the earlier
// candidate. Empty when no candidate is feasible there.
inline std::optional<size_t> select_best(
    const std::vector<CandidateResult>& results, int objective_region) {
  detail::require(!results.empty(), "select_best: no candidates");
  for (const auto& r : results)
    detail::require(objective_region >= 0 &&
                        objective_region < static_cast<int>(r.reports.size()),
                    "select_best: objective region out of range");
  std::optional<size_t> best;
  for (size_t i = 0; i < results.size(); ++i) {
    const auto& rep = results[i].reports[objective_region];
    // Feasibility re-check: certified flag, a finite level, and L < 0.
    if (!rep.feasible || !rep.gamma_star || !(rep.L < 0.0)) continue;
    if (!best) {
      best = i;
      continue;
    }
    const auto& cur = results[*best].reports[objective_region];
    double gi = *rep.gamma_star, gb = *cur.gamma_star;
    if (gi < gb ||
        (gi == gb && (results[i].W > results[*best].W))) {
      best = i;
    }
  }
  return best;
}

struct TuneResult {
  std::vector<CandidateResult> candidates;
  std::optional<size_t> best;
  int objective_region = 0;
};

// Full sweep: generation, concurrent per-candidate certification, and
// deterministic selection (results are reduced in candidate order).
inline TuneResult tune(const PlantModel& model, const SweepSpec& spec) {
  model.validate();
  spec.validate(model.n, model.m);
  std::vector<Candidate> candidates = generate_candidates(spec);
  TuneResult out;
  out.objective_region = spec.resolved_objective();
  out.candidates.resize(candidates.size());
  std::vector<std::future<CandidateResult>> jobs;
  jobs.reserve(candidates.size());
  for (const auto& c : candidates) {
    jobs.push_back(std::async(std::launch::async, [&model, &spec, c]() {
      return evaluate(model, c.K, spec.regions, spec.w_region);
    }));
  }
  for (size_t i = 0; i < jobs.size(); ++i) {
    out.candidates[i] = jobs[i].get();
    out.candidates[i].epsilon = candidates[i].epsilon;
  }
  out.best = select_best(out.candidates, out.objective_region);
  return out;
}

}  // namespace gdiss
