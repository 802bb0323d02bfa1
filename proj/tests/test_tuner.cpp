#include <catch2/catch_amalgamated.hpp>

#include "gdiss/tuner.hpp"

#include "benchmark_fixtures.hpp"

#include <algorithm>
#include <cmath>

using namespace gdiss;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

SweepSpec table_sweep() {
  SweepSpec spec;
  spec.base = fixtures::benchmark_gains();
  spec.mode = SweepSpec::Mode::epsilon_family;
  spec.epsilons = fixtures::sweep_epsilons();
  spec.regions = fixtures::analysis_regions();
  spec.w_region = fixtures::scan_region();
  return spec;
}

const TuneResult& table_result() {
  static TuneResult res = tune(uav_model(), table_sweep());
  return res;
}

DissipativityReport synthetic_report(double gamma) {
  DissipativityReport rep;
  rep.feasible = true;
  rep.gamma_star = gamma;
  rep.L = -1.0;
  rep.S = 0.1;
  rep.M0 = 1.0;
  return rep;
}

CandidateResult synthetic_candidate(double gamma, double W) {
  CandidateResult c;
  c.K = fixtures::benchmark_gains();
  c.reports = {synthetic_report(gamma)};
  c.W = W;
  return c;
}

}  // namespace

TEST_CASE("epsilon family generation") {
  SweepSpec spec = table_sweep();
  auto cands = generate_candidates(spec);
  REQUIRE(cands.size() == 6);
  SECTION("epsilon is recorded") {
    for (size_t i = 0; i < cands.size(); ++i) {
      REQUIRE(cands[i].epsilon.has_value());
      CHECK(*cands[i].epsilon == spec.epsilons[i]);
    }
  }
  SECTION("strengthened candidate entries") {
    // eps = -4 adds 4 to every diagonal entry of both blocks.
    CHECK_THAT(cands[0].K.K_P(0, 0), WithinAbs(5.6968, 1e-12));
    CHECK_THAT(cands[0].K.K_P(1, 1), WithinAbs(5.9556, 1e-12));
    CHECK_THAT(cands[0].K.K_I(0, 0), WithinAbs(7.4869, 1e-12));
    CHECK_THAT(cands[0].K.K_P(0, 1), WithinAbs(0.5906, 1e-12));
  }
  SECTION("zero epsilon reproduces the base") {
    spec.epsilons = {0.0};
    auto base_only = generate_candidates(spec);
    REQUIRE(base_only.size() == 1);
    CHECK(base_only[0].K.K_P.isApprox(spec.base.K_P, 0.0));
    CHECK(base_only[0].K.K_I.isApprox(spec.base.K_I, 0.0));
  }
  SECTION("empty family is rejected") {
    spec.epsilons = {};
    CHECK_THROWS_AS(generate_candidates(spec), std::invalid_argument);
  }
}

TEST_CASE("grid mode generation") {
  SweepSpec spec = table_sweep();
  spec.mode = SweepSpec::Mode::grid;
  spec.grid_ranges = {
      EntryRange{true, 0, 0, 1.0, 2.0, 0.5},   // 3 nodes on K_P(0,0)
      EntryRange{false, 1, 1, 3.0, 3.5, 0.5},  // 2 nodes on K_I(1,1)
  };
  auto cands = generate_candidates(spec);
  REQUIRE(cands.size() == 6);
  // Last range advances fastest.
  CHECK_THAT(cands[0].K.K_P(0, 0), WithinAbs(1.0, 0.0));
  CHECK_THAT(cands[0].K.K_I(1, 1), WithinAbs(3.0, 0.0));
  CHECK_THAT(cands[1].K.K_P(0, 0), WithinAbs(1.0, 0.0));
  CHECK_THAT(cands[1].K.K_I(1, 1), WithinAbs(3.5, 0.0));
  CHECK_THAT(cands[2].K.K_P(0, 0), WithinAbs(1.5, 0.0));
  // Untouched entries keep their base values.
  CHECK_THAT(cands[0].K.K_P(0, 1), WithinAbs(0.5906, 1e-15));
  CHECK_FALSE(cands[0].epsilon.has_value());

  SECTION("bad entry index is rejected") {
    spec.grid_ranges[0].row = 5;
    CHECK_THROWS_AS(generate_candidates(spec), std::invalid_argument);
  }
}

TEST_CASE("evaluate marks infeasible regions without failing") {
  PlantModel model = uav_model();
  auto regions = fixtures::analysis_regions();
  SECTION("weakened gains lose the outer regions only") {
    auto res = evaluate(model, fixtures::perturbed_gains(1.0), regions,
                        fixtures::scan_region());
    REQUIRE(res.reports.size() == 4);
    CHECK_FALSE(res.reports[0].feasible);
    CHECK_FALSE(res.reports[1].feasible);
    CHECK(res.reports[2].feasible);
    CHECK(res.reports[3].feasible);
    CHECK_THAT(*res.reports[2].gamma_star,
               WithinRel(32.12302495286429, 1e-8));
    CHECK_THAT(*res.reports[3].gamma_star,
               WithinRel(10.780878298503865, 1e-8));
    CHECK_THAT(res.W, WithinAbs(0.4820722695224007, 1e-9));
  }
  SECTION("destabilizing gains are infeasible everywhere with zero width") {
    PiGains bad = fixtures::benchmark_gains();
    bad.K_P = -bad.K_P;
    bad.K_I = -bad.K_I;
    auto res = evaluate(model, bad, regions, fixtures::scan_region());
    for (const auto& rep : res.reports) {
      CHECK_FALSE(rep.feasible);
      CHECK_FALSE(rep.gamma_star.has_value());
    }
    CHECK(res.W == 0.0);
  }
  SECTION("nested regions give monotone levels") {
    auto res = evaluate(model, fixtures::perturbed_gains(0.5), regions,
                        fixtures::scan_region());
    double prev = std::numeric_limits<double>::infinity();
    for (const auto& rep : res.reports) {
      REQUIRE(rep.feasible);
      CHECK(*rep.gamma_star < prev);
      prev = *rep.gamma_star;
    }
  }
}

TEST_CASE("full sweep reproduces the reference table") {
  const TuneResult& res = table_result();
  REQUIRE(res.candidates.size() == 6);
  CHECK(res.objective_region == 3);

  // Reference values from an independent numerical oracle; infinity marks
  // regions where the candidate is not certified.
  const double inf = std::numeric_limits<double>::infinity();
  const double gamma_table[6][4] = {
      {3.295478989853079, 1.623471648607127, 1.1277266671052593,
       0.814043394874272},
      {3.3693257945681547, 2.1617049923919143, 1.6516401091366393,
       1.2745536478321},
      {4.760039780292803, 3.062123828748419, 2.345284495932035,
       1.8156966748642276},
      {82.483074300969, 12.198227631274507, 7.21597161298297,
       4.871130351266721},
      {inf, 45.97481874945633, 13.151828054711299, 7.255009443113711},
      {inf, inf, 32.12302495286429, 10.780878298503865}};
  const double W_table[6] = {0.8243194494169588, 1.004113661369004,
                             1.0290298934315902, 0.7718441483213279,
                             0.6174011443825643, 0.4820722695224007};

  for (int k = 0; k < 6; ++k) {
    const auto& cand = res.candidates[k];
    CHECK_THAT(cand.W, WithinAbs(W_table[k], 1e-9));
    REQUIRE(cand.reports.size() == 4);
    for (int r = 0; r < 4; ++r) {
      double got = gamma_or_inf(cand.reports[r]);
      if (std::isinf(gamma_table[k][r])) {
        CHECK(std::isinf(got));
      } else {
        CHECK_THAT(got, WithinRel(gamma_table[k][r], 1e-8));
      }
    }
  }

  SECTION("selection picks the strongest candidate on the small region") {
    REQUIRE(res.best.has_value());
    CHECK(*res.best == 0);  // eps = -4 attains the minimum level
    const auto& rep = res.candidates[0].reports[3];
    CHECK_THAT(*rep.gamma_star, WithinRel(0.814043394874272, 1e-9));
  }
}

TEST_CASE("selection rules") {
  SECTION("single feasible candidate wins") {
    std::vector<CandidateResult> results = {synthetic_candidate(2.0, 0.5)};
    auto best = select_best(results, 0);
    REQUIRE(best.has_value());
    CHECK(*best == 0);
  }
  SECTION("all infeasible yields none") {
    CandidateResult inf_cand;
    inf_cand.K = fixtures::benchmark_gains();
    inf_cand.reports = {DissipativityReport{}};
    std::vector<CandidateResult> results = {inf_cand, inf_cand};
    CHECK_FALSE(select_best(results, 0).has_value());
  }
  SECTION("smaller level wins regardless of width") {
    std::vector<CandidateResult> results = {synthetic_candidate(2.0, 9.0),
                                            synthetic_candidate(1.0, 0.1)};
    CHECK(*select_best(results, 0) == 1);
  }
  SECTION("ties prefer the larger width, then the earlier candidate") {
    std::vector<CandidateResult> results = {synthetic_candidate(1.0, 0.3),
                                            synthetic_candidate(1.0, 0.9),
                                            synthetic_candidate(1.0, 0.9)};
    CHECK(*select_best(results, 0) == 1);
  }
  SECTION("infeasible candidates are skipped even with small levels") {
    CandidateResult broken = synthetic_candidate(0.01, 1.0);
    broken.reports[0].feasible = false;
    std::vector<CandidateResult> results = {broken,
                                            synthetic_candidate(5.0, 0.1)};
    CHECK(*select_best(results, 0) == 1);
  }
  SECTION("matches a brute-force scan on the real sweep") {
    const TuneResult& res = table_result();
    std::optional<size_t> brute;
    double best_gamma = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < res.candidates.size(); ++i) {
      double g = gamma_or_inf(res.candidates[i].reports[3]);
      if (g < best_gamma) {
        best_gamma = g;
        brute = i;
      }
    }
    CHECK(res.best == brute);
  }
  SECTION("permutation invariance") {
    std::vector<CandidateResult> results = table_result().candidates;
    std::reverse(results.begin(), results.end());
    auto best = select_best(results, 3);
    REQUIRE(best.has_value());
    // Same candidate (eps = -4), now at the other end of the list.
    CHECK(*best == results.size() - 1);
  }
}

TEST_CASE("sweep validation") {
  SweepSpec spec = table_sweep();
  spec.regions.clear();
  CHECK_THROWS_AS(tune(uav_model(), spec), std::invalid_argument);
  spec = table_sweep();
  spec.objective_region = 7;
  CHECK_THROWS_AS(tune(uav_model(), spec), std::invalid_argument);
}
