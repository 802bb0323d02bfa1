#pragma once

// Quantified dissipativity analysis for PI-controlled error dynamics.
//
// With integral state xi (xi_dot = e) and stacked signal s = (e_dot, e),
// the frozen-error closed loop is s_dot = A_K(e) s + G w, where
//   A_K(e) = D1(e) + D2(e) K,   K = [K_P  K_I],
//   D1 = [[jac_e, 0], [I, 0]],  D2 = [[jac_u], [0]],  G = [[Gamma], [0]].
// The module bounds the L2 gain from the disturbance rate w = d_dot to s
// over a state region via a growth envelope of the origin linearization.

#include "gdiss/linalg.hpp"
#include "gdiss/plant.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <vector>

namespace gdiss {

// Proportional and integral gain pair; stacked() is the m x 2n block [K_P K_I].
struct PiGains {
  Matrix K_P;
  Matrix K_I;

  void validate(int n, int m) const {
    detail::require(K_P.rows() == m && K_P.cols() == n &&
                        K_I.rows() == m && K_I.cols() == n,
                    "PiGains: K_P and K_I must be m x n");
    detail::require(K_P.allFinite() && K_I.allFinite(),
                    "PiGains: entries must be finite");
  }

  Matrix stacked() const {
    Matrix K(K_P.rows(), K_P.cols() + K_I.cols());
    K << K_P, K_I;
    return K;
  }
};

// Axis-aligned box with per-axis grid steps. The box must contain the
// origin so the origin linearization is part of every scan.
struct Region {
  Vector lo;
  Vector hi;
  Vector step;

  void validate() const {
    detail::require(lo.size() > 0 && lo.size() == hi.size() &&
                        lo.size() == step.size(),
                    "Region: lo, hi, step must be non-empty and equally sized");
    detail::require(lo.allFinite() && hi.allFinite() && step.allFinite(),
                    "Region: bounds must be finite");
    for (Eigen::Index i = 0; i < lo.size(); ++i) {
      detail::require(lo(i) < hi(i), "Region: lo must be strictly below hi");
      detail::require(step(i) > 0.0, "Region: steps must be positive");
      detail::require(lo(i) <= 0.0 && hi(i) >= 0.0,
                      "Region: box must contain the origin");
    }
  }

  int dims() const { return static_cast<int>(lo.size()); }

  int axis_points(int axis) const {
    detail::require(axis >= 0 && axis < dims(), "Region: axis out of range");
    return static_cast<int>(
               std::floor((hi(axis) - lo(axis)) / step(axis) + 1e-9)) + 1;
  }

  std::vector<double> axis_grid(int axis) const {
    int npts = axis_points(axis);
    std::vector<double> nodes(npts);
    for (int i = 0; i < npts; ++i) nodes[i] = lo(axis) + i * step(axis);
    return nodes;
  }
};

// Visits every grid node, last axis fastest (row-major over the axes).
inline void for_each_grid_point(const Region& region,
                                const std::function<void(const Vector&)>& fn) {
  region.validate();
  const int d = region.dims();
  std::vector<std::vector<double>> axes(d);
  for (int a = 0; a < d; ++a) axes[a] = region.axis_grid(a);
  std::vector<int> idx(d, 0);
  Vector e(d);
  while (true) {
    for (int a = 0; a < d; ++a) e(a) = axes[a][idx[a]];
    fn(e);
    int a = d - 1;
    while (a >= 0 && ++idx[a] == static_cast<int>(axes[a].size())) {
      idx[a] = 0;
      --a;
    }
    if (a < 0) break;
  }
}

struct AugmentedSystem {
  Matrix D1;   // 2n x 2n
  Matrix D2;   // 2n x m
  Matrix G;    // 2n x l
  Matrix A_K;  // D1 + D2 [K_P K_I]
};

// Frozen-error augmented dynamics at error state e.
inline AugmentedSystem assemble(const PlantModel& model, const PiGains& K,
                                const Vector& e) {
  model.validate();
  K.validate(model.n, model.m);
  detail::require(e.size() == model.n, "assemble: e must be an n-vector");
  const int n = model.n;
  Vector u = model.linearization_input(e);
  Matrix Je = model.jac_e(e, u);
  Matrix Ju = model.jac_u(e, u);
  AugmentedSystem sys;
  sys.D1 = Matrix::Zero(2 * n, 2 * n);
  sys.D1.topLeftCorner(n, n) = Je;
  sys.D1.bottomLeftCorner(n, n) = Matrix::Identity(n, n);
  sys.D2 = Matrix::Zero(2 * n, model.m);
  sys.D2.topRows(n) = Ju;
  sys.G = Matrix::Zero(2 * n, model.l);
  sys.G.topRows(n) = model.Gamma;
  sys.A_K = sys.D1 + sys.D2 * K.stacked();
  return sys;
}

namespace detail {

// Origin linearization data shared by every point of a scan.
struct OriginContext {
  Matrix A0;
  double abscissa0 = 0.0;
  double M0 = std::numeric_limits<double>::quiet_NaN();
  bool hurwitz = false;
};

inline OriginContext origin_context(const PlantModel& model, const PiGains& K) {
  OriginContext ctx;
  ctx.A0 = assemble(model, K, Vector::Zero(model.n)).A_K;
  ctx.abscissa0 = spectral_abscissa(ctx.A0);
  ctx.hurwitz = ctx.abscissa0 < 0.0;
  if (ctx.hurwitz) ctx.M0 = estimate_M(ctx.A0).M_tilde;
  return ctx;
}

inline double pointwise_value(const PlantModel& model, const PiGains& K,
                              const OriginContext& ctx, const Vector& e) {
  Matrix A = assemble(model, K, e).A_K;
  return spectral_abscissa(A) + spectral_norm(A - ctx.A0) * ctx.M0 * ctx.M0;
}

}  // namespace detail

// Pointwise contraction index: spectral abscissa at e plus the envelope-
// weighted deviation from the origin linearization. Negative values certify
// local exponential contraction of the frozen-error dynamics at e.
inline double pointwise_index(const PlantModel& model, const PiGains& K,
                              const Vector& e) {
  auto ctx = detail::origin_context(model, K);
  if (!ctx.hurwitz)
    throw numerical_error("pointwise_index: A_K(0) is not Hurwitz");
  return detail::pointwise_value(model, K, ctx, e);
}

struct RegionIndices {
  double M0 = std::numeric_limits<double>::quiet_NaN();  // envelope constant
  double S = std::numeric_limits<double>::quiet_NaN();   // deviation supremum
  double L = std::numeric_limits<double>::quiet_NaN();   // contraction index
  double max_abscissa = std::numeric_limits<double>::quiet_NaN();
};

// Region contraction index over the grid:
//   S = max ||A_K(e) - A_K(0)|| * M0^2,  L = max abscissa(A_K(e)) + S.
inline RegionIndices region_index(const PlantModel& model, const PiGains& K,
                                  const Region& region) {
  region.validate();
  detail::require(region.dims() == model.n,
                  "region_index: region dimension must match the plant");
  auto ctx = detail::origin_context(model, K);
  if (!ctx.hurwitz)
    throw numerical_error("region_index: A_K(0) is not Hurwitz");
  double max_dev = 0.0;
  double max_abscissa = -std::numeric_limits<double>::infinity();
  for_each_grid_point(region, [&](const Vector& e) {
    Matrix A = assemble(model, K, e).A_K;
    max_dev = std::max(max_dev, spectral_norm(A - ctx.A0));
    max_abscissa = std::max(max_abscissa, spectral_abscissa(A));
  });
  RegionIndices out;
  out.M0 = ctx.M0;
  out.S = max_dev * ctx.M0 * ctx.M0;
  out.max_abscissa = max_abscissa;
  out.L = max_abscissa + out.S;
  return out;
}

// Dissipativity level over the region, closed form:
//   gamma* = 2 (1 - S/L) sigma_max(G^T P),  A0^T P + P A0 + I = 0.
// Empty when the region is not certified contractive (L >= 0); throws
// numerical_error when A_K(0) is not Hurwitz.
inline std::optional<double> gamma_star(const PlantModel& model,
                                        const PiGains& K,
                                        const Region& region) {
  RegionIndices idx = region_index(model, K, region);
  if (!(idx.L < 0.0)) return std::nullopt;
  auto ctx = detail::origin_context(model, K);
  Matrix P = solve_lyapunov(ctx.A0, Matrix::Identity(ctx.A0.rows(), ctx.A0.cols()));
  Matrix G = assemble(model, K, Vector::Zero(model.n)).G;
  double factor = 2.0 * (1.0 - idx.S / idx.L);
  return factor * spectral_norm((G.transpose() * P).eval());
}

// Same level via bisection on the feasibility of the linear matrix
// inequality [[-g I, C], [C^T, -g I]] <= 0 with C = 2 (1 - S/L) P G.
// Agrees with the closed form to within the bisection tolerance.
inline std::optional<double> gamma_star_lmi(const PlantModel& model,
                                            const PiGains& K,
                                            const Region& region,
                                            double tol = 1e-8) {
  detail::require(tol > 0.0, "gamma_star_lmi: tol must be positive");
  RegionIndices idx = region_index(model, K, region);
  if (!(idx.L < 0.0)) return std::nullopt;
  auto ctx = detail::origin_context(model, K);
  Matrix P = solve_lyapunov(ctx.A0, Matrix::Identity(ctx.A0.rows(), ctx.A0.cols()));
  Matrix G = assemble(model, K, Vector::Zero(model.n)).G;
  Matrix C = 2.0 * (1.0 - idx.S / idx.L) * (P * G);
  const Eigen::Index p = C.rows(), q = C.cols();
  auto feasible_at = [&](double g) {
    Matrix B = Matrix::Zero(p + q, p + q);
    B.topRightCorner(p, q) = C;
    B.bottomLeftCorner(q, p) = C.transpose();
    B -= g * Matrix::Identity(p + q, p + q);
    return is_negative_semidefinite(B, 0.0);
  };
  double lo = 0.0;
  double hi = 1.0 + 2.0 * C.norm();  // Frobenius bound dominates sigma_max
  int doublings = 0;
  while (!feasible_at(hi)) {
    hi *= 2.0;
    if (++doublings > 60)
      throw numerical_error("gamma_star_lmi: failed to bracket the level");
  }
  while (hi - lo > tol) {
    double mid = 0.5 * (lo + hi);
    if (feasible_at(mid))
      hi = mid;
    else
      lo = mid;
  }
  return hi;
}

// Storage matrix P = eps_K (1 - S/L) P_tilde certifying the dissipation
// inequality with margin eps_K over the whole region. Requires eps_K > 1
// and a certified-contractive region.
inline Matrix construct_common_P(const PlantModel& model, const PiGains& K,
                                 const Region& region, double eps_K = 2.0) {
  detail::require(eps_K > 1.0, "construct_common_P: eps_K must exceed 1");
  RegionIndices idx = region_index(model, K, region);
  if (!(idx.L < 0.0))
    throw numerical_error("construct_common_P: region is not certified (L >= 0)");
  auto ctx = detail::origin_context(model, K);
  Matrix P_tilde =
      solve_lyapunov(ctx.A0, Matrix::Identity(ctx.A0.rows(), ctx.A0.cols()));
  return eps_K * (1.0 - idx.S / idx.L) * P_tilde;
}

// Scan of the pointwise index along the last error axis (the other
// coordinates held at zero), with the negative-excursion width around the
// origin. Boundaries are linearly interpolated sign crossings; when the
// scan is still negative at a region edge the width extends to that edge.
struct ZeroLineScan {
  int axis = 0;
  std::vector<double> nodes;
  std::vector<double> values;
  std::vector<double> crossings;
  double W = 0.0;
};

inline ZeroLineScan zero_line_scan(const PlantModel& model, const PiGains& K,
                                   const Region& region) {
  region.validate();
  detail::require(region.dims() == model.n,
                  "zero_line_scan: region dimension must match the plant");
  ZeroLineScan scan;
  scan.axis = region.dims() - 1;
  scan.nodes = region.axis_grid(scan.axis);
  auto ctx = detail::origin_context(model, K);
  if (!ctx.hurwitz) return scan;  // W = 0 by convention
  scan.values.reserve(scan.nodes.size());
  Vector e = Vector::Zero(model.n);
  for (double y : scan.nodes) {
    e(scan.axis) = y;
    scan.values.push_back(detail::pointwise_value(model, K, ctx, e));
  }
  for (size_t i = 0; i + 1 < scan.nodes.size(); ++i) {
    double v0 = scan.values[i], v1 = scan.values[i + 1];
    if (v0 == 0.0) {
      if (scan.crossings.empty() || scan.crossings.back() != scan.nodes[i])
        scan.crossings.push_back(scan.nodes[i]);
    } else if (v0 * v1 < 0.0) {
      scan.crossings.push_back(scan.nodes[i] +
                               (scan.nodes[i + 1] - scan.nodes[i]) * v0 /
                                   (v0 - v1));
    }
  }
  if (!scan.values.empty() && scan.values.back() == 0.0)
    scan.crossings.push_back(scan.nodes.back());
  // Negative excursion containing the origin (the origin value equals the
  // spectral abscissa of A_K(0), negative here since A_K(0) is Hurwitz).
  double left = region.lo(scan.axis);
  double right = region.hi(scan.axis);
  for (double c : scan.crossings) {
    if (c <= 0.0) left = std::max(left, c);
    if (c >= 0.0) right = std::min(right, c);
  }
  scan.W = right - left;
  return scan;
}

inline double zero_line_width(const PlantModel& model, const PiGains& K,
                              const Region& region) {
  return zero_line_scan(model, K, region).W;
}

// Dense pointwise-index map over a two-dimensional region, rows ordered
// with the first axis slowest (x outer, y inner).
struct HeatmapResult {
  std::vector<double> x;       // first-axis nodes
  std::vector<double> y;       // second-axis nodes
  std::vector<double> values;  // size x.size() * y.size(), y fastest
};

inline HeatmapResult heatmap(const PlantModel& model, const PiGains& K,
                             const Region& region) {
  region.validate();
  detail::require(model.n == 2 && region.dims() == 2,
                  "heatmap: requires a two-dimensional error space");
  auto ctx = detail::origin_context(model, K);
  if (!ctx.hurwitz)
    throw numerical_error("heatmap: A_K(0) is not Hurwitz");
  HeatmapResult out;
  out.x = region.axis_grid(0);
  out.y = region.axis_grid(1);
  out.values.reserve(out.x.size() * out.y.size());
  Vector e(2);
  for (double ex : out.x) {
    for (double ey : out.y) {
      e << ex, ey;
      out.values.push_back(detail::pointwise_value(model, K, ctx, e));
    }
  }
  return out;
}

// Region certification summary; fields are NaN / empty when A_K(0) is not
// Hurwitz, in which case the region is reported infeasible rather than
// raising an error.
struct DissipativityReport {
  double M0 = std::numeric_limits<double>::quiet_NaN();
  double S = std::numeric_limits<double>::quiet_NaN();
  double L = std::numeric_limits<double>::quiet_NaN();
  std::optional<double> gamma_star;
  Matrix P_tilde;  // 0x0 when unavailable
  bool feasible = false;
};

inline DissipativityReport build_report(const PlantModel& model,
                                        const PiGains& K,
                                        const Region& region) {
  DissipativityReport rep;
  auto ctx = detail::origin_context(model, K);
  if (!ctx.hurwitz) return rep;
  RegionIndices idx = region_index(model, K, region);
  rep.M0 = idx.M0;
  rep.S = idx.S;
  rep.L = idx.L;
  rep.P_tilde =
      solve_lyapunov(ctx.A0, Matrix::Identity(ctx.A0.rows(), ctx.A0.cols()));
  if (idx.L < 0.0) {
    Matrix G = assemble(model, K, Vector::Zero(model.n)).G;
    rep.gamma_star = 2.0 * (1.0 - idx.S / idx.L) *
                     spectral_norm((G.transpose() * rep.P_tilde).eval());
    rep.feasible = true;
  }
  return rep;
}

}  // namespace gdiss
