#pragma once

// Closed-loop time-domain simulation of the PI-controlled plant under
// actuator magnitude and rate limits, plus trajectory metrics and the
// empirical dissipation checks used to validate analysis-side levels.

#include "gdiss/dissipativity.hpp"
#include "gdiss/plant.hpp"

#include <cmath>
#include <optional>
#include <vector>

namespace gdiss {

// Per-component actuator limits: magnitude window [u_min, u_max] and rate
// window [du_min, du_max] (units of u per second).
struct Limits {
  Vector u_min, u_max, du_min, du_max;

  void validate(int m) const {
    detail::require(u_min.size() == m && u_max.size() == m &&
                        du_min.size() == m && du_max.size() == m,
                    "Limits: all bounds must be m-vectors");
    detail::require(u_min.allFinite() && u_max.allFinite() &&
                        du_min.allFinite() && du_max.allFinite(),
                    "Limits: bounds must be finite");
    for (int j = 0; j < m; ++j) {
      detail::require(u_min(j) < u_max(j), "Limits: u_min must be below u_max");
      detail::require(du_min(j) < du_max(j),
                      "Limits: du_min must be below du_max");
    }
  }
};

enum class AntiWindup { conditional, none };

struct SimOptions {
  AntiWindup anti_windup = AntiWindup::conditional;
};

// Uniformly sampled closed-loop record. e_dot holds the disturbed error
// rate f(e, u) + Gamma d at each sample; diverged marks a run truncated at
// the last completed sample after a non-finite state or an evaluation the
// plant refused.
struct Trajectory {
  double dt = 0.0;
  std::vector<double> t;
  std::vector<Vector> e, e_dot, u, d, d_dot;
  bool diverged = false;

  size_t samples() const { return t.size(); }
};

// Fixed-step RK4 on (e, xi) with xi_dot = e and position-form PI control
//   u_raw = trim(0) + K_P e + K_I xi,
// zero-order held over each step after rate limiting against the previous
// command and magnitude clipping. The very first command has no
// predecessor and is magnitude-clipped only. Conditional integration
// freezes xi_j for a step when the applied command differs from the raw
// request and the integral drive (K_I e)_j pushes further into the limit.
inline Trajectory simulate(const PlantModel& model, const PiGains& gains,
                           const Limits& limits, const DisturbanceFn& dist,
                           double T, double dt, const Vector& e0,
                           const SimOptions& opt = {}) {
  model.validate();
  gains.validate(model.n, model.m);
  limits.validate(model.m);
  detail::require(bool(dist), "simulate: disturbance function must be set");
  detail::require(std::isfinite(T) && T > 0.0, "simulate: T must be positive");
  detail::require(std::isfinite(dt) && dt > 0.0 && dt <= T,
                  "simulate: dt must lie in (0, T]");
  detail::require(e0.size() == model.n && e0.allFinite(),
                  "simulate: e0 must be a finite n-vector");

  const int n = model.n;
  const long long steps = std::llround(T / dt);
  detail::require(steps >= 1, "simulate: T/dt must round to at least one step");

  Trajectory traj;
  traj.dt = dt;
  traj.t.reserve(steps + 1);
  traj.e.reserve(steps + 1);
  traj.e_dot.reserve(steps + 1);
  traj.u.reserve(steps + 1);
  traj.d.reserve(steps + 1);
  traj.d_dot.reserve(steps + 1);

  const Vector trim0 = model.trim(Vector::Zero(n));
  Vector e = e0;
  Vector xi = Vector::Zero(n);
  Vector u_prev;
  bool have_prev = false;

  auto clip = [](const Vector& v, const Vector& lo, const Vector& hi) {
    return v.cwiseMax(lo).cwiseMin(hi).eval();
  };

  for (long long i = 0; i <= steps; ++i) {
    const double t = i * dt;
    try {
      Vector u_raw = trim0 + gains.K_P * e + gains.K_I * xi;
      Vector u;
      if (!have_prev) {
        u = clip(u_raw, limits.u_min, limits.u_max);
      } else {
        Vector du = clip((u_raw - u_prev) / dt, limits.du_min, limits.du_max);
        u = clip(u_prev + dt * du, limits.u_min, limits.u_max);
      }
      auto [d, ddot] = dist(t);
      Vector edot = model.f(e, u) + model.Gamma * d;

      traj.t.push_back(t);
      traj.e.push_back(e);
      traj.e_dot.push_back(edot);
      traj.u.push_back(u);
      traj.d.push_back(d);
      traj.d_dot.push_back(ddot);
      if (i == steps) break;

      Vector mask = Vector::Ones(n);
      if (opt.anti_windup == AntiWindup::conditional) {
        Vector push = gains.K_I * e;
        for (int j = 0; j < model.m; ++j) {
          if ((u(j) < u_raw(j) - 1e-12 && push(j) > 0.0) ||
              (u(j) > u_raw(j) + 1e-12 && push(j) < 0.0))
            mask(j) = 0.0;
        }
      }
      u_prev = u;
      have_prev = true;

      auto rhs = [&](double tt, const Vector& st) {
        Vector out(2 * n);
        auto [dloc, unused] = dist(tt);
        out.head(n) = model.f(st.head(n), u) + model.Gamma * dloc;
        out.tail(n) = mask.cwiseProduct(st.head(n));
        return out;
      };
      Vector st(2 * n);
      st << e, xi;
      Vector k1 = rhs(t, st);
      Vector k2 = rhs(t + dt / 2.0, (st + dt / 2.0 * k1).eval());
      Vector k3 = rhs(t + dt / 2.0, (st + dt / 2.0 * k2).eval());
      Vector k4 = rhs(t + dt, (st + dt * k3).eval());
      st += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      if (!st.allFinite()) {
        traj.diverged = true;
        break;
      }
      e = st.head(n);
      xi = st.tail(n);
    } catch (const std::exception&) {
      traj.diverged = true;
      break;
    }
  }
  return traj;
}

namespace detail {

inline void require_sampled(const Trajectory& traj, const char* who) {
  require(traj.t.size() >= 2, std::string(who) + ": need at least two samples");
  require(traj.e.size() == traj.t.size(),
          std::string(who) + ": error record must match the time grid");
}

inline double trapezoid(const std::vector<double>& t,
                        const std::vector<double>& y, size_t last) {
  double acc = 0.0;
  for (size_t i = 0; i < last; ++i)
    acc += 0.5 * (y[i] + y[i + 1]) * (t[i + 1] - t[i]);
  return acc;
}

}  // namespace detail

// Empirical L2 gain from the disturbance rate to the stacked signal
// s = (e_dot, e). Defined only for zero-initial-error runs with
// non-vanishing disturbance-rate energy; empty otherwise.
inline std::optional<double> empirical_l2_ratio(const Trajectory& traj) {
  detail::require_sampled(traj, "empirical_l2_ratio");
  detail::require(traj.e_dot.size() == traj.t.size() &&
                      traj.d_dot.size() == traj.t.size(),
                  "empirical_l2_ratio: rate records must match the time grid");
  if (traj.e.front().norm() > 1e-12) return std::nullopt;
  const size_t N = traj.t.size();
  std::vector<double> num(N), den(N);
  for (size_t i = 0; i < N; ++i) {
    num[i] = traj.e_dot[i].squaredNorm() + traj.e[i].squaredNorm();
    den[i] = traj.d_dot[i].squaredNorm();
  }
  double energy_in = detail::trapezoid(traj.t, den, N - 1);
  if (!(energy_in > 0.0)) return std::nullopt;
  return std::sqrt(detail::trapezoid(traj.t, num, N - 1) / energy_in);
}

// Scalar summary of a run over the window [0, T]:
// - itae: trapezoidal time average of ||e(t)|| over the window
// - std_e: per-component population standard deviation of e
// - final_error_norm: ||e|| at the last sample inside the window
// - l2_ratio: empirical gain when defined (zero initial error, full records)
struct Metrics {
  double itae = 0.0;
  Vector std_e;
  double final_error_norm = 0.0;
  std::optional<double> l2_ratio;
};

inline Metrics metrics(const Trajectory& traj, double T) {
  detail::require_sampled(traj, "metrics");
  detail::require(std::isfinite(T) && T > 0.0, "metrics: T must be positive");
  detail::require(traj.t.back() >= T - 1e-9,
                  "metrics: trajectory does not cover the window");
  size_t last = 0;
  while (last + 1 < traj.t.size() && traj.t[last + 1] <= T + 1e-12) ++last;
  detail::require(last >= 1, "metrics: window contains fewer than two samples");

  const int n = static_cast<int>(traj.e.front().size());
  std::vector<double> norms(last + 1);
  for (size_t i = 0; i <= last; ++i) norms[i] = traj.e[i].norm();

  Metrics out;
  out.itae = detail::trapezoid(traj.t, norms, last) / traj.t[last];
  Vector mean = Vector::Zero(n);
  for (size_t i = 0; i <= last; ++i) mean += traj.e[i];
  mean /= static_cast<double>(last + 1);
  Vector var = Vector::Zero(n);
  for (size_t i = 0; i <= last; ++i)
    var += (traj.e[i] - mean).cwiseAbs2();
  var /= static_cast<double>(last + 1);
  out.std_e = var.cwiseSqrt();
  out.final_error_norm = traj.e[last].norm();
  if (traj.e_dot.size() == traj.t.size() && traj.d_dot.size() == traj.t.size())
    out.l2_ratio = empirical_l2_ratio(traj);
  return out;
}

// Forward-difference audit of the dissipation inequality
//   dV/dt <= (gamma^2 ||d_dot||^2 - ||s||^2) / 2,  V = s^T P s / 2,
// at every sample interval, with discretization allowance 1e-6 + 10 dt.
struct AuditResult {
  double violation_fraction = 0.0;
  double worst_excess = 0.0;  // max over intervals of lhs - rhs (can be < 0)
  double tolerance = 0.0;
};

inline AuditResult dissipation_audit(const Trajectory& traj, const Matrix& P,
                                     double gamma) {
  detail::require_sampled(traj, "dissipation_audit");
  detail::require(traj.e_dot.size() == traj.t.size() &&
                      traj.d_dot.size() == traj.t.size(),
                  "dissipation_audit: rate records must match the time grid");
  detail::require(std::isfinite(gamma) && gamma >= 0.0,
                  "dissipation_audit: gamma must be non-negative");
  detail::require(traj.dt > 0.0, "dissipation_audit: trajectory lacks a step size");
  const int n = static_cast<int>(traj.e.front().size());
  detail::require(P.rows() == 2 * n && P.cols() == 2 * n,
                  "dissipation_audit: P must act on the stacked signal");
  detail::require((P - P.transpose()).cwiseAbs().maxCoeff() <=
                      1e-9 * (1.0 + P.cwiseAbs().maxCoeff()),
                  "dissipation_audit: P must be symmetric");

  const size_t N = traj.t.size();
  auto stacked = [&](size_t i) {
    Vector s(2 * n);
    s << traj.e_dot[i], traj.e[i];
    return s;
  };
  std::vector<double> V(N);
  for (size_t i = 0; i < N; ++i) {
    Vector s = stacked(i);
    V[i] = 0.5 * s.dot(P * s);
  }
  AuditResult out;
  out.tolerance = 1e-6 + 10.0 * traj.dt;
  out.worst_excess = -std::numeric_limits<double>::infinity();
  size_t violations = 0;
  for (size_t i = 0; i + 1 < N; ++i) {
    double lhs = (V[i + 1] - V[i]) / traj.dt;
    Vector s = stacked(i);
    double rhs = 0.5 * (gamma * gamma * traj.d_dot[i].squaredNorm() -
                        s.squaredNorm());
    out.worst_excess = std::max(out.worst_excess, lhs - rhs);
    if (lhs > rhs + out.tolerance) ++violations;
  }
  out.violation_fraction =
      static_cast<double>(violations) / static_cast<double>(N - 1);
  return out;
}

}  // namespace gdiss
