#pragma once

// Plant abstraction for disturbed error dynamics
//   e_dot = f(e, u) + Gamma * d(t)
// plus the fixed-wing guidance benchmark (course/flight-path angle errors
// driven by bank angle and load factor through a coordinated-turn model).

#include "gdiss/linalg.hpp"

#include <cmath>
#include <functional>
#include <utility>

namespace gdiss {

// Error dynamics model. All callables must be set; dimensions:
// e in R^n, u in R^m, d in R^l, Gamma is n x l.
struct PlantModel {
  int n = 0;
  int m = 0;
  int l = 0;
  std::function<Vector(const Vector&, const Vector&)> f;
  std::function<Matrix(const Vector&, const Vector&)> jac_e;
  std::function<Matrix(const Vector&, const Vector&)> jac_u;
  Matrix Gamma;
  // Equilibrium input: f(e, trim(e)) = 0.
  std::function<Vector(const Vector&)> trim;
  // Input at which the Jacobians defining the frozen-error linearization
  // are evaluated (usually trim, optionally the constant reference input).
  std::function<Vector(const Vector&)> linearization_input;

  void validate() const {
    detail::require(n > 0 && m > 0 && l > 0, "PlantModel: dimensions must be positive");
    detail::require(static_cast<int>(Gamma.rows()) == n &&
                        static_cast<int>(Gamma.cols()) == l,
                    "PlantModel: Gamma must be n x l");
    detail::require(bool(f) && bool(jac_e) && bool(jac_u) && bool(trim) &&
                        bool(linearization_input),
                    "PlantModel: all callables must be set");
  }
};

struct UavParams {
  double V = 25.0;      // airspeed, m/s
  double g = 9.81;      // gravity, m/s^2
  double gamma_c = M_PI / 12.0;  // commanded flight-path angle, rad
  double chi_c = 0.0;            // commanded course angle, rad
  double d_amp_chi = 0.1;        // disturbance amplitudes, rad/s
  double d_amp_gamma = 0.1;
  double d_omega_chi = 0.15;     // disturbance frequencies, rad/s
  double d_omega_gamma = 0.15;

  double b() const { return g / V; }
};

enum class JacobianAt { trim, reference };

enum class DisturbanceKind { sinusoid, finite_energy, none };

namespace detail {
inline void require_bank_angle(double phi) {
  require(std::isfinite(phi) && std::abs(phi) < M_PI / 2.0,
          "uav plant: bank angle must lie strictly inside (-pi/2, pi/2)");
}
}  // namespace detail

// Guidance benchmark: e = (e_chi, e_gamma), u = (phi, n_z),
//   e_chi_dot   = -b tan(phi)
//   e_gamma_dot = -b (n_z cos(phi) - cos(gamma_c - e_gamma))
// with b = g/V and matched disturbance map Gamma = -I.
inline PlantModel uav_model(const UavParams& p = UavParams{},
                            JacobianAt at = JacobianAt::trim) {
  detail::require(p.V > 0.0 && p.g > 0.0, "uav_model: V and g must be positive");
  const double b = p.b();
  const double gamma_c = p.gamma_c;
  PlantModel model;
  model.n = 2;
  model.m = 2;
  model.l = 2;
  model.Gamma = -Matrix::Identity(2, 2);
  model.f = [b, gamma_c](const Vector& e, const Vector& u) {
    detail::require(e.size() == 2 && u.size() == 2, "uav f: e and u must be 2-vectors");
    detail::require_bank_angle(u(0));
    Vector out(2);
    out(0) = -b * std::tan(u(0));
    out(1) = -b * (u(1) * std::cos(u(0)) - std::cos(gamma_c - e(1)));
    return out;
  };
  model.jac_e = [b, gamma_c](const Vector& e, const Vector& u) {
    detail::require(e.size() == 2 && u.size() == 2, "uav jac_e: e and u must be 2-vectors");
    Matrix J = Matrix::Zero(2, 2);
    J(1, 1) = b * std::sin(gamma_c - e(1));
    return J;
  };
  model.jac_u = [b](const Vector& e, const Vector& u) {
    detail::require(e.size() == 2 && u.size() == 2, "uav jac_u: e and u must be 2-vectors");
    detail::require_bank_angle(u(0));
    const double c = std::cos(u(0));
    Matrix J(2, 2);
    J(0, 0) = -b / (c * c);
    J(0, 1) = 0.0;
    J(1, 0) = b * u(1) * std::sin(u(0));
    J(1, 1) = -b * c;
    return J;
  };
  model.trim = [gamma_c](const Vector& e) {
    detail::require(e.size() == 2, "uav trim: e must be a 2-vector");
    Vector u(2);
    u(0) = 0.0;
    u(1) = std::cos(gamma_c - e(1));
    return u;
  };
  if (at == JacobianAt::trim) {
    model.linearization_input = model.trim;
  } else {
    model.linearization_input = [](const Vector&) {
      return Vector::Zero(2).eval();  // commanded (phi_c, n_zc)
    };
  }
  model.validate();
  return model;
}

// Disturbance signal and its exact time derivative at time t >= 0.
// sinusoid:       d_i = A_i sin/cos(w_i t) (sin on the course channel,
//                 cos on the flight-path channel)
// finite_energy:  the sinusoid multiplied by e^{-t}
// none:           identically zero
inline std::pair<Vector, Vector> disturbance(const UavParams& p, double t,
                                             DisturbanceKind kind =
                                                 DisturbanceKind::sinusoid) {
  detail::require(std::isfinite(t) && t >= 0.0,
                  "disturbance: time must be finite and non-negative");
  Vector d = Vector::Zero(2), ddot = Vector::Zero(2);
  if (kind == DisturbanceKind::none) return {d, ddot};
  d(0) = p.d_amp_chi * std::sin(p.d_omega_chi * t);
  d(1) = p.d_amp_gamma * std::cos(p.d_omega_gamma * t);
  ddot(0) = p.d_amp_chi * p.d_omega_chi * std::cos(p.d_omega_chi * t);
  ddot(1) = -p.d_amp_gamma * p.d_omega_gamma * std::sin(p.d_omega_gamma * t);
  if (kind == DisturbanceKind::finite_energy) {
    const double decay = std::exp(-t);
    ddot = ((ddot - d) * decay).eval();
    d = (d * decay).eval();
  }
  return {d, ddot};
}

using DisturbanceFn = std::function<std::pair<Vector, Vector>(double)>;

inline DisturbanceFn make_disturbance(const UavParams& p, DisturbanceKind kind) {
  return [p, kind](double t) { return disturbance(p, t, kind); };
}

// Central-difference validation of both Jacobians at (e, u); returns the
// largest absolute deviation between analytic and numerical entries.
inline double check_jacobians(const PlantModel& model, const Vector& e,
                              const Vector& u, double h) {
  model.validate();
  detail::require(h > 0.0, "check_jacobians: step must be positive");
  detail::require(e.size() == model.n && u.size() == model.m,
                  "check_jacobians: dimension mismatch");
  Matrix Je = model.jac_e(e, u);
  Matrix Ju = model.jac_u(e, u);
  double worst = 0.0;
  for (int j = 0; j < model.n; ++j) {
    Vector ep = e, em = e;
    ep(j) += h;
    em(j) -= h;
    Vector col = (model.f(ep, u) - model.f(em, u)) / (2.0 * h);
    worst = std::max(worst, (col - Je.col(j)).cwiseAbs().maxCoeff());
  }
  for (int j = 0; j < model.m; ++j) {
    Vector up = u, um = u;
    up(j) += h;
    um(j) -= h;
    Vector col = (model.f(e, up) - model.f(e, um)) / (2.0 * h);
    worst = std::max(worst, (col - Ju.col(j)).cwiseAbs().maxCoeff());
  }
  return worst;
}

}  // namespace gdiss
