#pragma once

// Dense linear-algebra kernels used by the dissipativity analysis:
// spectra, spectral norms, matrix exponentials, Lyapunov solves and
// transition-matrix growth envelopes. Thin, checked wrappers over Eigen.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace gdiss {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Raised when a routine cannot meet its accuracy or convergence contract
// (as opposed to std::invalid_argument for violated preconditions).
struct numerical_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

inline void require(bool ok, const std::string& msg) {
  if (!ok) throw std::invalid_argument(msg);
}

inline void require_square(const Matrix& A, const char* who) {
  require(A.rows() > 0 && A.rows() == A.cols(),
          std::string(who) + ": matrix must be square and non-empty");
  require(A.allFinite(), std::string(who) + ": matrix entries must be finite");
}

}  // namespace detail

// Largest singular value. Defined for any non-empty finite matrix.
inline double spectral_norm(const Matrix& A) {
  detail::require(A.rows() > 0 && A.cols() > 0,
                  "spectral_norm: matrix must be non-empty");
  detail::require(A.allFinite(), "spectral_norm: matrix entries must be finite");
  Eigen::JacobiSVD<Matrix> svd(A);
  return svd.singularValues()(0);
}

// Largest eigenvalue of a symmetric matrix (symmetrized before the solve).
inline double max_eigenvalue_symmetric(const Matrix& S) {
  detail::require_square(S, "max_eigenvalue_symmetric");
  Matrix sym = 0.5 * (S + S.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success)
    throw numerical_error("max_eigenvalue_symmetric: eigensolver failed");
  return es.eigenvalues().maxCoeff();
}

// S (after symmetrization) is negative semidefinite up to `tol`:
// every eigenvalue <= tol. The asymmetric part must also be below tol.
inline bool is_negative_semidefinite(const Matrix& S, double tol) {
  detail::require_square(S, "is_negative_semidefinite");
  detail::require(tol >= 0.0, "is_negative_semidefinite: tol must be >= 0");
  double asym = (S - S.transpose()).cwiseAbs().maxCoeff();
  detail::require(asym <= tol + 1e-9 * (1.0 + S.cwiseAbs().maxCoeff()),
                  "is_negative_semidefinite: matrix is not symmetric");
  return max_eigenvalue_symmetric(S) <= tol;
}

// Eigenvector-matrix condition number is compared against this threshold to
// decide whether a matrix counts as numerically diagonalizable.
inline constexpr double kDiagonalizableConditionLimit = 1e8;

struct SpectrumSummary {
  std::vector<std::complex<double>> eigenvalues;
  double spectral_abscissa = 0.0;  // max real part
  // Spectral condition number of the unit-column eigenvector matrix;
  // +inf when the eigenvector matrix is numerically singular.
  double eigvec_condition = std::numeric_limits<double>::infinity();
  bool is_diagonalizable = false;
};

inline SpectrumSummary analyze_spectrum(const Matrix& A) {
  detail::require_square(A, "analyze_spectrum");
  Eigen::EigenSolver<Matrix> es(A);
  if (es.info() != Eigen::Success)
    throw numerical_error("analyze_spectrum: eigendecomposition failed");
  SpectrumSummary out;
  const auto& vals = es.eigenvalues();
  out.eigenvalues.assign(vals.data(), vals.data() + vals.size());
  out.spectral_abscissa = -std::numeric_limits<double>::infinity();
  for (const auto& z : out.eigenvalues)
    out.spectral_abscissa = std::max(out.spectral_abscissa, z.real());
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(es.eigenvectors());
  const auto& sv = svd.singularValues();
  double smax = sv(0);
  double smin = sv(sv.size() - 1);
  out.eigvec_condition = smin > 0.0
                             ? smax / smin
                             : std::numeric_limits<double>::infinity();
  out.is_diagonalizable = out.eigvec_condition < kDiagonalizableConditionLimit;
  return out;
}

inline double spectral_abscissa(const Matrix& A) {
  return analyze_spectrum(A).spectral_abscissa;
}

// Kronecker product, row blocks of A scaled by B.
inline Matrix kronecker(const Matrix& A, const Matrix& B) {
  detail::require(A.size() > 0 && B.size() > 0,
                  "kronecker: operands must be non-empty");
  Matrix K(A.rows() * B.rows(), A.cols() * B.cols());
  for (Eigen::Index i = 0; i < A.rows(); ++i)
    for (Eigen::Index j = 0; j < A.cols(); ++j)
      K.block(i * B.rows(), j * B.cols(), B.rows(), B.cols()) = A(i, j) * B;
  return K;
}

// Matrix exponential via Pade(13) with scaling and squaring. Accurate to
// near machine precision for well-scaled inputs; throws numerical_error if
// the result overflows (entries of exp(A) outside double range).
inline Matrix matrix_exponential(const Matrix& A) {
  detail::require_square(A, "matrix_exponential");
  const Eigen::Index n = A.rows();
  static constexpr std::array<double, 14> b = {
      64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
      1187353796428800.0,  129060195264000.0,   10559470521600.0,
      670442572800.0,      33522128640.0,       1323241920.0,
      40840800.0,          960960.0,            16380.0,
      182.0,               1.0};
  constexpr double theta13 = 5.371920351148152;
  // 1-norm controls the Pade backward-error bound.
  double norm1 = A.cwiseAbs().colwise().sum().maxCoeff();
  int squarings = 0;
  if (norm1 > theta13) {
    squarings = static_cast<int>(std::ceil(std::log2(norm1 / theta13)));
    squarings = std::min(squarings, 1100);  // beyond this, doubles overflow anyway
  }
  Matrix As = A / std::ldexp(1.0, squarings);
  Matrix I = Matrix::Identity(n, n);
  Matrix A2 = As * As;
  Matrix A4 = A2 * A2;
  Matrix A6 = A4 * A2;
  Matrix U = As * (A6 * (b[13] * A6 + b[11] * A4 + b[9] * A2) +
                   b[7] * A6 + b[5] * A4 + b[3] * A2 + b[1] * I);
  Matrix V = A6 * (b[12] * A6 + b[10] * A4 + b[8] * A2) +
             b[6] * A6 + b[4] * A4 + b[2] * A2 + b[0] * I;
  Eigen::FullPivLU<Matrix> lu(V - U);
  if (!lu.isInvertible())
    throw numerical_error("matrix_exponential: Pade denominator is singular");
  Matrix R = lu.solve(V + U);
  for (int k = 0; k < squarings; ++k) {
    R = R * R;
    if (!R.allFinite())
      throw numerical_error("matrix_exponential: result overflowed");
  }
  if (!R.allFinite())
    throw numerical_error("matrix_exponential: result overflowed");
  return R;
}

// Solves A^T X + X A + Q = 0 for symmetric X via the Kronecker linear
// system (I (x) A^T + A^T (x) I) vec(X) = -vec(Q), column-major vec.
// Requires A Hurwitz and Q symmetric positive definite; the unique solution
// is then X = integral of e^{A^T t} Q e^{A t} dt, symmetric positive definite.
inline Matrix solve_lyapunov(const Matrix& A, const Matrix& Q) {
  detail::require_square(A, "solve_lyapunov");
  detail::require_square(Q, "solve_lyapunov");
  detail::require(A.rows() == Q.rows(),
                  "solve_lyapunov: A and Q must have the same size");
  double qscale = Q.cwiseAbs().maxCoeff();
  detail::require((Q - Q.transpose()).cwiseAbs().maxCoeff() <=
                      1e-12 * (1.0 + qscale),
                  "solve_lyapunov: Q must be symmetric");
  Eigen::SelfAdjointEigenSolver<Matrix> qes(Q, Eigen::EigenvaluesOnly);
  detail::require(qes.info() == Eigen::Success &&
                      qes.eigenvalues().minCoeff() > 0.0,
                  "solve_lyapunov: Q must be positive definite");
  if (spectral_abscissa(A) >= 0.0)
    throw numerical_error("solve_lyapunov: A is not Hurwitz");
  const Eigen::Index n = A.rows();
  Matrix I = Matrix::Identity(n, n);
  Matrix At = A.transpose();
  Matrix M = kronecker(I, At) + kronecker(At, I);
  Eigen::FullPivLU<Matrix> lu(M);
  if (!lu.isInvertible())
    throw numerical_error("solve_lyapunov: Kronecker system is singular");
  Eigen::Map<const Vector> q(Q.data(), n * n);
  Vector x = lu.solve(-q);
  Matrix X = Eigen::Map<const Matrix>(x.data(), n, n);
  X = 0.5 * (X + X.transpose()).eval();
  double residual = spectral_norm(At * X + X * A + Q);
  if (residual > 1e-10 * spectral_norm(Q))
    throw numerical_error("solve_lyapunov: residual check failed");
  return X;
}

// Growth envelope ||e^{A^T t}|| <= M_tilde * e^{-epsilon t} for a Hurwitz A,
// with epsilon = -spectral_abscissa(A). Diagonalizable case: M_tilde is the
// condition number of the unit-column eigenvector matrix of A^T. Defective
// fallback: 1.05 x the peak of the shifted propagator norm sampled at 400
// log-spaced times in [1e-4, 200].
struct MEstimate {
  double M_tilde = 1.0;
  double epsilon = 0.0;
};

inline MEstimate estimate_M(const Matrix& A) {
  detail::require_square(A, "estimate_M");
  double alpha = spectral_abscissa(A);
  if (alpha >= 0.0) throw numerical_error("estimate_M: A is not Hurwitz");
  MEstimate out;
  out.epsilon = -alpha;
  SpectrumSummary s = analyze_spectrum(A.transpose());
  if (s.is_diagonalizable) {
    out.M_tilde = s.eigvec_condition;
    return out;
  }
  const Eigen::Index n = A.rows();
  Matrix shifted = A.transpose() + out.epsilon * Matrix::Identity(n, n);
  constexpr int samples = 400;
  constexpr double t_lo = 1e-4;
  constexpr double t_hi = 200.0;
  double peak = 0.0;
  for (int i = 0; i < samples; ++i) {
    double t = t_lo * std::pow(t_hi / t_lo,
                               static_cast<double>(i) / (samples - 1));
    peak = std::max(peak, spectral_norm(matrix_exponential(shifted * t)));
  }
  out.M_tilde = 1.05 * peak;
  return out;
}

}  // namespace gdiss
