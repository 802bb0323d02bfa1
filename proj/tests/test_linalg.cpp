#include <catch2/catch_amalgamated.hpp>

#include "gdiss/linalg.hpp"

#include <cmath>

using namespace gdiss;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

// Closed-loop error-dynamics matrix of the guidance benchmark at the origin;
// a representative stable, mildly non-normal 4x4 test matrix.
Matrix benchmark_A0() {
  const double b = 9.81 / 25.0;
  const double je = b * std::sin(M_PI / 12.0);
  Matrix A(4, 4);
  A << -b * 1.6968, -b * 0.5906, -b * 3.4869, -b * 0.1784,
       b * 0.5906, je - b * 1.9556, b * 0.1784, -b * 3.4869,
       1, 0, 0, 0,
       0, 1, 0, 0;
  return A;
}

// Reference solution of A^T X + X A + I = 0 for benchmark_A0, derived with an
// independent numerical oracle.
Matrix benchmark_P() {
  Matrix P(4, 4);
  P << 1.3005050448985358, 2.265896452976445e-06, 0.3659073620513712,
      -0.00937438862446956,
      2.265896452976445e-06, 1.30051806471406, 0.009374388624469557,
      0.365907362051371,
      0.3659073620513712, 0.009374388624469557, 2.020885794346481,
      2.6095850582670794e-06,
      -0.00937438862446956, 0.365907362051371, 2.6095850582670794e-06,
      2.0209011915430555;
  return P;
}

}  // namespace

TEST_CASE("spectral_norm basics") {
  Matrix D = Matrix::Zero(3, 3);
  D.diagonal() << -4.0, 2.0, 1.0;
  CHECK_THAT(spectral_norm(D), WithinAbs(4.0, 1e-14));

  Matrix A(2, 2);
  A << 3, 0, 4, 5;  // A^T A has eigenvalues 45 and 5
  CHECK_THAT(spectral_norm(A), WithinRel(std::sqrt(45.0), 1e-13));

  Matrix R(1, 3);
  R << 1, 2, 2;
  CHECK_THAT(spectral_norm(R), WithinAbs(3.0, 1e-13));

  CHECK_THROWS_AS(spectral_norm(Matrix()), std::invalid_argument);
  Matrix bad(1, 1);
  bad << std::nan("");
  CHECK_THROWS_AS(spectral_norm(bad), std::invalid_argument);
}

TEST_CASE("analyze_spectrum on a normal matrix") {
  Matrix A(2, 2);
  A << -1, 2, -2, -1;  // eigenvalues -1 +/- 2i, orthogonal eigenvectors
  auto s = analyze_spectrum(A);
  REQUIRE(s.eigenvalues.size() == 2);
  CHECK_THAT(s.spectral_abscissa, WithinAbs(-1.0, 1e-13));
  CHECK(s.is_diagonalizable);
  CHECK_THAT(s.eigvec_condition, WithinAbs(1.0, 1e-12));
  double imag_mag = std::abs(s.eigenvalues[0].imag());
  CHECK_THAT(imag_mag, WithinAbs(2.0, 1e-13));
}

TEST_CASE("analyze_spectrum flags defective matrices") {
  Matrix J(2, 2);
  J << -1, 1, 0, -1;  // Jordan block
  auto s = analyze_spectrum(J);
  CHECK_FALSE(s.is_diagonalizable);
  CHECK(s.eigvec_condition > kDiagonalizableConditionLimit);
  CHECK_THAT(s.spectral_abscissa, WithinAbs(-1.0, 1e-12));
}

TEST_CASE("analyze_spectrum rejects bad input") {
  CHECK_THROWS_AS(analyze_spectrum(Matrix::Zero(2, 3)), std::invalid_argument);
}

TEST_CASE("benchmark matrix spectrum") {
  Matrix A = benchmark_A0();
  auto s = analyze_spectrum(A);
  // Reference abscissa cross-checked against the characteristic polynomial.
  CHECK_THAT(s.spectral_abscissa, WithinAbs(-0.3297398381944034, 1e-10));
  CHECK(s.is_diagonalizable);
}

TEST_CASE("kronecker product") {
  Matrix A(2, 2), B(2, 2);
  A << 1, 2, 3, 4;
  B << 0, 5, 6, 7;
  Matrix K = kronecker(A, B);
  REQUIRE(K.rows() == 4);
  REQUIRE(K.cols() == 4);
  CHECK(K.block(0, 0, 2, 2).isApprox(1.0 * B, 1e-15));
  CHECK(K.block(0, 2, 2, 2).isApprox(2.0 * B, 1e-15));
  CHECK(K.block(2, 0, 2, 2).isApprox(3.0 * B, 1e-15));
  CHECK(K.block(2, 2, 2, 2).isApprox(4.0 * B, 1e-15));

  Matrix R(2, 3), S(3, 2);
  R.setOnes();
  S.setOnes();
  Matrix K2 = kronecker(R, S);
  CHECK(K2.rows() == 6);
  CHECK(K2.cols() == 6);
}

TEST_CASE("matrix_exponential exact cases") {
  SECTION("diagonal") {
    Matrix D = Matrix::Zero(2, 2);
    D.diagonal() << 1.0, -2.0;
    Matrix E = matrix_exponential(D);
    CHECK_THAT(E(0, 0), WithinRel(std::exp(1.0), 1e-13));
    CHECK_THAT(E(1, 1), WithinRel(std::exp(-2.0), 1e-13));
    CHECK_THAT(E(0, 1), WithinAbs(0.0, 1e-15));
  }
  SECTION("nilpotent") {
    Matrix N(2, 2);
    N << 0, 1, 0, 0;
    Matrix E = matrix_exponential(N);
    CHECK_THAT(E(0, 0), WithinAbs(1.0, 1e-14));
    CHECK_THAT(E(0, 1), WithinAbs(1.0, 1e-14));
    CHECK_THAT(E(1, 0), WithinAbs(0.0, 1e-14));
    CHECK_THAT(E(1, 1), WithinAbs(1.0, 1e-14));
  }
  SECTION("rotation") {
    Matrix W(2, 2);
    W << 0, -1, 1, 0;
    Matrix E = matrix_exponential(W);
    CHECK_THAT(E(0, 0), WithinAbs(std::cos(1.0), 1e-13));
    CHECK_THAT(E(1, 0), WithinAbs(std::sin(1.0), 1e-13));
  }
  SECTION("rotation with scaling and squaring") {
    Matrix W(2, 2);
    W << 0, -30, 30, 0;  // norm far above the Pade threshold
    Matrix E = matrix_exponential(W);
    CHECK_THAT(E(0, 0), WithinAbs(std::cos(30.0), 1e-11));
    CHECK_THAT(E(1, 0), WithinAbs(std::sin(30.0), 1e-11));
    CHECK_THAT((E.transpose() * E - Matrix::Identity(2, 2)).norm(),
               WithinAbs(0.0, 1e-12));
  }
}

TEST_CASE("matrix_exponential algebraic properties") {
  Matrix A = 2.0 * benchmark_A0();
  Matrix E = matrix_exponential(A);
  Matrix Einv = matrix_exponential((-A).eval());
  CHECK((E * Einv - Matrix::Identity(4, 4)).cwiseAbs().maxCoeff() < 1e-12);
  Matrix E2 = matrix_exponential((2.0 * A).eval());
  CHECK((E * E - E2).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("matrix_exponential overflow is reported") {
  Matrix D = Matrix::Zero(2, 2);
  D.diagonal() << 800.0, 800.0;  // exp(800) exceeds double range
  CHECK_THROWS_AS(matrix_exponential(D), numerical_error);
}

TEST_CASE("solve_lyapunov exact diagonal cases") {
  Matrix I2 = Matrix::Identity(2, 2);
  Matrix X = solve_lyapunov((-I2).eval(), I2);
  CHECK(X.isApprox(0.5 * I2, 1e-13));

  Matrix A = Matrix::Zero(2, 2);
  A.diagonal() << -1.0, -2.0;
  Matrix X2 = solve_lyapunov(A, I2);
  CHECK_THAT(X2(0, 0), WithinAbs(0.5, 1e-13));
  CHECK_THAT(X2(1, 1), WithinAbs(0.25, 1e-13));
  CHECK_THAT(X2(0, 1), WithinAbs(0.0, 1e-13));
}

TEST_CASE("solve_lyapunov matches reference solution") {
  Matrix A = benchmark_A0();
  Matrix X = solve_lyapunov(A, Matrix::Identity(4, 4));
  Matrix P = benchmark_P();
  CHECK((X - P).cwiseAbs().maxCoeff() < 1e-10);
  // Solution is symmetric positive definite.
  CHECK((X - X.transpose()).cwiseAbs().maxCoeff() < 1e-14);
  Eigen::SelfAdjointEigenSolver<Matrix> es(X, Eigen::EigenvaluesOnly);
  CHECK(es.eigenvalues().minCoeff() > 0.0);
  // Independent reference for the largest singular value.
  CHECK_THAT(spectral_norm(P), WithinAbs(2.1742410022123226, 1e-10));
}

TEST_CASE("solve_lyapunov rejects bad input") {
  Matrix I2 = Matrix::Identity(2, 2);
  SECTION("non-Hurwitz A") {
    CHECK_THROWS_AS(solve_lyapunov(I2, I2), numerical_error);
    Matrix M = Matrix::Zero(2, 2);
    M.diagonal() << -1.0, 0.0;  // marginal eigenvalue
    CHECK_THROWS_AS(solve_lyapunov(M, I2), numerical_error);
  }
  SECTION("asymmetric Q") {
    Matrix Q(2, 2);
    Q << 1, 0.5, 0, 1;
    CHECK_THROWS_AS(solve_lyapunov((-I2).eval(), Q), std::invalid_argument);
  }
  SECTION("indefinite Q") {
    Matrix Q = Matrix::Zero(2, 2);
    Q.diagonal() << 1.0, -1.0;
    CHECK_THROWS_AS(solve_lyapunov((-I2).eval(), Q), std::invalid_argument);
  }
  SECTION("size mismatch") {
    CHECK_THROWS_AS(solve_lyapunov((-I2).eval(), Matrix::Identity(3, 3)),
                    std::invalid_argument);
  }
}

TEST_CASE("estimate_M diagonalizable branch") {
  SECTION("normal matrix has M = 1") {
    Matrix A = Matrix::Zero(2, 2);
    A.diagonal() << -1.0, -3.0;
    auto m = estimate_M(A);
    CHECK_THAT(m.M_tilde, WithinAbs(1.0, 1e-12));
    CHECK_THAT(m.epsilon, WithinAbs(1.0, 1e-13));
  }
  SECTION("constructed eigenvector condition of 10") {
    // B = P diag(-1,-2) P^{-1} with unit eigenvector columns at angle
    // cos(theta) = 99/101, giving condition sqrt((1+c)/(1-c)) = 10 exactly.
    Matrix B(2, 2);
    B << -1, -4.95, 0, -2;
    auto sb = analyze_spectrum(B);
    CHECK_THAT(sb.eigvec_condition, WithinRel(10.0, 1e-12));
    auto m = estimate_M(B.transpose().eval());  // eigenvectors taken from B
    CHECK_THAT(m.M_tilde, WithinRel(10.0, 1e-12));
    CHECK_THAT(m.epsilon, WithinAbs(1.0, 1e-12));
  }
  SECTION("benchmark matrix") {
    auto m = estimate_M(benchmark_A0());
    // Independent oracle values.
    CHECK_THAT(m.M_tilde, WithinAbs(1.3947638394034352, 1e-8));
    CHECK_THAT(m.epsilon, WithinAbs(0.3297398381944034, 1e-10));
  }
}

TEST_CASE("estimate_M envelope property") {
  Matrix A = benchmark_A0();
  auto m = estimate_M(A);
  CHECK(m.M_tilde >= 1.0);
  Matrix At = A.transpose();
  for (int i = 0; i < 200; ++i) {
    double t = 1e-3 * std::pow(50.0 / 1e-3, i / 199.0);
    double lhs = spectral_norm(matrix_exponential((At * t).eval()));
    double rhs = m.M_tilde * std::exp(-m.epsilon * t);
    CHECK(lhs <= rhs * (1.0 + 1e-9));
  }
}

TEST_CASE("estimate_M defective fallback") {
  Matrix J(2, 2);
  J << -1, 1, 0, -1;
  auto m = estimate_M(J);
  CHECK_THAT(m.epsilon, WithinAbs(1.0, 1e-12));
  // Shifted propagator norm peaks at the last sample t = 200:
  // sigma_max([[1,0],[t,1]]) = (t + sqrt(t^2+4))/2, with 1.05x headroom.
  double t = 200.0;
  double expected = 1.05 * 0.5 * (t + std::sqrt(t * t + 4.0));
  CHECK_THAT(m.M_tilde, WithinRel(expected, 1e-9));
  CHECK_THAT(m.M_tilde, WithinRel(210.00524986875661, 1e-9));
}

TEST_CASE("estimate_M rejects non-Hurwitz input") {
  Matrix A = Matrix::Zero(2, 2);
  A.diagonal() << -1.0, 0.5;
  CHECK_THROWS_AS(estimate_M(A), numerical_error);
}

TEST_CASE("is_negative_semidefinite") {
  Matrix D = Matrix::Zero(2, 2);
  D.diagonal() << -1.0, 0.0;
  CHECK(is_negative_semidefinite(D, 0.0));
  D.diagonal() << -1.0, 1e-3;
  CHECK_FALSE(is_negative_semidefinite(D, 1e-6));
  CHECK(is_negative_semidefinite(D, 1e-2));
  Matrix A(2, 2);
  A << 0, 1, -1, 0;
  CHECK_THROWS_AS(is_negative_semidefinite(A, 1e-12), std::invalid_argument);
}

TEST_CASE("max_eigenvalue_symmetric") {
  Matrix S(2, 2);
  S << 2, 1, 1, 2;
  CHECK_THAT(max_eigenvalue_symmetric(S), WithinAbs(3.0, 1e-13));
}
