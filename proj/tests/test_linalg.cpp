#include "test_support.hpp"

#include "irls_bp/linalg.hpp"

#include <Eigen/LU>

using namespace irls;
using testing::gaussian_matrix;
using testing::gaussian_vector;

TEST_CASE("solve_spd matches an LU solve on random SPD systems") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const Index n = 3 + trial;
    const MatrixXd B = gaussian_matrix(n, n + 2, rng);
    const MatrixXd M = B * B.transpose() + 0.1 * MatrixXd::Identity(n, n);
    const VectorXd b = gaussian_vector(n, rng);
    const VectorXd x = solve_spd<double>(M, b);
    const VectorXd ref = M.fullPivLu().solve(b);
    CHECK((x - ref).norm() <= 1e-10 * ref.norm());
  }
}

TEST_CASE("solve_spd returns zero for zero right-hand side") {
  const MatrixXd M = MatrixXd::Identity(3, 3);
  CHECK(solve_spd<double>(M, VectorXd::Zero(3)).isZero(0.0));
}

TEST_CASE("solve_spd rejects indefinite and mismatched input") {
  MatrixXd M(2, 2);
  M << 1, 2, 2, 1;
  const VectorXd b = VectorXd::Ones(2);
  CHECK_THROWS_AS(solve_spd<double>(M, b), Error);
  try {
    solve_spd<double>(M, b);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NotPositiveDefinite);
  }
  CHECK_THROWS_AS(solve_spd<double>(M, VectorXd::Ones(3)), Error);
}

TEST_CASE("thin_factorization reproduces A and the minimum-norm solution") {
  std::mt19937_64 rng(5);
  const MatrixXd A = gaussian_matrix(7, 19, rng);
  const VectorXd y = gaussian_vector(7, rng);
  const auto f = thin_factorization<double>(A, y);
  CHECK(f.V.rows() == 19);
  CHECK(f.V.cols() == 7);
  CHECK((f.V.transpose() * f.V - MatrixXd::Identity(7, 7)).norm() <= 1e-12);
  CHECK((f.U.transpose() * f.U - MatrixXd::Identity(7, 7)).norm() <= 1e-12);
  CHECK((f.U * f.sigma.asDiagonal() * f.V.transpose() - A).norm() <= 1e-12 * A.norm());
  const VectorXd min_norm = A.transpose() * (A * A.transpose()).fullPivLu().solve(y);
  CHECK((f.y_tilde - min_norm).norm() <= 1e-12 * min_norm.norm());
}

TEST_CASE("thin_factorization flags rank deficiency") {
  MatrixXd A(2, 4);
  A << 1, 2, 3, 4, 2, 4, 6, 8;
  try {
    thin_factorization<double>(A, VectorXd::Ones(2));
    FAIL("expected RankDeficient");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::RankDeficient);
  }
}

TEST_CASE("cg_solve converges to the direct solution") {
  std::mt19937_64 rng(3);
  const Index n = 30;
  const MatrixXd B = gaussian_matrix(n, n, rng);
  const MatrixXd M = B * B.transpose() + MatrixXd::Identity(n, n);
  const VectorXd b = gaussian_vector(n, rng);
  auto apply = [&](const VectorXd& v) -> VectorXd { return M * v; };
  const auto res = cg_solve<double>(apply, b, VectorXd::Zero(n), 1e-12, 4 * n);
  CHECK((M * res.x - b).norm() <= 1e-12 * b.norm());
  CHECK(res.iters <= 4 * n);
  const VectorXd ref = M.llt().solve(b);
  CHECK((res.x - ref).norm() <= 1e-8 * ref.norm());
}

TEST_CASE("cg_solve from the exact solution needs no iterations") {
  const MatrixXd M = VectorXd::LinSpaced(5, 1.0, 5.0).asDiagonal();
  const VectorXd x = VectorXd::Ones(5);
  auto apply = [&](const VectorXd& v) -> VectorXd { return M * v; };
  const auto res = cg_solve<double>(apply, VectorXd(M * x), x, 1e-12, 10);
  CHECK(res.iters == 0);
}

TEST_CASE("cg_solve on a diagonal operator with k distinct eigenvalues takes at most k steps") {
  VectorXd d(6);
  d << 1, 1, 2, 2, 3, 3;
  auto apply = [&](const VectorXd& v) -> VectorXd { return d.cwiseProduct(v); };
  const auto res = cg_solve<double>(apply, VectorXd::Ones(6), VectorXd::Zero(6), 1e-12, 50);
  CHECK(res.iters <= 3);
  CHECK((res.x - d.cwiseInverse()).norm() <= 1e-10);
}

TEST_CASE("cg_solve reports breakdown on an indefinite operator and validates tolerances") {
  VectorXd d(2);
  d << 1, -1;
  auto apply = [&](const VectorXd& v) -> VectorXd { return d.cwiseProduct(v); };
  VectorXd b(2);
  b << 1, 1;
  try {
    cg_solve<double>(apply, b, VectorXd::Zero(2), 1e-12, 10);
    FAIL("expected Breakdown");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Breakdown);
  }
  CHECK_THROWS_AS(cg_solve<double>(apply, b, VectorXd::Zero(2), 0.0, 10), Error);
  CHECK_THROWS_AS(cg_solve<double>(apply, b, VectorXd::Zero(2), 1e-6, 0), Error);
}

TEST_CASE("kernels instantiate for long double") {
  Matrix<long double> M = Matrix<long double>::Identity(3, 3) * 2.0L;
  Vector<long double> b = Vector<long double>::Ones(3);
  const auto x = solve_spd<long double>(M, b);
  CHECK(std::abs(static_cast<double>(x(0)) - 0.5) <= 1e-15);
}
