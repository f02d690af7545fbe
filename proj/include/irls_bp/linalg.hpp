#pragma once

// Dense kernels shared by the solver: SPD solves, the thin SVD of the
// measurement matrix and a warm-startable conjugate gradient.

#include "irls_bp/types.hpp"

#include <Eigen/Cholesky>
#include <Eigen/SVD>

#include <cmath>
#include <string>

namespace irls {

/// Solves M x = b for symmetric positive-definite M with a Cholesky
/// factorization plus one step of iterative refinement.
template <typename Scalar>
Vector<Scalar> solve_spd(const Matrix<Scalar>& M, const Vector<Scalar>& b) {
  const Index n = M.rows();
  if (n < 1 || M.cols() != n || b.size() != n) {
    throw Error(ErrorCode::InvalidArgument, "solve_spd: dimension mismatch");
  }
  if (b.squaredNorm() == Scalar(0)) return Vector<Scalar>::Zero(n);

  Eigen::LLT<Matrix<Scalar>> llt(M);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorCode::NotPositiveDefinite, "Cholesky factorization hit a nonpositive pivot");
  }
  const auto& L = llt.matrixLLT();
  for (Index i = 0; i < n; ++i) {
    if (!(L(i, i) > Scalar(0)) || !std::isfinite(static_cast<double>(L(i, i)))) {
      throw Error(ErrorCode::NotPositiveDefinite, "Cholesky factorization hit a nonpositive pivot");
    }
  }
  Vector<Scalar> x = llt.solve(b);
  const Vector<Scalar> r = b - M * x;
  x += llt.solve(r);
  return x;
}

/// Thin SVD data of a full-row-rank A (m x N): A = U diag(sigma) V^T, plus
/// the minimum-norm solution y_tilde of A x = y.
template <typename Scalar>
struct RangeFactors {
  Matrix<Scalar> V;  // N x m, orthonormal columns spanning range(A^T)
  Matrix<Scalar> U;  // m x m
  Vector<Scalar> sigma;
  Vector<Scalar> y_tilde;
};

inline constexpr double kRankThreshold = 1e-12;

template <typename Scalar>
RangeFactors<Scalar> thin_factorization(const Matrix<Scalar>& A, const Vector<Scalar>& y) {
  const Index m = A.rows();
  const Index N = A.cols();
  if (m < 1 || m > N || y.size() != m) {
    throw Error(ErrorCode::InvalidArgument, "thin_factorization: need 1 <= m <= N and |y| = m");
  }
  Eigen::BDCSVD<Matrix<Scalar>> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  RangeFactors<Scalar> f;
  f.sigma = svd.singularValues();
  const Scalar largest = f.sigma(0);
  const Scalar smallest = f.sigma(m - 1);
  if (!(largest > Scalar(0)) || !(smallest > Scalar(kRankThreshold) * largest)) {
    throw Error(ErrorCode::RankDeficient,
                "smallest singular value " + std::to_string(static_cast<double>(smallest)) +
                    " below threshold relative to " + std::to_string(static_cast<double>(largest)));
  }
  f.U = svd.matrixU();
  f.V = svd.matrixV();
  f.y_tilde = f.V * (f.U.transpose() * y).cwiseQuotient(f.sigma);
  return f;
}

template <typename Scalar>
struct CgResult {
  Vector<Scalar> x;
  int iters = 0;
};

/// Conjugate gradient for an SPD operator `apply(v) -> A v`, started at x0.
/// Stops at the first iterate with ||b - A x|| <= rel_tol ||b||, or after
/// max_iters iterations.
template <typename Scalar, typename Op>
CgResult<Scalar> cg_solve(const Op& apply, const Vector<Scalar>& b, const Vector<Scalar>& x0,
                          Scalar rel_tol, int max_iters) {
  if (!(rel_tol > Scalar(0) && rel_tol < Scalar(1)) || max_iters < 1) {
    throw Error(ErrorCode::InvalidArgument, "cg_solve: need rel_tol in (0,1) and max_iters >= 1");
  }
  if (x0.size() != b.size()) {
    throw Error(ErrorCode::InvalidArgument, "cg_solve: x0 and b differ in length");
  }
  CgResult<Scalar> out{x0, 0};
  Vector<Scalar> r = b - Vector<Scalar>(apply(out.x));
  const Scalar tol = rel_tol * b.norm();
  Scalar rr = r.squaredNorm();
  if (std::sqrt(rr) <= tol) return out;

  Vector<Scalar> p = r;
  while (out.iters < max_iters) {
    const Vector<Scalar> Ap = apply(p);
    const Scalar curvature = p.dot(Ap);
    if (!(curvature > Scalar(0))) {
      throw Error(ErrorCode::Breakdown, "cg_solve: nonpositive curvature, operator is not SPD");
    }
    const Scalar alpha = rr / curvature;
    out.x += alpha * p;
    r -= alpha * Ap;
    ++out.iters;
    const Scalar rr_next = r.squaredNorm();
    if (std::sqrt(rr_next) <= tol) break;
    p = r + (rr_next / rr) * p;
    rr = rr_next;
  }
  return out;
}

}  // namespace irls
