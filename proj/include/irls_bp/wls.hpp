#pragma once

// Weighted least squares step
//   x = argmin <z, diag(w) z>  subject to  A z = y
// through the m x m normal equations (direct path) or through the
// Woodbury-reduced |I| x |I| system solved by warm-started CG.

#include "irls_bp/config.hpp"
#include "irls_bp/linalg.hpp"
#include "irls_bp/types.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

namespace irls {

/// I = {i : |x_i| > eps}, strictly increasing.
struct ActiveSet {
  std::vector<Index> indices;

  Index size() const { return static_cast<Index>(indices.size()); }
  bool empty() const { return indices.empty(); }
  friend bool operator==(const ActiveSet&, const ActiveSet&) = default;
};

template <typename Derived>
ActiveSet active_set(const Eigen::MatrixBase<Derived>& x, typename Derived::Scalar eps) {
  ActiveSet set;
  for (Index i = 0; i < x.size(); ++i) {
    if (std::abs(x(i)) > eps) set.indices.push_back(i);
  }
  return set;
}

template <typename Scalar>
Vector<Scalar> gather(const Vector<Scalar>& v, const ActiveSet& set) {
  Vector<Scalar> out(set.size());
  for (Index j = 0; j < set.size(); ++j) out(j) = v(set.indices[static_cast<std::size_t>(j)]);
  return out;
}

template <typename Scalar>
Matrix<Scalar> gather_rows(const Matrix<Scalar>& M, const ActiveSet& set) {
  Matrix<Scalar> out(set.size(), M.cols());
  for (Index j = 0; j < set.size(); ++j) out.row(j) = M.row(set.indices[static_cast<std::size_t>(j)]);
  return out;
}

/// A diag(w)^{-1} A^T, both triangles filled.
template <typename Scalar>
Matrix<Scalar> weighted_gram(const Matrix<Scalar>& A, const Vector<Scalar>& w) {
  const Matrix<Scalar> B = A * w.cwiseInverse().cwiseSqrt().asDiagonal();
  Matrix<Scalar> M = Matrix<Scalar>::Zero(A.rows(), A.rows());
  M.template selfadjointView<Eigen::Lower>().rankUpdate(B);
  M.template triangularView<Eigen::StrictlyUpper>() = M.transpose();
  return M;
}

/// x = W^{-1} A^T (A W^{-1} A^T)^{-1} y.
template <typename Scalar>
Vector<Scalar> wls_direct(const Matrix<Scalar>& A, const Vector<Scalar>& y, const Vector<Scalar>& w) {
  if (w.size() != A.cols() || y.size() != A.rows()) {
    throw Error(ErrorCode::InvalidArgument, "wls_direct: dimension mismatch");
  }
  if (!(w.array() > Scalar(0)).all() || !w.allFinite()) {
    throw Error(ErrorCode::InvalidArgument, "wls_direct: weights must be positive and finite");
  }
  const Vector<Scalar> z = solve_spd(weighted_gram(A, w), y);
  return w.cwiseInverse().cwiseProduct(A.transpose() * z);
}

template <typename Scalar>
struct WoodburyWarmStart {
  ActiveSet prev_active;
  Vector<Scalar> prev_gamma;
};

template <typename Scalar>
struct WoodburyResult {
  Vector<Scalar> x;
  Vector<Scalar> gamma;  // over `active`
  ActiveSet active;
  int cg_iters = 0;
};

/// gamma^(0) = Q_I^* Q_{I_prev} gamma_prev: previous values on the common
/// indices, zero on indices new to I.
template <typename Scalar>
Vector<Scalar> project_warm_start(const ActiveSet& active, const WoodburyWarmStart<Scalar>* warm) {
  Vector<Scalar> g0 = Vector<Scalar>::Zero(active.size());
  if (warm == nullptr) return g0;
  if (warm->prev_gamma.size() != warm->prev_active.size()) {
    throw Error(ErrorCode::InvalidArgument, "warm start: gamma and active set lengths differ");
  }
  const auto& cur = active.indices;
  const auto& prev = warm->prev_active.indices;
  std::size_t a = 0, b = 0;
  while (a < cur.size() && b < prev.size()) {
    if (cur[a] == prev[b]) {
      g0(static_cast<Index>(a)) = warm->prev_gamma(static_cast<Index>(b));
      ++a;
      ++b;
    } else if (cur[a] < prev[b]) {
      ++a;
    } else {
      ++b;
    }
  }
  return g0;
}

inline constexpr Index kDenseSystemLimit = 256;

/// Woodbury-reduced weighted least squares step for the weights
/// w = 1 / max(|x_prev|, eps). The |I| x |I| system
///   G = eps (D_I^{-1} - eps Id)^{-1} + V_I V_I^T,   D_I^{-1} = diag(|x_prev,I|)
/// is solved by CG for the correction to the warm start; the output is
///   x = y_tilde - V V_I^T gamma  with gamma added on I.
template <typename Scalar>
WoodburyResult<Scalar> wls_woodbury(const RangeFactors<Scalar>& factors, const Vector<Scalar>& x_prev,
                                    Scalar eps, const WoodburyWarmStart<Scalar>* warm, Scalar cg_rel_tol,
                                    int cg_max_iters) {
  if (!(eps > Scalar(0)) || std::isinf(static_cast<double>(eps))) {
    throw Error(ErrorCode::InvalidArgument, "wls_woodbury: eps must be finite and positive");
  }
  if (x_prev.size() != factors.V.rows()) {
    throw Error(ErrorCode::InvalidArgument, "wls_woodbury: iterate length differs from N");
  }
  WoodburyResult<Scalar> out;
  out.active = active_set(x_prev, eps);
  if (out.active.empty()) {
    throw Error(ErrorCode::EmptyActiveSet, "wls_woodbury: no entry exceeds eps");
  }
  const Index k = out.active.size();
  const Matrix<Scalar> VI = gather_rows(factors.V, out.active);
  Vector<Scalar> diag(k);
  for (Index j = 0; j < k; ++j) {
    const Scalar a = std::abs(x_prev(out.active.indices[static_cast<std::size_t>(j)]));
    diag(j) = eps / (a - eps);
  }

  Matrix<Scalar> G;
  if (k <= kDenseSystemLimit) {
    G = VI * VI.transpose();
    G.diagonal() += diag;
  }
  auto apply = [&](const Vector<Scalar>& v) -> Vector<Scalar> {
    if (k <= kDenseSystemLimit) return G * v;
    return diag.cwiseProduct(v) + VI * (VI.transpose() * v);
  };

  const Vector<Scalar> gamma0 = project_warm_start(out.active, warm);
  const Vector<Scalar> rhs = gather(factors.y_tilde, out.active);
  const Vector<Scalar> h = rhs - apply(gamma0);
  const Scalar target = cg_rel_tol * rhs.norm();
  const Scalar h_norm = h.norm();

  Vector<Scalar> delta = Vector<Scalar>::Zero(k);
  if (h_norm > target) {
    const Scalar rel = target / h_norm;
    auto cg = cg_solve<Scalar>(apply, h, delta, rel, cg_max_iters);
    delta = std::move(cg.x);
    out.cg_iters = cg.iters;
  }
  out.gamma = gamma0 + delta;

  out.x = factors.y_tilde - factors.V * (VI.transpose() * out.gamma);
  for (Index j = 0; j < k; ++j) out.x(out.active.indices[static_cast<std::size_t>(j)]) += out.gamma(j);
  return out;
}

/// Auto picks Woodbury once eps is finite and |I| <= fraction * m.
inline StepPath select_path(const SolverConfig& config, double eps, Index active_size, Index m) {
  switch (config.wls_path) {
    case WlsPath::Direct: return StepPath::Direct;
    case WlsPath::Woodbury: return StepPath::Woodbury;
    case WlsPath::Auto: break;
  }
  if (std::isinf(eps)) return StepPath::Direct;
  return static_cast<double>(active_size) <= config.woodbury_active_fraction * static_cast<double>(m)
             ? StepPath::Woodbury
             : StepPath::Direct;
}

template <typename Scalar>
Scalar spectral_condition(const Matrix<Scalar>& S) {
  Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> eig(S, Eigen::EigenvaluesOnly);
  const auto& ev = eig.eigenvalues();
  const Scalar lo = ev(0);
  const Scalar hi = ev(ev.size() - 1);
  if (!(lo > Scalar(0))) return std::numeric_limits<Scalar>::infinity();
  return hi / lo;
}

template <typename Scalar>
struct ConditionReport {
  Scalar kappa_G;
  Scalar kappa_full;
};

/// 2-norm condition numbers of the Woodbury system G (for the active set of
/// x_prev at eps) and of A diag(w)^{-1} A^T.
template <typename Scalar>
ConditionReport<Scalar> condition_diagnostics(const Matrix<Scalar>& A, const Vector<Scalar>& w,
                                              const Vector<Scalar>& x_prev, Scalar eps) {
  const auto factors = thin_factorization<Scalar>(A, Vector<Scalar>::Zero(A.rows()));
  const ActiveSet I = active_set(x_prev, eps);
  if (I.empty()) {
    throw Error(ErrorCode::EmptyActiveSet, "condition_diagnostics: no entry exceeds eps");
  }
  const Matrix<Scalar> VI = gather_rows(factors.V, I);
  Matrix<Scalar> G = VI * VI.transpose();
  for (Index j = 0; j < I.size(); ++j) {
    G(j, j) += eps / (std::abs(x_prev(I.indices[static_cast<std::size_t>(j)])) - eps);
  }
  return {spectral_condition(G), spectral_condition(weighted_gram(A, w))};
}

}  // namespace irls
