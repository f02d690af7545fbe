#pragma once

// The smoothed l1 objective J_eps, its quadratic majorizer and the IRLS
// weight / smoothing rules.

#include "irls_bp/types.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

namespace irls {

/// Indices of the s largest |x_i|, ties broken towards the smaller index,
/// returned in increasing index order.
template <typename Derived>
std::vector<Index> top_s_indices(const Eigen::MatrixBase<Derived>& x, Index s) {
  const Index n = x.size();
  s = std::clamp<Index>(s, 0, n);
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  auto larger = [&x](Index a, Index b) {
    const auto ma = std::abs(x(a));
    const auto mb = std::abs(x(b));
    return ma > mb || (ma == mb && a < b);
  };
  std::nth_element(order.begin(), order.begin() + s, order.end(), larger);
  order.resize(static_cast<std::size_t>(s));
  std::sort(order.begin(), order.end());
  return order;
}

/// sigma_s(x)_{l1}: l1 mass outside the s largest-magnitude entries.
template <typename Derived>
typename Derived::Scalar best_s_term_error(const Eigen::MatrixBase<Derived>& x, Index s) {
  using Scalar = typename Derived::Scalar;
  if (s < 0 || s > x.size()) {
    throw Error(ErrorCode::InvalidArgument, "best_s_term_error: need 0 <= s <= N");
  }
  std::vector<bool> kept(static_cast<std::size_t>(x.size()), false);
  for (Index i : top_s_indices(x, s)) kept[static_cast<std::size_t>(i)] = true;
  Scalar tail(0);
  for (Index i = 0; i < x.size(); ++i) {
    if (!kept[static_cast<std::size_t>(i)]) tail += std::abs(x(i));
  }
  return tail;
}

template <typename Scalar>
Scalar smoothed_abs(Scalar t, Scalar eps) {
  const Scalar a = std::abs(t);
  return a > eps ? a : Scalar(0.5) * (t * t / eps + eps);
}

/// J_eps(x) = sum_i j_eps(x_i); requires 0 < eps < inf.
template <typename Derived>
typename Derived::Scalar smoothed_objective(const Eigen::MatrixBase<Derived>& x,
                                            typename Derived::Scalar eps) {
  using Scalar = typename Derived::Scalar;
  if (!(eps > Scalar(0)) || std::isinf(static_cast<double>(eps))) {
    throw Error(ErrorCode::InvalidArgument, "smoothed_objective: eps must be finite and positive");
  }
  Scalar sum(0);
  for (Index i = 0; i < x.size(); ++i) sum += smoothed_abs<Scalar>(x(i), eps);
  return sum;
}

/// Piecewise gradient of J_eps: sign(x_i) above eps, x_i / eps below.
template <typename Derived>
Vector<typename Derived::Scalar> smoothed_gradient(const Eigen::MatrixBase<Derived>& x,
                                                   typename Derived::Scalar eps) {
  using Scalar = typename Derived::Scalar;
  Vector<Scalar> g(x.size());
  for (Index i = 0; i < x.size(); ++i) {
    const Scalar a = std::abs(x(i));
    g(i) = a > eps ? x(i) / a : x(i) / eps;
  }
  return g;
}

/// w_i = 1 / max(|x_i|, eps).
template <typename Derived>
Vector<typename Derived::Scalar> weights(const Eigen::MatrixBase<Derived>& x,
                                         typename Derived::Scalar eps) {
  using Scalar = typename Derived::Scalar;
  if (!(eps > Scalar(0))) {
    throw Error(ErrorCode::InvalidArgument, "weights: eps must be positive");
  }
  return x.cwiseAbs().cwiseMax(eps).cwiseInverse();
}

/// Q_eps(z, x) = J_eps(x) + <z, W z>/2 - <x, W x>/2 with W = diag(weights(x, eps)).
template <typename DerivedZ, typename DerivedX>
typename DerivedX::Scalar quadratic_majorizer(const Eigen::MatrixBase<DerivedZ>& z,
                                              const Eigen::MatrixBase<DerivedX>& x,
                                              typename DerivedX::Scalar eps) {
  using Scalar = typename DerivedX::Scalar;
  if (z.size() != x.size()) {
    throw Error(ErrorCode::InvalidArgument, "quadratic_majorizer: length mismatch");
  }
  const Vector<Scalar> w = weights(x, eps);
  const Scalar zwz = (z.array().square() * w.array()).sum();
  const Scalar xwx = (x.array().square() * w.array()).sum();
  return smoothed_objective(x, eps) + Scalar(0.5) * zwz - Scalar(0.5) * xwx;
}

/// eps_{k+1} = min(eps_k, sigma_s(x_{k+1}) / N); eps_prev may be +inf.
template <typename Derived>
typename Derived::Scalar smoothing_update(typename Derived::Scalar eps_prev,
                                          const Eigen::MatrixBase<Derived>& x_next, Index s) {
  using Scalar = typename Derived::Scalar;
  const Scalar n = static_cast<Scalar>(x_next.size());
  return std::min(eps_prev, best_s_term_error(x_next, s) / n);
}

}  // namespace irls
