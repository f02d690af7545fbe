#pragma once

// Convergence metrics, support identification, null space property
// constants for small matrices, and runtime checks of the rate bounds.

#include "irls_bp/irls.hpp"
#include "irls_bp/lp.hpp"
#include "irls_bp/smoothing.hpp"
#include "irls_bp/types.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <optional>
#include <string>
#include <vector>

namespace irls {

struct RateMetrics {
  std::vector<std::optional<double>> mu;      // indexed like the trace; empty for k <= 1
  std::vector<std::optional<double>> mu_l1;
  std::vector<std::optional<double>> zeta;
  std::vector<std::optional<bool>> support_flags;
};

/// Metrics recomputed from the gap / l1_err columns of a trace.
template <typename Scalar>
RateMetrics convergence_factors(const Trace& trace, const Vector<Scalar>& x_star, Index s) {
  if (x_star.size() == 0) throw Error(ErrorCode::MissingGroundTruth, "convergence_factors: x_star is empty");
  if (trace.size() < 2) throw Error(ErrorCode::InvalidArgument, "convergence_factors: trace needs two records");
  for (std::size_t i = 1; i < trace.size(); ++i) {
    if (!trace[i].l1_err || !trace[i].gap) {
      throw Error(ErrorCode::MissingGroundTruth, "convergence_factors: trace lacks ground-truth columns");
    }
  }
  Scalar smallest = std::numeric_limits<Scalar>::infinity();
  for (Index i : top_s_indices(x_star, s)) smallest = std::min(smallest, std::abs(x_star(i)));

  RateMetrics out;
  const std::size_t n = trace.size();
  out.mu.resize(n);
  out.mu_l1.resize(n);
  out.zeta.resize(n);
  out.support_flags.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& r = trace[i];
    out.support_flags[i] = r.support_ok;
    if (r.k >= 1 && r.l1_err && smallest > Scalar(0)) out.zeta[i] = *r.l1_err / static_cast<double>(smallest);
    if (i == 0) continue;
    if (r.k >= 1) out.mu_l1[i] = detail::ratio(r.l1_err, trace[i - 1].l1_err);
    if (r.k >= 2) out.mu[i] = detail::ratio(r.gap, trace[i - 1].gap);
  }
  return out;
}

/// True iff the s largest |x_k| (ties by smaller index) sit exactly on the
/// s largest |x_star|.
template <typename Scalar>
bool support_identified(const Vector<Scalar>& x_k, const Vector<Scalar>& x_star, Index s) {
  if (x_k.size() != x_star.size()) throw Error(ErrorCode::InvalidArgument, "support_identified: size mismatch");
  return top_s_indices(x_k, s) == top_s_indices(x_star, s);
}

// ---------------------------------------------------------------------------
// Null space property constants

enum class NspMethod { ExactLP, BruteForceSigns, NullDim1 };

inline const char* to_string(NspMethod m) {
  switch (m) {
    case NspMethod::ExactLP: return "ExactLP";
    case NspMethod::BruteForceSigns: return "BruteForceSigns";
    case NspMethod::NullDim1: return "NullDim1";
  }
  return "?";
}

struct NspReport {
  Index order = 1;
  double rho = 0.0;  // +inf when some LP is unbounded
  bool satisfied = true;
  NspMethod method = NspMethod::ExactLP;
};

/// Orthonormal basis of ker(A) as columns (N x d), rank cut at 1e-12 relative.
template <typename Scalar>
Matrix<Scalar> null_space_basis(const Matrix<Scalar>& A) {
  const Index N = A.cols();
  Eigen::JacobiSVD<Matrix<Scalar>> svd(A, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  const Scalar cut = sv.size() > 0 ? Scalar(1e-12) * sv(0) : Scalar(0);
  Index rank = 0;
  for (Index i = 0; i < sv.size(); ++i) rank += sv(i) > cut ? 1 : 0;
  return svd.matrixV().rightCols(N - rank);
}

namespace detail {

inline NspReport make_report(Index order, double rho, NspMethod method) {
  return NspReport{order, rho, rho < 1.0, method};
}

// maximize sum_{i in S} sign_i (B c)_i  s.t.  sum_{j notin S} |(B c)_j| <= 1.
// Columns: c+ (d), c- (d), t (|S^c|), slacks (2|S^c| + 1).
template <typename Scalar>
LpResult<Scalar> nsp_lp(const Matrix<Scalar>& B, const std::vector<Index>& S, const std::vector<Scalar>& signs) {
  const Index N = B.rows();
  const Index d = B.cols();
  std::vector<bool> in_S(static_cast<std::size_t>(N), false);
  for (Index i : S) in_S[static_cast<std::size_t>(i)] = true;
  std::vector<Index> rest;
  for (Index j = 0; j < N; ++j) {
    if (!in_S[static_cast<std::size_t>(j)]) rest.push_back(j);
  }
  const Index r = static_cast<Index>(rest.size());
  const Index rows = 2 * r + 1;
  const Index cols = 2 * d + r + rows;
  Matrix<Scalar> M = Matrix<Scalar>::Zero(rows, cols);
  Vector<Scalar> b = Vector<Scalar>::Zero(rows);
  Vector<Scalar> c = Vector<Scalar>::Zero(cols);
  for (Index q = 0; q < r; ++q) {
    const auto bj = B.row(rest[static_cast<std::size_t>(q)]);
    // (Bc)_j - t_j <= 0 and -(Bc)_j - t_j <= 0
    M.block(2 * q, 0, 1, d) = bj;
    M.block(2 * q, d, 1, d) = -bj;
    M(2 * q, 2 * d + q) = Scalar(-1);
    M.block(2 * q + 1, 0, 1, d) = -bj;
    M.block(2 * q + 1, d, 1, d) = bj;
    M(2 * q + 1, 2 * d + q) = Scalar(-1);
    M(rows - 1, 2 * d + q) = Scalar(1);
  }
  b(rows - 1) = Scalar(1);
  M.rightCols(rows).setIdentity();
  for (std::size_t q = 0; q < S.size(); ++q) {
    const auto bi = B.row(S[q]);
    c.head(d) += signs[q] * bi.transpose();
    c.segment(d, d) -= signs[q] * bi.transpose();
  }
  return simplex_maximize<Scalar>(M, b, c);
}

}  // namespace detail

/// rho_1 = max over nonzero v in ker(A) of max_i |v_i| / ||v_{-i}||_1.
template <typename Scalar>
NspReport nsp_rho1(const Matrix<Scalar>& A) {
  if (A.rows() > A.cols()) throw Error(ErrorCode::InvalidArgument, "nsp_rho1: need m <= N");
  const Matrix<Scalar> B = null_space_basis(A);
  const Index N = A.cols();
  if (B.cols() == 0) return detail::make_report(1, 0.0, NspMethod::NullDim1);
  if (B.cols() == 1) {
    const Vector<Scalar> v = B.col(0);
    const Scalar total = v.template lpNorm<1>();
    double rho = 0.0;
    for (Index i = 0; i < N; ++i) {
      const Scalar rest = total - std::abs(v(i));
      rho = std::max(rho, rest > Scalar(0) ? static_cast<double>(std::abs(v(i)) / rest)
                                           : std::numeric_limits<double>::infinity());
    }
    return detail::make_report(1, rho, NspMethod::NullDim1);
  }
  double rho = 0.0;
  for (Index i = 0; i < N; ++i) {
    for (const Scalar sign : {Scalar(1), Scalar(-1)}) {
      const auto lp = detail::nsp_lp<Scalar>(B, {i}, {sign});
      if (lp.status == LpStatus::Unbounded) {
        return detail::make_report(1, std::numeric_limits<double>::infinity(), NspMethod::ExactLP);
      }
      if (lp.status != LpStatus::Optimal) throw Error(ErrorCode::Breakdown, "nsp_rho1: LP infeasible");
      rho = std::max(rho, static_cast<double>(lp.value));
    }
  }
  return detail::make_report(1, rho, NspMethod::ExactLP);
}

inline constexpr Index kBruteForceMaxN = 20;
inline constexpr Index kBruteForceMaxS = 3;

/// rho_s over every support of size s and every sign pattern on it.
template <typename Scalar>
NspReport nsp_rho_s_bruteforce(const Matrix<Scalar>& A, Index s) {
  const Index N = A.cols();
  if (s < 1 || s >= N) throw Error(ErrorCode::InvalidArgument, "nsp_rho_s_bruteforce: need 1 <= s < N");
  if (N > kBruteForceMaxN || s > kBruteForceMaxS) {
    throw Error(ErrorCode::TooLarge, "nsp_rho_s_bruteforce: requires N <= 20 and s <= 3");
  }
  const Matrix<Scalar> B = null_space_basis(A);
  if (B.cols() == 0) return detail::make_report(s, 0.0, NspMethod::BruteForceSigns);

  double rho = 0.0;
  std::vector<Index> S(static_cast<std::size_t>(s));
  for (Index i = 0; i < s; ++i) S[static_cast<std::size_t>(i)] = i;
  std::vector<Scalar> signs(static_cast<std::size_t>(s));
  while (true) {
    for (unsigned pattern = 0; pattern < (1u << s); ++pattern) {
      for (Index q = 0; q < s; ++q) signs[static_cast<std::size_t>(q)] = (pattern >> q) & 1u ? Scalar(-1) : Scalar(1);
      const auto lp = detail::nsp_lp<Scalar>(B, S, signs);
      if (lp.status == LpStatus::Unbounded) {
        return detail::make_report(s, std::numeric_limits<double>::infinity(), NspMethod::BruteForceSigns);
      }
      if (lp.status != LpStatus::Optimal) throw Error(ErrorCode::Breakdown, "nsp_rho_s_bruteforce: LP infeasible");
      rho = std::max(rho, static_cast<double>(lp.value));
    }
    // next combination in lexicographic order
    Index pos = s - 1;
    while (pos >= 0 && S[static_cast<std::size_t>(pos)] == N - s + pos) --pos;
    if (pos < 0) break;
    ++S[static_cast<std::size_t>(pos)];
    for (Index q = pos + 1; q < s; ++q) S[static_cast<std::size_t>(q)] = S[static_cast<std::size_t>(q - 1)] + 1;
  }
  return detail::make_report(s, rho, NspMethod::BruteForceSigns);
}

// ---------------------------------------------------------------------------
// Certifiers

inline constexpr double kGlobalRateConstant = 1.0 / 768.0;
inline constexpr double kApproxSparseConstant = 1.0 / 3072.0;
inline constexpr double kCertifySlack = 1e-8;

/// Improved rate constant (3/4 - rho_s)^2 / 48 for a known rho_s.
inline double sharp_rate_constant(double rho_s) { return (0.75 - rho_s) * (0.75 - rho_s) / 48.0; }

struct CertifyResult {
  bool passed = true;
  int first_failure_k = -1;
  std::string detail;
  explicit operator bool() const { return passed; }
};

namespace detail {
inline void fail(CertifyResult& r, int k, std::string what) {
  if (!r.passed) return;
  r.passed = false;
  r.first_failure_k = k;
  r.detail = std::move(what);
}
}  // namespace detail

/// Geometric decay of the smoothed gap and of the l1 error at factor
/// q = 1 - constant / (rho1 N), both anchored at k = 1. When rho_s is given
/// the constant is replaced by sharp_rate_constant(rho_s).
inline CertifyResult certify_global_rate(const Trace& trace, double rho1, Index N,
                                         double constant = kGlobalRateConstant,
                                         std::optional<double> rho_s = std::nullopt) {
  if (!(rho1 < 0.5)) throw Error(ErrorCode::HypothesisUnmet, "certify_global_rate: requires rho1 < 1/2");
  if (!(rho1 > 0.0) || N < 1) throw Error(ErrorCode::InvalidArgument, "certify_global_rate: need rho1 > 0, N >= 1");
  if (rho_s) {
    if (!(*rho_s < 0.5)) throw Error(ErrorCode::HypothesisUnmet, "certify_global_rate: requires rho_s < 1/2");
    constant = sharp_rate_constant(*rho_s);
  }
  const IterationRecord* anchor = nullptr;
  for (const auto& r : trace) {
    if (r.k == 1) anchor = &r;
  }
  if (anchor == nullptr || !anchor->gap || !anchor->l1_err || !std::isfinite(*anchor->gap)) {
    throw Error(ErrorCode::MissingGroundTruth, "certify_global_rate: trace lacks a finite gap at k = 1");
  }
  const double q = 1.0 - constant / (rho1 * static_cast<double>(N));
  CertifyResult out;
  for (const auto& r : trace) {
    if (r.k < 1) continue;
    if (!r.gap || !r.l1_err) throw Error(ErrorCode::MissingGroundTruth, "certify_global_rate: missing columns");
    const double factor = std::pow(q, r.k - 1) * (1.0 + kCertifySlack);
    if (!(*r.gap <= factor * *anchor->gap)) detail::fail(out, r.k, "smoothed gap above the geometric bound");
    if (!(*r.l1_err <= 9.0 * factor * *anchor->l1_err)) detail::fail(out, r.k, "l1 error above the geometric bound");
  }
  return out;
}

/// Two-sided control of J_eps(x) - ||x_star||_1 by the l1 error and the best
/// s-term errors, valid for eps <= sigma_s(x) / N.
template <typename Scalar>
bool certify_sandwich(const Vector<Scalar>& x, const Vector<Scalar>& x_star, Scalar eps, double rho_s, Index s) {
  if (x.size() != x_star.size()) throw Error(ErrorCode::InvalidArgument, "certify_sandwich: size mismatch");
  if (!(rho_s < 1.0) || rho_s < 0.0) throw Error(ErrorCode::HypothesisUnmet, "certify_sandwich: requires rho_s < 1");
  const Index N = x.size();
  const Scalar sigma_x = best_s_term_error(x, s);
  if (eps < Scalar(0) || eps > sigma_x / static_cast<Scalar>(N)) {
    throw Error(ErrorCode::HypothesisUnmet, "certify_sandwich: eps exceeds sigma_s(x) / N");
  }
  const double J = static_cast<double>(eps > Scalar(0) ? smoothed_objective(x, eps) : x.template lpNorm<1>());
  const double gap = J - static_cast<double>(x_star.template lpNorm<1>());
  const double err = static_cast<double>((x - x_star).template lpNorm<1>());
  const double lower = (1.0 - rho_s) / (1.0 + rho_s) * err - 2.0 * static_cast<double>(best_s_term_error(x_star, s));
  const double upper = 3.0 * static_cast<double>(sigma_x);
  return lower <= gap + kCertifySlack && gap <= upper + kCertifySlack;
}

/// First iteration from which the approximately sparse error bound applies.
inline long approx_sparse_start(double rho1, Index N, double initial_err, double sigma_star) {
  const double K = std::ceil(rho1 * static_cast<double>(N) * std::log(initial_err / sigma_star) / kApproxSparseConstant);
  return K > 0.0 ? static_cast<long>(K) : 0;
}

/// ||x^k - x_star||_1 <= 20 sigma_s(x_star) for every recorded k from
/// approx_sparse_start on. The initial error is taken from k = 0 when recorded,
/// otherwise from k = 1.
template <typename Scalar>
CertifyResult certify_approx_sparse(const Trace& trace, const Vector<Scalar>& x_star, Index s, double rho1, Index N) {
  if (!(rho1 < 0.125)) throw Error(ErrorCode::HypothesisUnmet, "certify_approx_sparse: requires rho1 < 1/8");
  const double sigma_star = static_cast<double>(best_s_term_error(x_star, s));
  if (!(sigma_star > 0.0)) throw Error(ErrorCode::HypothesisUnmet, "certify_approx_sparse: x_star is exactly s-sparse");
  std::optional<double> initial;
  for (const auto& r : trace) {
    if (r.l1_err && (r.k == 0 || (r.k == 1 && !initial))) initial = r.l1_err;
  }
  if (!initial) throw Error(ErrorCode::MissingGroundTruth, "certify_approx_sparse: trace lacks l1 errors");
  const long start = approx_sparse_start(rho1, N, *initial, sigma_star);
  CertifyResult out;
  for (const auto& r : trace) {
    if (r.k < start || r.k < 1) continue;
    if (!r.l1_err) throw Error(ErrorCode::MissingGroundTruth, "certify_approx_sparse: missing l1 error");
    if (!(*r.l1_err <= 20.0 * sigma_star * (1.0 + kCertifySlack))) {
      detail::fail(out, r.k, "l1 error above 20 sigma_s(x_star)");
    }
  }
  return out;
}

/// zeta(k) < 1 must imply an identified support. Only meaningful when
/// x_star is exactly s-sparse; returns the first offending k, if any.
inline std::optional<int> support_consistency_violation(const Trace& trace) {
  for (const auto& r : trace) {
    if (r.zeta && *r.zeta < 1.0 && r.support_ok && !*r.support_ok) return r.k;
  }
  return std::nullopt;
}

}  // namespace irls
