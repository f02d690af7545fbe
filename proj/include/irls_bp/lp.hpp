#pragma once

// Small dense two-phase simplex for
//   maximize c^T x  subject to  A x = b,  x >= 0.
// Sized for the null space property LPs (a few hundred columns). Pricing is
// Dantzig's rule, switching to Bland's rule while pivots stay degenerate; the
// tableau is periodically rebuilt from the original data to stop drift.

#include "irls_bp/types.hpp"

#include <Eigen/LU>

#include <cmath>
#include <limits>
#include <vector>

namespace irls {

enum class LpStatus { Optimal, Unbounded, Infeasible };

template <typename Scalar>
struct LpResult {
  LpStatus status = LpStatus::Infeasible;
  Scalar value = Scalar(0);
  Vector<Scalar> x;
};

namespace detail {

template <typename Scalar>
class Tableau {
 public:
  // `system` is [A | artificial columns | b]; row `rows` of the tableau holds
  // reduced costs (entering candidates have cost > tol) and -c_B^T x_B.
  Tableau(Matrix<Scalar> system, std::vector<Index> basis, Scalar tol)
      : system_(std::move(system)), basis_(std::move(basis)), tol_(tol) {
    T_ = Matrix<Scalar>::Zero(system_.rows() + 1, system_.cols());
    cost_ = Vector<Scalar>::Zero(system_.cols() - 1);
  }

  Index rows() const { return system_.rows(); }
  Index cols() const { return system_.cols() - 1; }
  const std::vector<Index>& basis() const { return basis_; }
  Scalar rhs(Index i) const { return T_(i, cols()); }
  Scalar entry(Index i, Index j) const { return T_(i, j); }
  Scalar objective_rhs() const { return T_(rows(), cols()); }

  void set_cost(Vector<Scalar> cost) {
    cost_ = std::move(cost);
    reinvert();
  }

  /// Rebuilds B^{-1} [A | b] and the reduced costs from the original system.
  void reinvert() {
    const Index m = rows();
    Matrix<Scalar> Bm(m, m);
    for (Index i = 0; i < m; ++i) Bm.col(i) = system_.col(basis_[static_cast<std::size_t>(i)]);
    Eigen::PartialPivLU<Matrix<Scalar>> lu(Bm);
    T_.topRows(m) = lu.solve(system_);
    for (Index i = 0; i < m; ++i) {
      T_.col(basis_[static_cast<std::size_t>(i)]).setZero();
      T_(i, basis_[static_cast<std::size_t>(i)]) = Scalar(1);
    }
    T_.row(m).head(cols()) = cost_.transpose();
    T_(m, cols()) = Scalar(0);
    for (Index i = 0; i < m; ++i) {
      const Scalar cb = cost_(basis_[static_cast<std::size_t>(i)]);
      if (cb != Scalar(0)) T_.row(m) -= cb * T_.row(i);
    }
    since_reinvert_ = 0;
  }

  void pivot(Index r, Index c) {
    const Scalar pivot_value = T_(r, c);
    T_.row(r) /= pivot_value;
    for (Index i = 0; i < T_.rows(); ++i) {
      const Scalar factor = T_(i, c);
      if (i != r && factor != Scalar(0)) T_.row(i) -= factor * T_.row(r);
    }
    basis_[static_cast<std::size_t>(r)] = c;
    if (++since_reinvert_ >= kReinvertEvery) reinvert();
  }

  enum class Outcome { Optimal, Unbounded, ReachedZero };

  /// Simplex iterations over columns [0, usable).
  Outcome optimize(Index usable, bool stop_at_zero) {
    const Index m = rows();
    int degenerate_run = 0;
    bool verified = false;
    for (int guard = 0; guard < kMaxPivots; ++guard) {
      if (stop_at_zero && T_(m, cols()) <= tol_) return Outcome::ReachedZero;
      const bool bland = degenerate_run > kDegenerateBeforeBland;
      const Index enter = entering(usable, bland);
      if (enter < 0) {
        if (verified) return Outcome::Optimal;
        reinvert();
        verified = true;
        continue;
      }
      const Index leave = leaving(enter, bland);
      if (leave < 0) {
        if (verified) return Outcome::Unbounded;
        reinvert();
        verified = true;
        continue;
      }
      verified = false;
      const Scalar step = T_(leave, cols()) / T_(leave, enter);
      degenerate_run = step <= tol_ ? degenerate_run + 1 : 0;
      pivot(leave, enter);
    }
    throw Error(ErrorCode::Breakdown, "simplex: pivot limit exceeded");
  }

  /// Pivots remaining artificial columns (index >= first_artificial) out of
  /// the basis where possible; rows with no usable pivot are redundant.
  void drive_out_artificials(Index first_artificial) {
    for (Index i = 0; i < rows(); ++i) {
      if (basis_[static_cast<std::size_t>(i)] < first_artificial) continue;
      Index col = -1;
      Scalar best = tol_;
      for (Index j = 0; j < first_artificial; ++j) {
        if (std::abs(T_(i, j)) > best) {
          best = std::abs(T_(i, j));
          col = j;
        }
      }
      if (col >= 0) pivot(i, col);
    }
    reinvert();
  }

 private:
  static constexpr int kReinvertEvery = 32;
  static constexpr int kDegenerateBeforeBland = 16;
  static constexpr int kMaxPivots = 200000;

  Index entering(Index usable, bool bland) const {
    const Index m = rows();
    Index enter = -1;
    Scalar best = tol_;
    for (Index j = 0; j < usable; ++j) {
      if (T_(m, j) > best) {
        enter = j;
        if (bland) break;
        best = T_(m, j);
      }
    }
    return enter;
  }

  Index leaving(Index enter, bool bland) const {
    Index leave = -1;
    Scalar best_ratio = std::numeric_limits<Scalar>::infinity();
    for (Index i = 0; i < rows(); ++i) {
      const Scalar a = T_(i, enter);
      if (a <= tol_) continue;
      const Scalar ratio = std::max(T_(i, cols()), Scalar(0)) / a;
      if (leave < 0 || ratio < best_ratio - tol_) {
        best_ratio = ratio;
        leave = i;
      } else if (ratio <= best_ratio + tol_) {
        const bool better = bland ? basis_[static_cast<std::size_t>(i)] < basis_[static_cast<std::size_t>(leave)]
                                  : a > T_(leave, enter);
        if (better) {
          best_ratio = std::min(best_ratio, ratio);
          leave = i;
        }
      }
    }
    return leave;
  }

  Matrix<Scalar> system_;
  std::vector<Index> basis_;
  Scalar tol_;
  Matrix<Scalar> T_;
  Vector<Scalar> cost_;
  int since_reinvert_ = 0;
};

}  // namespace detail

template <typename Scalar>
LpResult<Scalar> simplex_maximize(const Matrix<Scalar>& A, const Vector<Scalar>& b, const Vector<Scalar>& c,
                                  Scalar tol = Scalar(1e-10)) {
  const Index m = A.rows();
  const Index n = A.cols();
  if (b.size() != m || c.size() != n) throw Error(ErrorCode::InvalidArgument, "simplex: dimension mismatch");

  // Rows whose slack-like column (unit vector, b_i >= 0) can start the
  // basis need no artificial; the others get one in columns n, n+1, ...
  std::vector<Index> basis(static_cast<std::size_t>(m), -1);
  for (Index j = 0; j < n; ++j) {
    Index row = -1;
    bool unit = true;
    for (Index i = 0; i < m && unit; ++i) {
      if (A(i, j) == Scalar(0)) continue;
      if (A(i, j) == Scalar(1) && row < 0) {
        row = i;
      } else {
        unit = false;
      }
    }
    if (unit && row >= 0 && b(row) >= Scalar(0) && basis[static_cast<std::size_t>(row)] < 0) {
      basis[static_cast<std::size_t>(row)] = j;
    }
  }
  Index n_art = 0;
  for (Index i = 0; i < m; ++i) n_art += basis[static_cast<std::size_t>(i)] < 0 ? 1 : 0;

  Matrix<Scalar> system = Matrix<Scalar>::Zero(m, n + n_art + 1);
  Index next_art = n;
  for (Index i = 0; i < m; ++i) {
    const Scalar sign = b(i) < Scalar(0) ? Scalar(-1) : Scalar(1);
    system.row(i).head(n) = sign * A.row(i);
    system(i, n + n_art) = sign * b(i);
    if (basis[static_cast<std::size_t>(i)] < 0) {
      system(i, next_art) = Scalar(1);
      basis[static_cast<std::size_t>(i)] = next_art++;
    }
  }
  detail::Tableau<Scalar> tab(std::move(system), std::move(basis), tol);

  const Scalar scale = std::max(Scalar(1), b.cwiseAbs().maxCoeff());
  if (n_art > 0) {
    Vector<Scalar> phase1 = Vector<Scalar>::Zero(n + n_art);
    phase1.tail(n_art).setConstant(Scalar(-1));
    tab.set_cost(std::move(phase1));
    tab.optimize(n, true);
    if (tab.objective_rhs() > Scalar(1e3) * tol * scale) return {LpStatus::Infeasible, Scalar(0), {}};
    tab.drive_out_artificials(n);
  }

  Vector<Scalar> cost = Vector<Scalar>::Zero(n + n_art);
  cost.head(n) = c;
  tab.set_cost(std::move(cost));
  if (tab.optimize(n, false) == detail::Tableau<Scalar>::Outcome::Unbounded) {
    return {LpStatus::Unbounded, std::numeric_limits<Scalar>::infinity(), {}};
  }

  LpResult<Scalar> out;
  out.status = LpStatus::Optimal;
  out.x = Vector<Scalar>::Zero(n);
  for (Index i = 0; i < m; ++i) {
    const Index bj = tab.basis()[static_cast<std::size_t>(i)];
    if (bj < n) out.x(bj) = std::max(tab.rhs(i), Scalar(0));
  }
  out.value = c.dot(out.x);
  return out;
}

}  // namespace irls
