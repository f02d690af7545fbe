#pragma once

// IRLS for basis pursuit: alternate the weighted least squares step, the
// smoothing update eps_{k+1} = min(eps_k, sigma_s(x^{k+1}) / N) and the
// reweighting w_{k+1} = 1 / max(|x^{k+1}|, eps_{k+1}).

#include "irls_bp/config.hpp"
#include "irls_bp/linalg.hpp"
#include "irls_bp/smoothing.hpp"
#include "irls_bp/types.hpp"
#include "irls_bp/wls.hpp"

#include <cmath>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

namespace irls {

/// Basis pursuit instance: min ||x||_1 s.t. A x = y, with target sparsity s
/// and an optional ground truth used only for diagnostics.
template <typename Scalar>
struct Problem {
  Matrix<Scalar> A;
  Vector<Scalar> y;
  Index s = 1;
  std::optional<Vector<Scalar>> x_star;

  Problem() = default;
  Problem(Matrix<Scalar> A_, Vector<Scalar> y_, Index s_, std::optional<Vector<Scalar>> x_star_ = std::nullopt)
      : A(std::move(A_)), y(std::move(y_)), s(s_), x_star(std::move(x_star_)) {
    validate();
  }

  Index rows() const { return A.rows(); }
  Index cols() const { return A.cols(); }

  void validate() const {
    const Index m = A.rows();
    const Index N = A.cols();
    if (m < 1 || N < 1 || m > N) throw Error(ErrorCode::InvalidArgument, "problem: need 1 <= m <= N");
    if (y.size() != m) throw Error(ErrorCode::InvalidArgument, "problem: |y| must equal m");
    if (s < 1 || s >= N) throw Error(ErrorCode::InvalidArgument, "problem: need 1 <= s < N");
    if (!A.allFinite() || !y.allFinite()) throw Error(ErrorCode::InvalidArgument, "problem: non-finite data");
    if (x_star) {
      if (x_star->size() != N) throw Error(ErrorCode::InvalidArgument, "problem: |x_star| must equal N");
      const Scalar res = (A * *x_star - y).norm();
      if (!(res <= Scalar(1e-8) * std::max(Scalar(1), y.norm()))) {
        throw Error(ErrorCode::InvalidArgument, "problem: A x_star does not reproduce y");
      }
    }
  }
};

template <typename Scalar>
struct IterateState {
  std::optional<Vector<Scalar>> x;  // absent before the first step under uniform init
  Scalar eps = std::numeric_limits<Scalar>::infinity();
  Vector<Scalar> w;
  int k = 0;
  std::optional<WoodburyWarmStart<Scalar>> warm;
  bool weights_match_iterate = false;  // w == weights(x, eps), required by the Woodbury path
};

struct IterationRecord {
  int k = 0;
  double eps = 0.0;
  std::optional<double> J;
  std::optional<double> gap;
  std::optional<double> l1_err;
  std::optional<double> mu;
  std::optional<double> mu_l1;
  std::optional<double> zeta;
  std::optional<bool> support_ok;
  std::optional<StepPath> path;
  int cg_iters = 0;
  std::optional<double> feas_residual;
};

using Trace = std::vector<IterationRecord>;

enum class RunStatus { Converged, ExactSparse, MaxIters };

inline const char* to_string(RunStatus s) {
  switch (s) {
    case RunStatus::Converged: return "Converged";
    case RunStatus::ExactSparse: return "ExactSparse";
    case RunStatus::MaxIters: return "MaxIters";
  }
  return "?";
}

namespace detail {

template <typename Scalar>
double feasibility_residual(const Problem<Scalar>& p, const Vector<Scalar>& x) {
  const Scalar r = (p.A * x - p.y).norm();
  const Scalar ny = p.y.norm();
  return static_cast<double>(ny > Scalar(0) ? r / ny : r);
}

/// Ground-truth columns of a record for iterate x (J must already be set).
template <typename Scalar>
void fill_ground_truth(IterationRecord& rec, const Problem<Scalar>& p, const Vector<Scalar>& x) {
  if (!p.x_star) return;
  const Vector<Scalar>& xs = *p.x_star;
  if (rec.J) rec.gap = *rec.J - static_cast<double>(xs.template lpNorm<1>());
  const double err = static_cast<double>((x - xs).template lpNorm<1>());
  rec.l1_err = err;
  const auto S = top_s_indices(xs, p.s);
  Scalar smallest = std::numeric_limits<Scalar>::infinity();
  for (Index i : S) smallest = std::min(smallest, std::abs(xs(i)));
  if (smallest > Scalar(0)) rec.zeta = err / static_cast<double>(smallest);
  rec.support_ok = top_s_indices(x, p.s) == S;
}

inline std::optional<double> ratio(const std::optional<double>& num, const std::optional<double>& den) {
  if (!num || !den || !(*den > 0.0)) return std::nullopt;
  return *num / *den;
}

}  // namespace detail

template <typename Scalar>
struct StepResult {
  IterateState<Scalar> state;
  IterationRecord record;
  Vector<Scalar> w_used;  // weights of the least squares problem just solved
  bool exact_sparse = false;
};

/// One IRLS iteration k -> k+1. `factors` may be null, in which case only the
/// direct path is available. An s-sparse iterate (eps_{k+1} = 0) is reported
/// through `exact_sparse`; its weights are not formed.
template <typename Scalar>
StepResult<Scalar> irls_step(const IterateState<Scalar>& state, const Problem<Scalar>& problem,
                             const SolverConfig& config, const RangeFactors<Scalar>* factors) {
  const Index m = problem.rows();
  const Index N = problem.cols();
  if (state.w.size() != N || !(state.w.array() > Scalar(0)).all()) {
    throw Error(ErrorCode::InvalidArgument, "irls_step: weights must be positive with length N");
  }
  const int cg_max = config.cg_max_iters > 0 ? config.cg_max_iters : static_cast<int>(4 * m);
  const bool woodbury_possible = factors != nullptr && state.x && state.weights_match_iterate &&
                                 std::isfinite(static_cast<double>(state.eps)) && state.eps > Scalar(0);

  ActiveSet active;
  StepPath path = StepPath::Direct;
  if (woodbury_possible) {
    active = active_set(*state.x, state.eps);
    path = select_path(config, static_cast<double>(state.eps), active.size(), m);
    if (active.empty()) path = StepPath::Direct;
  }

  StepResult<Scalar> out;
  out.w_used = state.w;
  Vector<Scalar> x_next;
  int cg_iters = 0;
  std::optional<WoodburyWarmStart<Scalar>> warm_next;

  auto run_woodbury = [&] {
    const WoodburyWarmStart<Scalar>* warm = state.warm ? &*state.warm : nullptr;
    auto res = wls_woodbury<Scalar>(*factors, *state.x, state.eps, warm, static_cast<Scalar>(config.cg_rel_tol),
                                    cg_max);
    x_next = std::move(res.x);
    cg_iters = res.cg_iters;
    warm_next = WoodburyWarmStart<Scalar>{std::move(res.active), std::move(res.gamma)};
    path = StepPath::Woodbury;
  };

  if (path == StepPath::Woodbury) {
    run_woodbury();
  } else {
    try {
      x_next = wls_direct<Scalar>(problem.A, problem.y, state.w);
    } catch (const Error& e) {
      const bool retry = e.code() == ErrorCode::NotPositiveDefinite && config.wls_path == WlsPath::Auto &&
                         woodbury_possible && !active.empty();
      if (!retry) throw;
      run_woodbury();
    }
  }

  const Scalar eps_next = smoothing_update(state.eps, x_next, problem.s);

  IterationRecord& rec = out.record;
  rec.k = state.k + 1;
  rec.eps = static_cast<double>(eps_next);
  rec.J = static_cast<double>(eps_next > Scalar(0) ? smoothed_objective(x_next, eps_next)
                                                   : x_next.template lpNorm<1>());
  rec.path = path;
  rec.cg_iters = cg_iters;
  rec.feas_residual = detail::feasibility_residual(problem, x_next);
  detail::fill_ground_truth(rec, problem, x_next);

  out.state.k = state.k + 1;
  out.state.eps = eps_next;
  out.state.warm = std::move(warm_next);
  if (eps_next > Scalar(0)) {
    out.state.w = weights(x_next, eps_next);
    out.state.weights_match_iterate = true;
  } else {
    out.exact_sparse = true;
    out.state.w = state.w;
    out.state.weights_match_iterate = false;
  }
  out.state.x = std::move(x_next);
  return out;
}

template <typename Scalar>
struct InitialState {
  std::optional<Vector<Scalar>> w0;  // default all-ones
  std::optional<Vector<Scalar>> x0;
  Scalar eps0 = std::numeric_limits<Scalar>::infinity();
};

template <typename Scalar>
struct RunResult {
  Vector<Scalar> x;
  Trace trace;
  RunStatus status = RunStatus::MaxIters;
  int iterations = 0;
  std::vector<Vector<Scalar>> iterates;  // x^0 (if any), x^1, ... when config.record_iterates
};

/// Record for the initial state. J is only evaluable when x^0 exists:
/// J_{eps_0}(x^0) for finite eps_0, ||x^0||_1 when eps_0 = inf.
template <typename Scalar>
IterationRecord initial_record(const Problem<Scalar>& problem, const IterateState<Scalar>& state) {
  IterationRecord rec;
  rec.k = state.k;
  rec.eps = static_cast<double>(state.eps);
  if (state.x) {
    const auto& x = *state.x;
    const bool finite = std::isfinite(static_cast<double>(state.eps)) && state.eps > Scalar(0);
    rec.J = static_cast<double>(finite ? smoothed_objective(x, state.eps) : x.template lpNorm<1>());
    rec.feas_residual = detail::feasibility_residual(problem, x);
    detail::fill_ground_truth(rec, problem, x);
  }
  return rec;
}

template <typename Scalar>
RunResult<Scalar> irls_run(const Problem<Scalar>& problem, const SolverConfig& config,
                           const InitialState<Scalar>& init = {}) {
  problem.validate();
  if (config.max_iters < 1 || !(config.rel_change_tol > 0.0) || !(config.eps_floor > 0.0) ||
      !(config.cg_rel_tol > 0.0) || !(config.woodbury_active_fraction > 0.0) ||
      config.woodbury_active_fraction > 1.0) {
    throw Error(ErrorCode::InvalidArgument, "irls_run: invalid solver configuration");
  }
  const Index N = problem.cols();

  IterateState<Scalar> state;
  state.eps = init.eps0;
  state.x = init.x0;
  if (state.x && state.x->size() != N) throw Error(ErrorCode::InvalidArgument, "irls_run: |x0| must equal N");
  if (!(init.eps0 > Scalar(0))) throw Error(ErrorCode::InvalidArgument, "irls_run: eps0 must be positive");
  const bool finite_eps0 = std::isfinite(static_cast<double>(init.eps0));
  if (init.w0) {
    state.w = *init.w0;
    if (state.w.size() != N || !(state.w.array() > Scalar(0)).all()) {
      throw Error(ErrorCode::InvalidArgument, "irls_run: w0 must be strictly positive with length N");
    }
    state.weights_match_iterate = state.x && finite_eps0 && state.w == weights(*state.x, init.eps0);
  } else if (state.x && finite_eps0) {
    state.w = weights(*state.x, init.eps0);
    state.weights_match_iterate = true;
  } else {
    state.w = Vector<Scalar>::Ones(N);
  }

  std::optional<RangeFactors<Scalar>> factors;
  if (config.wls_path != WlsPath::Direct) factors = thin_factorization(problem.A, problem.y);

  RunResult<Scalar> out;
  IterationRecord prev = initial_record(problem, state);
  if (config.record_trace) out.trace.push_back(prev);
  if (config.record_iterates && state.x) out.iterates.push_back(*state.x);

  const Scalar y_scale = std::max(Scalar(1), problem.y.template lpNorm<1>());
  for (int it = 0; it < config.max_iters; ++it) {
    auto step = irls_step(state, problem, config, factors ? &*factors : nullptr);
    IterationRecord& rec = step.record;
    if (rec.k >= 2) rec.mu = detail::ratio(rec.gap, prev.gap);
    rec.mu_l1 = detail::ratio(rec.l1_err, prev.l1_err);
    if (config.record_trace) out.trace.push_back(rec);
    if (config.record_iterates) out.iterates.push_back(*step.state.x);
    ++out.iterations;

    const Vector<Scalar>& x_next = *step.state.x;
    if (step.exact_sparse) {
      out.status = RunStatus::ExactSparse;
      out.x = x_next;
      return out;
    }
    if (state.x) {
      const Scalar change = (x_next - *state.x).template lpNorm<1>();
      const Scalar scale = std::max(Scalar(1), state.x->template lpNorm<1>());
      const Scalar eps_small = std::max(static_cast<Scalar>(config.eps_floor) * y_scale / static_cast<Scalar>(N),
                                        static_cast<Scalar>(config.rel_change_tol) * x_next.template lpNorm<1>() /
                                            static_cast<Scalar>(N));
      const bool eps_ok = step.state.eps <= eps_small || step.state.eps == state.eps;
      if (change <= static_cast<Scalar>(config.rel_change_tol) * scale && eps_ok) {
        out.status = RunStatus::Converged;
        out.x = x_next;
        return out;
      }
    }
    prev = rec;
    state = std::move(step.state);
  }
  out.status = RunStatus::MaxIters;
  out.x = *state.x;
  return out;
}

}  // namespace irls
