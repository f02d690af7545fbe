#include "irls_bp/experiments.hpp"

#include "irls_bp/smoothing.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <random>
#include <thread>

namespace irls {

namespace {

std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::vector<Index> sample_support(Index N, Index s, std::mt19937_64& rng) {
  std::vector<Index> idx(static_cast<std::size_t>(N));
  std::iota(idx.begin(), idx.end(), Index{0});
  for (Index i = 0; i < s; ++i) {
    std::uniform_int_distribution<Index> pick(i, N - 1);
    std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(pick(rng))]);
  }
  idx.resize(static_cast<std::size_t>(s));
  std::sort(idx.begin(), idx.end());
  return idx;
}

std::optional<double> final_l1_error(const Trace& trace) {
  return trace.empty() ? std::nullopt : trace.back().l1_err;
}

}  // namespace

Index EnsembleSpec::resolved_m() const { return m ? *m : measurement_count(N, s, c_m); }

void EnsembleSpec::validate() const {
  if (s < 1 || s >= N) throw Error(ErrorCode::InvalidArgument, "ensemble: need 1 <= s < N");
  if (trials < 1) throw Error(ErrorCode::InvalidArgument, "ensemble: trials must be >= 1");
  if (!m && !(c_m > 0.0)) throw Error(ErrorCode::InvalidArgument, "ensemble: c_m must be positive");
  const Index mm = resolved_m();
  if (mm <= s || mm >= N) throw Error(ErrorCode::InvalidArgument, "ensemble: need s < m < N");
}

Index measurement_count(Index N, Index s, double c_m) {
  if (s < 1 || s >= N) throw Error(ErrorCode::InvalidArgument, "measurement_count: need 0 < s < N");
  if (!(c_m > 0.0)) throw Error(ErrorCode::InvalidArgument, "measurement_count: c_m must be positive");
  const double value = std::floor(c_m * static_cast<double>(s) *
                                  std::log(static_cast<double>(N) / static_cast<double>(s)));
  if (value >= static_cast<double>(N)) {
    throw Error(ErrorCode::ResultNotLessThanN, "measurement_count: m = " + std::to_string(static_cast<long long>(value)) +
                                                   " is not below N = " + std::to_string(N));
  }
  return static_cast<Index>(value);
}

std::uint64_t trial_seed(std::uint64_t seed, std::uint64_t index) {
  return splitmix64(splitmix64(seed) ^ (index + 1) * 0xD1B54A32D192ED03ULL);
}

Problem<double> gen_gaussian_problem(Index N, Index m, Index s, std::uint64_t seed) {
  if (!(s >= 1 && s < m && m < N)) throw Error(ErrorCode::InvalidArgument, "gen_gaussian_problem: need 1 <= s < m < N");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> entry(0.0, 1.0 / std::sqrt(static_cast<double>(m)));
  MatrixXd A(m, N);
  for (Index j = 0; j < N; ++j) {
    for (Index i = 0; i < m; ++i) A(i, j) = entry(rng);
  }
  const auto support = sample_support(N, s, rng);
  std::normal_distribution<double> standard(0.0, 1.0);
  VectorXd direction(s);
  do {
    for (Index i = 0; i < s; ++i) direction(i) = standard(rng);
  } while (direction.norm() == 0.0);
  direction /= direction.norm();
  VectorXd x_star = VectorXd::Zero(N);
  for (Index i = 0; i < s; ++i) x_star(support[static_cast<std::size_t>(i)]) = direction(i);
  VectorXd y = A * x_star;
  return Problem<double>(std::move(A), std::move(y), s, std::move(x_star));
}

VectorXd add_tail(const VectorXd& x_star, double tail_l1, std::uint64_t seed) {
  if (!(tail_l1 >= 0.0)) throw Error(ErrorCode::InvalidArgument, "add_tail: tail_l1 must be >= 0");
  if (tail_l1 == 0.0) return x_star;
  std::vector<Index> zeros;
  double smallest = std::numeric_limits<double>::infinity();
  for (Index i = 0; i < x_star.size(); ++i) {
    if (x_star(i) == 0.0) {
      zeros.push_back(i);
    } else {
      smallest = std::min(smallest, std::abs(x_star(i)));
    }
  }
  if (zeros.empty()) throw Error(ErrorCode::InvalidArgument, "add_tail: x_star has no zero coordinates");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> standard(0.0, 1.0);
  // Tail entries must stay below the smallest signal entry so that the
  // signal remains the top-s part; redraw until that holds.
  for (int attempt = 0; attempt < 1000; ++attempt) {
    VectorXd tail(static_cast<Index>(zeros.size()));
    for (Index i = 0; i < tail.size(); ++i) tail(i) = standard(rng);
    const double l1 = tail.lpNorm<1>();
    if (l1 == 0.0) continue;
    tail *= tail_l1 / l1;
    if (tail.cwiseAbs().maxCoeff() >= smallest) continue;
    VectorXd out = x_star;
    for (Index i = 0; i < tail.size(); ++i) out(zeros[static_cast<std::size_t>(i)]) = tail(i);
    return out;
  }
  throw Error(ErrorCode::InvalidArgument, "add_tail: tail_l1 too large relative to the signal");
}

SolverConfig default_inner_config() {
  SolverConfig c;
  c.max_iters = 60;
  c.wls_path = WlsPath::Direct;
  c.record_trace = false;
  return c;
}

InitialState<double> adversary_initial_weights(const Problem<double>& problem, const SolverConfig& inner_config) {
  if (!problem.x_star) throw Error(ErrorCode::MissingGroundTruth, "adversary init: x_star required");
  const Index N = problem.cols();
  const Index m = problem.rows();
  const Index s = problem.s;
  const auto S = top_s_indices(*problem.x_star, s);
  std::vector<bool> on_support(static_cast<std::size_t>(N), false);
  for (Index i : S) on_support[static_cast<std::size_t>(i)] = true;
  std::vector<Index> rest;
  for (Index j = 0; j < N; ++j) {
    if (!on_support[static_cast<std::size_t>(j)]) rest.push_back(j);
  }
  const Index n_rest = static_cast<Index>(rest.size());
  MatrixXd A_rest(m, n_rest);
  for (Index q = 0; q < n_rest; ++q) A_rest.col(q) = problem.A.col(rest[static_cast<std::size_t>(q)]);

  VectorXd z;
  try {
    if (n_rest > m) {
      const Problem<double> restricted(A_rest, problem.y, std::min(s, n_rest - 1));
      SolverConfig cfg = inner_config;
      cfg.record_trace = false;
      cfg.record_iterates = false;
      z = irls_run(restricted, cfg).x;
    } else {
      // Square or overdetermined restriction: the feasible set is at most a
      // point, so take the least squares solution.
      z = A_rest.colPivHouseholderQr().solve(problem.y);
    }
  } catch (const Error& e) {
    throw Error(ErrorCode::InnerSolveFailed, std::string("adversary init: ") + e.what());
  }
  if (!z.allFinite()) throw Error(ErrorCode::InnerSolveFailed, "adversary init: non-finite restricted solution");

  VectorXd x0 = VectorXd::Zero(N);
  for (Index q = 0; q < n_rest; ++q) x0(rest[static_cast<std::size_t>(q)]) = z(q);
  const double eps0 = best_s_term_error(x0, s) / static_cast<double>(N);
  if (!(eps0 > 0.0)) throw Error(ErrorCode::InnerSolveFailed, "adversary init: restricted solution is s-sparse");
  InitialState<double> init;
  init.w0 = weights(x0, eps0);
  init.x0 = std::move(x0);
  init.eps0 = eps0;
  return init;
}

void parallel_for(int count, int threads, const std::function<void(int)>& task) {
  if (count <= 0) return;
  const int workers = std::clamp(threads, 1, count);
  if (workers == 1) {
    for (int i = 0; i < count; ++i) task(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (int i = next++; i < count; i = next++) {
        try {
          task(i);
        } catch (...) {
          const std::lock_guard<std::mutex> lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

std::vector<ExperimentRow> run_rate_experiment(const EnsembleSpec& spec, const SolverConfig& config, int threads,
                                               const SolverConfig& inner_config) {
  spec.validate();
  const Index m = spec.resolved_m();
  SolverConfig cfg = config;
  cfg.record_trace = true;

  std::vector<std::vector<ExperimentRow>> per_trial(static_cast<std::size_t>(spec.trials));
  parallel_for(spec.trials, threads, [&](int t) {
    ExperimentRow base;
    base.trial = t;
    base.N = spec.N;
    base.m = m;
    base.s = spec.s;
    auto& rows = per_trial[static_cast<std::size_t>(t)];
    try {
      const auto problem = gen_gaussian_problem(spec.N, m, spec.s, trial_seed(spec.seed, static_cast<std::uint64_t>(t)));
      const InitialState<double> init =
          spec.init == InitKind::Adversary ? adversary_initial_weights(problem, inner_config) : InitialState<double>{};
      const auto result = irls_run(problem, cfg, init);
      const double target = kSuccessTol * problem.x_star->lpNorm<1>();
      TrialSummary summary;
      for (const auto& r : result.trace) {
        if (r.k >= 1 && r.l1_err && *r.l1_err <= target && !summary.iters_to_tol) summary.iters_to_tol = r.k;
        if (r.k == 2) summary.mu1 = r.mu;
      }
      const auto final_err = final_l1_error(result.trace);
      summary.success = final_err && *final_err <= target;
      for (const auto& r : result.trace) {
        ExperimentRow row = base;
        row.record = r;
        row.summary = summary;
        rows.push_back(std::move(row));
      }
    } catch (const Error& e) {
      ExperimentRow row = base;
      row.record.eps = std::numeric_limits<double>::quiet_NaN();
      row.summary.failed = true;
      row.summary.error = e.what();
      rows.assign(1, std::move(row));
    }
  });

  std::vector<ExperimentRow> out;
  for (auto& rows : per_trial) {
    for (auto& r : rows) out.push_back(std::move(r));
  }
  return out;
}

std::vector<DimdepRow> run_dimdep_experiment(const std::vector<Index>& dims, Index s, double c_m, int trials,
                                             std::uint64_t seed, const SolverConfig& config, int threads,
                                             const SolverConfig& inner_config) {
  if (dims.empty() || trials < 1) throw Error(ErrorCode::InvalidArgument, "dimdep: need dims and trials >= 1");
  for (std::size_t i = 1; i < dims.size(); ++i) {
    if (dims[i] <= dims[i - 1]) throw Error(ErrorCode::InvalidArgument, "dimdep: dims must be increasing");
  }
  std::vector<Index> ms;
  for (Index N : dims) {
    EnsembleSpec spec{N, s, std::nullopt, c_m, trials, seed, InitKind::Adversary};
    spec.validate();
    ms.push_back(spec.resolved_m());
  }
  // Two steps give gap(1) and gap(2).
  SolverConfig cfg = config;
  cfg.max_iters = 2;
  cfg.record_trace = true;
  cfg.record_iterates = false;

  const int per_dim = trials;
  const int total = static_cast<int>(dims.size()) * per_dim;
  std::vector<std::optional<double>> mu1(static_cast<std::size_t>(total));
  parallel_for(total, threads, [&](int task) {
    const std::size_t d = static_cast<std::size_t>(task / per_dim);
    const int t = task % per_dim;
    const std::uint64_t stream = trial_seed(trial_seed(seed, static_cast<std::uint64_t>(dims[d])), static_cast<std::uint64_t>(t));
    try {
      const auto problem = gen_gaussian_problem(dims[d], ms[d], s, stream);
      const auto init = adversary_initial_weights(problem, inner_config);
      const auto result = irls_run(problem, cfg, init);
      for (const auto& r : result.trace) {
        if (r.k == 2) mu1[static_cast<std::size_t>(task)] = r.mu;
      }
    } catch (const Error&) {
      mu1[static_cast<std::size_t>(task)] = std::nullopt;
    }
  });

  std::vector<DimdepRow> out;
  for (std::size_t d = 0; d < dims.size(); ++d) {
    DimdepRow row;
    row.N = dims[d];
    row.m = ms[d];
    row.trials = trials;
    double sum = 0.0;
    for (int t = 0; t < per_dim; ++t) {
      const auto& v = mu1[d * static_cast<std::size_t>(per_dim) + static_cast<std::size_t>(t)];
      if (v) {
        sum += *v;
        ++row.ok_trials;
      }
    }
    row.mean_mu1 = row.ok_trials > 0 ? sum / row.ok_trials : std::numeric_limits<double>::quiet_NaN();
    row.inv_one_minus_mu1 = 1.0 / (1.0 - row.mean_mu1);
    out.push_back(row);
  }
  return out;
}

}  // namespace irls
