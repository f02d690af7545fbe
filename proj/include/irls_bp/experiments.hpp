#pragma once

// Random Gaussian instances, adversarial initialization, and the drivers for
// the convergence-rate and dimension-dependence studies.

#include "irls_bp/config.hpp"
#include "irls_bp/irls.hpp"
#include "irls_bp/types.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace irls {

enum class InitKind { Uniform, Adversary };

struct EnsembleSpec {
  Index N = 0;
  Index s = 0;
  std::optional<Index> m;  // overrides the c_m rule when set
  double c_m = 2.0;
  int trials = 1;
  std::uint64_t seed = 0;
  InitKind init = InitKind::Uniform;

  Index resolved_m() const;
  void validate() const;
};

/// floor(c_m * s * ln(N / s)); throws ResultNotLessThanN when that is >= N.
Index measurement_count(Index N, Index s, double c_m);

/// Stream seed for trial `index` of a study seeded with `seed`.
std::uint64_t trial_seed(std::uint64_t seed, std::uint64_t index);

/// A with i.i.d. N(0, 1/m) entries, uniformly random support of size s with
/// a unit-l2 Gaussian direction on it, y = A x_star.
Problem<double> gen_gaussian_problem(Index N, Index m, Index s, std::uint64_t seed);

/// Adds a random vector of l1 norm tail_l1 on the zero coordinates of x_star.
VectorXd add_tail(const VectorXd& x_star, double tail_l1, std::uint64_t seed);

/// Initial state that starts IRLS from the l1 minimizer restricted to the
/// complement of the true support, so the support carries maximal weight.
InitialState<double> adversary_initial_weights(const Problem<double>& problem, const SolverConfig& inner_config);

/// Inner solver settings used for the restricted l1 problem.
SolverConfig default_inner_config();

struct TrialSummary {
  std::optional<int> iters_to_tol;  // first k with l1_err <= 1e-8 ||x_star||_1
  std::optional<double> mu1;        // gap(2) / gap(1)
  bool success = false;
  bool failed = false;
  std::string error;
};

struct ExperimentRow {
  int trial = 0;
  Index N = 0;
  Index m = 0;
  Index s = 0;
  IterationRecord record;  // absent metrics stay empty for failed trials
  TrialSummary summary;
};

inline constexpr double kSuccessTol = 1e-8;

std::vector<ExperimentRow> run_rate_experiment(const EnsembleSpec& spec, const SolverConfig& config, int threads = 1,
                                               const SolverConfig& inner_config = default_inner_config());

struct DimdepRow {
  Index N = 0;
  Index m = 0;
  int trials = 0;
  int ok_trials = 0;
  double mean_mu1 = 0.0;
  double inv_one_minus_mu1 = 0.0;
};

std::vector<DimdepRow> run_dimdep_experiment(const std::vector<Index>& dims, Index s, double c_m, int trials,
                                             std::uint64_t seed, const SolverConfig& config, int threads = 1,
                                             const SolverConfig& inner_config = default_inner_config());

/// Runs task(i) for i in [0, count) on up to `threads` workers. The first
/// exception thrown by a task is rethrown after all workers join.
void parallel_for(int count, int threads, const std::function<void(int)>& task);

}  // namespace irls
