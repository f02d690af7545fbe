// Command-line front end: gen, solve, certify, experiment.

#include "irls_bp/diagnostics.hpp"
#include "irls_bp/experiments.hpp"
#include "irls_bp/io.hpp"
#include "irls_bp/irls.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace {

using irls::Error;
using irls::ErrorCode;
using irls::Index;

constexpr int kExitOk = 0;
constexpr int kExitFail = 1;
constexpr int kExitUsage = 2;
constexpr int kExitIo = 3;
constexpr int kExitSolver = 4;

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument:
    case ErrorCode::ResultNotLessThanN:
    case ErrorCode::MissingGroundTruth:
    case ErrorCode::TooLarge:
      return kExitUsage;
    case ErrorCode::Io:
    case ErrorCode::Parse:
      return kExitIo;
    default:
      return kExitSolver;
  }
}

int default_threads() {
  if (const char* env = std::getenv("IRLS_BP_THREADS")) {
    try {
      const int n = std::stoi(env);
      if (n >= 1) return n;
    } catch (const std::exception&) {
    }
  }
  return 1;
}

irls::WlsPath parse_wls(const std::string& s) {
  if (s == "direct") return irls::WlsPath::Direct;
  if (s == "woodbury") return irls::WlsPath::Woodbury;
  return irls::WlsPath::Auto;
}

// ---------------------------------------------------------------------------

struct GenOptions {
  long long n = 0;
  std::optional<long long> m;
  std::optional<double> cm;
  long long s = 0;
  std::uint64_t seed = 0;
  std::optional<double> tail_l1;
  std::string out;
};

int run_gen(const GenOptions& o) {
  irls::EnsembleSpec spec;
  spec.N = o.n;
  spec.s = o.s;
  if (o.m) spec.m = *o.m;
  if (o.cm) spec.c_m = *o.cm;
  spec.seed = o.seed;
  spec.validate();
  auto problem = irls::gen_gaussian_problem(spec.N, spec.resolved_m(), spec.s, spec.seed);
  if (o.tail_l1 && *o.tail_l1 > 0.0) {
    irls::VectorXd x = irls::add_tail(*problem.x_star, *o.tail_l1, irls::trial_seed(o.seed, 0xA11));
    irls::VectorXd y = problem.A * x;
    problem = irls::Problem<double>(problem.A, std::move(y), problem.s, std::move(x));
  }
  irls::io::save_problem(o.out, problem);
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct SolveOptions {
  std::string problem;
  int max_iters = 500;
  double tol = 1e-10;
  std::string wls = "auto";
  bool adversary = false;
  std::string trace;
  std::string solution;
  std::string iterates;
};

int run_solve(const SolveOptions& o) {
  const auto problem = irls::io::load_problem(o.problem);
  if (o.adversary && !problem.x_star) {
    std::cerr << "solve: --adversary requires xstar in the problem file\n";
    return kExitUsage;
  }
  irls::SolverConfig cfg;
  cfg.max_iters = o.max_iters;
  cfg.rel_change_tol = o.tol;
  cfg.wls_path = parse_wls(o.wls);
  cfg.record_iterates = !o.iterates.empty();
  irls::InitialState<double> init;
  if (o.adversary) init = irls::adversary_initial_weights(problem, irls::default_inner_config());
  const auto result = irls::irls_run(problem, cfg, init);
  irls::io::save_trace(o.trace, result.trace);
  if (!o.solution.empty()) irls::io::save_vector(o.solution, result.x);
  if (!o.iterates.empty()) irls::io::save_iterates(o.iterates, result.iterates, init.x0 ? 0 : 1);
  std::cout << "status: " << irls::to_string(result.status) << "  iterations: " << result.iterations << '\n';
  return result.status == irls::RunStatus::MaxIters ? kExitFail : kExitOk;
}

// ---------------------------------------------------------------------------

struct CertifyOptions {
  std::string problem;
  std::string trace;
  std::string iterates;
  std::optional<double> rho1;
  bool compute_rho1 = false;
  bool approx_sparse = false;
};

enum class Verdict { Pass, Fail, HypothesisUnmet, Skipped };

const char* verdict_text(Verdict v) {
  switch (v) {
    case Verdict::Pass: return "PASS";
    case Verdict::Fail: return "FAIL";
    case Verdict::HypothesisUnmet: return "HYPOTHESIS-UNMET";
    case Verdict::Skipped: return "SKIPPED";
  }
  return "?";
}

// Iterates x^k keyed by k, from a file or by replaying the solver. A replay
// is only trusted when its eps sequence reproduces the trace.
std::optional<std::map<int, irls::VectorXd>> recover_iterates(const CertifyOptions& o,
                                                              const irls::Problem<double>& problem,
                                                              const irls::Trace& trace) {
  std::map<int, irls::VectorXd> out;
  if (!o.iterates.empty()) {
    for (auto& [k, x] : irls::io::load_iterates(o.iterates)) {
      if (x.size() != problem.cols()) throw Error(ErrorCode::Parse, "iterate length does not match N");
      out.emplace(k, std::move(x));
    }
    return out;
  }
  if (trace.empty() || trace.back().k < 1) return std::nullopt;
  irls::SolverConfig cfg;
  cfg.max_iters = trace.back().k;
  cfg.record_iterates = true;
  irls::InitialState<double> init;
  const bool adversarial = std::isfinite(trace.front().eps) && trace.front().k == 0;
  if (adversarial) {
    if (!problem.x_star) return std::nullopt;
    init = irls::adversary_initial_weights(problem, irls::default_inner_config());
  }
  const auto replay = irls::irls_run(problem, cfg, init);
  const int first_k = init.x0 ? 0 : 1;
  for (std::size_t i = 0; i < replay.iterates.size(); ++i) out.emplace(first_k + static_cast<int>(i), replay.iterates[i]);
  for (const auto& r : replay.trace) {
    const auto it = std::find_if(trace.begin(), trace.end(), [&](const auto& t) { return t.k == r.k; });
    if (it == trace.end()) continue;
    const double scale = std::max(std::abs(it->eps), 1e-300);
    if (!(std::abs(it->eps - r.eps) <= 1e-9 * scale) && !(std::isinf(it->eps) && std::isinf(r.eps))) {
      return std::nullopt;
    }
  }
  return out;
}

int run_certify(const CertifyOptions& o) {
  const auto problem = irls::io::load_problem(o.problem);
  const auto trace = irls::io::load_trace(o.trace);
  if (!problem.x_star) {
    std::cerr << "certify: the problem file must contain xstar\n";
    return kExitUsage;
  }
  const Index N = problem.cols();
  const Index s = problem.s;
  const auto& x_star = *problem.x_star;

  double rho1 = 0.0;
  if (o.rho1) {
    rho1 = *o.rho1;
  } else {
    const auto report = irls::nsp_rho1(problem.A);
    rho1 = report.rho;
    std::cout << "rho1: " << irls::io::format_real(rho1) << " (" << irls::to_string(report.method) << ")\n";
  }
  std::optional<double> rho_s;
  if (s == 1) {
    rho_s = rho1;
  } else if (N <= irls::kBruteForceMaxN && s <= irls::kBruteForceMaxS) {
    rho_s = irls::nsp_rho_s_bruteforce(problem.A, s).rho;
    std::cout << "rho_s: " << irls::io::format_real(*rho_s) << '\n';
  }

  bool any_fail = false;
  auto report = [&](const char* name, Verdict v, const std::string& detail = {}) {
    any_fail = any_fail || v == Verdict::Fail;
    std::cout << name << ": " << verdict_text(v) << (detail.empty() ? "" : "  (" + detail + ")") << '\n';
  };
  auto guarded = [&](const char* name, auto&& check) {
    try {
      const irls::CertifyResult r = check();
      report(name, r.passed ? Verdict::Pass : Verdict::Fail,
             r.passed ? std::string() : "k = " + std::to_string(r.first_failure_k) + ": " + r.detail);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::HypothesisUnmet) throw;
      report(name, Verdict::HypothesisUnmet, e.what());
    }
  };

  guarded("global-rate", [&] { return irls::certify_global_rate(trace, rho1, N); });
  if (rho_s) {
    guarded("global-rate-sharp", [&] { return irls::certify_global_rate(trace, rho1, N, irls::kGlobalRateConstant, rho_s); });
  } else {
    report("global-rate-sharp", Verdict::Skipped, "rho_s not computable for this size");
  }

  if (!rho_s) {
    report("sandwich", Verdict::Skipped, "rho_s not computable for this size");
  } else {
    const auto iterates = recover_iterates(o, problem, trace);
    if (!iterates) {
      report("sandwich", Verdict::Skipped, "iterates unavailable");
    } else {
      guarded("sandwich", [&] {
        irls::CertifyResult r;
        for (const auto& rec : trace) {
          if (rec.k < 1) continue;
          const auto it = iterates->find(rec.k);
          if (it == iterates->end()) continue;
          if (!irls::certify_sandwich(it->second, x_star, rec.eps, *rho_s, s) && r.passed) {
            r.passed = false;
            r.first_failure_k = rec.k;
            r.detail = "objective gap outside the sandwich";
          }
        }
        return r;
      });
    }
  }

  if (irls::best_s_term_error(x_star, s) > 0.0) {
    report("support-identification", Verdict::HypothesisUnmet, "xstar is not exactly s-sparse");
  } else {
    const auto bad = irls::support_consistency_violation(trace);
    report("support-identification", bad ? Verdict::Fail : Verdict::Pass,
           bad ? "k = " + std::to_string(*bad) + ": zeta < 1 without support match" : std::string());
  }

  if (o.approx_sparse) {
    guarded("approx-sparse", [&] { return irls::certify_approx_sparse(trace, x_star, s, rho1, N); });
  }
  return any_fail ? kExitFail : kExitOk;
}

// ---------------------------------------------------------------------------

struct ExperimentOptions {
  long long n = 0;
  long long s = 0;
  std::optional<long long> m;
  double cm = 2.0;
  int trials = 1;
  std::uint64_t seed = 0;
  bool adversary = false;
  int max_iters = 500;
  std::string dims;
  std::string out;
  int threads = 1;
};

std::vector<Index> parse_dims(const std::string& text) {
  std::vector<Index> dims;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      const long long v = std::stoll(item, &used);
      if (used != item.size() || v < 2) throw std::invalid_argument(item);
      dims.push_back(static_cast<Index>(v));
    } catch (const std::exception&) {
      throw Error(ErrorCode::InvalidArgument, "--dims: bad entry '" + item + "'");
    }
  }
  if (dims.empty()) throw Error(ErrorCode::InvalidArgument, "--dims: empty list");
  return dims;
}

int run_rates(const ExperimentOptions& o) {
  irls::EnsembleSpec spec;
  spec.N = o.n;
  spec.s = o.s;
  if (o.m) spec.m = *o.m;
  spec.c_m = o.cm;
  spec.trials = o.trials;
  spec.seed = o.seed;
  spec.init = o.adversary ? irls::InitKind::Adversary : irls::InitKind::Uniform;
  irls::SolverConfig cfg;
  cfg.max_iters = o.max_iters;
  const auto rows = irls::run_rate_experiment(spec, cfg, o.threads);
  std::ostringstream os;
  irls::io::write_rate_rows(os, rows);
  irls::io::save_text(o.out, os.str());
  return kExitOk;
}

int run_dimdep(const ExperimentOptions& o) {
  const auto rows = irls::run_dimdep_experiment(parse_dims(o.dims), o.s, o.cm, o.trials, o.seed, irls::SolverConfig{},
                                                o.threads);
  std::ostringstream os;
  irls::io::write_dimdep_rows(os, rows);
  irls::io::save_text(o.out, os.str());
  std::cout << os.str();
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"IRLS solver for basis pursuit: generate, solve, certify, experiment"};
  app.require_subcommand(1);

  GenOptions gen;
  auto* gen_cmd = app.add_subcommand("gen", "Generate a Gaussian problem file");
  gen_cmd->add_option("--n", gen.n, "Ambient dimension N")->required()->check(CLI::PositiveNumber);
  auto* gen_m = gen_cmd->add_option("--m", gen.m, "Number of measurements")->check(CLI::PositiveNumber);
  auto* gen_cm = gen_cmd->add_option("--cm", gen.cm, "m = floor(cm * s * ln(N/s))")->check(CLI::PositiveNumber);
  gen_m->excludes(gen_cm);
  gen_cmd->add_option("--s", gen.s, "Sparsity")->required()->check(CLI::PositiveNumber);
  gen_cmd->add_option("--seed", gen.seed, "Random seed")->required();
  gen_cmd->add_option("--tail-l1", gen.tail_l1, "l1 mass added off the support")->check(CLI::NonNegativeNumber);
  gen_cmd->add_option("--out", gen.out, "Output problem file")->required();

  SolveOptions solve;
  auto* solve_cmd = app.add_subcommand("solve", "Run IRLS on a problem file");
  solve_cmd->add_option("--problem", solve.problem, "Problem file")->required();
  solve_cmd->add_option("--max-iters", solve.max_iters, "Iteration cap")->check(CLI::PositiveNumber);
  solve_cmd->add_option("--tol", solve.tol, "Relative l1 change tolerance")->check(CLI::PositiveNumber);
  solve_cmd->add_option("--wls", solve.wls, "Weighted least squares path")
      ->check(CLI::IsMember({"direct", "woodbury", "auto"}));
  solve_cmd->add_flag("--adversary", solve.adversary, "Adversarial initialization (needs xstar)");
  solve_cmd->add_option("--trace", solve.trace, "Trace CSV output")->required();
  solve_cmd->add_option("--solution", solve.solution, "Solution vector output");
  solve_cmd->add_option("--iterates", solve.iterates, "Iterates CSV output");

  CertifyOptions cert;
  auto* cert_cmd = app.add_subcommand("certify", "Check recorded traces against the convergence bounds");
  cert_cmd->add_option("--problem", cert.problem, "Problem file with xstar")->required();
  cert_cmd->add_option("--trace", cert.trace, "Trace CSV")->required();
  cert_cmd->add_option("--iterates", cert.iterates, "Iterates CSV from solve --iterates");
  auto* rho_opt = cert_cmd->add_option("--rho1", cert.rho1, "Known rho_1 constant")->check(CLI::NonNegativeNumber);
  auto* rho_flag = cert_cmd->add_flag("--compute-rho1", cert.compute_rho1, "Compute rho_1 by linear programming");
  rho_opt->excludes(rho_flag);
  cert_cmd->add_flag("--approx-sparse", cert.approx_sparse, "Also check the approximately sparse error bound");

  ExperimentOptions exp;
  exp.threads = default_threads();
  auto* exp_cmd = app.add_subcommand("experiment", "Run a randomized study");
  exp_cmd->require_subcommand(1);
  auto* rates_cmd = exp_cmd->add_subcommand("rates", "Per-iteration convergence metrics");
  rates_cmd->add_option("--n", exp.n, "Ambient dimension N")->required()->check(CLI::PositiveNumber);
  rates_cmd->add_option("--s", exp.s, "Sparsity")->required()->check(CLI::PositiveNumber);
  auto* rates_m = rates_cmd->add_option("--m", exp.m, "Number of measurements")->check(CLI::PositiveNumber);
  auto* rates_cm = rates_cmd->add_option("--cm", exp.cm, "m = floor(cm * s * ln(N/s))")->check(CLI::PositiveNumber);
  rates_m->excludes(rates_cm);
  rates_cmd->add_option("--trials", exp.trials, "Number of trials")->check(CLI::PositiveNumber);
  rates_cmd->add_option("--seed", exp.seed, "Random seed");
  rates_cmd->add_flag("--adversary", exp.adversary, "Adversarial initialization");
  rates_cmd->add_option("--max-iters", exp.max_iters, "Iteration cap")->check(CLI::PositiveNumber);
  rates_cmd->add_option("--out", exp.out, "Output CSV")->required();
  rates_cmd->add_option("--threads", exp.threads, "Worker threads")->check(CLI::PositiveNumber);

  auto* dim_cmd = exp_cmd->add_subcommand("dimdep", "First gap ratio versus dimension, adversarial start");
  dim_cmd->add_option("--dims", exp.dims, "Comma separated increasing N values")->required();
  dim_cmd->add_option("--s", exp.s, "Sparsity")->required()->check(CLI::PositiveNumber);
  dim_cmd->add_option("--cm", exp.cm, "m = floor(cm * s * ln(N/s))")->check(CLI::PositiveNumber);
  dim_cmd->add_option("--trials", exp.trials, "Trials per dimension")->check(CLI::PositiveNumber);
  dim_cmd->add_option("--seed", exp.seed, "Random seed");
  dim_cmd->add_option("--out", exp.out, "Output CSV")->required();
  dim_cmd->add_option("--threads", exp.threads, "Worker threads")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*gen_cmd) return run_gen(gen);
    if (*solve_cmd) return run_solve(solve);
    if (*cert_cmd) return run_certify(cert);
    if (*rates_cmd) return run_rates(exp);
    if (*dim_cmd) return run_dimdep(exp);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitSolver;
  }
  return kExitUsage;
}
