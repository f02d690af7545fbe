#pragma once

#include <cstdint>

namespace irls {

enum class WlsPath { Direct, Woodbury, Auto };

/// The path a weighted least squares step actually took.
enum class StepPath { Direct, Woodbury };

struct SolverConfig {
  int max_iters = 500;
  double rel_change_tol = 1e-10;
  double eps_floor = 1e-14;
  WlsPath wls_path = WlsPath::Auto;
  double woodbury_active_fraction = 0.5;
  double cg_rel_tol = 1e-12;
  int cg_max_iters = 0;  // <= 0 means 4m
  bool record_trace = true;
  bool record_iterates = false;  // keep every x^k (certification, tests)
};

}  // namespace irls
