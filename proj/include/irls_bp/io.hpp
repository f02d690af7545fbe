#pragma once

// Text formats: problem files, trace CSV, plain vectors, experiment tables.

#include "irls_bp/experiments.hpp"
#include "irls_bp/irls.hpp"
#include "irls_bp/types.hpp"

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace irls::io {

inline constexpr std::string_view kProblemMagic = "IRLS-PROBLEM v1";
inline constexpr std::string_view kTraceHeader =
    "k,eps,J,gap,l1_err,mu,mu_l1,zeta,support_ok,path,cg_iters,feas_residual";

/// Shortest decimal that parses back to the same double; "inf", "-inf", "nan"
/// for non-finite values.
std::string format_real(double v);
/// Parses the whole token; throws Parse otherwise.
double parse_real(std::string_view token);

void write_problem(std::ostream& os, const Problem<double>& p);
Problem<double> read_problem(std::istream& is);
void save_problem(const std::string& path, const Problem<double>& p);
Problem<double> load_problem(const std::string& path);

void write_trace(std::ostream& os, const Trace& trace);
Trace read_trace(std::istream& is);
void save_trace(const std::string& path, const Trace& trace);
Trace load_trace(const std::string& path);

/// One real per line.
void write_vector(std::ostream& os, const VectorXd& v);
VectorXd read_vector(std::istream& is);
void save_vector(const std::string& path, const VectorXd& v);
VectorXd load_vector(const std::string& path);

/// One iterate per line: k followed by the N entries, comma separated.
void save_iterates(const std::string& path, const std::vector<VectorXd>& iterates, int first_k);
std::vector<std::pair<int, VectorXd>> load_iterates(const std::string& path);

void write_rate_rows(std::ostream& os, const std::vector<ExperimentRow>& rows);
void write_dimdep_rows(std::ostream& os, const std::vector<DimdepRow>& rows);
void save_text(const std::string& path, const std::string& content);

}  // namespace irls::io
