#include "irls_bp/io.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

namespace irls::io {

namespace {

std::string format_opt(const std::optional<double>& v) { return v ? format_real(*v) : std::string(); }

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  for (char c : line) {
    if (c == ',') {
      out.push_back(field);
      field.clear();
    } else if (c != '\r') {
      field.push_back(c);
    }
  }
  out.push_back(field);
  return out;
}

std::optional<double> parse_opt(const std::string& token) {
  if (token.empty()) return std::nullopt;
  return parse_real(token);
}

long long parse_int(std::string_view token) {
  long long v = 0;
  const auto* end = token.data() + token.size();
  const auto [ptr, ec] = std::from_chars(token.data(), end, v);
  if (ec != std::errc() || ptr != end) throw Error(ErrorCode::Parse, "expected an integer, got '" + std::string(token) + "'");
  return v;
}

std::string expect_token(std::istream& is, const char* what) {
  std::string tok;
  if (!(is >> tok)) throw Error(ErrorCode::Parse, std::string("unexpected end of input, expected ") + what);
  return tok;
}

void expect_label(std::istream& is, std::string_view label) {
  const std::string tok = expect_token(is, "a section label");
  if (tok != label) throw Error(ErrorCode::Parse, "expected '" + std::string(label) + "', got '" + tok + "'");
}

std::ofstream open_out(const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorCode::Io, "cannot open '" + path + "' for writing");
  return os;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorCode::Io, "cannot open '" + path + "' for reading");
  return is;
}

void check_written(std::ostream& os, const std::string& path) {
  os.flush();
  if (!os) throw Error(ErrorCode::Io, "write to '" + path + "' failed");
}

const char* bool_text(bool b) { return b ? "true" : "false"; }

void write_record_fields(std::ostream& os, const IterationRecord& r) {
  os << r.k << ',' << format_real(r.eps) << ',' << format_opt(r.J) << ',' << format_opt(r.gap) << ','
     << format_opt(r.l1_err) << ',' << format_opt(r.mu) << ',' << format_opt(r.mu_l1) << ',' << format_opt(r.zeta)
     << ',' << (r.support_ok ? bool_text(*r.support_ok) : "") << ','
     << (r.path ? (*r.path == StepPath::Direct ? "direct" : "woodbury") : "") << ',' << r.cg_iters << ','
     << format_opt(r.feas_residual);
}

}  // namespace

std::string format_real(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::array<char, 64> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  if (ec != std::errc()) throw Error(ErrorCode::Io, "format_real: conversion failed");
  return std::string(buf.data(), ptr);
}

double parse_real(std::string_view token) {
  if (token == "inf" || token == "+inf") return std::numeric_limits<double>::infinity();
  if (token == "-inf") return -std::numeric_limits<double>::infinity();
  if (token == "nan") return std::numeric_limits<double>::quiet_NaN();
  double v = 0.0;
  const auto* end = token.data() + token.size();
  const auto [ptr, ec] = std::from_chars(token.data(), end, v);
  if (ec != std::errc() || ptr != end) throw Error(ErrorCode::Parse, "expected a real, got '" + std::string(token) + "'");
  return v;
}

void write_problem(std::ostream& os, const Problem<double>& p) {
  const Index m = p.rows();
  const Index N = p.cols();
  os << kProblemMagic << '\n' << N << ' ' << m << ' ' << p.s << '\n';
  os << "y:\n";
  for (Index i = 0; i < m; ++i) os << (i ? " " : "") << format_real(p.y(i));
  os << "\nA:\n";
  for (Index i = 0; i < m; ++i) {
    for (Index j = 0; j < N; ++j) os << (j ? " " : "") << format_real(p.A(i, j));
    os << '\n';
  }
  if (p.x_star) {
    os << "xstar:\n";
    for (Index j = 0; j < N; ++j) os << (j ? " " : "") << format_real((*p.x_star)(j));
    os << '\n';
  }
}

Problem<double> read_problem(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw Error(ErrorCode::Parse, "problem file is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kProblemMagic) throw Error(ErrorCode::Parse, "missing 'IRLS-PROBLEM v1' header");
  const long long N = parse_int(expect_token(is, "N"));
  const long long m = parse_int(expect_token(is, "m"));
  const long long s = parse_int(expect_token(is, "s"));
  if (N < 1 || m < 1 || s < 1) throw Error(ErrorCode::Parse, "header counts must be positive");
  constexpr long long kMaxEntries = 1LL << 30;
  if (m * N > kMaxEntries) throw Error(ErrorCode::Parse, "header counts too large");

  expect_label(is, "y:");
  VectorXd y(m);
  for (Index i = 0; i < m; ++i) y(i) = parse_real(expect_token(is, "an entry of y"));
  expect_label(is, "A:");
  MatrixXd A(m, N);
  for (Index i = 0; i < m; ++i) {
    for (Index j = 0; j < N; ++j) A(i, j) = parse_real(expect_token(is, "an entry of A"));
  }
  std::optional<VectorXd> x_star;
  std::string tok;
  if (is >> tok) {
    if (tok != "xstar:") throw Error(ErrorCode::Parse, "unexpected token '" + tok + "' after A");
    VectorXd xs(N);
    for (Index j = 0; j < N; ++j) xs(j) = parse_real(expect_token(is, "an entry of xstar"));
    x_star = std::move(xs);
    if (is >> tok) throw Error(ErrorCode::Parse, "trailing content after xstar");
  }
  try {
    return Problem<double>(std::move(A), std::move(y), static_cast<Index>(s), std::move(x_star));
  } catch (const Error& e) {
    throw Error(ErrorCode::Parse, std::string("invalid problem: ") + e.what());
  }
}

void save_problem(const std::string& path, const Problem<double>& p) {
  auto os = open_out(path);
  write_problem(os, p);
  check_written(os, path);
}

Problem<double> load_problem(const std::string& path) {
  auto is = open_in(path);
  return read_problem(is);
}

void write_trace(std::ostream& os, const Trace& trace) {
  os << kTraceHeader << '\n';
  for (const auto& r : trace) {
    write_record_fields(os, r);
    os << '\n';
  }
}

Trace read_trace(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw Error(ErrorCode::Parse, "trace file is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kTraceHeader) throw Error(ErrorCode::Parse, "trace header mismatch");
  Trace out;
  while (std::getline(is, line)) {
    if (line.empty() || line == "\r") continue;
    const auto f = split_csv(line);
    if (f.size() != 12) throw Error(ErrorCode::Parse, "trace row must have 12 fields");
    IterationRecord r;
    r.k = static_cast<int>(parse_int(f[0]));
    r.eps = parse_real(f[1]);
    r.J = parse_opt(f[2]);
    r.gap = parse_opt(f[3]);
    r.l1_err = parse_opt(f[4]);
    r.mu = parse_opt(f[5]);
    r.mu_l1 = parse_opt(f[6]);
    r.zeta = parse_opt(f[7]);
    if (f[8] == "true") {
      r.support_ok = true;
    } else if (f[8] == "false") {
      r.support_ok = false;
    } else if (!f[8].empty()) {
      throw Error(ErrorCode::Parse, "support_ok must be true/false");
    }
    if (f[9] == "direct") {
      r.path = StepPath::Direct;
    } else if (f[9] == "woodbury") {
      r.path = StepPath::Woodbury;
    } else if (!f[9].empty()) {
      throw Error(ErrorCode::Parse, "path must be direct/woodbury");
    }
    r.cg_iters = static_cast<int>(parse_int(f[10]));
    r.feas_residual = parse_opt(f[11]);
    if (!out.empty() && r.k <= out.back().k) throw Error(ErrorCode::Parse, "trace k must be strictly increasing");
    out.push_back(r);
  }
  return out;
}

void save_trace(const std::string& path, const Trace& trace) {
  auto os = open_out(path);
  write_trace(os, trace);
  check_written(os, path);
}

Trace load_trace(const std::string& path) {
  auto is = open_in(path);
  return read_trace(is);
}

void write_vector(std::ostream& os, const VectorXd& v) {
  for (Index i = 0; i < v.size(); ++i) os << format_real(v(i)) << '\n';
}

VectorXd read_vector(std::istream& is) {
  std::vector<double> values;
  std::string tok;
  while (is >> tok) values.push_back(parse_real(tok));
  return Eigen::Map<VectorXd>(values.data(), static_cast<Index>(values.size()));
}

void save_vector(const std::string& path, const VectorXd& v) {
  auto os = open_out(path);
  write_vector(os, v);
  check_written(os, path);
}

VectorXd load_vector(const std::string& path) {
  auto is = open_in(path);
  return read_vector(is);
}

void save_iterates(const std::string& path, const std::vector<VectorXd>& iterates, int first_k) {
  auto os = open_out(path);
  int k = first_k;
  for (const auto& x : iterates) {
    os << k++;
    for (Index i = 0; i < x.size(); ++i) os << ',' << format_real(x(i));
    os << '\n';
  }
  check_written(os, path);
}

std::vector<std::pair<int, VectorXd>> load_iterates(const std::string& path) {
  auto is = open_in(path);
  std::vector<std::pair<int, VectorXd>> out;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line == "\r") continue;
    const auto f = split_csv(line);
    VectorXd x(static_cast<Index>(f.size()) - 1);
    for (std::size_t i = 1; i < f.size(); ++i) x(static_cast<Index>(i) - 1) = parse_real(f[i]);
    if (!out.empty() && x.size() != out.front().second.size()) throw Error(ErrorCode::Parse, "iterate length mismatch");
    out.emplace_back(static_cast<int>(parse_int(f[0])), std::move(x));
  }
  return out;
}

void write_rate_rows(std::ostream& os, const std::vector<ExperimentRow>& rows) {
  os << "trial,N,m,s," << kTraceHeader << ",iters_to_tol,mu1,success,failed\n";
  for (const auto& r : rows) {
    os << r.trial << ',' << r.N << ',' << r.m << ',' << r.s << ',';
    write_record_fields(os, r.record);
    os << ',' << (r.summary.iters_to_tol ? std::to_string(*r.summary.iters_to_tol) : std::string()) << ','
       << format_opt(r.summary.mu1) << ',' << bool_text(r.summary.success) << ',' << bool_text(r.summary.failed)
       << '\n';
  }
}

void write_dimdep_rows(std::ostream& os, const std::vector<DimdepRow>& rows) {
  os << "N,m,trials,ok_trials,mean_mu1,inv_one_minus_mu1\n";
  for (const auto& r : rows) {
    os << r.N << ',' << r.m << ',' << r.trials << ',' << r.ok_trials << ',' << format_real(r.mean_mu1) << ','
       << format_real(r.inv_one_minus_mu1) << '\n';
  }
}

void save_text(const std::string& path, const std::string& content) {
  auto os = open_out(path);
  os << content;
  check_written(os, path);
}

}  // namespace irls::io
