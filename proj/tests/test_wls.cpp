#include "test_support.hpp"

#include "irls_bp/wls.hpp"

using namespace irls;
using testing::gaussian_matrix;
using testing::gaussian_vector;

namespace {
VectorXd vec(std::initializer_list<double> v) {
  VectorXd x(static_cast<Index>(v.size()));
  Index i = 0;
  for (double e : v) x(i++) = e;
  return x;
}

double rel_diff(const VectorXd& a, const VectorXd& b) { return (a - b).norm() / std::max(b.norm(), 1e-300); }
}  // namespace

TEST_CASE("active_set uses strict inequality") {
  CHECK(active_set(vec({3, 0.1, -0.5}), 0.5).indices == std::vector<Index>{0});
  CHECK(active_set(VectorXd::Zero(4), 0.1).empty());
  CHECK(active_set(vec({1, -2, 3}), 0.5).indices == std::vector<Index>{0, 1, 2});
}

TEST_CASE("wls_direct examples") {
  MatrixXd A(1, 2);
  A << 1, 1;
  CHECK(wls_direct<double>(A, vec({2}), vec({1, 1})).isApprox(vec({1, 1})));
  CHECK(wls_direct<double>(A, vec({3}), vec({1, 2})).isApprox(vec({2, 1})));
  std::mt19937_64 rng(1);
  const MatrixXd B = gaussian_matrix(5, 12, rng);
  const VectorXd y = gaussian_vector(5, rng);
  const VectorXd min_norm = B.transpose() * (B * B.transpose()).fullPivLu().solve(y);
  CHECK(rel_diff(wls_direct<double>(B, y, VectorXd::Ones(12)), min_norm) <= 1e-12);
}

TEST_CASE("wls_direct matches the KKT oracle and is feasible and optimal") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> logw(-3.0, 3.0);
  for (int t = 0; t < 30; ++t) {
    const Index m = 5 + t % 7, N = 3 * m;
    const MatrixXd A = gaussian_matrix(m, N, rng);
    const VectorXd y = gaussian_vector(m, rng);
    VectorXd w(N);
    for (Index i = 0; i < N; ++i) w(i) = std::pow(10.0, logw(rng));
    const VectorXd x = wls_direct<double>(A, y, w);
    CHECK(rel_diff(x, testing::kkt_weighted_solution(A, y, w)) <= 1e-8);
    CHECK((A * x - y).norm() <= 1e-10 * y.norm());
    CHECK(testing::range_residual(A, w.cwiseProduct(x)) <= 1e-8);
  }
}

TEST_CASE("wls_direct rejects nonpositive weights and rank-deficient A") {
  MatrixXd A(1, 2);
  A << 1, 1;
  CHECK_THROWS_AS(wls_direct<double>(A, vec({1}), vec({1, 0})), Error);
  MatrixXd R(2, 3);
  R << 1, 1, 1, 2, 2, 2;
  try {
    wls_direct<double>(R, vec({1, 2}), VectorXd::Ones(3));
    FAIL("expected NotPositiveDefinite");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NotPositiveDefinite);
  }
}

namespace {
struct Config {
  MatrixXd A;
  VectorXd y;
  VectorXd x_prev;
  double eps;
};

// Random instance with an iterate whose entries straddle eps; `active_frac`
// controls roughly how many entries exceed eps.
Config random_config(std::mt19937_64& rng, Index m, Index N, double eps, double active_frac) {
  Config c{gaussian_matrix(m, N, rng, 1.0 / std::sqrt(double(m))), gaussian_vector(m, rng), VectorXd(N), eps};
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (Index i = 0; i < N; ++i) {
    const double sign = u(rng) < 0.5 ? -1.0 : 1.0;
    c.x_prev(i) = u(rng) < active_frac ? sign * eps * (1.0 + 10.0 * u(rng) + 1e-3) : sign * eps * u(rng);
  }
  return c;
}
}  // namespace

TEST_CASE("woodbury path agrees with the direct path") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> logeps(-6.0, 0.0);
  const double fractions[] = {0.02, 0.1, 0.3, 0.6, 1.0};
  for (int t = 0; t < 50; ++t) {
    const Index m = 10 + t % 30, N = 2 * m + t;
    auto c = random_config(rng, m, N, std::pow(10.0, logeps(rng)), fractions[t % 5]);
    if (t % 5 == 4) c.x_prev = c.x_prev.cwiseSign() * (c.eps * 2.0);  // full active set
    if (active_set(c.x_prev, c.eps).empty()) c.x_prev(0) = 2.0 * c.eps;  // near-empty
    const auto f = thin_factorization<double>(c.A, c.y);
    const auto wb = wls_woodbury<double>(f, c.x_prev, c.eps, nullptr, 1e-12, 4 * int(m));
    const VectorXd direct = wls_direct<double>(c.A, c.y, weights(c.x_prev, c.eps));
    CHECK(rel_diff(wb.x, direct) <= 1e-8);
    CHECK((c.A * wb.x - c.y).norm() <= 1e-10 * c.y.norm());
    CHECK(testing::range_residual(c.A, weights(c.x_prev, c.eps).cwiseProduct(wb.x)) <= 1e-8);
    CHECK(wb.active == active_set(c.x_prev, c.eps));
    CHECK(wb.gamma.size() == wb.active.size());
  }
}

TEST_CASE("woodbury uses the implicit operator beyond the dense limit") {
  std::mt19937_64 rng(8);
  const Index m = 300, N = 400;
  auto c = random_config(rng, m, N, 1e-2, 0.9);
  const auto f = thin_factorization<double>(c.A, c.y);
  REQUIRE(active_set(c.x_prev, c.eps).size() > kDenseSystemLimit);
  const auto wb = wls_woodbury<double>(f, c.x_prev, c.eps, nullptr, 1e-12, 4 * int(m));
  CHECK(rel_diff(wb.x, wls_direct<double>(c.A, c.y, weights(c.x_prev, c.eps))) <= 1e-8);
}

TEST_CASE("exact warm start leaves almost nothing for CG") {
  std::mt19937_64 rng(9);
  auto c = random_config(rng, 40, 100, 1e-3, 0.3);
  const auto f = thin_factorization<double>(c.A, c.y);
  const auto first = wls_woodbury<double>(f, c.x_prev, c.eps, nullptr, 1e-12, 160);
  CHECK(first.cg_iters > 2);
  const WoodburyWarmStart<double> warm{first.active, first.gamma};
  const auto second = wls_woodbury<double>(f, c.x_prev, c.eps, &warm, 1e-12, 160);
  CHECK(second.cg_iters <= 2);
  CHECK(rel_diff(second.x, first.x) <= 1e-10);
}

TEST_CASE("warm start projection keeps values on the shared indices") {
  ActiveSet now{{1, 3, 4, 7}};
  WoodburyWarmStart<double> warm{ActiveSet{{0, 3, 7, 9}}, vec({10, 30, 70, 90})};
  const VectorXd g0 = project_warm_start<double>(now, &warm);
  CHECK(g0.isApprox(vec({0, 30, 0, 70})));
  CHECK(project_warm_start<double>(now, nullptr).isZero(0.0));
}

TEST_CASE("woodbury rejects an empty active set") {
  std::mt19937_64 rng(10);
  const MatrixXd A = gaussian_matrix(3, 6, rng);
  const auto f = thin_factorization<double>(A, VectorXd::Ones(3));
  try {
    wls_woodbury<double>(f, VectorXd::Constant(6, 0.01), 0.1, nullptr, 1e-12, 12);
    FAIL("expected EmptyActiveSet");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::EmptyActiveSet);
  }
}

TEST_CASE("select_path examples") {
  SolverConfig cfg;
  const Index m = 50;
  CHECK(select_path(cfg, std::numeric_limits<double>::infinity(), 1, m) == StepPath::Direct);
  CHECK(select_path(cfg, 1e-3, m, m) == StepPath::Direct);
  CHECK(select_path(cfg, 1e-3, m / 5, m) == StepPath::Woodbury);
  cfg.wls_path = WlsPath::Woodbury;
  CHECK(select_path(cfg, 1e-3, m, m) == StepPath::Woodbury);
  cfg.wls_path = WlsPath::Direct;
  CHECK(select_path(cfg, 1e-3, 1, m) == StepPath::Direct);
}

TEST_CASE("condition_diagnostics examples") {
  std::mt19937_64 rng(12);
  const MatrixXd A = gaussian_matrix(4, 9, rng);
  const auto rep = condition_diagnostics<double>(A, VectorXd::Ones(9), VectorXd::Constant(9, 5.0), 1.0);
  Eigen::JacobiSVD<MatrixXd> svd(A);
  const double kappa_A = svd.singularValues()(0) / svd.singularValues()(3);
  CHECK(rep.kappa_full == doctest::Approx(kappa_A * kappa_A).epsilon(1e-8));
  CHECK(std::isfinite(rep.kappa_G));

  MatrixXd D = MatrixXd::Zero(2, 3);
  D(0, 0) = 2.0;
  D(1, 1) = 3.0;
  const auto diag = condition_diagnostics<double>(D, VectorXd::Ones(3), VectorXd::Constant(3, 2.0), 1.0);
  CHECK(diag.kappa_full == doctest::Approx(9.0 / 4.0));
  CHECK(std::isfinite(diag.kappa_G));
}
