#include "test_support.hpp"

#include "irls_bp/diagnostics.hpp"
#include "irls_bp/lp.hpp"

#include <Eigen/LU>

using namespace irls;
using testing::gaussian_matrix;

namespace {

/// rho_s by vertex enumeration over the null-space coordinates: the optimum
/// of each LP sits where d - 1 of the off-support constraints (B c)_j = 0 are
/// active, so every such direction is scored.
double rho_by_vertices(const MatrixXd& A, Index s) {
  const MatrixXd B = null_space_basis(A);
  const Index N = A.cols();
  const Index d = B.cols();
  if (d == 0) return 0.0;
  double best = 0.0;
  std::vector<Index> pick(static_cast<std::size_t>(d - 1));
  std::function<void(Index, Index)> rec = [&](Index start, Index depth) {
    if (depth == d - 1) {
      MatrixXd C(d - 1, d);
      for (Index q = 0; q < d - 1; ++q) C.row(q) = B.row(pick[static_cast<std::size_t>(q)]);
      Eigen::FullPivLU<MatrixXd> lu(C);
      if (lu.rank() != d - 1) return;
      const VectorXd c = lu.kernel().col(0);
      const VectorXd v = B * c;
      // best ratio over supports of size s: s largest |v_i| against the rest
      const double tail = best_s_term_error(v, s);
      const double head = v.lpNorm<1>() - tail;
      if (tail > 1e-12 * v.lpNorm<1>()) best = std::max(best, head / tail);
      return;
    }
    for (Index j = start; j < N; ++j) {
      pick[static_cast<std::size_t>(depth)] = j;
      rec(j + 1, depth + 1);
    }
  };
  rec(0, 0);
  return best;
}

}  // namespace

TEST_CASE("simplex solves a textbook LP") {
  MatrixXd M(3, 5);
  M << 1, 1, 1, 0, 0, 1, 3, 0, 1, 0, 1, 0, 0, 0, 1;
  VectorXd b(3), c(5);
  b << 4, 6, 3;
  c << 3, 2, 0, 0, 0;
  const auto lp = simplex_maximize<double>(M, b, c);
  REQUIRE(lp.status == LpStatus::Optimal);
  CHECK(lp.value == doctest::Approx(11.0));
  CHECK(lp.x(0) == doctest::Approx(3.0));
  CHECK(lp.x(1) == doctest::Approx(1.0));
}

TEST_CASE("simplex handles equality rows, infeasibility and unboundedness") {
  // x1 + x2 = 2, x1 - x2 = 0 -> x = (1, 1); maximize x1 + 2 x2 = 3
  MatrixXd E(2, 2);
  E << 1, 1, 1, -1;
  VectorXd be(2), ce(2);
  be << 2, 0;
  ce << 1, 2;
  auto lp = simplex_maximize<double>(E, be, ce);
  REQUIRE(lp.status == LpStatus::Optimal);
  CHECK(lp.value == doctest::Approx(3.0));

  // x1 + x2 = -1 with x >= 0 is infeasible
  MatrixXd F(1, 2);
  F << 1, 1;
  VectorXd bf(1);
  bf << -1;
  CHECK(simplex_maximize<double>(F, bf, VectorXd::Ones(2)).status == LpStatus::Infeasible);

  // x1 - x2 + s = 1 with objective x2 is unbounded
  MatrixXd U(1, 3);
  U << 1, -1, 1;
  VectorXd bu(1), cu(3);
  bu << 1;
  cu << 0, 1, 0;
  CHECK(simplex_maximize<double>(U, bu, cu).status == LpStatus::Unbounded);

  // redundant equality rows
  MatrixXd R(2, 2);
  R << 1, 1, 2, 2;
  VectorXd br(2);
  br << 1, 2;
  lp = simplex_maximize<double>(R, br, VectorXd::Ones(2));
  REQUIRE(lp.status == LpStatus::Optimal);
  CHECK(lp.value == doctest::Approx(1.0));
}

TEST_CASE("nsp_rho1 examples") {
  const auto trivial = nsp_rho1<double>(MatrixXd::Identity(2, 2));
  CHECK(trivial.rho == 0.0);
  CHECK(trivial.satisfied);

  MatrixXd A(2, 3);
  A << 1, 0, 1, 0, 1, 1;
  const auto half = nsp_rho1<double>(A);
  CHECK(half.rho == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(half.method == NspMethod::NullDim1);

  MatrixXd ones(1, 2);
  ones << 1, 1;
  const auto one = nsp_rho1<double>(ones);
  CHECK(one.rho == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_FALSE(one.satisfied);
}

TEST_CASE("nsp_rho1 is infinite when a column vanishes") {
  MatrixXd A(2, 4);
  A << 1, 0, 0, 1, 0, 1, 0, 1;  // e_3 lies in the kernel
  const auto r = nsp_rho1<double>(A);
  CHECK(std::isinf(r.rho));
  CHECK_FALSE(r.satisfied);
}

TEST_CASE("brute force examples and guard") {
  MatrixXd A(2, 3);
  A << 1, 0, 1, 0, 1, 1;
  const auto r = nsp_rho_s_bruteforce<double>(A, 1);
  CHECK(r.rho == doctest::Approx(0.5).epsilon(1e-10));
  CHECK(r.method == NspMethod::BruteForceSigns);
  MatrixXd inj = MatrixXd::Zero(3, 3);
  inj.diagonal() << 1, 2, 3;
  CHECK(nsp_rho_s_bruteforce<double>(inj.topRows(3), 1).rho == 0.0);
  try {
    nsp_rho_s_bruteforce<double>(MatrixXd::Ones(5, 21), 2);
    FAIL("expected TooLarge");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::TooLarge);
  }
  CHECK_THROWS_AS(nsp_rho_s_bruteforce<double>(MatrixXd::Ones(5, 12), 4), Error);
}

TEST_CASE("order-1 constants agree across methods and rho_s grows with s") {
  std::mt19937_64 rng(31);
  for (int t = 0; t < 20; ++t) {
    const Index N = 6 + t % 5;
    const Index m = N - 2 - t % 3;
    const MatrixXd A = gaussian_matrix(m, N, rng);
    const double r1 = nsp_rho1<double>(A).rho;
    const double b1 = nsp_rho_s_bruteforce<double>(A, 1).rho;
    const double b2 = nsp_rho_s_bruteforce<double>(A, 2).rho;
    CHECK(std::abs(r1 - b1) <= 1e-10 * std::max(1.0, r1));
    CHECK(b2 >= b1 - 1e-10);
    CHECK(std::abs(r1 - rho_by_vertices(A, 1)) <= 1e-9 * std::max(1.0, r1));
    CHECK(std::abs(b2 - rho_by_vertices(A, 2)) <= 1e-9 * std::max(1.0, b2));
  }
}

TEST_CASE("median rho_1 of Gaussian matrices does not increase with m") {
  std::mt19937_64 rng(41);
  const Index N = 20;
  double previous = std::numeric_limits<double>::infinity();
  for (Index m : {8, 12, 16}) {
    std::vector<double> values;
    for (int t = 0; t < 20; ++t) values.push_back(nsp_rho1<double>(gaussian_matrix(m, N, rng)).rho);
    std::nth_element(values.begin(), values.begin() + 10, values.end());
    const double median = values[10];
    CHECK(median <= previous);
    previous = median;
  }
}
