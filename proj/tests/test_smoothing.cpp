#include "test_support.hpp"

#include "irls_bp/smoothing.hpp"

#include <limits>

using namespace irls;
using testing::gaussian_vector;

namespace {
VectorXd vec(std::initializer_list<double> v) {
  VectorXd x(static_cast<Index>(v.size()));
  Index i = 0;
  for (double e : v) x(i++) = e;
  return x;
}
}  // namespace

TEST_CASE("best_s_term_error examples") {
  CHECK(best_s_term_error(vec({3, 1, -2}), 1) == doctest::Approx(3.0));
  CHECK(best_s_term_error(vec({0, 4, 0, -1}), 2) == 0.0);
  CHECK(best_s_term_error(vec({0, 4, 0, -1}), 3) == 0.0);
  CHECK(best_s_term_error(vec({1, 2}), 0) == doctest::Approx(3.0));
  CHECK_THROWS_AS(best_s_term_error(vec({1, 2}), 3), Error);
}

TEST_CASE("best_s_term_error agrees with a sorting oracle") {
  std::mt19937_64 rng(21);
  for (int t = 0; t < 200; ++t) {
    const VectorXd x = gaussian_vector(10, rng);
    CHECK(best_s_term_error(x, 3) == doctest::Approx(testing::sorted_tail_sum(x, 3)).epsilon(1e-14));
  }
}

TEST_CASE("top_s_indices breaks ties toward smaller indices") {
  const auto S = top_s_indices(vec({1, -2, 2, 0.5, 2}), 2);
  CHECK(S == std::vector<Index>{1, 2});
  CHECK(top_s_indices(vec({0, 0, 0}), 1) == std::vector<Index>{0});
}

TEST_CASE("smoothed_objective examples") {
  CHECK(smoothed_objective(VectorXd::Zero(3), 1.0) == doctest::Approx(1.5));
  CHECK(smoothed_objective(vec({2, 0.5}), 1.0) == doctest::Approx(2.625));
  CHECK(smoothed_objective(vec({5}), 2.0) == doctest::Approx(5.0));
  CHECK_THROWS_AS(smoothed_objective(vec({1}), 0.0), Error);
  CHECK_THROWS_AS(smoothed_objective(vec({1}), std::numeric_limits<double>::infinity()), Error);
}

TEST_CASE("weights examples") {
  CHECK(weights(VectorXd::Zero(4), 0.5).isApprox(VectorXd::Constant(4, 2.0)));
  const VectorXd w = weights(vec({3, 0.1}), 0.5);
  CHECK(w(0) == doctest::Approx(1.0 / 3.0));
  CHECK(w(1) == doctest::Approx(2.0));
}

TEST_CASE("quadratic_majorizer examples") {
  CHECK(quadratic_majorizer(vec({1, -2}), vec({1, -2}), 0.5) == doctest::Approx(3.0));
  CHECK(quadratic_majorizer(vec({2}), vec({1}), 0.5) == doctest::Approx(2.5));
  CHECK(smoothed_objective(vec({2}), 0.5) == doctest::Approx(2.0));
}

TEST_CASE("smoothing_update examples") {
  const double inf = std::numeric_limits<double>::infinity();
  CHECK(smoothing_update(inf, vec({3, 1, -2}), 1) == doctest::Approx(1.0));
  CHECK(smoothing_update(0.2, vec({3, 1, -2}), 1) == doctest::Approx(0.2));
  CHECK(smoothing_update(0.2, vec({4, 0, 0}), 1) == 0.0);
}

TEST_CASE("weights times x equals the piecewise gradient") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> eps_dist(1e-3, 2.0);
  for (int t = 0; t < 1000; ++t) {
    const VectorXd x = gaussian_vector(8, rng);
    const double eps = eps_dist(rng);
    const VectorXd wx = weights(x, eps).cwiseProduct(x);
    CHECK((wx - testing::gradient_by_cases(x, eps)).lpNorm<Eigen::Infinity>() <= 1e-14);
    CHECK((smoothed_gradient(x, eps) - testing::gradient_by_cases(x, eps)).lpNorm<Eigen::Infinity>() <= 1e-14);
  }
}

TEST_CASE("majorizer touches at x and lies above the objective") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> eps_dist(1e-3, 2.0);
  for (int t = 0; t < 1000; ++t) {
    const VectorXd x = gaussian_vector(6, rng);
    const VectorXd z = gaussian_vector(6, rng, 2.0);
    const double eps = eps_dist(rng);
    const double J = smoothed_objective(x, eps);
    CHECK(std::abs(quadratic_majorizer(x, x, eps) - J) <= 1e-12 * std::max(1.0, J));
    CHECK(quadratic_majorizer(z, x, eps) >= smoothed_objective(z, eps) - 1e-12);
  }
}

TEST_CASE("per-coordinate sandwich |t| <= j(t) <= |t| + eps") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> t_dist(0.0, 1.0);
  std::uniform_real_distribution<double> eps_dist(1e-6, 3.0);
  for (int t = 0; t < 1000; ++t) {
    const double v = t_dist(rng);
    const double eps = eps_dist(rng);
    const double j = smoothed_abs(v, eps);
    CHECK(std::abs(v) <= j);
    CHECK(j <= std::abs(v) + eps);
  }
}

TEST_CASE("gradient agrees with central differences away from the kink") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> eps_dist(0.05, 1.0);
  const double h = 1e-6;
  int checked = 0;
  for (int t = 0; t < 300; ++t) {
    const VectorXd x = gaussian_vector(5, rng);
    const double eps = eps_dist(rng);
    const VectorXd g = smoothed_gradient(x, eps);
    for (Index i = 0; i < x.size(); ++i) {
      if (std::abs(std::abs(x(i)) - eps) < 1e-3) continue;
      VectorXd xp = x, xm = x;
      xp(i) += h;
      xm(i) -= h;
      const double fd = (smoothed_objective(xp, eps) - smoothed_objective(xm, eps)) / (2 * h);
      CHECK(std::abs(fd - g(i)) <= 1e-6);
      ++checked;
    }
  }
  CHECK(checked > 1000);
}
