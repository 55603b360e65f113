#include <cmath>

#include "doctest.h"
#include "induct/linalg.hpp"

using namespace induct;

TEST_CASE("column softmax basics") {
  Matrix logits(2, 3);
  logits(0, 0) = 0.0;
  logits(1, 0) = 0.0;
  logits(0, 1) = 3.7;
  logits(1, 1) = kMasked;
  logits(0, 2) = 1.0;
  logits(1, 2) = 0.0;
  const Matrix sm = column_softmax(logits);
  CHECK(sm(0, 0) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(sm(1, 0) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(sm(0, 1) == 1.0);
  CHECK(sm(1, 1) == 0.0);  // masked maps to exact zero
  const double e = std::exp(1.0);
  CHECK(std::abs(sm(0, 2) - e / (1 + e)) < 1e-12);
  CHECK(std::abs(sm(1, 2) - 1 / (1 + e)) < 1e-12);
  for (std::size_t j = 0; j < 3; ++j) {
    double s = sm(0, j) + sm(1, j);
    CHECK(std::abs(s - 1.0) < 1e-12);
  }
}

TEST_CASE("fully masked column is an error") {
  Matrix logits(2, 1, kMasked);
  CHECK_THROWS_AS(column_softmax(logits), std::invalid_argument);
}

TEST_CASE("softmax invariant under constant column shift") {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t len = 2 + rng.next_u64() % 10;
    std::vector<Real> a(len);
    for (Real& x : a) x = 3.0 * rng.next_gaussian();
    std::vector<Real> b = a;
    const Real c = 10.0 * rng.next_gaussian();
    for (Real& x : b) x += c;
    CHECK(max_abs_diff(softmax_masked(a), softmax_masked(b)) < 1e-12);
  }
}

TEST_CASE("softmax lipschitz bound") {
  Rng rng(7);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t len = 2 + rng.next_u64() % 63;
    std::vector<Real> a(len), b(len);
    for (std::size_t i = 0; i < len; ++i) {
      a[i] = 4.0 * rng.next_gaussian();
      b[i] = a[i] + 2.0 * rng.next_gaussian();
    }
    const std::vector<Real> sa = softmax_masked(a);
    const std::vector<Real> sb = softmax_masked(b);
    Real l1 = 0, linf = 0;
    for (std::size_t i = 0; i < len; ++i) {
      l1 += std::abs(sa[i] - sb[i]);
      linf = std::max(linf, std::abs(a[i] - b[i]));
    }
    REQUIRE(l1 <= 2.0 * linf + 1e-12);
  }
}

TEST_CASE("rng reproducibility and sampling support") {
  Rng a(123), b(123);
  const Matrix ma = gaussian_sample(a, 4, 5);
  const Matrix mb = gaussian_sample(b, 4, 5);
  CHECK(ma.data == mb.data);  // bitwise

  Rng r(9);
  const Matrix bm = boolean_sample(r, 8, 8);
  for (Real x : bm.data) CHECK((x == 1.0 || x == -1.0));

  Rng g(11);
  double sum = 0.0;
  const std::size_t n = 1000000;
  for (std::size_t i = 0; i < n; ++i) sum += g.next_gaussian();
  CHECK(std::abs(sum / n) < 0.01);

  Rng base(5);
  Rng s1 = base.substream(1), s2 = base.substream(2);
  CHECK(s1.next_u64() != s2.next_u64());
}

TEST_CASE("lstsq solves overdetermined and rank-deficient systems") {
  Rng rng(17);
  Matrix a = gaussian_sample(rng, 20, 4);
  std::vector<Real> x_true = {1.5, -2.0, 0.25, 3.0};
  const std::vector<Real> b = matvec(a, x_true);
  const LstsqResult sol = lstsq(a, b);
  CHECK(sol.rank == 4);
  CHECK(max_abs_diff(sol.x, x_true) < 1e-10);

  // Duplicate a column: rank drops, residual still (near) zero.
  Matrix a2(20, 5);
  for (std::size_t i = 0; i < 20; ++i) {
    for (std::size_t j = 0; j < 4; ++j) a2(i, j) = a(i, j);
    a2(i, 4) = a(i, 0);
  }
  const LstsqResult sol2 = lstsq(a2, b);
  CHECK(sol2.rank == 4);
  CHECK(max_abs_diff(matvec(a2, sol2.x), b) < 1e-9);

  const std::vector<Real> ridge = solve_ridge(a, b, 1e-10);
  CHECK(max_abs_diff(ridge, x_true) < 1e-6);
}

TEST_CASE("line fit recovers an exact line") {
  std::vector<Real> xs = {1, 2, 3, 4}, ys;
  for (Real x : xs) ys.push_back(-0.7 * x + 2.0);
  const LineFit f = line_fit(xs, ys);
  CHECK(f.slope == doctest::Approx(-0.7).epsilon(1e-12));
  CHECK(f.intercept == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(f.r2 == doctest::Approx(1.0).epsilon(1e-12));
}
