#include <doctest.h>

#include <cmath>
#include <random>

#include "mapflow/vecgeo.hpp"
#include "support.hpp"

using namespace mapflow;

TEST_SUITE("vecgeo") {

TEST_CASE("determinant matches an independent LU") {
  std::mt19937_64 rng(3);
  for (std::size_t n = 1; n <= 6; ++n)
    for (int k = 0; k < 50; ++k) {
      const auto rows = oracle::random_rows(rng, n, n);
      const double d = det_rows(rows);
      const double ref = oracle::det(rows);
      CHECK(std::abs(d - ref) <= 1e-12 * std::max(1.0, std::abs(ref)));
    }
  CHECK(det(Mat{{1, 2}, {2, 4}}) == 0.0);
  CHECK(det(Mat{{0, 1, 0}, {1, 0, 0}, {0, 0, 1}}) == doctest::Approx(-1.0));
}

TEST_CASE("cross product in R^3 is the usual one") {
  const std::vector<Vec> w{{1, 0, 0}, {0, 1, 0}};
  const Vec c = cross(w);
  CHECK(c == Vec{0, 0, 1});
  const std::vector<Vec> u{{1, 2, 3}, {-2, 0.5, 4}};
  const Vec r = cross(u);
  CHECK(r[0] == doctest::Approx(2 * 4 - 3 * 0.5));
  CHECK(r[1] == doctest::Approx(3 * -2 - 1 * 4));
  CHECK(r[2] == doctest::Approx(1 * 0.5 - 2 * -2));
}

TEST_CASE("cross product agrees with cofactors and is orthogonal to its inputs") {
  std::mt19937_64 rng(5);
  for (std::size_t n = 3; n <= 6; ++n)
    for (int k = 0; k < 200; ++k) {
      const auto w = oracle::random_rows(rng, n - 1, n);
      const Vec c = cross(w);
      CHECK(oracle::rel_diff(c, oracle::cross(w)) <= 1e-12);
      for (const auto& wi : w) CHECK(std::abs(dot(c, wi)) <= 1e-12 * norm(c) * norm(wi) + 1e-300);
    }
}

TEST_CASE("defining identity U . cross(W) = det[U; W]") {
  std::mt19937_64 rng(7);
  for (std::size_t n = 3; n <= 5; ++n)
    for (int k = 0; k < 500; ++k) {
      auto w = oracle::random_rows(rng, n, n);
      const Vec u = w[0];
      const std::vector<Vec> rest(w.begin() + 1, w.end());
      const double lhs = dot(u, cross(rest));
      const double rhs = oracle::det(w);
      CHECK(std::abs(lhs - rhs) <= 1e-9 * std::max(1.0, std::abs(rhs)));
    }
}

TEST_CASE("A cross(A^t W) = det(A) cross(W)") {
  std::mt19937_64 rng(11);
  for (std::size_t n = 3; n <= 5; ++n)
    for (int k = 0; k < 500; ++k) {
      const auto arows = oracle::random_rows(rng, n, n);
      const Mat A = Mat::from_rows(arows);
      const Mat At = A.transpose();
      const auto w = oracle::random_rows(rng, n - 1, n);
      std::vector<Vec> atw;
      for (const auto& wi : w) atw.push_back(At * wi);
      const Vec lhs = A * cross(atw);
      const Vec rhs = det(A) * cross(w);
      CHECK(norm(lhs - rhs) <= 1e-9 * std::max(1.0, norm(rhs)));
    }
}

TEST_CASE("cross rejects bad shapes") {
  CHECK_THROWS_AS(cross(std::vector<Vec>{{1, 2}}), DimensionError);
  CHECK_THROWS_AS(cross(std::vector<Vec>{{1, 2, 3}, {1, 2}}), DimensionError);
  CHECK_THROWS_AS(cross(std::vector<Vec>{{1, 2, 3}}), DimensionError);
}

TEST_CASE("rank") {
  CHECK(rank(std::vector<Vec>{{1, 2, 3}, {2, 4, 6}}) == 1);
  CHECK(rank(std::vector<Vec>{{1, 2, 3}, {0, 1, 0}}) == 2);
  CHECK(rank(std::vector<Vec>{{0, 0, 0}}) == 0);
}

TEST_CASE("numeric jacobian") {
  auto f = [](const Vec& p) { return Vec{std::sin(p[0]) * p[1], p[0] * p[0] + std::exp(p[1])}; };
  const Vec p{0.3, -1.2};
  const Mat J = numeric_jacobian(f, p);
  CHECK(J(0, 0) == doctest::Approx(std::cos(0.3) * -1.2).epsilon(1e-8));
  CHECK(J(0, 1) == doctest::Approx(std::sin(0.3)).epsilon(1e-8));
  CHECK(J(1, 0) == doctest::Approx(0.6).epsilon(1e-8));
  CHECK(J(1, 1) == doctest::Approx(std::exp(-1.2)).epsilon(1e-8));

  auto positive = [](const Vec& q) { return q[0] > 0; };
  try {
    numeric_jacobian(f, Vec{1e-7, 1.0}, 1e-5, positive);
    FAIL("expected PerturbationError");
  } catch (const PerturbationError& e) {
    CHECK(e.column() == 0);
    CHECK(e.sign() == -1);
  }
}

TEST_CASE("matrix helpers") {
  const Mat A{{1, 2}, {3, 4}};
  CHECK((A * Vec{1, 1}) == Vec{3, 7});
  const Mat B = A * Mat::identity(2);
  CHECK(frobenius(B - A) == 0.0);
  CHECK(A.transpose()(0, 1) == 3.0);
  CHECK(A.col(1) == Vec{2, 4});
}

}  // TEST_SUITE
