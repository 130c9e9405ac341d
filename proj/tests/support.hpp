// Independent reference computations for the tests. Nothing here calls the
// library's own linear algebra or differentiation.
#pragma once

#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "mapflow/vecgeo.hpp"

namespace oracle {

using mapflow::Vec;

inline Eigen::MatrixXd to_eigen(const std::vector<Vec>& rows) {
  Eigen::MatrixXd m(rows.size(), rows.empty() ? 0 : rows[0].size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j) m(i, j) = rows[i][j];
  return m;
}

inline double det(const std::vector<Vec>& rows) { return to_eigen(rows).determinant(); }

/// Cross product via cofactors of the (n-1) x n matrix, using Eigen's
/// determinant for each minor.
inline Vec cross(const std::vector<Vec>& rows) {
  const std::size_t n = rows[0].size();
  const Eigen::MatrixXd W = to_eigen(rows);
  Vec out(n);
  for (std::size_t i = 0; i < n; ++i) {
    Eigen::MatrixXd M(n - 1, n - 1);
    for (std::size_t r = 0; r + 1 < n; ++r)
      for (std::size_t c = 0, k = 0; c < n; ++c)
        if (c != i) M(r, k++) = W(r, c);
    out[i] = ((i % 2) ? -1.0 : 1.0) * M.determinant();
  }
  return out;
}

/// Five-point central difference, column by column.
inline std::vector<Vec> jacobian(const std::function<Vec(const Vec&)>& f, const Vec& p, double h = 1e-4) {
  const std::size_t n = p.size();
  const Vec f0 = f(p);
  std::vector<Vec> J(f0.size(), Vec(n));
  for (std::size_t j = 0; j < n; ++j) {
    const double s = h * std::max(1.0, std::abs(p[j]));
    auto at = [&](double k) {
      Vec q = p;
      q[j] += k * s;
      return f(q);
    };
    const Vec a = at(-2), b = at(-1), c = at(1), d = at(2);
    for (std::size_t i = 0; i < f0.size(); ++i) J[i][j] = (a[i] - 8 * b[i] + 8 * c[i] - d[i]) / (12 * s);
  }
  return J;
}

inline Vec gradient(const std::function<double(const Vec&)>& f, const Vec& p, double h = 1e-4) {
  const auto J = jacobian([&](const Vec& q) { return Vec{f(q)}; }, p, h);
  return J[0];
}

inline double rel_diff(const Vec& a, const Vec& b) {
  double num = 0, den = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += (a[i] - b[i]) * (a[i] - b[i]);
    den += b[i] * b[i];
  }
  return std::sqrt(num) / std::max(1e-300, std::sqrt(den));
}

inline double rel_diff(const std::vector<Vec>& a, const std::vector<Vec>& b) {
  double num = 0, den = 0;
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < a[i].size(); ++j) {
      num += (a[i][j] - b[i][j]) * (a[i][j] - b[i][j]);
      den += b[i][j] * b[i][j];
    }
  return std::sqrt(num) / std::max(1.0, std::sqrt(den));
}

inline std::vector<Vec> random_rows(std::mt19937_64& rng, std::size_t rows, std::size_t n) {
  std::normal_distribution<double> g;
  std::vector<Vec> out(rows, Vec(n));
  for (auto& r : out)
    for (auto& x : r) x = g(rng);
  return out;
}

// Printed component formulas, typed in directly from the published text.

/// Lyness flow of Beukers and Cushman.
inline Vec lyness_published(double a, const Vec& p) {
  const double x = p[0], y = p[1];
  return {-(x + 1) * (y - (x + a) / y), (y + 1) * (x - (y + a) / x)};
}

inline double todd_G(double a, double x, double y, double z) {
  return -y * y * y - (x + a + 1 + z) * y * y - (a + x + z) * y + x * x * z * z + x * z + x * x * z + x * z * z;
}

/// Todd field for mu = xyz.
inline Vec todd_published_X(double a, const Vec& p) {
  const double x = p[0], y = p[1], z = p[2], G = todd_G(a, x, y, z);
  return {(x + 1) * (1 + y + z) * (y * z - x - y - a) * G / (x * y * y * z * z),
          (y + 1) * (z - x) * (a + x + y + z + x * z) * G / (x * x * y * z * z),
          (z + 1) * (1 + x + y) * (y + z + a - x * y) * G / (x * x * y * y * z)};
}

/// Todd field for mu tilde.
inline Vec todd_published_Xtilde(double a, const Vec& p) {
  const double x = p[0], y = p[1], z = p[2];
  return {(x + 1) * (1 + y + z) * (a + x + y - y * z) / (y * z),
          (y + 1) * (x - z) * (a + x + y + z + x * z) / (x * z),
          (z + 1) * (1 + x + y) * (x * y - y - a - z) / (x * y)};
}

}  // namespace oracle
