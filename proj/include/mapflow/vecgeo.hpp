#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace mapflow {

/// A point or vector in R^n.
using Vec = std::vector<double>;
using Point = Vec;

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised by numeric_jacobian when a perturbed point falls outside the domain.
class PerturbationError : public std::domain_error {
 public:
  PerturbationError(std::size_t column, int sign, const std::string& what)
      : std::domain_error(what), column_(column), sign_(sign) {}
  std::size_t column() const { return column_; }
  int sign() const { return sign_; }

 private:
  std::size_t column_;
  int sign_;
};

/// Dense square matrix, row-major.
class Mat {
 public:
  Mat() = default;
  explicit Mat(std::size_t n) : n_(n), a_(n * n, 0.0) {}
  Mat(std::initializer_list<std::initializer_list<double>> rows);

  static Mat identity(std::size_t n);
  static Mat from_rows(std::span<const Vec> rows);

  std::size_t size() const { return n_; }
  double& operator()(std::size_t i, std::size_t j) { return a_[i * n_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return a_[i * n_ + j]; }

  Vec row(std::size_t i) const;
  Vec col(std::size_t j) const;
  Mat transpose() const;
  double max_abs() const;

  Vec operator*(const Vec& v) const;
  Mat operator*(const Mat& m) const;
  Mat operator-(const Mat& m) const;

 private:
  std::size_t n_ = 0;
  std::vector<double> a_;
};

double dot(const Vec& a, const Vec& b);
double norm(const Vec& a);
double max_abs(const Vec& a);
Vec operator+(const Vec& a, const Vec& b);
Vec operator-(const Vec& a, const Vec& b);
Vec operator*(double s, const Vec& a);
double distance(const Vec& a, const Vec& b);
double frobenius(const Mat& m);

/// Determinant by LU with partial pivoting. Singular input gives 0.
double det(const Mat& m);

/// Determinant of the square matrix with the given rows.
double det_rows(std::span<const Vec> rows);

/// Generalised cross product of n-1 vectors in R^n (n >= 3).
///
/// Component i is (-1)^i det(M_i) (0-based i), where M_i drops column i of
/// the stacked rows, so that U . cross(W) = det([U; W_1; ...; W_{n-1}]).
Vec cross(std::span<const Vec> rows);

/// Rank by Gaussian elimination on an m x n row set with relative pivot
/// threshold `rel_tol`.
std::size_t rank(std::span<const Vec> rows, double rel_tol = 1e-10);

/// Finite-difference step used by numeric_jacobian for coordinate j.
inline double fd_step(double h, double pj) { return h * std::max(1.0, std::abs(pj)); }

/// Central-difference Jacobian; column j is (f(p+h_j e_j) - f(p-h_j e_j)) / (2 h_j)
/// with h_j = h * max(1, |p_j|).
///
/// `inside` (optional) guards the perturbed points; a failing perturbation
/// raises PerturbationError naming the column.
Mat numeric_jacobian(const std::function<Vec(const Vec&)>& f, const Vec& p,
                     double h = 1e-5,
                     const std::function<bool(const Vec&)>& inside = {});

/// Central-difference gradient of a scalar function.
Vec numeric_gradient(const std::function<double(const Vec&)>& f, const Vec& p,
                     double h = 1e-5,
                     const std::function<bool(const Vec&)>& inside = {});

}  // namespace mapflow
