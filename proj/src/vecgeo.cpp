#include "mapflow/vecgeo.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace mapflow {

Mat::Mat(std::initializer_list<std::initializer_list<double>> rows) : n_(rows.size()) {
  a_.reserve(n_ * n_);
  for (const auto& r : rows) {
    if (r.size() != n_) throw DimensionError("Mat: rows must form a square matrix");
    a_.insert(a_.end(), r.begin(), r.end());
  }
}

Mat Mat::identity(std::size_t n) {
  Mat m(n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Mat Mat::from_rows(std::span<const Vec> rows) {
  Mat m(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != rows.size()) throw DimensionError("Mat::from_rows: not square");
    for (std::size_t j = 0; j < rows.size(); ++j) m(i, j) = rows[i][j];
  }
  return m;
}

Vec Mat::row(std::size_t i) const { return Vec(a_.begin() + i * n_, a_.begin() + (i + 1) * n_); }

Vec Mat::col(std::size_t j) const {
  Vec c(n_);
  for (std::size_t i = 0; i < n_; ++i) c[i] = (*this)(i, j);
  return c;
}

Mat Mat::transpose() const {
  Mat t(n_);
  for (std::size_t i = 0; i < n_; ++i)
    for (std::size_t j = 0; j < n_; ++j) t(j, i) = (*this)(i, j);
  return t;
}

double Mat::max_abs() const {
  double m = 0.0;
  for (double v : a_) m = std::max(m, std::abs(v));
  return m;
}

Vec Mat::operator*(const Vec& v) const {
  if (v.size() != n_) throw DimensionError("Mat*Vec: dimension mismatch");
  Vec r(n_, 0.0);
  for (std::size_t i = 0; i < n_; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < n_; ++j) s += (*this)(i, j) * v[j];
    r[i] = s;
  }
  return r;
}

Mat Mat::operator*(const Mat& m) const {
  if (m.n_ != n_) throw DimensionError("Mat*Mat: dimension mismatch");
  Mat r(n_);
  for (std::size_t i = 0; i < n_; ++i)
    for (std::size_t k = 0; k < n_; ++k) {
      const double aik = (*this)(i, k);
      for (std::size_t j = 0; j < n_; ++j) r(i, j) += aik * m(k, j);
    }
  return r;
}

Mat Mat::operator-(const Mat& m) const {
  if (m.n_ != n_) throw DimensionError("Mat-Mat: dimension mismatch");
  Mat r(n_);
  for (std::size_t k = 0; k < a_.size(); ++k) r.a_[k] = a_[k] - m.a_[k];
  return r;
}

double dot(const Vec& a, const Vec& b) {
  if (a.size() != b.size()) throw DimensionError("dot: dimension mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm(const Vec& a) { return std::sqrt(dot(a, a)); }

double max_abs(const Vec& a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::abs(v));
  return m;
}

Vec operator+(const Vec& a, const Vec& b) {
  if (a.size() != b.size()) throw DimensionError("Vec+Vec: dimension mismatch");
  Vec r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] + b[i];
  return r;
}

Vec operator-(const Vec& a, const Vec& b) {
  if (a.size() != b.size()) throw DimensionError("Vec-Vec: dimension mismatch");
  Vec r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] - b[i];
  return r;
}

Vec operator*(double s, const Vec& a) {
  Vec r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = s * a[i];
  return r;
}

double distance(const Vec& a, const Vec& b) { return norm(a - b); }

double frobenius(const Mat& m) {
  double s = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i)
    for (std::size_t j = 0; j < m.size(); ++j) s += m(i, j) * m(i, j);
  return std::sqrt(s);
}

double det(const Mat& m) {
  const std::size_t n = m.size();
  if (n == 0) return 1.0;
  if (n == 1) return m(0, 0);
  if (n == 2) return m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
  Mat a = m;
  double d = 1.0;
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t piv = k;
    for (std::size_t i = k + 1; i < n; ++i)
      if (std::abs(a(i, k)) > std::abs(a(piv, k))) piv = i;
    if (a(piv, k) == 0.0) return 0.0;
    if (piv != k) {
      for (std::size_t j = 0; j < n; ++j) std::swap(a(k, j), a(piv, j));
      d = -d;
    }
    const double akk = a(k, k);
    d *= akk;
    for (std::size_t i = k + 1; i < n; ++i) {
      const double f = a(i, k) / akk;
      if (f == 0.0) continue;
      for (std::size_t j = k + 1; j < n; ++j) a(i, j) -= f * a(k, j);
    }
  }
  return d;
}

double det_rows(std::span<const Vec> rows) { return det(Mat::from_rows(rows)); }

Vec cross(std::span<const Vec> rows) {
  if (rows.empty()) throw DimensionError("cross: need n-1 vectors");
  const std::size_t n = rows.size() + 1;
  if (n < 3) throw DimensionError("cross: dimension must be at least 3");
  for (const auto& r : rows)
    if (r.size() != n)
      throw DimensionError("cross: expected " + std::to_string(n - 1) + " vectors of dimension " +
                           std::to_string(n) + ", got one of dimension " + std::to_string(r.size()));
  if (n == 3) {
    const Vec& a = rows[0];
    const Vec& b = rows[1];
    return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
  }
  Vec w(n);
  Mat minor(n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t r = 0; r < n - 1; ++r) {
      std::size_t c = 0;
      for (std::size_t j = 0; j < n; ++j) {
        if (j == i) continue;
        minor(r, c++) = rows[r][j];
      }
    }
    const double s = (i % 2 == 0) ? 1.0 : -1.0;
    w[i] = s * det(minor);
  }
  return w;
}

std::size_t rank(std::span<const Vec> rows, double rel_tol) {
  if (rows.empty()) return 0;
  std::vector<Vec> a(rows.begin(), rows.end());
  const std::size_t m = a.size();
  const std::size_t n = a[0].size();
  double scale = 0.0;
  for (const auto& r : a) scale = std::max(scale, max_abs(r));
  if (scale == 0.0) return 0;
  std::size_t rk = 0;
  for (std::size_t c = 0; c < n && rk < m; ++c) {
    std::size_t piv = rk;
    for (std::size_t i = rk + 1; i < m; ++i)
      if (std::abs(a[i][c]) > std::abs(a[piv][c])) piv = i;
    if (std::abs(a[piv][c]) <= rel_tol * scale) continue;
    std::swap(a[rk], a[piv]);
    for (std::size_t i = rk + 1; i < m; ++i) {
      const double f = a[i][c] / a[rk][c];
      for (std::size_t j = c; j < n; ++j) a[i][j] -= f * a[rk][j];
    }
    ++rk;
  }
  return rk;
}

namespace {

Vec perturbed(const Vec& p, std::size_t j, double delta) {
  Vec q = p;
  q[j] += delta;
  return q;
}

void guard(const std::function<bool(const Vec&)>& inside, const Vec& q, std::size_t j, int sign) {
  if (inside && !inside(q))
    throw PerturbationError(j, sign,
                            "numeric differentiation: perturbation " + std::string(sign > 0 ? "+" : "-") +
                                "h along coordinate " + std::to_string(j) + " leaves the domain");
}

}  // namespace

Mat numeric_jacobian(const std::function<Vec(const Vec&)>& f, const Vec& p, double h,
                     const std::function<bool(const Vec&)>& inside) {
  const std::size_t n = p.size();
  Mat jac(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double hj = fd_step(h, p[j]);
    const Vec qp = perturbed(p, j, hj);
    const Vec qm = perturbed(p, j, -hj);
    guard(inside, qp, j, +1);
    guard(inside, qm, j, -1);
    const Vec fp = f(qp);
    const Vec fm = f(qm);
    if (fp.size() != n || fm.size() != n) throw DimensionError("numeric_jacobian: f must map R^n to R^n");
    for (std::size_t i = 0; i < n; ++i) jac(i, j) = (fp[i] - fm[i]) / (2.0 * hj);
  }
  return jac;
}

Vec numeric_gradient(const std::function<double(const Vec&)>& f, const Vec& p, double h,
                     const std::function<bool(const Vec&)>& inside) {
  Vec g(p.size());
  for (std::size_t j = 0; j < p.size(); ++j) {
    const double hj = fd_step(h, p[j]);
    const Vec qp = perturbed(p, j, hj);
    const Vec qm = perturbed(p, j, -hj);
    guard(inside, qp, j, +1);
    guard(inside, qm, j, -1);
    g[j] = (f(qp) - f(qm)) / (2.0 * hj);
  }
  return g;
}

}  // namespace mapflow
