#include "mapflow/rotation.hpp"

#include <algorithm>
#include <cmath>
#include <array>
#include <complex>
#include <limits>
#include <numbers>

#include <Eigen/Dense>

namespace mapflow {

double fold_rotation(double fraction) {
  double f = fraction - std::floor(fraction);
  return std::min(f, 1.0 - f);
}

namespace {

// An end is live when it ran for the whole horizon and the field there is not negligible.
bool arc_complete(const VectorField& X, const OrbitTrace& trace, double horizon) {
  const double scale = std::max(1.0, norm(X(trace.result.seed)));
  auto live = [&](const std::vector<Segment>& segs) {
    if (segs.empty()) return true;
    const Segment& s = segs.back();
    return std::abs(s.t1) >= horizon * (1 - 1e-9) && norm(X(s.y1)) > 1e-6 * scale;
  };
  return !live(trace.forward) && !live(trace.backward);
}

Rotation rotation_from_trace(const VectorField& X, const MapSpec& m, const OrbitTrace& trace, int max_k,
                             double horizon) {
  switch (trace.result.classification) {
    case OrbitKind::periodic: break;
    case OrbitKind::critical_point: throw CriticalSeedError("seed is a critical point of the field");
    case OrbitKind::not_closed_within_horizon:
      // A truncated periodic orbit says nothing about invariance. Orbits creeping
      // toward a line of zeros of X, or stopped at the boundary, are complete arcs.
      if (!arc_complete(X, trace, horizon))
        throw NonClosureError("orbit did not close within the horizon");
      [[fallthrough]];
    case OrbitKind::unbounded_or_open:
      if (!component_multiplicity(X, m, trace, max_k))
        throw NotInvariantError("not invariant at any multiplicity m <= " + std::to_string(max_k));
      if (trace.result.classification == OrbitKind::not_closed_within_horizon)
        throw NonClosureError("orbit did not close within the horizon");
      throw NonClosureError("orbit is open; the map acts on it as a translation, no rotation number");
  }
  const auto k = component_multiplicity(X, m, trace, max_k);
  if (!k) throw NotInvariantError("not invariant at any multiplicity m <= " + std::to_string(max_k));
  const MapSpec fk = *k == 1 ? m : power(m, *k);
  const auto ft = time_to_image(X, fk, trace);
  if (!ft) throw NotInvariantError("not invariant at multiplicity m = " + std::to_string(*k));
  Rotation r;
  r.period = *trace.result.period;
  r.tau = ft->tau;
  r.multiplicity = *k;
  r.closure_residual = trace.result.closure_residual;
  r.tau_residual = ft->residual;
  const double f = r.tau / r.period;
  r.rho_raw = f - std::floor(f);
  r.rho = fold_rotation(f);
  return r;
}

}  // namespace

Rotation flow_rotation(const VectorField& X, const MapSpec& m, const Vec& p, const IntegratorConfig& cfg,
                       int max_k) {
  return rotation_from_trace(X, m, trace_orbit(X, p, cfg), max_k, cfg.horizon);
}

double rotation_number_flow(const VectorField& X, const MapSpec& m, const Vec& p, const IntegratorConfig& cfg,
                            int max_k) {
  return flow_rotation(X, m, p, cfg, max_k).rho;
}

double rotation_number_birkhoff(const MapSpec& m, const Vec& p, const Vec& center, std::size_t iterations) {
  if (iterations < 2) throw std::invalid_argument("rotation_number_birkhoff: need at least 2 iterations");
  if (!center.empty() && center.size() != m.n) throw DimensionError("center has the wrong dimension");
  std::vector<Vec> orbit;
  orbit.reserve(iterations + 1);
  orbit.push_back(p);
  for (std::size_t i = 0; i < iterations; ++i) orbit.push_back(iterate(m, orbit.back(), 1));

  // Planar coordinates of each orbit point relative to the center.
  std::vector<std::array<double, 2>> uv(orbit.size());
  if (m.n == 2) {
    const Vec c = center.empty() ? Vec{0.0, 0.0} : center;
    Vec mean{0.0, 0.0};
    if (center.empty()) {
      for (const auto& q : orbit) mean = mean + q;
      mean = (1.0 / static_cast<double>(orbit.size())) * mean;
    }
    const Vec& o = center.empty() ? mean : c;
    for (std::size_t i = 0; i < orbit.size(); ++i) uv[i] = {orbit[i][0] - o[0], orbit[i][1] - o[1]};
  } else {
    const Eigen::Index n = static_cast<Eigen::Index>(m.n);
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(n);
    for (const auto& q : orbit) mean += Eigen::Map<const Eigen::VectorXd>(q.data(), n);
    mean /= static_cast<double>(orbit.size());
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(n, n);
    for (const auto& q : orbit) {
      const Eigen::VectorXd d = Eigen::Map<const Eigen::VectorXd>(q.data(), n) - mean;
      cov += d * d.transpose();
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
    // Eigenvalues come sorted ascending; the last two span the orbit's plane.
    const Eigen::VectorXd e1 = es.eigenvectors().col(n - 1);
    const Eigen::VectorXd e2 = es.eigenvectors().col(n - 2);
    const Eigen::VectorXd o = center.empty() ? mean : Eigen::Map<const Eigen::VectorXd>(center.data(), n);
    for (std::size_t i = 0; i < orbit.size(); ++i) {
      const Eigen::VectorXd d = Eigen::Map<const Eigen::VectorXd>(orbit[i].data(), n) - o;
      uv[i] = {d.dot(e1), d.dot(e2)};
    }
  }

  constexpr double pi = std::numbers::pi;
  double num = 0.0, den = 0.0;
  int sign = 0;
  for (std::size_t i = 0; i + 1 < uv.size(); ++i) {
    const double a0 = std::atan2(uv[i][1], uv[i][0]);
    const double a1 = std::atan2(uv[i + 1][1], uv[i + 1][0]);
    double d = std::remainder(a1 - a0, 2 * pi);
    if (std::abs(d) >= pi - 1e-9 || d == 0.0)
      throw std::domain_error("rotation_number_birkhoff: orbit is not star-shaped around the center");
    const int s = d > 0 ? 1 : -1;
    if (sign == 0) sign = s;
    if (s != sign) throw std::domain_error("rotation_number_birkhoff: orbit is not star-shaped around the center");
    // Smooth bump weights turn the tail error from O(1/N) into nearly nothing.
    const double t = (static_cast<double>(i) + 0.5) / static_cast<double>(uv.size() - 1);
    const double w = std::exp(-1.0 / (t * (1.0 - t)));
    num += w * d;
    den += w;
  }
  return std::abs(num / den) / (2 * pi);
}

double fixed_point_rotation(const MapSpec& m, const Vec& p_fix) {
  if (!m.in_domain(p_fix)) throw OutsideDomainError("fixed_point_rotation: point outside the domain");
  const Vec q = m.forward(p_fix);
  if (distance(q, p_fix) > 1e-9 * (1.0 + norm(p_fix)))
    throw std::invalid_argument("fixed_point_rotation: point is not fixed by the map");
  const Mat J = m.jacobian(p_fix);
  const Eigen::Index n = static_cast<Eigen::Index>(m.n);
  Eigen::MatrixXd A(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) A(i, j) = J(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
  Eigen::EigenSolver<Eigen::MatrixXd> es(A, false);
  for (Eigen::Index i = 0; i < n; ++i) {
    const std::complex<double> l = es.eigenvalues()(i);
    if (std::abs(l.imag()) > 1e-12 && std::abs(std::abs(l) - 1.0) < 1e-6)
      return std::abs(std::arg(l)) / (2 * std::numbers::pi);
  }
  throw std::domain_error("hyperbolic");
}

std::vector<Vec> SeedRay::seeds(std::size_t count) const {
  if (origin.size() != direction.size()) throw DimensionError("seed ray: origin and direction differ in size");
  std::vector<Vec> out;
  for (std::size_t i = 0; i < count; ++i) {
    const double s = count == 1 ? s_min : s_min + (s_max - s_min) * static_cast<double>(i) / (count - 1);
    out.push_back(origin + s * direction);
  }
  return out;
}

namespace {

double integral_drift(const VectorField& X, const OrbitTrace& trace) {
  const MapSpec& m = X.map();
  const Vec h0 = integral_values(m, trace.result.seed);
  double worst = 0.0;
  for (const auto& seg : trace.forward) {
    const Vec h = integral_values(m, seg.y1);
    for (std::size_t i = 0; i < h.size(); ++i)
      worst = std::max(worst, std::abs(h[i] - h0[i]) / std::max(1.0, std::abs(h0[i])));
  }
  return worst;
}

}  // namespace

SweepRow sweep_row(const VectorField& X, const Vec& seed, const IntegratorConfig& cfg, const SweepOptions& opt) {
  constexpr double nan = std::numeric_limits<double>::quiet_NaN();
  const MapSpec& m = X.map();
  SweepRow row;
  row.seed = seed;
  row.T = row.tau = row.rho = row.rho_raw = nan;
  row.residuals = {nan, nan, nan};
  try {
    row.h = integral_values(m, seed);
    const OrbitTrace trace = trace_orbit(X, seed, cfg);
    if (trace.result.period) {
      row.T = *trace.result.period;
      row.residuals.V = integral_drift(X, trace);
    }
    const Rotation r = rotation_from_trace(X, m, trace, opt.max_k, cfg.horizon);
    row.tau = r.tau;
    row.rho = r.rho;
    row.rho_raw = r.rho_raw;
    row.m = r.multiplicity;
    const MapSpec fk = r.multiplicity == 1 ? m : power(m, r.multiplicity);
    row.residuals.mu = check_condition_mu(fk, X.mu(), seed).relative;
    row.residuals.X = check_condition_X(fk, X, seed).relative;
    if (row.residuals.mu > opt.threshold || row.residuals.X > opt.threshold || row.residuals.V > opt.threshold)
      row.status = "residual";
  } catch (const NearCriticalError&) {
    row.status = "near_critical";
  } catch (const CriticalSeedError&) {
    row.status = "critical_point";
  } catch (const DomainExitError&) {
    row.status = "domain_exit";
  } catch (const OutsideDomainError&) {
    row.status = "domain_exit";
  } catch (const NonClosureError&) {
    row.status = "not_closed";
  } catch (const NotInvariantError&) {
    row.status = "not_invariant";
  }
  return row;
}

std::vector<SweepRow> sweep(const MapSpec& m, const ScalarField& mu, const SeedRay& ray, std::size_t count,
                            const IntegratorConfig& cfg, const SweepOptions& opt) {
  const VectorField X = build_field(m, mu);
  std::vector<SweepRow> rows;
  for (const auto& seed : ray.seeds(count)) rows.push_back(sweep_row(X, seed, cfg, opt));
  std::stable_sort(rows.begin(), rows.end(), [](const SweepRow& a, const SweepRow& b) {
    // Rows without a level (seed outside the domain) go last.
    if (a.h.empty() || b.h.empty()) return !a.h.empty() && b.h.empty();
    return a.h < b.h;
  });
  return rows;
}

std::string_view to_string(Monotonicity v) {
  switch (v) {
    case Monotonicity::increasing: return "increasing";
    case Monotonicity::decreasing: return "decreasing";
    case Monotonicity::non_monotonic: return "non_monotonic";
  }
  return "unknown";
}

MonotonicityReport monotonicity_report(std::vector<SweepRow> rows, const std::optional<EndpointReference>& fixed_point,
                                       double tie) {
  MonotonicityReport rep;
  for (auto& r : rows)
    if (r.ok()) rep.rows.push_back(std::move(r));
  if (rep.rows.size() < 3)
    throw std::invalid_argument("monotonicity_report: need at least 3 valid rows, got " +
                                std::to_string(rep.rows.size()));
  std::stable_sort(rep.rows.begin(), rep.rows.end(), [](const SweepRow& a, const SweepRow& b) { return a.h < b.h; });

  std::vector<int> dirs;
  int up = 0, down = 0;
  for (std::size_t i = 0; i + 1 < rep.rows.size(); ++i) {
    const double d = rep.rows[i + 1].rho - rep.rows[i].rho;
    const int s = d > tie ? 1 : (d < -tie ? -1 : 0);
    dirs.push_back(s);
    up += s > 0;
    down += s < 0;
  }
  if (up == 0 && down == 0) {
    rep.constant = true;
    rep.verdict = Monotonicity::non_monotonic;
  } else {
    int dominant = up > down ? 1 : (down > up ? -1 : 0);
    if (dominant == 0)
      dominant = *std::find_if(dirs.begin(), dirs.end(), [](int s) { return s != 0; });
    for (std::size_t i = 0; i < dirs.size(); ++i)
      if (dirs[i] != dominant) rep.violations.emplace_back(i + 1, i + 2);
    if (rep.violations.empty())
      rep.verdict = dominant > 0 ? Monotonicity::increasing : Monotonicity::decreasing;
    else
      rep.verdict = Monotonicity::non_monotonic;
  }

  if (fixed_point) {
    const Vec& hc = fixed_point->h;
    std::vector<std::size_t> idx(rep.rows.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
      return distance(rep.rows[a].h, hc) < distance(rep.rows[b].h, hc);
    });
    EndpointLimit lim;
    lim.reference = fixed_point->rho;
    lim.nearest = rep.rows[idx[0]].rho;
    lim.estimate = lim.nearest;
    if (hc.size() == 1) {
      // rho is smooth in h at the center, so a secant through the two
      // closest levels extrapolates well.
      const auto& r0 = rep.rows[idx[0]];
      const auto& r1 = rep.rows[idx[1]];
      const double dh = r1.h[0] - r0.h[0];
      if (dh != 0.0) lim.estimate = r0.rho + (r1.rho - r0.rho) / dh * (hc[0] - r0.h[0]);
    }
    rep.endpoint = lim;
  }
  return rep;
}

}  // namespace mapflow
