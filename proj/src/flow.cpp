#include "mapflow/flow.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace mapflow {

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784, a76 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;
// Continuous extension of order 4.
constexpr double d1 = -12715105075.0 / 11282082432, d3 = 87487479700.0 / 32700410799,
                 d4 = -10690763975.0 / 1880347072, d5 = 701980252875.0 / 199316789632,
                 d6 = -1453857185.0 / 822651844, d7 = 69997945.0 / 29380423;

constexpr double kSafe = 0.9, kFacMin = 0.2, kFacMax = 10.0, kBeta = 0.04;

bool finite(const Vec& v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

bool admissible(const VectorField& X, const Vec& y, int region) {
  return X.in_domain(y) && X.region_of(y) == region;
}

double min_step(double t) { return 1e-14 * std::max(1.0, std::abs(t)); }

}  // namespace

void IntegratorConfig::validate() const {
  if (!(rel_tol > 0) || !(abs_tol > 0)) throw std::invalid_argument("IntegratorConfig: tolerances must be positive");
  if (!(horizon > 0)) throw std::invalid_argument("IntegratorConfig: horizon must be positive");
  if (max_step < 0) throw std::invalid_argument("IntegratorConfig: max_step must be >= 0");
  if (!(closure_tol > 0)) throw std::invalid_argument("IntegratorConfig: closure_tol must be positive");
  if (!(blowup_norm > 0)) throw std::invalid_argument("IntegratorConfig: blowup_norm must be positive");
}

std::string_view to_string(OrbitKind k) {
  switch (k) {
    case OrbitKind::critical_point: return "critical_point";
    case OrbitKind::periodic: return "periodic";
    case OrbitKind::unbounded_or_open: return "unbounded_or_open";
    case OrbitKind::not_closed_within_horizon: return "not_closed_within_horizon";
  }
  return "unknown";
}

Vec Segment::eval(double t) const {
  const double h = t1 - t0;
  if (h == 0.0) return y0;
  const double s = (t - t0) / h;
  const double s1 = 1.0 - s;
  Vec y(y0.size());
  for (std::size_t i = 0; i < y.size(); ++i)
    y[i] = rcont[0][i] + s * (rcont[1][i] + s1 * (rcont[2][i] + s * (rcont[3][i] + s1 * rcont[4][i])));
  return y;
}

bool Segment::covers(double t) const { return (t - t0) * (t - t1) <= 0.0; }

bool dopri_step(const VectorField& X, const Vec& y, const Vec& k1, double h, int region, Vec& y5, Vec& k7,
                Vec* err, std::array<Vec, 7>* stages) {
  const std::size_t n = y.size();
  Vec tmp(n), k2, k3, k4, k5, k6;
  auto stage = [&](Vec& out) {
    if (!admissible(X, tmp, region)) return false;
    out = X(tmp);
    return finite(out);
  };
  for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + h * a21 * k1[i];
  if (!stage(k2)) return false;
  for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + h * (a31 * k1[i] + a32 * k2[i]);
  if (!stage(k3)) return false;
  for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
  if (!stage(k4)) return false;
  for (std::size_t i = 0; i < n; ++i)
    tmp[i] = y[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
  if (!stage(k5)) return false;
  for (std::size_t i = 0; i < n; ++i)
    tmp[i] = y[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
  if (!stage(k6)) return false;
  y5.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    y5[i] = y[i] + h * (a71 * k1[i] + a73 * k3[i] + a74 * k4[i] + a75 * k5[i] + a76 * k6[i]);
  if (!admissible(X, y5, region)) return false;
  k7 = X(y5);
  if (!finite(k7)) return false;
  if (err) {
    err->resize(n);
    for (std::size_t i = 0; i < n; ++i)
      (*err)[i] = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
  }
  if (stages) *stages = {k1, k2, k3, k4, k5, k6, k7};
  return true;
}

Vec polish(const VectorField& X, const Segment& seg, double t) {
  const double h = t - seg.t0;
  if (h == 0.0) return seg.y0;
  Vec y5, k7;
  if (!dopri_step(X, seg.y0, seg.k1, h, X.region_of(seg.y0), y5, k7, nullptr)) return seg.eval(t);
  return y5;
}

Stepper::Stepper(const VectorField& field, Vec y0, double t0, int direction, const IntegratorConfig& cfg)
    : field_(field), cfg_(cfg), dir_(direction >= 0 ? 1 : -1), t_(t0), y_(std::move(y0)) {
  cfg_.validate();
  if (!field_.in_domain(y_)) throw OutsideDomainError("integrate: initial point outside the domain");
  region_ = field_.region_of(y_);
  f_ = field_(y_);
  if (!finite(f_)) throw OutsideDomainError("integrate: field is not finite at the initial point");
  h_ = initial_step();
}

double Stepper::initial_step() const {
  const std::size_t n = y_.size();
  double dnf = 0.0, dny = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double sk = cfg_.abs_tol + cfg_.rel_tol * std::abs(y_[i]);
    dnf += (f_[i] / sk) * (f_[i] / sk);
    dny += (y_[i] / sk) * (y_[i] / sk);
  }
  double h = (dnf <= 1e-10 || dny <= 1e-10) ? 1e-6 : std::sqrt(dny / dnf) * 0.01;
  if (cfg_.max_step > 0) h = std::min(h, cfg_.max_step);
  Vec y1(n);
  for (int attempt = 0; attempt < 60; ++attempt) {
    for (std::size_t i = 0; i < n; ++i) y1[i] = y_[i] + dir_ * h * f_[i];
    if (admissible(field_, y1, region_)) break;
    h *= 0.5;
  }
  if (!admissible(field_, y1, region_)) return h;
  const Vec f1 = field_(y1);
  double der2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double sk = cfg_.abs_tol + cfg_.rel_tol * std::abs(y_[i]);
    der2 += ((f1[i] - f_[i]) / sk) * ((f1[i] - f_[i]) / sk);
  }
  der2 = std::sqrt(der2) / h;
  const double der12 = std::max(std::abs(der2), std::sqrt(dnf));
  const double h1 = der12 <= 1e-15 ? std::max(1e-6, h * 1e-3) : std::pow(0.01 / der12, 0.2);
  h = std::min(100 * h, h1);
  if (cfg_.max_step > 0) h = std::min(h, cfg_.max_step);
  return h;
}

Stepper::Status Stepper::step(double t_limit) {
  const std::size_t n = y_.size();
  Vec y5, k7, err;
  std::array<Vec, 7> k;
  for (;;) {
    if (steps_ >= cfg_.max_steps) return Status::step_limit;
    const double remaining = (t_limit - t_) * dir_;
    if (remaining <= 0) return Status::ok;
    double h = std::min(h_, remaining);
    if (cfg_.max_step > 0) h = std::min(h, cfg_.max_step);
    const bool last_step = (h == remaining);
    const double hs = dir_ * h;
    if (!dopri_step(field_, y_, f_, hs, region_, y5, k7, &err, &k)) {
      h_ = 0.5 * h;
      if (h_ < min_step(t_)) {
        std::ostringstream os;
        os << "integration left the domain at t = " << t_;
        throw DomainExitError(t_, y_, os.str());
      }
      continue;
    }
    double e = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double sk = cfg_.abs_tol + cfg_.rel_tol * std::max(std::abs(y_[i]), std::abs(y5[i]));
      e += (err[i] / sk) * (err[i] / sk);
    }
    e = std::sqrt(e / static_cast<double>(n));
    const double fac11 = std::pow(e, 0.2 - kBeta * 0.75);
    if (e <= 1.0) {
      double fac = fac11 / std::pow(facold_, kBeta);
      fac = std::max(1.0 / kFacMax, std::min(1.0 / kFacMin, fac / kSafe));
      facold_ = std::max(e, 1e-4);

      last_.t0 = t_;
      last_.t1 = last_step ? t_limit : t_ + hs;
      last_.y0 = y_;
      last_.y1 = y5;
      last_.k1 = f_;
      Vec ydiff(n), bspl(n), r5(n);
      for (std::size_t i = 0; i < n; ++i) {
        ydiff[i] = y5[i] - y_[i];
        bspl[i] = hs * f_[i] - ydiff[i];
        r5[i] = hs * (d1 * f_[i] + d3 * k[2][i] + d4 * k[3][i] + d5 * k[4][i] + d6 * k[5][i] + d7 * k7[i]);
      }
      last_.rcont[0] = y_;
      last_.rcont[1] = ydiff;
      last_.rcont[2] = bspl;
      Vec r4(n);
      for (std::size_t i = 0; i < n; ++i) r4[i] = ydiff[i] - hs * k7[i] - bspl[i];
      last_.rcont[3] = r4;
      last_.rcont[4] = r5;

      t_ = last_.t1;
      y_ = y5;
      f_ = k7;
      h_ = h / fac;
      ++steps_;
      if (norm(y_) > cfg_.blowup_norm) return Status::blowup;
      return Status::ok;
    }
    h_ = h / std::min(1.0 / kFacMin, fac11 / kSafe);
    if (h_ < min_step(t_)) {
      std::ostringstream os;
      os << "step size collapsed near a singularity at t = " << t_;
      throw DomainExitError(t_, y_, os.str());
    }
  }
}

Vec Stepper::substep(double t) const { return polish(field_, last_, t); }

Vec integrate(const VectorField& X, const Vec& p, double t, const IntegratorConfig& cfg) {
  cfg.validate();
  if (!X.in_domain(p)) throw OutsideDomainError("integrate: initial point outside the domain");
  if (std::abs(t) > cfg.horizon) throw std::invalid_argument("integrate: |t| exceeds the configured horizon");
  if (t == 0.0) return p;
  if (max_abs(X(p)) == 0.0) return p;
  Stepper s(X, p, 0.0, t > 0 ? 1 : -1, cfg);
  while ((t - s.t()) * (t > 0 ? 1 : -1) > 0) {
    const auto st = s.step(t);
    if (st == Stepper::Status::blowup) {
      std::ostringstream os;
      os << "solution left every bounded region at t = " << s.t();
      throw BlowUpError(s.t(), os.str());
    }
    if (st == Stepper::Status::step_limit) throw NonClosureError("integrate: step limit reached");
  }
  return s.y();
}

ScanResult scan(const VectorField& X, const Vec& p, double t, const IntegratorConfig& cfg,
                const std::function<bool(const Segment&)>& observer) {
  ScanResult r;
  r.last = p;
  if (t == 0.0) return r;
  const int dir = t > 0 ? 1 : -1;
  Stepper s(X, p, 0.0, dir, cfg);
  while ((t - s.t()) * dir > 0) {
    Stepper::Status st;
    try {
      st = s.step(t);
    } catch (const DomainExitError& e) {
      r.end = ScanEnd::domain_exit;
      r.time = e.time();
      r.last = s.y();
      return r;
    }
    r.time = s.t();
    r.last = s.y();
    if (st == Stepper::Status::step_limit) {
      r.end = ScanEnd::step_limit;
      return r;
    }
    if (!observer(s.last())) {
      r.end = ScanEnd::stopped;
      return r;
    }
    if (st == Stepper::Status::blowup) {
      r.end = ScanEnd::blowup;
      return r;
    }
  }
  r.end = ScanEnd::reached_time;
  return r;
}

namespace {

/// Locates the section crossing inside `seg`: bisection on the dense
/// output, then Newton on freshly integrated points.
std::pair<double, Vec> refine_crossing(const VectorField& X, const Segment& seg, const Vec& base,
                                       const Vec& normal) {
  auto g = [&](const Vec& y) { return dot(y - base, normal); };
  double lo = seg.t0, hi = seg.t1;
  double glo = g(seg.y0);
  for (int i = 0; i < 40; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double gm = g(seg.eval(mid));
    if ((gm > 0) == (glo > 0)) {
      lo = mid;
      glo = gm;
    } else {
      hi = mid;
    }
  }
  double t = 0.5 * (lo + hi);
  Vec y = polish(X, seg, t);
  for (int it = 0; it < 8; ++it) {
    const double dg = dot(X(y), normal);
    if (dg == 0.0) break;
    const double dt = g(y) / dg;
    t -= dt;
    y = polish(X, seg, t);
    if (std::abs(dt) <= 1e-13 * std::max(1.0, std::abs(t))) break;
  }
  return {t, y};
}

bool crosses(double g0, double g1, int dir) { return dir > 0 ? (g0 < 0 && g1 >= 0) : (g0 > 0 && g1 <= 0); }

void require_seed(const VectorField& X, const Vec& p) {
  if (p.size() != X.dim()) throw DimensionError("seed has the wrong dimension");
  if (!X.in_domain(p)) throw OutsideDomainError("seed outside the domain of " + X.map().name);
}

}  // namespace

OrbitTrace trace_orbit(const VectorField& X, const Vec& p, const IntegratorConfig& cfg) {
  cfg.validate();
  require_seed(X, p);
  OrbitTrace tr;
  tr.result.seed = p;
  tr.tolerance = cfg.closure_at(p);
  const Vec xp = X(p);
  const double speed = norm(xp);
  if (speed <= cfg.abs_tol) {
    tr.result.classification = OrbitKind::critical_point;
    return tr;
  }
  if (speed < 1e3 * cfg.abs_tol) {
    std::ostringstream os;
    os << "seed is within the near-critical band (|X(p)| = " << speed << ")";
    throw NearCriticalError(os.str());
  }
  bool closed = false;
  const ScanResult fw = scan(X, p, cfg.horizon, cfg, [&](const Segment& seg) {
    tr.forward.push_back(seg);
    const double g0 = dot(seg.y0 - p, xp);
    const double g1 = dot(seg.y1 - p, xp);
    if (!crosses(g0, g1, 1)) return true;
    ++tr.result.section_hits;
    if (tr.result.section_hits > cfg.max_returns)
      throw NonClosureError("more than max_returns section hits without closure");
    const auto [t, y] = refine_crossing(X, seg, p, xp);
    const double d = distance(y, p);
    if (d <= tr.tolerance) {
      tr.result.period = t;
      tr.result.closure_residual = d;
      closed = true;
      return false;
    }
    return true;
  });
  if (closed) {
    tr.result.classification = OrbitKind::periodic;
    return tr;
  }
  switch (fw.end) {
    case ScanEnd::blowup:
    case ScanEnd::domain_exit:
      tr.result.classification = OrbitKind::unbounded_or_open;
      break;
    default:
      tr.result.classification = OrbitKind::not_closed_within_horizon;
  }
  if (fw.end == ScanEnd::domain_exit) tr.result.exit_time = fw.time;
  // Open orbits are searched in both time directions.
  scan(X, p, -cfg.horizon, cfg, [&](const Segment& seg) {
    tr.backward.push_back(seg);
    return true;
  });
  return tr;
}

std::optional<Passage> locate(const VectorField& X, const OrbitTrace& trace, const Vec& target) {
  const Vec normal = X(target);
  if (max_abs(normal) == 0.0) return std::nullopt;
  std::optional<Passage> best;
  auto consider = [&](const std::vector<Segment>& segs, int dir) {
    for (const auto& seg : segs) {
      const double g0 = dot(seg.y0 - target, normal);
      const double g1 = dot(seg.y1 - target, normal);
      if (!crosses(g0, g1, dir)) continue;
      const auto [t, y] = refine_crossing(X, seg, target, normal);
      const double d = distance(y, target);
      if (!best || d < best->distance) best = Passage{t, d};
    }
  };
  consider(trace.forward, 1);
  consider(trace.backward, -1);
  return best;
}

OrbitResult detect_period(const VectorField& X, const Vec& p, const IntegratorConfig& cfg) {
  OrbitTrace tr = trace_orbit(X, p, cfg);
  if (tr.result.exit_time) {
    std::ostringstream os;
    os << "orbit left the domain at t = " << *tr.result.exit_time;
    const Vec where = tr.forward.empty() ? p : tr.forward.back().y1;
    throw DomainExitError(*tr.result.exit_time, where, os.str());
  }
  return tr.result;
}

std::optional<FlightTime> time_to_image(const VectorField& X, const MapSpec& m, const OrbitTrace& trace) {
  const Vec& p = trace.result.seed;
  const Vec q = m.forward(p);
  if (!m.in_domain(q)) throw OutsideDomainError("time_to_image: F(p) outside the domain of " + m.name);
  const double gap = distance(p, q);
  if (trace.result.classification == OrbitKind::critical_point) {
    if (gap <= trace.tolerance) return FlightTime{0.0, gap, true};
    throw CriticalSeedError("time_to_image: seed is a critical point of the field but not fixed by the map");
  }
  if (gap <= trace.tolerance) return FlightTime{0.0, gap, true};
  const auto hit = locate(X, trace, q);
  if (!hit || hit->distance > trace.tolerance) return std::nullopt;
  double tau = hit->time;
  if (trace.result.period && tau > *trace.result.period) tau -= *trace.result.period;
  return FlightTime{tau, hit->distance, false};
}

std::optional<FlightTime> time_to_image(const VectorField& X, const MapSpec& m, const Vec& p,
                                        const IntegratorConfig& cfg) {
  return time_to_image(X, m, trace_orbit(X, p, cfg));
}

namespace {

Vec point_at(const VectorField& X, const std::vector<Segment>& segs, double t) {
  for (const auto& seg : segs)
    if (seg.covers(t)) return polish(X, seg, t);
  return segs.back().y1;
}

/// p plus points spread along the traced orbit. A single point is not
/// enough: F^k(p) may land on an open arc by accident while F^k does not
/// map the arc into itself.
std::vector<Vec> orbit_probes(const VectorField& X, const OrbitTrace& trace) {
  constexpr int kProbes = 8;
  std::vector<Vec> probes{trace.result.seed};
  if (trace.result.period) {
    for (int j = 1; j < kProbes; ++j) probes.push_back(point_at(X, trace.forward, *trace.result.period * j / kProbes));
    return probes;
  }
  const double t_hi = trace.forward.empty() ? 0.0 : trace.forward.back().t1;
  const double t_lo = trace.backward.empty() ? 0.0 : trace.backward.back().t1;
  // Stay away from the ends, which sit at infinity or on the boundary.
  for (int j = 1; j < kProbes; ++j) {
    const double t = 0.9 * (t_lo + (t_hi - t_lo) * j / kProbes);
    if (t > 0 && !trace.forward.empty()) probes.push_back(point_at(X, trace.forward, t));
    if (t < 0 && !trace.backward.empty()) probes.push_back(point_at(X, trace.backward, t));
  }
  return probes;
}

}  // namespace

std::optional<int> component_multiplicity(const VectorField& X, const MapSpec& m, const OrbitTrace& trace,
                                          int max_k) {
  if (trace.result.classification == OrbitKind::critical_point)
    throw CriticalSeedError("component_multiplicity: seed is a critical point");
  if (max_k < 1) throw std::invalid_argument("component_multiplicity: max_k must be >= 1");
  std::vector<Vec> probes = orbit_probes(X, trace);
  for (int k = 1; k <= max_k; ++k) {
    bool all_on = true;
    for (auto& q : probes) {
      q = m.forward(q);
      if (!m.in_domain(q))
        throw OutsideDomainError("component_multiplicity: F^" + std::to_string(k) + " leaves the domain");
      if (!all_on) continue;
      const double tol = trace.tolerance * (1.0 + norm(q)) / (1.0 + norm(trace.result.seed));
      if (distance(q, trace.result.seed) <= tol) continue;
      const auto hit = locate(X, trace, q);
      if (!hit || hit->distance > tol) all_on = false;
    }
    if (all_on) return k;
  }
  return std::nullopt;
}

std::optional<int> component_multiplicity(const VectorField& X, const MapSpec& m, const Vec& p, int max_k,
                                          const IntegratorConfig& cfg) {
  return component_multiplicity(X, m, trace_orbit(X, p, cfg), max_k);
}

}  // namespace mapflow
