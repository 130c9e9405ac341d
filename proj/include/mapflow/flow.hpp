#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "mapflow/fields.hpp"

namespace mapflow {

struct IntegratorConfig {
  double rel_tol = 1e-12;
  double abs_tol = 1e-12;
  /// 0 means no bound.
  double max_step = 0.0;
  /// Longest integration time for any single scan.
  double horizon = 1e4;
  std::size_t max_returns = 10000;
  std::size_t max_steps = 200000;
  /// Orbits leaving this ball are treated as unbounded.
  double blowup_norm = 1e6;
  /// Closure tolerance factor; the tolerance at p is closure_tol * (1 + |p|).
  double closure_tol = 1e-7;

  void validate() const;
  double closure_at(const Vec& p) const { return closure_tol * (1.0 + norm(p)); }
};

/// The integration left the domain (or its piece of the domain) at `time`.
class DomainExitError : public std::runtime_error {
 public:
  DomainExitError(double time, Vec where, const std::string& what)
      : std::runtime_error(what), time_(time), where_(std::move(where)) {}
  double time() const { return time_; }
  const Vec& where() const { return where_; }

 private:
  double time_;
  Vec where_;
};

/// The solution left every bounded region before the requested time.
class BlowUpError : public std::runtime_error {
 public:
  BlowUpError(double time, const std::string& what) : std::runtime_error(what), time_(time) {}
  double time() const { return time_; }

 private:
  double time_;
};

/// The seed is too close to a zero of the field for periods to mean anything.
class NearCriticalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An operation needing a regular seed got a critical point.
class CriticalSeedError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Too many section hits without the orbit closing.
class NonClosureError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One accepted Dormand-Prince step with its continuous extension.
struct Segment {
  double t0 = 0.0;
  double t1 = 0.0;
  Vec y0;
  Vec y1;
  Vec k1;  // X(y0)
  std::array<Vec, 5> rcont;

  Vec eval(double t) const;
  bool covers(double t) const;
};

/// Embedded 5(4) Runge-Kutta pair with PI step control and dense output.
class Stepper {
 public:
  Stepper(const VectorField& field, Vec y0, double t0, int direction, const IntegratorConfig& cfg);

  enum class Status { ok, blowup, step_limit };
  /// Advances one accepted step without passing `t_limit` (in the direction
  /// of integration). Throws DomainExitError if the step size collapses.
  Status step(double t_limit);

  double t() const { return t_; }
  const Vec& y() const { return y_; }
  const Segment& last() const { return last_; }
  std::size_t steps() const { return steps_; }

  /// A single fresh RK step from the start of the last segment to t; more
  /// accurate than the dense interpolant, used to polish event locations.
  Vec substep(double t) const;

 private:
  double initial_step() const;

  const VectorField& field_;
  IntegratorConfig cfg_;
  int dir_;
  double t_;
  Vec y_;
  Vec f_;
  double h_;
  double facold_ = 1e-4;
  int region_;
  std::size_t steps_ = 0;
  Segment last_;
};

/// One Dormand-Prince step of signed size h from y with X(y) = k1. Returns
/// false if a stage leaves the domain, changes region, or is not finite.
bool dopri_step(const VectorField& X, const Vec& y, const Vec& k1, double h, int region, Vec& y5, Vec& k7,
                Vec* err, std::array<Vec, 7>* stages = nullptr);

/// Re-integrates from the start of `seg` to t with a single fresh step.
Vec polish(const VectorField& X, const Segment& seg, double t);

/// phi(t, p). Critical points and t = 0 return p unchanged.
Vec integrate(const VectorField& X, const Vec& p, double t, const IntegratorConfig& cfg);

enum class ScanEnd { reached_time, blowup, domain_exit, stopped, step_limit };

struct ScanResult {
  ScanEnd end = ScanEnd::reached_time;
  double time = 0.0;
  Vec last;
};

/// Integrates from p towards time t (either sign), handing every accepted
/// segment to `observer`; a false return stops the scan. Domain exits and
/// blow-ups end the scan and are reported rather than thrown.
ScanResult scan(const VectorField& X, const Vec& p, double t, const IntegratorConfig& cfg,
                const std::function<bool(const Segment&)>& observer);

enum class OrbitKind { critical_point, periodic, unbounded_or_open, not_closed_within_horizon };

std::string_view to_string(OrbitKind k);

struct OrbitResult {
  Vec seed;
  std::optional<double> period;
  std::optional<double> tau;
  std::optional<int> multiplicity;
  double closure_residual = 0.0;
  OrbitKind classification = OrbitKind::not_closed_within_horizon;
  std::size_t section_hits = 0;
  /// Time at which the forward orbit left the domain, if it did.
  std::optional<double> exit_time;
};

/// An orbit with its stored trajectory: one period for closed orbits, both
/// time directions up to the horizon for open ones.
struct OrbitTrace {
  OrbitResult result;
  std::vector<Segment> forward;
  std::vector<Segment> backward;
  double tolerance = 0.0;
};

struct Passage {
  double time = 0.0;
  double distance = 0.0;
};

OrbitTrace trace_orbit(const VectorField& X, const Vec& p, const IntegratorConfig& cfg);

/// Closest transversal passage of the traced orbit through the hyperplane at
/// `target` orthogonal to X(target).
std::optional<Passage> locate(const VectorField& X, const OrbitTrace& trace, const Vec& target);

/// First return to the section through p orthogonal to X(p).
OrbitResult detect_period(const VectorField& X, const Vec& p, const IntegratorConfig& cfg);

struct FlightTime {
  double tau = 0.0;
  double residual = 0.0;
  /// Set when p is fixed by the map, so tau = 0 by convention.
  bool degenerate = false;
};

/// tau with phi(tau, p) = F(p), if F(p) lies on the orbit of p.
std::optional<FlightTime> time_to_image(const VectorField& X, const MapSpec& m, const Vec& p,
                                        const IntegratorConfig& cfg);
std::optional<FlightTime> time_to_image(const VectorField& X, const MapSpec& m, const OrbitTrace& trace);

/// Smallest k <= max_k with F^k(p) on the orbit of p.
std::optional<int> component_multiplicity(const VectorField& X, const MapSpec& m, const Vec& p, int max_k,
                                          const IntegratorConfig& cfg);
std::optional<int> component_multiplicity(const VectorField& X, const MapSpec& m, const OrbitTrace& trace,
                                          int max_k);

}  // namespace mapflow
