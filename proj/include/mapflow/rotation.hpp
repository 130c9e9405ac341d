#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mapflow/flow.hpp"

namespace mapflow {

/// F^m(p) never came back onto the orbit of p for any m <= max_k, or the
/// flight time to F^m(p) could not be found.
class NotInvariantError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Everything the flow method produces for one seed.
struct Rotation {
  double rho = 0.0;      // folded into (0, 1/2]
  double rho_raw = 0.0;  // frac(tau / T) in the flow's own orientation
  double period = 0.0;
  double tau = 0.0;
  int multiplicity = 1;
  double closure_residual = 0.0;
  double tau_residual = 0.0;
};

/// Folds a fraction of a turn into (0, 1/2]: a rotation by f and by 1 - f
/// differ only in orientation.
double fold_rotation(double fraction);

Rotation flow_rotation(const VectorField& X, const MapSpec& m, const Vec& p, const IntegratorConfig& cfg,
                       int max_k = 4);

/// rho = tau / T for F^m on the orbit of p, with m the component multiplicity.
double rotation_number_flow(const VectorField& X, const MapSpec& m, const Vec& p, const IntegratorConfig& cfg,
                            int max_k = 4);

/// Weighted Birkhoff average of the angle increments of the orbit of p
/// around `center`. For n > 2 the orbit is projected onto its best-fit plane;
/// an empty center means the orbit's centroid.
double rotation_number_birkhoff(const MapSpec& m, const Vec& p, const Vec& center, std::size_t iterations);

/// theta / 2pi for the unit-modulus eigenvalue pair e^{+-i theta} of DF at a
/// fixed point. Throws std::domain_error("hyperbolic") for real spectra.
double fixed_point_rotation(const MapSpec& m, const Vec& p_fix);

/// Seeds origin + s * direction for s evenly spaced in [s_min, s_max].
struct SeedRay {
  Vec origin;
  Vec direction;
  double s_min = 0.0;
  double s_max = 1.0;

  std::vector<Vec> seeds(std::size_t count) const;
};

struct SweepResiduals {
  double mu = 0.0;
  double X = 0.0;
  /// Largest relative drift of the integrals over one period.
  double V = 0.0;
};

struct SweepRow {
  Vec h;
  Vec seed;
  double T = 0.0;
  double tau = 0.0;
  double rho = 0.0;
  double rho_raw = 0.0;
  int m = 0;
  SweepResiduals residuals;
  /// "ok", or why the row is not usable.
  std::string status = "ok";

  bool ok() const { return status == "ok"; }
};

struct SweepOptions {
  int max_k = 4;
  double threshold = kDefaultThreshold;
};

/// Rotation data for one seed. Failures land in `status`, never thrown.
SweepRow sweep_row(const VectorField& X, const Vec& seed, const IntegratorConfig& cfg, const SweepOptions& opt = {});

/// One row per seed on the ray, sorted by h.
std::vector<SweepRow> sweep(const MapSpec& m, const ScalarField& mu, const SeedRay& ray, std::size_t count,
                            const IntegratorConfig& cfg, const SweepOptions& opt = {});

enum class Monotonicity { increasing, decreasing, non_monotonic };

std::string_view to_string(Monotonicity v);

struct EndpointReference {
  /// Level of the fixed point, V(p_c).
  Vec h;
  double rho = 0.0;
};

struct EndpointLimit {
  double estimate = 0.0;  // extrapolated to h(p_c) when h is scalar
  double nearest = 0.0;   // rho of the row closest to h(p_c)
  double reference = 0.0;
  double error() const { return std::abs(estimate - reference); }
};

struct MonotonicityReport {
  std::vector<SweepRow> rows;  // usable rows only, sorted by h
  Monotonicity verdict = Monotonicity::non_monotonic;
  bool constant = false;
  /// 1-based positions (i, i+1) in `rows` that break the dominant direction.
  std::vector<std::pair<std::size_t, std::size_t>> violations;
  std::optional<EndpointLimit> endpoint;
};

inline constexpr double kTieTolerance = 1e-9;

MonotonicityReport monotonicity_report(std::vector<SweepRow> rows,
                                       const std::optional<EndpointReference>& fixed_point = std::nullopt,
                                       double tie = kTieTolerance);

}  // namespace mapflow
