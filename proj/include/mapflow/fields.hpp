#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mapflow/maps.hpp"

namespace mapflow {

/// The vector field X_mu = mu * (rotated gradient) for n = 2, or
/// mu * (grad V_1 x ... x grad V_{n-1}) for n > 2.
class VectorField {
 public:
  VectorField(MapSpec map, ScalarField mu, std::string mu_name = {});

  Vec operator()(const Vec& p) const;
  /// The multiplier-free part: the rotated gradient or the cross product.
  Vec direction(const Vec& p) const;

  const MapSpec& map() const { return map_; }
  const ScalarField& mu() const { return mu_; }
  const std::string& mu_name() const { return mu_name_; }
  std::size_t dim() const { return map_.n; }
  bool in_domain(const Vec& p) const { return map_.in_domain(p); }
  int region_of(const Vec& p) const { return map_.region_of(p); }

 private:
  MapSpec map_;
  ScalarField mu_;
  std::string mu_name_;
};

VectorField build_field(const MapSpec& m, const ScalarField& mu, std::string mu_name = {});
/// Uses one of the map's named multipliers.
VectorField build_field(const MapSpec& m, std::string_view mu_name);

struct Residual {
  double value = 0.0;
  double scale = 0.0;
  double relative = 0.0;

  static Residual make(double value, double scale);
  bool passes(double threshold) const { return relative <= threshold; }
};

inline constexpr double kDefaultThreshold = 1e-8;

/// ||X(F(p)) - DF(p) X(p)|| against ||DF(p) X(p)||.
Residual check_condition_X(const MapSpec& m, const VectorField& X, const Vec& p);
/// |mu(F(p)) - det DF(p) mu(p)| against |det DF(p) mu(p)|.
Residual check_condition_mu(const MapSpec& m, const ScalarField& mu, const Vec& p);

struct Classification {
  SigmaClass verdict = SigmaClass::none;
  std::size_t plus_votes = 0;
  std::size_t minus_votes = 0;
  std::size_t neither = 0;
  /// Samples skipped because mu vanished or was not finite there.
  std::size_t skipped = 0;
  bool degenerate = false;
};

/// Decides whether mu is in sigma+ or sigma- of m by unanimous vote over
/// `samples` seeded domain points.
///
/// Points where mu or its image are not finite, or where both sides vanish,
/// are skipped and counted; if more than a tenth of the samples are skipped
/// the verdict is none and `degenerate` is set.
Classification classify_multiplier(const MapSpec& m, const ScalarField& mu, std::size_t samples,
                                   std::uint64_t seed = 1, double threshold = kDefaultThreshold);

struct SigmaTerm {
  ScalarField field;
  SigmaClass cls = SigmaClass::none;
};

/// A multiplier derived from known ones, with the class the algebra predicts
/// and the iterate F^power it is predicted for.
struct DerivedMultiplier {
  ScalarField field;
  SigmaClass predicted = SigmaClass::none;
  int power = 1;
  std::string rule;
};

/// prod_i mu_i^{e_i}, optionally times a first integral V.
///
/// The exponents must sum to 1 (the mu^l nu^(1-l) structure). A product of
/// sigma+ terms is sigma+ for F; mixing in sigma- terms gives sigma+ for F^2;
/// multiplying by a first integral keeps the class. Entries raised to a
/// negative power must not vanish at any of the `probes`.
DerivedMultiplier sigma_combine(std::span<const SigmaTerm> entries, std::span<const int> exponents,
                                const std::optional<ScalarField>& integral = std::nullopt,
                                std::span<const Vec> probes = {});

/// Class of mu with respect to F^k: sigma+ stays sigma+, sigma- becomes
/// sigma+ for even k.
DerivedMultiplier sigma_iterate(const SigmaTerm& term, int k);

struct Box {
  Vec lo;
  Vec hi;
  double volume() const;
  bool contains(const Vec& p) const;
};

struct MeasureCheck {
  double measure_box = 0.0;
  double stderr_box = 0.0;
  double measure_preimage = 0.0;
  double stderr_preimage = 0.0;
  /// |difference| / combined standard error.
  double z_score = 0.0;
  /// 1, or 2 when det DF < 0 forced the check onto F^2.
  int power_used = 1;
  bool agrees() const { return z_score <= 3.0; }
};

/// Monte Carlo estimates of m_nu(B) and m_nu(F^{-1}(B)) with nu = 1/|mu|.
///
/// Throws std::domain_error if mu changes sign or vanishes on the box.
MeasureCheck check_invariant_measure(const MapSpec& m, const ScalarField& mu, const Box& box,
                                     std::size_t n_samples, std::uint64_t seed);

}  // namespace mapflow
