#pragma once

#include <functional>
#include <map>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "mapflow/vecgeo.hpp"

namespace mapflow {

using Params = std::map<std::string, double>;
using Rng = std::mt19937_64;

class UnknownMapError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class InvalidParamsError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class OutsideDomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A scalar function with its closed-form gradient.
struct ScalarField {
  std::function<double(const Vec&)> eval;
  std::function<Vec(const Vec&)> grad;

  double operator()(const Vec& p) const { return eval(p); }
};

/// Membership in the solution spaces of mu(F(p)) = +/- det(DF(p)) mu(p).
enum class SigmaClass { plus, minus, none };

std::string_view to_string(SigmaClass c);

struct MultiplierSpec {
  std::string name;
  ScalarField field;
  /// Class with respect to the map this multiplier belongs to.
  SigmaClass claimed_class = SigmaClass::none;
  std::string note;
};

/// A diffeomorphism together with its first integrals and known multipliers.
///
/// Everything is immutable after construction; copies share nothing mutable.
struct MapSpec {
  std::string name;
  std::size_t n = 0;
  Params params;
  /// Distance kept from singular boundaries (x = 0 and the like).
  double margin = 1e-8;
  /// Iterate count when this bundle was built by power(); 1 for a built-in.
  int power = 1;
  /// Marks maps that are used to show the hypotheses matter; conclusions that
  /// need a diffeomorphism of the domain onto itself do not apply.
  bool diffeo_counterexample = false;

  std::function<bool(const Vec&, double)> domain;
  /// Optional: points with different keys belong to different pieces of the
  /// domain, so no integration step may connect them.
  std::function<int(const Vec&)> region;
  std::function<Vec(const Vec&)> forward;
  std::function<Vec(const Vec&)> inverse;
  std::function<Mat(const Vec&)> jacobian;
  std::vector<ScalarField> integrals;
  std::vector<MultiplierSpec> multipliers;
  /// Named auxiliary functions from the published formulas (G, H, I1, I2).
  std::map<std::string, ScalarField> extras;
  std::vector<Point> known_fixed_points;
  /// Draws a well-conditioned point of the domain.
  std::function<Vec(Rng&)> sampler;

  bool in_domain(const Vec& p) const;
  int region_of(const Vec& p) const { return region ? region(p) : 0; }
  const MultiplierSpec& multiplier(std::string_view name) const;
  bool has_multiplier(std::string_view name) const;
  std::vector<std::string> multiplier_names() const;
  /// Name of the multiplier used when none is requested.
  std::string default_multiplier;
};

std::vector<std::string> builtin_names();
/// Parameter keys accepted by a built-in, with their defaults.
Params builtin_defaults(std::string_view name);

/// Builds one of: lyness, gumovski_mira, kulenovic, tilde_lyness, todd, hky_y1.
MapSpec builtin(std::string_view name, const Params& params = {});

/// F^k as a bundle of its own: composed forward/inverse maps, chain-rule
/// Jacobian, the same integrals, and multiplier classes adjusted for k.
MapSpec power(const MapSpec& m, int k);

Vec iterate(const MapSpec& m, const Vec& p, int k);
Vec integral_values(const MapSpec& m, const Vec& p);
double jacobian_det(const MapSpec& m, const Vec& p);
Vec sample_domain(const MapSpec& m, Rng& rng);

/// Rows of the integrals' gradient matrix at p.
std::vector<Vec> integral_gradients(const MapSpec& m, const Vec& p);

}  // namespace mapflow
