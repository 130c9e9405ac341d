#include "mapflow/fields.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace mapflow {

VectorField::VectorField(MapSpec map, ScalarField mu, std::string mu_name)
    : map_(std::move(map)), mu_(std::move(mu)), mu_name_(std::move(mu_name)) {
  if (map_.n < 2) throw DimensionError("build_field: dimension must be at least 2");
  if (map_.integrals.size() != map_.n - 1)
    throw DimensionError("build_field: map '" + map_.name + "' has " + std::to_string(map_.integrals.size()) +
                         " integrals, expected " + std::to_string(map_.n - 1));
  if (!mu_.eval) throw std::invalid_argument("build_field: multiplier has no evaluator");
}

Vec VectorField::direction(const Vec& p) const {
  if (p.size() != map_.n) throw DimensionError("VectorField: point has the wrong dimension");
  if (map_.n == 2) {
    const Vec g = map_.integrals[0].grad(p);
    return {-g[1], g[0]};
  }
  std::vector<Vec> rows;
  rows.reserve(map_.n - 1);
  for (const auto& v : map_.integrals) rows.push_back(v.grad(p));
  return cross(rows);
}

Vec VectorField::operator()(const Vec& p) const {
  const double mu = mu_.eval(p);
  Vec d = direction(p);
  for (double& v : d) v *= mu;
  return d;
}

VectorField build_field(const MapSpec& m, const ScalarField& mu, std::string mu_name) {
  if (mu.grad) {
    // A multiplier of the wrong dimension shows up as a gradient mismatch.
    Rng rng(7);
    const Vec p = sample_domain(m, rng);
    if (mu.grad(p).size() != m.n)
      throw DimensionError("build_field: multiplier gradient has dimension " + std::to_string(mu.grad(p).size()) +
                           ", map has dimension " + std::to_string(m.n));
  }
  return VectorField(m, mu, std::move(mu_name));
}

VectorField build_field(const MapSpec& m, std::string_view mu_name) {
  const auto& spec = m.multiplier(mu_name);
  return build_field(m, spec.field, spec.name);
}

Residual Residual::make(double value, double scale) {
  Residual r;
  r.value = value;
  r.scale = scale;
  r.relative = value / std::max(1.0, scale);
  return r;
}

namespace {

void require_pair_in_domain(const MapSpec& m, const Vec& p, const char* what) {
  if (!m.in_domain(p)) throw OutsideDomainError(std::string(what) + ": p outside the domain of " + m.name);
  if (!m.in_domain(m.forward(p)))
    throw OutsideDomainError(std::string(what) + ": F(p) outside the domain of " + m.name);
}

}  // namespace

Residual check_condition_X(const MapSpec& m, const VectorField& X, const Vec& p) {
  require_pair_in_domain(m, p, "check_condition_X");
  const Vec fp = m.forward(p);
  const Vec pushed = m.jacobian(p) * X(p);
  return Residual::make(norm(X(fp) - pushed), norm(pushed));
}

Residual check_condition_mu(const MapSpec& m, const ScalarField& mu, const Vec& p) {
  require_pair_in_domain(m, p, "check_condition_mu");
  const double lhs = mu.eval(m.forward(p));
  const double rhs = det(m.jacobian(p)) * mu.eval(p);
  return Residual::make(std::abs(lhs - rhs), std::abs(rhs));
}

Classification classify_multiplier(const MapSpec& m, const ScalarField& mu, std::size_t samples,
                                   std::uint64_t seed, double threshold) {
  if (samples == 0) throw std::invalid_argument("classify_multiplier: need at least one sample");
  struct Sample {
    double lhs, rhs, magnitude;
  };
  Rng rng(seed);
  std::vector<Sample> pts;
  Classification c;
  for (std::size_t i = 0; i < samples; ++i) {
    const Vec p = sample_domain(m, rng);
    const double lhs = mu.eval(m.forward(p));
    const double rhs = det(m.jacobian(p)) * mu.eval(p);
    if (!std::isfinite(lhs) || !std::isfinite(rhs)) {
      ++c.skipped;
      continue;
    }
    pts.push_back({lhs, rhs, std::max(std::abs(lhs), std::abs(rhs))});
  }
  std::vector<double> mags;
  for (const auto& s : pts) mags.push_back(s.magnitude);
  double median = 0.0;
  if (!mags.empty()) {
    std::nth_element(mags.begin(), mags.begin() + mags.size() / 2, mags.end());
    median = mags[mags.size() / 2];
  }
  if (median == 0.0) {
    c.degenerate = true;
    c.skipped = samples;
    return c;
  }
  for (const auto& s : pts) {
    // Points close to a zero or a pole of mu do not vote.
    if (s.magnitude == 0.0 || s.magnitude < 1e-6 * median || s.magnitude > 1e6 * median) {
      ++c.skipped;
      continue;
    }
    const double rp = std::abs(s.lhs - s.rhs) / s.magnitude;
    const double rm = std::abs(s.lhs + s.rhs) / s.magnitude;
    if (rp <= threshold)
      ++c.plus_votes;
    else if (rm <= threshold)
      ++c.minus_votes;
    else
      ++c.neither;
  }
  if (c.skipped * 10 > samples) {
    c.degenerate = true;
    return c;
  }
  if (c.neither == 0 && c.minus_votes == 0 && c.plus_votes > 0) c.verdict = SigmaClass::plus;
  if (c.neither == 0 && c.plus_votes == 0 && c.minus_votes > 0) c.verdict = SigmaClass::minus;
  return c;
}

DerivedMultiplier sigma_combine(std::span<const SigmaTerm> entries, std::span<const int> exponents,
                                const std::optional<ScalarField>& integral, std::span<const Vec> probes) {
  if (entries.empty()) throw std::invalid_argument("sigma_combine: no entries");
  if (entries.size() != exponents.size())
    throw std::invalid_argument("sigma_combine: one exponent per entry is required");
  const int total = std::accumulate(exponents.begin(), exponents.end(), 0);
  if (total != 1) throw std::invalid_argument("sigma_combine: exponents must sum to 1 (mu^l nu^(1-l) form)");

  std::vector<ScalarField> fs;
  std::vector<int> es(exponents.begin(), exponents.end());
  bool any_none = false;
  bool any_minus = false;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    fs.push_back(entries[i].field);
    if (es[i] == 0) continue;
    if (entries[i].cls == SigmaClass::none) any_none = true;
    if (entries[i].cls == SigmaClass::minus) any_minus = true;
  }
  for (const auto& p : probes)
    for (std::size_t i = 0; i < fs.size(); ++i)
      if (es[i] < 0 && std::abs(fs[i].eval(p)) < 1e-300)
        throw std::domain_error("sigma_combine: entry " + std::to_string(i) +
                                " has a negative exponent and vanishes on the sample set");

  DerivedMultiplier d;
  d.field.eval = [fs, es, integral](const Vec& p) {
    double v = 1.0;
    for (std::size_t i = 0; i < fs.size(); ++i) v *= std::pow(fs[i].eval(p), es[i]);
    if (integral) v *= integral->eval(p);
    return v;
  };
  const bool grads = std::all_of(fs.begin(), fs.end(), [](const auto& f) { return bool(f.grad); }) &&
                     (!integral || bool(integral->grad));
  if (grads) {
    d.field.grad = [fs, es, integral](const Vec& p) {
      const std::size_t k = fs.size();
      std::vector<double> vals(k);
      for (std::size_t i = 0; i < k; ++i) vals[i] = fs[i].eval(p);
      const double w = integral ? integral->eval(p) : 1.0;
      Vec g(p.size(), 0.0);
      for (std::size_t i = 0; i < k; ++i) {
        if (es[i] == 0) continue;
        double coef = es[i] * std::pow(vals[i], es[i] - 1) * w;
        for (std::size_t j = 0; j < k; ++j)
          if (j != i) coef *= std::pow(vals[j], es[j]);
        const Vec gi = fs[i].grad(p);
        for (std::size_t c = 0; c < g.size(); ++c) g[c] += coef * gi[c];
      }
      if (integral) {
        double prod = 1.0;
        for (std::size_t i = 0; i < k; ++i) prod *= std::pow(vals[i], es[i]);
        const Vec gv = integral->grad(p);
        for (std::size_t c = 0; c < g.size(); ++c) g[c] += prod * gv[c];
      }
      return g;
    };
  }
  if (any_none) {
    d.predicted = SigmaClass::none;
    d.rule = "an entry has no sigma class";
  } else if (!any_minus) {
    d.predicted = SigmaClass::plus;
    d.power = 1;
    d.rule = "products mu^l nu^(1-l) of sigma+ multipliers are sigma+";
  } else {
    d.predicted = SigmaClass::plus;
    d.power = 2;
    d.rule = "mixing sigma- multipliers gives sigma+ for F^2";
  }
  if (integral) d.rule += "; times a first integral keeps the class";
  return d;
}

DerivedMultiplier sigma_iterate(const SigmaTerm& term, int k) {
  if (k < 1) throw std::invalid_argument("sigma_iterate: k must be >= 1");
  DerivedMultiplier d;
  d.field = term.field;
  d.power = k;
  switch (term.cls) {
    case SigmaClass::plus:
      d.predicted = SigmaClass::plus;
      d.rule = "sigma+ for F is sigma+ for every F^k";
      break;
    case SigmaClass::minus:
      d.predicted = (k % 2 == 0) ? SigmaClass::plus : SigmaClass::minus;
      d.rule = "sigma- for F is sigma+ for even iterates";
      break;
    case SigmaClass::none:
      d.predicted = SigmaClass::none;
      d.rule = "no class";
      break;
  }
  return d;
}

double Box::volume() const {
  double v = 1.0;
  for (std::size_t i = 0; i < lo.size(); ++i) v *= hi[i] - lo[i];
  return v;
}

bool Box::contains(const Vec& p) const {
  for (std::size_t i = 0; i < lo.size(); ++i)
    if (p[i] < lo[i] || p[i] > hi[i]) return false;
  return true;
}

namespace {

/// Calls f on every node of a regular grid with `per_axis` nodes per side.
template <class Fn>
void for_grid(const Box& b, std::size_t per_axis, Fn&& f) {
  const std::size_t n = b.lo.size();
  std::vector<std::size_t> idx(n, 0);
  Vec p(n);
  for (;;) {
    for (std::size_t i = 0; i < n; ++i)
      p[i] = b.lo[i] + (b.hi[i] - b.lo[i]) * static_cast<double>(idx[i]) / static_cast<double>(per_axis - 1);
    f(p);
    std::size_t i = 0;
    while (i < n && ++idx[i] == per_axis) idx[i++] = 0;
    if (i == n) break;
  }
}

struct Estimate {
  double mean = 0.0;
  double stderr_ = 0.0;
};

template <class Fn>
Estimate monte_carlo(const Box& b, std::size_t n, Rng& rng, Fn&& integrand) {
  const std::size_t d = b.lo.size();
  std::vector<std::uniform_real_distribution<double>> axes;
  for (std::size_t i = 0; i < d; ++i) axes.emplace_back(b.lo[i], b.hi[i]);
  double sum = 0.0, sum2 = 0.0;
  Vec p(d);
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t i = 0; i < d; ++i) p[i] = axes[i](rng);
    const double v = integrand(p);
    sum += v;
    sum2 += v * v;
  }
  const double mean = sum / static_cast<double>(n);
  const double var = std::max(0.0, sum2 / static_cast<double>(n) - mean * mean);
  const double vol = b.volume();
  return {vol * mean, vol * std::sqrt(var / static_cast<double>(n))};
}

}  // namespace

MeasureCheck check_invariant_measure(const MapSpec& m, const ScalarField& mu, const Box& box,
                                     std::size_t n_samples, std::uint64_t seed) {
  if (box.lo.size() != m.n || box.hi.size() != m.n) throw DimensionError("check_invariant_measure: box dimension");
  if (n_samples < 2) throw std::invalid_argument("check_invariant_measure: need at least two samples");
  const std::size_t per_axis = m.n <= 2 ? 41 : 17;

  int mu_sign = 0;
  int det_sign = 0;
  bool det_mixed = false;
  for_grid(box, per_axis, [&](const Vec& p) {
    if (!m.in_domain(p)) throw OutsideDomainError("check_invariant_measure: box leaves the domain of " + m.name);
    const double v = mu.eval(p);
    const int s = v > 0 ? 1 : (v < 0 ? -1 : 0);
    if (s == 0 || (mu_sign != 0 && s != mu_sign))
      throw std::domain_error("check_invariant_measure: mu vanishes inside the box (box touches M0)");
    mu_sign = s;
    const double dj = det(m.jacobian(p));
    const int ds = dj > 0 ? 1 : -1;
    if (det_sign != 0 && ds != det_sign) det_mixed = true;
    det_sign = ds;
  });
  if (det_mixed) throw std::domain_error("check_invariant_measure: det DF changes sign on the box");

  MeasureCheck out;
  const MapSpec target = det_sign > 0 ? m : power(m, 2);
  out.power_used = det_sign > 0 ? 1 : 2;
  const double sgn = static_cast<double>(mu_sign);
  auto density = [&](const Vec& p) {
    const double v = sgn * mu.eval(p);
    if (!(v > 0)) throw std::domain_error("check_invariant_measure: mu vanishes inside the box (box touches M0)");
    return 1.0 / v;
  };

  // Bounding box of the preimage from the images of a fine grid.
  Box pre{Vec(m.n, std::numeric_limits<double>::infinity()), Vec(m.n, -std::numeric_limits<double>::infinity())};
  for_grid(box, per_axis, [&](const Vec& p) {
    Vec q = p;
    for (int k = 0; k < out.power_used; ++k) {
      q = m.inverse(q);
      if (!m.in_domain(q)) throw OutsideDomainError("check_invariant_measure: preimage of the box leaves the domain");
    }
    for (std::size_t i = 0; i < m.n; ++i) {
      pre.lo[i] = std::min(pre.lo[i], q[i]);
      pre.hi[i] = std::max(pre.hi[i], q[i]);
    }
  });
  for (std::size_t i = 0; i < m.n; ++i) {
    const double pad = 0.05 * (pre.hi[i] - pre.lo[i]) + 1e-12;
    pre.lo[i] -= pad;
    pre.hi[i] += pad;
  }

  Rng rng_box(seed);
  Rng rng_pre(seed ^ 0x9e3779b97f4a7c15ULL);
  const Estimate eb = monte_carlo(box, n_samples, rng_box, density);
  const Estimate ep = monte_carlo(pre, n_samples, rng_pre, [&](const Vec& q) {
    if (!m.in_domain(q)) return 0.0;
    const Vec image = target.forward(q);
    if (!box.contains(image)) return 0.0;
    return density(q);
  });
  out.measure_box = eb.mean;
  out.stderr_box = eb.stderr_;
  out.measure_preimage = ep.mean;
  out.stderr_preimage = ep.stderr_;
  const double se = std::hypot(eb.stderr_, ep.stderr_);
  out.z_score = se > 0 ? std::abs(eb.mean - ep.mean) / se : (eb.mean == ep.mean ? 0.0 : INFINITY);
  return out;
}

}  // namespace mapflow
