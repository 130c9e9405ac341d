#include "mapflow/maps.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace mapflow {

std::string_view to_string(SigmaClass c) {
  switch (c) {
    case SigmaClass::plus: return "sigma+";
    case SigmaClass::minus: return "sigma-";
    case SigmaClass::none: return "none";
  }
  return "none";
}

bool MapSpec::in_domain(const Vec& p) const {
  if (p.size() != n) return false;
  for (double v : p)
    if (!std::isfinite(v)) return false;
  return domain(p, margin);
}

const MultiplierSpec& MapSpec::multiplier(std::string_view nm) const {
  for (const auto& mu : multipliers)
    if (mu.name == nm) return mu;
  std::ostringstream os;
  os << "map '" << name << "' has no multiplier '" << nm << "' (available:";
  for (const auto& mu : multipliers) os << ' ' << mu.name;
  os << ')';
  throw std::invalid_argument(os.str());
}

bool MapSpec::has_multiplier(std::string_view nm) const {
  return std::any_of(multipliers.begin(), multipliers.end(), [&](const auto& mu) { return mu.name == nm; });
}

std::vector<std::string> MapSpec::multiplier_names() const {
  std::vector<std::string> names;
  for (const auto& mu : multipliers) names.push_back(mu.name);
  return names;
}

namespace {

double log_uniform(Rng& rng, double lo, double hi) {
  std::uniform_real_distribution<double> u(std::log(lo), std::log(hi));
  return std::exp(u(rng));
}

double uniform(Rng& rng, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  return u(rng);
}

bool positive_cone(const Vec& p, double margin) {
  return std::all_of(p.begin(), p.end(), [&](double v) { return v > margin; });
}

/// Rejection-samples `draw` until the point and its image and preimage are
/// in the domain.
Vec sample_with_images(const MapSpec& m, Rng& rng, const std::function<Vec(Rng&)>& draw) {
  for (int attempt = 0; attempt < 100000; ++attempt) {
    Vec p = draw(rng);
    if (!m.in_domain(p)) continue;
    const Vec f = m.forward(p);
    if (!m.in_domain(f)) continue;
    const Vec b = m.inverse(p);
    if (!m.in_domain(b)) continue;
    return p;
  }
  throw std::runtime_error("sample_domain: no admissible point found for " + m.name);
}

double param(const Params& p, const std::string& key) { return p.at(key); }

MultiplierSpec monomial_multiplier(std::size_t n, SigmaClass cls, const std::string& note) {
  ScalarField f;
  f.eval = [](const Vec& p) {
    double s = 1.0;
    for (double v : p) s *= v;
    return s;
  };
  f.grad = [n](const Vec& p) {
    Vec g(n, 1.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (i != j) g[i] *= p[j];
    return g;
  };
  return {n == 2 ? "xy" : "xyz", f, cls, note};
}

MultiplierSpec constant_multiplier(std::size_t n, SigmaClass cls, const std::string& note) {
  ScalarField f;
  f.eval = [](const Vec&) { return 1.0; };
  f.grad = [n](const Vec&) { return Vec(n, 0.0); };
  return {"one", f, cls, note};
}

/// Positive root of a monotone-bracketed scalar equation by bisection.
double bisect(const std::function<double(double)>& g, double lo, double hi) {
  double glo = g(lo);
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double gm = g(mid);
    if ((gm > 0) == (glo > 0)) {
      lo = mid;
      glo = gm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

// ---------------------------------------------------------------- Lyness

MapSpec make_lyness(const Params& prm) {
  const double a = param(prm, "a");
  if (!(a > 0)) throw InvalidParamsError("lyness: requires a > 0");
  MapSpec m;
  m.name = "lyness";
  m.n = 2;
  m.params = prm;
  m.domain = [](const Vec& p, double mg) { return positive_cone(p, mg); };
  m.forward = [a](const Vec& p) { return Vec{p[1], (a + p[1]) / p[0]}; };
  m.inverse = [a](const Vec& q) { return Vec{(a + q[0]) / q[1], q[0]}; };
  m.jacobian = [a](const Vec& p) {
    const double x = p[0], y = p[1];
    return Mat{{0.0, 1.0}, {-(a + y) / (x * x), 1.0 / x}};
  };
  ScalarField v;
  v.eval = [a](const Vec& p) {
    const double x = p[0], y = p[1];
    return (x + 1) * (y + 1) * (x + y + a) / (x * y);
  };
  v.grad = [a](const Vec& p) {
    const double x = p[0], y = p[1];
    return Vec{(y + 1) * (x * x - y - a) / (x * x * y), (x + 1) * (y * y - x - a) / (x * y * y)};
  };
  m.integrals = {v};
  m.multipliers.push_back(monomial_multiplier(2, SigmaClass::plus, "x1*x2 for maps x_{k+2} = R(x_{k+1})/x_k"));
  ScalarField xyv;
  xyv.eval = [a](const Vec& p) { return (p[0] + 1) * (p[1] + 1) * (p[0] + p[1] + a); };
  xyv.grad = [a](const Vec& p) {
    const double x = p[0], y = p[1];
    return Vec{(y + 1) * ((x + y + a) + (x + 1)), (x + 1) * ((x + y + a) + (y + 1))};
  };
  m.multipliers.push_back({"xyV", xyv, SigmaClass::plus, "xy times the first integral"});
  m.default_multiplier = "xy";
  const double xc = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * a));
  m.known_fixed_points = {{xc, xc}};
  m.sampler = [](Rng& rng) { return Vec{log_uniform(rng, 0.1, 10.0), log_uniform(rng, 0.1, 10.0)}; };
  return m;
}

// ---------------------------------------------------------- Gumovski-Mira

MapSpec make_gumovski_mira(const Params& prm) {
  const double A = param(prm, "A"), B = param(prm, "B"), C = param(prm, "C");
  MapSpec m;
  m.name = "gumovski_mira";
  m.n = 2;
  m.params = prm;

  // Only two regimes have a known domain on which F is a diffeomorphism:
  // A > 0 (the whole plane) and A = -a^2, B = -2, C = 0 with a > 1 (the
  // period annulus of the origin).
  double s = 0.0;
  double a = 0.0;
  bool annulus = false;
  if (A > 0) {
    m.domain = [](const Vec&, double) { return true; };
  } else if (A < 0 && B == -2.0 && C == 0.0) {
    a = std::sqrt(-A);
    if (std::abs(a - 1.0) < 1e-12)
      throw InvalidParamsError("gumovski_mira: F_{-a^2,-2,0} requires a != 1");
    if (a < 1.0)
      throw InvalidParamsError("gumovski_mira: F_{-a^2,-2,0} has an empty period annulus for |a| < 1");
    s = std::sqrt(a * a - 1.0);
    annulus = true;
    const double s2 = a * a - 1.0;
    m.domain = [a, s, s2](const Vec& p, double mg) {
      const double x = p[0], y = p[1];
      if (!(x > -s + mg && x < s - mg)) return false;
      const double lower = (-a * x + s2) / (x - a);
      const double upper = (a * x + s2) / (x + a);
      return y > lower + mg && y < upper - mg;
    };
  } else {
    throw InvalidParamsError(
        "gumovski_mira: supported parameters are A > 0, or A = -a^2 < -1 with B = -2 and C = 0");
  }

  auto g = [A, B, C](double y) { return (B * y + C) / (y * y + A); };
  auto dg = [A, B, C](double y) {
    const double d = y * y + A;
    return (B * d - 2.0 * y * (B * y + C)) / (d * d);
  };
  m.forward = [g](const Vec& p) { return Vec{p[1], -p[0] + g(p[1])}; };
  m.inverse = [g](const Vec& q) { return Vec{-q[1] + g(q[0]), q[0]}; };
  m.jacobian = [dg](const Vec& p) { return Mat{{0.0, 1.0}, {-1.0, dg(p[1])}}; };

  ScalarField v;
  v.eval = [A, B, C](const Vec& p) {
    const double x = p[0], y = p[1];
    return x * x * y * y + A * (x * x + y * y) - B * x * y - C * (x + y);
  };
  v.grad = [A, B, C](const Vec& p) {
    const double x = p[0], y = p[1];
    return Vec{2 * x * y * y + 2 * A * x - B * y - C, 2 * x * x * y + 2 * A * y - B * x - C};
  };
  m.integrals = {v};
  m.multipliers.push_back(constant_multiplier(2, SigmaClass::plus, "det DF = 1"));
  m.multipliers.push_back({"V", v, SigmaClass::plus, "first integral of a map with det DF = 1"});
  m.default_multiplier = "one";

  // Fixed points lie on y = x with 2x^3 + (2A - B)x - C = 0.
  std::vector<double> roots;
  if (C == 0.0) {
    roots.push_back(0.0);
    const double r2 = B / 2.0 - A;
    if (r2 > 0) {
      roots.push_back(std::sqrt(r2));
      roots.push_back(-std::sqrt(r2));
    }
  } else {
    auto cubic = [A, B, C](double x) { return 2 * x * x * x + (2 * A - B) * x - C; };
    const double bound = 1.0 + std::abs(2 * A - B) + std::abs(C);
    const int grid = 4000;
    double prev = cubic(-bound);
    for (int i = 1; i <= grid; ++i) {
      const double x0 = -bound + 2 * bound * (i - 1) / grid;
      const double x1 = -bound + 2 * bound * i / grid;
      const double cur = cubic(x1);
      if ((prev > 0) != (cur > 0)) roots.push_back(bisect(cubic, x0, x1));
      prev = cur;
    }
  }
  for (double r : roots) {
    Vec p{r, r};
    if (m.domain(p, 0.0)) m.known_fixed_points.push_back(p);
  }

  if (annulus) {
    m.sampler = [s](Rng& rng) { return Vec{uniform(rng, -s, s), uniform(rng, -s, s)}; };
  } else {
    m.sampler = [](Rng& rng) { return Vec{uniform(rng, -3.0, 3.0), uniform(rng, -3.0, 3.0)}; };
  }
  return m;
}

// -------------------------------------------------------------- Kulenovic

MapSpec make_kulenovic(const Params& prm) {
  const double a = param(prm, "a"), b = param(prm, "b"), c = param(prm, "c"), d = param(prm, "d");
  if (!(a > 0 && b > 0 && c > 0 && d > 0)) throw InvalidParamsError("kulenovic: requires a, b, c, d > 0");
  MapSpec m;
  m.name = "kulenovic";
  m.n = 2;
  m.params = prm;
  auto R = [=](double y) { return (a * y + b) / (c * y + d); };
  auto dR = [=](double y) { return (a * d - b * c) / ((c * y + d) * (c * y + d)); };
  m.domain = [](const Vec& p, double mg) { return positive_cone(p, mg); };
  m.forward = [R](const Vec& p) { return Vec{p[1], R(p[1]) / p[0]}; };
  m.inverse = [R](const Vec& q) { return Vec{R(q[0]) / q[1], q[0]}; };
  m.jacobian = [R, dR](const Vec& p) {
    const double x = p[0], y = p[1];
    return Mat{{0.0, 1.0}, {-R(y) / (x * x), dR(y) / x}};
  };
  // V = N / (x y).
  auto N = [=](double x, double y) {
    return (d + c * x) * (d * x + a) * y * y + (a * a + b * d + x * x * (a * c + d * d)) * y +
           (d * x + a) * (a * x + b);
  };
  auto gradN = [=](double x, double y) {
    const double nx = (c * (d * x + a) + d * (d + c * x)) * y * y + 2 * x * (a * c + d * d) * y +
                      (d * (a * x + b) + a * (d * x + a));
    const double ny = 2 * (d + c * x) * (d * x + a) * y + (a * a + b * d + x * x * (a * c + d * d));
    return Vec{nx, ny};
  };
  ScalarField v;
  v.eval = [N](const Vec& p) { return N(p[0], p[1]) / (p[0] * p[1]); };
  v.grad = [N, gradN](const Vec& p) {
    const double x = p[0], y = p[1];
    const double n = N(x, y);
    const Vec gn = gradN(x, y);
    return Vec{gn[0] / (x * y) - n / (x * x * y), gn[1] / (x * y) - n / (x * y * y)};
  };
  m.integrals = {v};
  m.multipliers.push_back(monomial_multiplier(2, SigmaClass::plus, "x1*x2 for maps x_{k+2} = R(x_{k+1})/x_k"));
  ScalarField xyv;
  xyv.eval = [N](const Vec& p) { return N(p[0], p[1]); };
  xyv.grad = [gradN](const Vec& p) { return gradN(p[0], p[1]); };
  m.multipliers.push_back({"xyV", xyv, SigmaClass::plus, "xy times the first integral"});
  m.multipliers.push_back(constant_multiplier(2, SigmaClass::none, "not area preserving"));
  m.default_multiplier = "xyV";
  // Fixed point (x, x): c x^3 + d x^2 - a x - b = 0 has exactly one positive root.
  auto fp = [=](double x) { return c * x * x * x + d * x * x - a * x - b; };
  double hi = 1.0;
  while (fp(hi) < 0) hi *= 2.0;
  const double xc = bisect(fp, 0.0, hi);
  m.known_fixed_points = {{xc, xc}};
  m.sampler = [](Rng& rng) { return Vec{log_uniform(rng, 0.1, 10.0), log_uniform(rng, 0.1, 10.0)}; };
  return m;
}

// --------------------------------------------------- tilde Lyness

MapSpec make_tilde_lyness(const Params& prm) {
  const double a = param(prm, "a");
  MapSpec m;
  m.name = "tilde_lyness";
  m.n = 2;
  m.params = prm;
  m.diffeo_counterexample = true;
  // Coordinates are (y, z) as in the published formulas.
  m.domain = [a](const Vec& p, double mg) { return std::abs(p[1]) > mg && std::abs(a + p[0] + p[1]) > mg; };
  m.region = [a](const Vec& p) { return (p[1] > 0 ? 1 : 0) + (a + p[0] + p[1] > 0 ? 2 : 0); };
  m.forward = [a](const Vec& p) {
    const double y = p[0], z = p[1];
    return Vec{-(1 + y + z) / z, (1 + y + (2 - a) * z) / (z * (a + y + z))};
  };
  m.inverse = [a](const Vec& q) {
    const double u = q[0], v = q[1];
    const double z = ((a - 1) * (v + 1) + u) / (u * v);
    return Vec{-u * z - 1 - z, z};
  };
  m.jacobian = [a](const Vec& p) {
    const double y = p[0], z = p[1];
    const double P = 1 + y + (2 - a) * z;
    const double Q = z * (a + y + z);
    const double Qy = z, Qz = a + y + 2 * z;
    return Mat{{-1.0 / z, (1 + y) / (z * z)},
               {(Q - P * Qy) / (Q * Q), ((2 - a) * Q - P * Qz) / (Q * Q)}};
  };
  ScalarField h;
  h.eval = [a](const Vec& p) { return (1 + p[0] + p[1]) * (p[0] + a - 1) / p[1]; };
  h.grad = [a](const Vec& p) {
    const double y = p[0], z = p[1];
    return Vec{(a + 2 * y + z) / z, -(y + a - 1) * (1 + y) / (z * z)};
  };
  m.integrals = {h};
  m.extras["H"] = h;
  ScalarField mu;
  mu.eval = [](const Vec& p) { return p[1] * (1 + p[1]); };
  mu.grad = [](const Vec& p) { return Vec{0.0, 1 + 2 * p[1]}; };
  m.multipliers.push_back({"z1z", mu, SigmaClass::plus, "z(1+z), giving the published field"});
  m.default_multiplier = "z1z";
  m.sampler = [a](Rng& rng) {
    for (;;) {
      Vec p{uniform(rng, -4.0, 4.0), uniform(rng, -4.0, 4.0)};
      if (std::abs(p[0]) > 0.1 && std::abs(p[1]) > 0.1 && std::abs(a + p[0] + p[1]) > 0.1) return p;
    }
  };
  return m;
}

// ------------------------------------------------------------------- Todd

MapSpec make_todd(const Params& prm) {
  const double a = param(prm, "a");
  if (!(a > 0)) throw InvalidParamsError("todd: requires a > 0");
  MapSpec m;
  m.name = "todd";
  m.n = 3;
  m.params = prm;
  m.domain = [](const Vec& p, double mg) { return positive_cone(p, mg); };
  m.forward = [a](const Vec& p) { return Vec{p[1], p[2], (a + p[1] + p[2]) / p[0]}; };
  m.inverse = [a](const Vec& q) { return Vec{(a + q[0] + q[1]) / q[2], q[0], q[1]}; };
  m.jacobian = [a](const Vec& p) {
    const double x = p[0], y = p[1], z = p[2];
    return Mat{{0, 1, 0}, {0, 0, 1}, {-(a + y + z) / (x * x), 1 / x, 1 / x}};
  };
  ScalarField v1;
  v1.eval = [a](const Vec& p) {
    const double x = p[0], y = p[1], z = p[2];
    return (x + 1) * (y + 1) * (z + 1) * (a + x + y + z) / (x * y * z);
  };
  v1.grad = [a](const Vec& p) {
    const double x = p[0], y = p[1], z = p[2];
    const double P = (x + 1) * (y + 1) * (z + 1) / (x * y * z);
    const double S = a + x + y + z;
    return Vec{P * (x * (x + 1) - S) / (x * (x + 1)), P * (y * (y + 1) - S) / (y * (y + 1)),
               P * (z * (z + 1) - S) / (z * (z + 1))};
  };
  ScalarField v2;
  v2.eval = [a](const Vec& p) {
    const double x = p[0], y = p[1], z = p[2];
    return (1 + y + z) * (1 + x + y) * (a + x + y + z + x * z) / (x * y * z);
  };
  v2.grad = [a](const Vec& p) {
    const double x = p[0], y = p[1], z = p[2];
    const double A = 1 + y + z, B = 1 + x + y, C = a + x + y + z + x * z, D = x * y * z;
    const double v = A * B * C / D;
    return Vec{A * (C + B * (1 + z)) / D - v / x, (B * C + A * C + A * B) / D - v / y,
               (B * C + A * B * (1 + x)) / D - v / z};
  };
  m.integrals = {v1, v2};

  ScalarField g;
  g.eval = [a](const Vec& p) {
    const double x = p[0], y = p[1], z = p[2];
    return -y * y * y - (x + a + 1 + z) * y * y - (a + x + z) * y + x * x * z * z + x * z + x * x * z + x * z * z;
  };
  g.grad = [a](const Vec& p) {
    const double x = p[0], y = p[1], z = p[2];
    return Vec{-y * y - y + 2 * x * z * z + z + 2 * x * z + z * z,
               -3 * y * y - 2 * (x + a + 1 + z) * y - (a + x + z),
               -y * y - y + 2 * x * x * z + x + x * x + 2 * x * z};
  };
  m.extras["G"] = g;

  m.multipliers.push_back(
      monomial_multiplier(3, SigmaClass::minus, "x1*x2*x3; odd dimension, so condition mu holds for F^2"));
  m.multipliers.push_back({"G", g, SigmaClass::plus, "the cubic G of the published field"});
  ScalarField mt;
  mt.eval = [g](const Vec& p) {
    const double w = p[0] * p[1] * p[2];
    return -w * w / g.eval(p);
  };
  mt.grad = [g](const Vec& p) {
    const double x = p[0], y = p[1], z = p[2];
    const double w = x * y * z;
    const double gv = g.eval(p);
    const Vec gg = g.grad(p);
    const Vec gw{y * z, x * z, x * y};
    Vec r(3);
    for (int i = 0; i < 3; ++i) r[i] = -(2 * w * gw[i] * gv - w * w * gg[i]) / (gv * gv);
    return r;
  };
  m.multipliers.push_back(
      {"mu_tilde", mt, SigmaClass::plus, "-(xyz)^2/G; sign chosen to reproduce the published components"});
  m.default_multiplier = "xyz";
  const double c = 1.0 + std::sqrt(1.0 + a);
  m.known_fixed_points = {{c, c, c}};
  m.sampler = [](Rng& rng) {
    return Vec{log_uniform(rng, 0.2, 5.0), log_uniform(rng, 0.2, 5.0), log_uniform(rng, 0.2, 5.0)};
  };
  return m;
}

// --------------------------------------------------------- HKY (Y1) case

MapSpec make_hky_y1(const Params& prm) {
  MapSpec m;
  m.name = "hky_y1";
  m.n = 3;
  m.params = prm;
  auto R = [](double y, double z) { return (y + 1) * (z + 1) / (1 + y + z); };
  m.domain = [](const Vec& p, double mg) { return positive_cone(p, mg); };
  m.forward = [R](const Vec& p) { return Vec{p[1], p[2], R(p[1], p[2]) / p[0]}; };
  m.inverse = [R](const Vec& q) { return Vec{R(q[0], q[1]) / q[2], q[0], q[1]}; };
  m.jacobian = [R](const Vec& p) {
    const double x = p[0], y = p[1], z = p[2];
    const double s = 1 + y + z;
    const double ry = (z + 1) * z / (s * s);
    const double rz = (y + 1) * y / (s * s);
    return Mat{{0, 1, 0}, {0, 0, 1}, {-R(y, z) / (x * x), ry / x, rz / x}};
  };
  ScalarField i1;
  i1.eval = [](const Vec& p) {
    const double x = p[0], y = p[1], z = p[2];
    return (1 + x + y + z + x * y + y * z + x * y * z) / (x * z);
  };
  i1.grad = [](const Vec& p) {
    const double x = p[0], y = p[1], z = p[2];
    const double n1 = 1 + x + y + z + x * y + y * z + x * y * z;
    return Vec{(1 + y + y * z) / (x * z) - n1 / (x * x * z), (1 + x + z + x * z) / (x * z),
               (1 + y + x * y) / (x * z) - n1 / (x * z * z)};
  };
  ScalarField i2;
  i2.eval = [](const Vec& p) {
    const double x = p[0], y = p[1], z = p[2];
    return (1 + x + z + x * y + x * z + y * z) / y;
  };
  i2.grad = [](const Vec& p) {
    const double x = p[0], y = p[1], z = p[2];
    const double n2 = 1 + x + z + x * y + x * z + y * z;
    return Vec{(1 + y + z) / y, (x + z) / y - n2 / (y * y), (1 + x + y) / y};
  };
  ScalarField v1;
  v1.eval = [i1, i2](const Vec& p) { return i1.eval(p) + i2.eval(p); };
  v1.grad = [i1, i2](const Vec& p) { return i1.grad(p) + i2.grad(p); };
  ScalarField v2;
  v2.eval = [i1, i2](const Vec& p) { return i1.eval(p) * i2.eval(p); };
  v2.grad = [i1, i2](const Vec& p) { return i2.eval(p) * i1.grad(p) + i1.eval(p) * i2.grad(p); };
  m.integrals = {v1, v2};
  m.extras["I1"] = i1;
  m.extras["I2"] = i2;

  ScalarField g;
  g.eval = [](const Vec& p) {
    const double x = p[0], y = p[1], z = p[2];
    return -(1 + x) * (1 + z) * y * y + (x * x * z + (z * z - 1) * x - (1 + z)) * y + x * z * (x + 1) * (z + 1);
  };
  g.grad = [](const Vec& p) {
    const double x = p[0], y = p[1], z = p[2];
    return Vec{-(1 + z) * y * y + (2 * x * z + z * z - 1) * y + z * (z + 1) * (2 * x + 1),
               -2 * (1 + x) * (1 + z) * y + x * x * z + (z * z - 1) * x - (1 + z),
               -(1 + x) * y * y + (x * x + 2 * z * x - 1) * y + x * (x + 1) * (2 * z + 1)};
  };
  m.extras["G"] = g;
  m.multipliers.push_back(
      monomial_multiplier(3, SigmaClass::minus, "x1*x2*x3; odd dimension, so condition mu holds for F^2"));
  m.multipliers.push_back({"G", g, SigmaClass::plus, "the surface G of critical points"});
  m.default_multiplier = "xyz";
  // Fixed point (c, c, c): 2c^3 - 2c - 1 = 0.
  const double c = bisect([](double x) { return 2 * x * x * x - 2 * x - 1; }, 1.0, 2.0);
  m.known_fixed_points = {{c, c, c}};
  m.sampler = [](Rng& rng) {
    return Vec{log_uniform(rng, 0.2, 5.0), log_uniform(rng, 0.2, 5.0), log_uniform(rng, 0.2, 5.0)};
  };
  return m;
}

struct Entry {
  const char* name;
  Params defaults;
  MapSpec (*make)(const Params&);
};

const std::vector<Entry>& registry() {
  static const std::vector<Entry> entries = {
      {"lyness", {{"a", 1.0}}, make_lyness},
      {"gumovski_mira", {{"A", 1.0}, {"B", 1.0}, {"C", 0.0}}, make_gumovski_mira},
      {"kulenovic", {{"a", 1.0}, {"b", 1.0}, {"c", 1.0}, {"d", 1.0}}, make_kulenovic},
      {"tilde_lyness", {{"a", 3.0}}, make_tilde_lyness},
      {"todd", {{"a", 1.0}}, make_todd},
      {"hky_y1", {}, make_hky_y1},
  };
  return entries;
}

const Entry& find_entry(std::string_view name) {
  for (const auto& e : registry())
    if (name == e.name) return e;
  std::ostringstream os;
  os << "unknown map '" << name << "' (known:";
  for (const auto& e : registry()) os << ' ' << e.name;
  os << ')';
  throw UnknownMapError(os.str());
}

}  // namespace

std::vector<std::string> builtin_names() {
  std::vector<std::string> names;
  for (const auto& e : registry()) names.emplace_back(e.name);
  return names;
}

Params builtin_defaults(std::string_view name) { return find_entry(name).defaults; }

MapSpec builtin(std::string_view name, const Params& params) {
  const Entry& e = find_entry(name);
  Params full = e.defaults;
  for (const auto& [k, v] : params) {
    if (!e.defaults.count(k)) throw InvalidParamsError(std::string(name) + ": unknown parameter '" + k + "'");
    if (!std::isfinite(v)) throw InvalidParamsError(std::string(name) + ": parameter '" + k + "' is not finite");
    full[k] = v;
  }
  MapSpec m = e.make(full);
  // The raw draw is refined so that F and F^{-1} are defined at the sample.
  auto draw = m.sampler;
  auto copy = m;
  m.sampler = [copy, draw](Rng& rng) { return sample_with_images(copy, rng, draw); };
  return m;
}

MapSpec power(const MapSpec& m, int k) {
  if (k < 1) throw std::invalid_argument("power: exponent must be >= 1");
  if (k == 1) return m;
  MapSpec r = m;
  r.power = m.power * k;
  r.name = m.name + "^" + std::to_string(r.power);
  auto fwd = m.forward;
  auto inv = m.inverse;
  auto jac = m.jacobian;
  r.forward = [fwd, k](const Vec& p) {
    Vec q = p;
    for (int i = 0; i < k; ++i) q = fwd(q);
    return q;
  };
  r.inverse = [inv, k](const Vec& p) {
    Vec q = p;
    for (int i = 0; i < k; ++i) q = inv(q);
    return q;
  };
  r.jacobian = [fwd, jac, k](const Vec& p) {
    Mat acc = jac(p);
    Vec q = fwd(p);
    for (int i = 1; i < k; ++i) {
      acc = jac(q) * acc;
      q = fwd(q);
    }
    return acc;
  };
  for (auto& mu : r.multipliers) {
    if (mu.claimed_class == SigmaClass::minus && k % 2 == 0) mu.claimed_class = SigmaClass::plus;
  }
  // A fixed point of F is a fixed point of F^k.
  auto draw = m.sampler;
  auto base = m;
  r.sampler = [draw, base, k](Rng& rng) {
    for (int attempt = 0; attempt < 100000; ++attempt) {
      Vec p = draw(rng);
      Vec q = p;
      bool ok = true;
      for (int i = 0; i < k && ok; ++i) {
        q = base.forward(q);
        ok = base.in_domain(q);
      }
      Vec b = p;
      for (int i = 0; i < k && ok; ++i) {
        b = base.inverse(b);
        ok = base.in_domain(b);
      }
      if (ok) return p;
    }
    throw std::runtime_error("sample_domain: no admissible point for " + base.name);
  };
  return r;
}

namespace {
void require_domain(const MapSpec& m, const Vec& p, const char* what) {
  if (p.size() != m.n)
    throw DimensionError(std::string(what) + ": expected a point of dimension " + std::to_string(m.n));
  if (!m.in_domain(p)) throw OutsideDomainError(std::string(what) + ": point outside the domain of " + m.name);
}
}  // namespace

Vec iterate(const MapSpec& m, const Vec& p, int k) {
  require_domain(m, p, "iterate");
  Vec q = p;
  if (k >= 0) {
    for (int i = 0; i < k; ++i) {
      q = m.forward(q);
      if (!m.in_domain(q))
        throw OutsideDomainError("iterate: F^" + std::to_string(i + 1) + "(p) leaves the domain of " + m.name);
    }
  } else {
    for (int i = 0; i < -k; ++i) {
      q = m.inverse(q);
      if (!m.in_domain(q))
        throw OutsideDomainError("iterate: F^-" + std::to_string(i + 1) + "(p) leaves the domain of " + m.name);
    }
  }
  return q;
}

Vec integral_values(const MapSpec& m, const Vec& p) {
  require_domain(m, p, "integral_values");
  Vec h;
  for (const auto& v : m.integrals) h.push_back(v.eval(p));
  return h;
}

double jacobian_det(const MapSpec& m, const Vec& p) {
  require_domain(m, p, "jacobian_det");
  return det(m.jacobian(p));
}

Vec sample_domain(const MapSpec& m, Rng& rng) {
  if (!m.sampler) throw std::logic_error("map '" + m.name + "' has no sampler");
  return m.sampler(rng);
}

std::vector<Vec> integral_gradients(const MapSpec& m, const Vec& p) {
  std::vector<Vec> g;
  for (const auto& v : m.integrals) g.push_back(v.grad(p));
  return g;
}

}  // namespace mapflow
