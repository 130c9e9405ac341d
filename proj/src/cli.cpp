#include "mapflow/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <numbers>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>

namespace mapflow::cli {

namespace {

struct Key {
  const char* name;
  const char* section;
  const char* help;
};

// Every setting, the config section it belongs to, and its flag help.
constexpr Key kKeys[] = {
    {"map", "run", "built-in map name"},
    {"mu", "run", "multiplier name (default: the map's default)"},
    {"power", "run", "use F^k instead of F"},
    {"seed", "run", "seed point, comma separated"},
    {"center", "run", "Birkhoff center, comma separated"},
    {"rng_seed", "run", "seed for random sampling"},
    {"samples", "run", "random points per verification check"},
    {"measure_samples", "run", "Monte Carlo samples for the measure check"},
    {"threshold", "run", "relative residual threshold"},
    {"mmax", "run", "largest multiplicity tried"},
    {"box", "run", "measure box lo1,hi1,...,lon,hin"},
    {"a", "params", "map parameter a"},
    {"b", "params", "map parameter b"},
    {"c", "params", "map parameter c"},
    {"d", "params", "map parameter d"},
    {"A", "params", "map parameter A"},
    {"B", "params", "map parameter B"},
    {"C", "params", "map parameter C"},
    {"rel_tol", "integrator", "relative tolerance"},
    {"abs_tol", "integrator", "absolute tolerance"},
    {"max_step", "integrator", "largest step (0 = unbounded)"},
    {"horizon", "integrator", "longest integration time"},
    {"max_returns", "integrator", "section hits before giving up"},
    {"max_steps", "integrator", "accepted steps before giving up"},
    {"closure_tol", "integrator", "closure tolerance factor"},
    {"origin", "sweep", "seed ray origin"},
    {"direction", "sweep", "seed ray direction"},
    {"s_min", "sweep", "first ray parameter"},
    {"s_max", "sweep", "last ray parameter"},
    {"count", "sweep", "number of seeds"},
    {"out", "output", "output file"},
    {"bounds", "output", "portrait window xmin,xmax,ymin,ymax"},
    {"axes", "output", "projected coordinates for n > 2, e.g. 0,1"},
    {"iterations", "output", "discrete orbit markers per seed"},
};

const Key* find_key(std::string_view name) {
  for (const auto& k : kKeys)
    if (name == k.name) return &k;
  return nullptr;
}

std::string normalize(std::string key) {
  std::replace(key.begin(), key.end(), '-', '_');
  return key;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

[[noreturn]] void bad(const Setting& s, const std::string& key, const std::string& why) {
  throw ConfigError(fmt::format("{}: {} '{}': {}", s.origin, key, s.value, why));
}

double to_double(const Setting& s, const std::string& key) {
  const std::string v = trim(s.value);
  double x = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc() || ptr != v.data() + v.size() || v.empty()) bad(s, key, "expected a number");
  if (!std::isfinite(x)) bad(s, key, "must be finite");
  return x;
}

long long to_int(const Setting& s, const std::string& key, long long lo) {
  const std::string v = trim(s.value);
  long long x = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc() || ptr != v.data() + v.size() || v.empty()) bad(s, key, "expected an integer");
  if (x < lo) bad(s, key, fmt::format("must be >= {}", lo));
  return x;
}

Vec to_vec(const Setting& s, const std::string& key) {
  Vec out;
  std::stringstream ss(s.value);
  std::string part;
  while (std::getline(ss, part, ',')) out.push_back(to_double(Setting{part, s.origin}, key));
  if (out.empty()) bad(s, key, "expected a comma separated list");
  return out;
}

}  // namespace

Settings parse_config(std::istream& in, const std::string& source) {
  Settings out;
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string where = fmt::format("{}:{}", source, lineno);
    std::string s = trim(line.substr(0, line.find('#')));
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']') throw ConfigError(where + ": unterminated section header");
      section = trim(std::string_view(s).substr(1, s.size() - 2));
      static constexpr std::string_view known[] = {"run", "params", "integrator", "sweep", "output"};
      if (std::find(std::begin(known), std::end(known), section) == std::end(known))
        throw ConfigError(fmt::format("{}: unknown section [{}]", where, section));
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError(where + ": expected 'key = value'");
    const std::string key = normalize(trim(std::string_view(s).substr(0, eq)));
    const std::string value = trim(std::string_view(s).substr(eq + 1));
    const Key* k = find_key(key);
    if (!k) throw ConfigError(fmt::format("{}: unknown key '{}'", where, key));
    if (!section.empty() && section != k->section)
      throw ConfigError(fmt::format("{}: key '{}' belongs in [{}], not [{}]", where, key, k->section, section));
    if (out.count(key)) throw ConfigError(fmt::format("{}: duplicate key '{}' (first at {})", where, key, out[key].origin));
    out[key] = Setting{value, where};
  }
  return out;
}

Settings load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  return parse_config(in, path);
}

MapSpec RunConfig::build_map() const {
  try {
    MapSpec m = builtin(map, params);
    return power == 1 ? m : mapflow::power(m, power);
  } catch (const UnknownMapError& e) {
    throw ConfigError(e.what());
  } catch (const InvalidParamsError& e) {
    throw ConfigError(e.what());
  }
}

std::string RunConfig::multiplier_name(const MapSpec& m) const { return mu.empty() ? m.default_multiplier : mu; }

RunConfig make_run_config(const std::string& command, const Settings& settings) {
  RunConfig c;
  c.command = command;
  auto get = [&](const char* key) -> const Setting* {
    const auto it = settings.find(key);
    return it == settings.end() ? nullptr : &it->second;
  };
  if (const auto* s = get("map")) c.map = trim(s->value);
  if (c.map.empty()) throw ConfigError("missing required key 'map'");
  for (const char* p : {"a", "b", "c", "d", "A", "B", "C"})
    if (const auto* s = get(p)) c.params[p] = to_double(*s, p);
  if (const auto* s = get("mu")) c.mu = trim(s->value);
  if (const auto* s = get("power")) c.power = static_cast<int>(to_int(*s, "power", 1));
  if (const auto* s = get("seed")) c.seed = to_vec(*s, "seed");
  if (const auto* s = get("center")) c.center = to_vec(*s, "center");
  if (const auto* s = get("origin")) c.origin = to_vec(*s, "origin");
  if (const auto* s = get("direction")) c.direction = to_vec(*s, "direction");
  if (const auto* s = get("s_min")) c.s_min = to_double(*s, "s_min");
  if (const auto* s = get("s_max")) c.s_max = to_double(*s, "s_max");
  if (const auto* s = get("count")) c.count = static_cast<std::size_t>(to_int(*s, "count", 1));
  if (const auto* s = get("mmax")) c.mmax = static_cast<int>(to_int(*s, "mmax", 1));
  if (const auto* s = get("samples")) c.samples = static_cast<std::size_t>(to_int(*s, "samples", 1));
  if (const auto* s = get("measure_samples"))
    c.measure_samples = static_cast<std::size_t>(to_int(*s, "measure_samples", 100));
  if (const auto* s = get("rng_seed")) c.rng_seed = static_cast<std::uint64_t>(to_int(*s, "rng_seed", 0));
  if (const auto* s = get("threshold")) c.threshold = to_double(*s, "threshold");
  if (const auto* s = get("rel_tol")) c.integrator.rel_tol = to_double(*s, "rel_tol");
  if (const auto* s = get("abs_tol")) c.integrator.abs_tol = to_double(*s, "abs_tol");
  if (const auto* s = get("max_step")) c.integrator.max_step = to_double(*s, "max_step");
  if (const auto* s = get("horizon")) c.integrator.horizon = to_double(*s, "horizon");
  if (const auto* s = get("max_returns"))
    c.integrator.max_returns = static_cast<std::size_t>(to_int(*s, "max_returns", 1));
  if (const auto* s = get("max_steps")) c.integrator.max_steps = static_cast<std::size_t>(to_int(*s, "max_steps", 1));
  if (const auto* s = get("closure_tol")) c.integrator.closure_tol = to_double(*s, "closure_tol");
  if (const auto* s = get("out")) c.out = trim(s->value);
  if (const auto* s = get("bounds")) {
    c.bounds = to_vec(*s, "bounds");
    const auto& b = *c.bounds;
    if (b.size() != 4 || !(b[0] < b[1]) || !(b[2] < b[3])) bad(*s, "bounds", "expected xmin,xmax,ymin,ymax");
  }
  if (const auto* s = get("box")) c.box = to_vec(*s, "box");
  if (const auto* s = get("axes")) {
    const Vec v = to_vec(*s, "axes");
    if (v.size() != 2) bad(*s, "axes", "expected two coordinate indices");
    c.axes = {static_cast<int>(v[0]), static_cast<int>(v[1])};
  }
  if (const auto* s = get("iterations")) c.iterations = static_cast<int>(to_int(*s, "iterations", 0));

  try {
    c.integrator.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (!(c.threshold > 0)) throw ConfigError("threshold must be positive");

  // Validate against the registry before any computation.
  const MapSpec m = c.build_map();
  const std::string mu = c.multiplier_name(m);
  if (!m.has_multiplier(mu)) {
    std::string names;
    for (const auto& n : m.multiplier_names()) names += (names.empty() ? "" : ", ") + n;
    throw ConfigError(fmt::format("map '{}' has no multiplier '{}' (available: {})", c.map, mu, names));
  }
  auto check_dim = [&](const std::optional<Vec>& v, const char* key) {
    if (v && v->size() != m.n)
      throw ConfigError(fmt::format("{}: expected {} coordinates, got {}", key, m.n, v->size()));
  };
  check_dim(c.seed, "seed");
  check_dim(c.center, "center");
  check_dim(c.origin, "origin");
  check_dim(c.direction, "direction");
  if (c.box && c.box->size() != 2 * m.n) throw ConfigError(fmt::format("box: expected {} numbers", 2 * m.n));
  for (int a : c.axes)
    if (a < 0 || static_cast<std::size_t>(a) >= m.n) throw ConfigError("axes: index out of range");
  if (c.command == "rotnum" && !c.seed) throw ConfigError("rotnum needs a seed (--seed x,y[,z])");
  return c;
}

std::vector<std::string> csv_header(std::size_t n) {
  std::vector<std::string> cols;
  for (std::size_t i = 1; i < n; ++i) cols.push_back(fmt::format("h{}", i));
  for (std::size_t i = 1; i <= n; ++i) cols.push_back(fmt::format("seed{}", i));
  for (const char* c : {"T", "tau", "rho", "m", "res_mu", "res_X", "res_V", "status"}) cols.push_back(c);
  return cols;
}

namespace {

std::string num(double x) { return std::isfinite(x) ? fmt::format("{:.17g}", x) : std::string("nan"); }

std::string join(const std::vector<std::string>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + v[i];
  return s;
}

}  // namespace

std::string csv_line(const SweepRow& row, std::size_t n) {
  std::vector<std::string> cells;
  for (std::size_t i = 0; i + 1 < n; ++i) cells.push_back(i < row.h.size() ? num(row.h[i]) : "nan");
  for (std::size_t i = 0; i < n; ++i) cells.push_back(num(row.seed[i]));
  cells.push_back(num(row.T));
  cells.push_back(num(row.tau));
  cells.push_back(num(row.rho));
  cells.push_back(row.m > 0 ? std::to_string(row.m) : "");
  cells.push_back(num(row.residuals.mu));
  cells.push_back(num(row.residuals.X));
  cells.push_back(num(row.residuals.V));
  cells.push_back(row.status);
  return join(cells);
}

void write_atomic(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write '" + tmp.string() + "'");
    f << content;
    f.flush();
    if (!f) throw std::runtime_error("write failed for '" + tmp.string() + "'");
  }
  fs::rename(tmp, target);
}

int exit_code_for(const std::string& status) {
  if (status == "ok") return kPass;
  if (status == "domain_exit") return kDomainExit;
  if (status == "not_closed") return kNonClosure;
  if (status == "not_invariant") return kNotInvariant;
  return kCheckFailed;
}

// ---------------------------------------------------------------- verify

namespace {

struct CheckLine {
  explicit CheckLine(std::string n) : name(std::move(n)) {}
  std::string name;
  bool pass = true;
  double worst = 0.0;
  std::string note;
  bool skipped = false;
};

void report(std::ostream& out, const CheckLine& c) {
  const char* tag = c.skipped ? "SKIP" : (c.pass ? "PASS" : "FAIL");
  if (std::isnan(c.worst))
    out << fmt::format("{:<16}{:<6}max_rel -        ", c.name, tag);
  else
    out << fmt::format("{:<16}{:<6}max_rel {:.3e}", c.name, tag, c.worst);
  if (!c.note.empty()) out << "  " << c.note;
  out << '\n';
}

std::string describe(const RunConfig& cfg, const MapSpec& m) {
  std::string p;
  for (const auto& [k, v] : m.params) p += fmt::format("{}{}={:g}", p.empty() ? "" : ",", k, v);
  return fmt::format("map {}({}) mu {} power {} n {}", cfg.map, p, cfg.multiplier_name(m), cfg.power, m.n);
}

std::optional<Box> auto_box(const MapSpec& m, Rng& rng) {
  Box b;
  const Vec p = sample_domain(m, rng);
  for (double x : p) {
    const double r = 0.05 * std::max(0.2, std::abs(x));
    b.lo.push_back(x - r);
    b.hi.push_back(x + r);
  }
  return b;
}

}  // namespace

int cmd_verify(const RunConfig& cfg, std::ostream& out) {
  const MapSpec m = cfg.build_map();
  const std::string mu_name = cfg.multiplier_name(m);
  const ScalarField& mu = m.multiplier(mu_name).field;
  const VectorField X = build_field(m, mu, mu_name);
  out << describe(cfg, m) << '\n';

  CheckLine c_mu("condition_mu"), c_x("condition_X"), c_eq("equivalence"), c_orth("orthogonality"),
      c_jac("jacobian"), c_rt("round_trip"), c_int("integrals");
  std::size_t disagreements = 0, jac_skipped = 0;
  Rng rng(cfg.rng_seed);
  for (std::size_t i = 0; i < cfg.samples; ++i) {
    const Vec p = sample_domain(m, rng);
    const Residual rm = check_condition_mu(m, mu, p);
    const Residual rx = check_condition_X(m, X, p);
    c_mu.worst = std::max(c_mu.worst, rm.relative);
    c_x.worst = std::max(c_x.worst, rx.relative);
    if (rm.passes(cfg.threshold) != rx.passes(cfg.threshold)) ++disagreements;

    const Vec xp = X(p);
    for (const auto& g : integral_gradients(m, p)) {
      const double s = norm(xp) * norm(g);
      if (s > 0) c_orth.worst = std::max(c_orth.worst, std::abs(dot(xp, g)) / s);
    }
    try {
      const Mat J = m.jacobian(p);
      const Mat Jn = numeric_jacobian(m.forward, p, 1e-5, [&](const Vec& q) { return m.in_domain(q); });
      c_jac.worst = std::max(c_jac.worst, frobenius(J - Jn) / std::max(1.0, frobenius(J)));
    } catch (const PerturbationError&) {
      ++jac_skipped;
    }
    const Vec q = m.forward(p);
    c_rt.worst = std::max(c_rt.worst, distance(m.inverse(q), p) / (1.0 + norm(p)));
    const Vec h0 = integral_values(m, p), h1 = integral_values(m, q);
    for (std::size_t k = 0; k < h0.size(); ++k)
      c_int.worst = std::max(c_int.worst, std::abs(h1[k] - h0[k]) / std::max(1.0, std::abs(h0[k])));
  }
  c_mu.pass = c_mu.worst <= cfg.threshold;
  c_x.pass = c_x.worst <= cfg.threshold;
  c_eq.pass = disagreements == 0;
  c_eq.worst = std::numeric_limits<double>::quiet_NaN();
  c_eq.note = fmt::format("{} of {} points disagree", disagreements, cfg.samples);
  c_orth.pass = c_orth.worst <= 1e-9;
  c_jac.pass = c_jac.worst <= 1e-5;
  if (jac_skipped) c_jac.note = fmt::format("{} points too close to the boundary", jac_skipped);
  c_rt.pass = c_rt.worst <= 1e-10;
  c_int.pass = c_int.worst <= cfg.threshold;

  const Classification cls = classify_multiplier(m, mu, std::min<std::size_t>(cfg.samples, 200), cfg.rng_seed);
  CheckLine c_cls("classification");
  c_cls.pass = cls.verdict == SigmaClass::plus;
  c_cls.worst = std::numeric_limits<double>::quiet_NaN();
  c_cls.note = fmt::format("{} ({} plus, {} minus, {} neither, {} skipped{})", to_string(cls.verdict), cls.plus_votes,
                           cls.minus_votes, cls.neither, cls.skipped, cls.degenerate ? ", degenerate" : "");
  if (cls.verdict == SigmaClass::minus)
    c_cls.note += fmt::format("; mu is in sigma- for this map, rerun with --power {}", 2 * cfg.power);

  CheckLine c_meas("measure");
  {
    std::optional<MeasureCheck> mc;
    std::string why;
    Rng box_rng(cfg.rng_seed + 17);
    std::optional<Box> chosen;
    if (cfg.box) {
      Box b;
      for (std::size_t i = 0; i < m.n; ++i) {
        b.lo.push_back((*cfg.box)[2 * i]);
        b.hi.push_back((*cfg.box)[2 * i + 1]);
      }
      chosen = b;
    }
    for (int attempt = 0; attempt < (cfg.box ? 1 : 20) && !mc; ++attempt) {
      const Box b = chosen ? *chosen : *auto_box(m, box_rng);
      try {
        mc = check_invariant_measure(m, mu, b, cfg.measure_samples, cfg.rng_seed);
        chosen = b;
      } catch (const std::exception& e) {
        why = e.what();
      }
    }
    if (mc) {
      c_meas.pass = mc->agrees();
      c_meas.worst = std::abs(mc->measure_box - mc->measure_preimage) / std::max(1e-300, mc->measure_box);
      std::string box;
      for (std::size_t i = 0; i < m.n; ++i) box += fmt::format("{}[{:.4g},{:.4g}]", i ? "x" : "", chosen->lo[i], chosen->hi[i]);
      c_meas.note = fmt::format("z = {:.2f} on {} (power {})", mc->z_score, box, mc->power_used);
    } else {
      c_meas.skipped = true;
      c_meas.note = "no usable box: " + why;
    }
  }

  bool all = true;
  for (const CheckLine* c : {&c_mu, &c_x, &c_eq, &c_orth, &c_jac, &c_rt, &c_int, &c_cls, &c_meas}) {
    report(out, *c);
    if (!c->skipped) all = all && c->pass;
  }
  out << "verdict " << (all ? "PASS" : "FAIL") << '\n';
  return all ? kPass : kCheckFailed;
}

// ---------------------------------------------------------------- rotnum

int cmd_rotnum(const RunConfig& cfg, std::ostream& out) {
  const MapSpec m = cfg.build_map();
  const std::string mu_name = cfg.multiplier_name(m);
  const VectorField X = build_field(m, mu_name);
  const SweepRow row = sweep_row(X, *cfg.seed, cfg.integrator, SweepOptions{cfg.mmax, cfg.threshold});
  const std::string text = join(csv_header(m.n)) + "\n" + csv_line(row, m.n) + "\n";
  if (!cfg.out.empty()) write_atomic(cfg.out, text);
  out << text;
  return exit_code_for(row.status);
}

// ---------------------------------------------------------------- sweep

namespace {

/// First known fixed point of the map with an elliptic linearization.
std::optional<Vec> elliptic_fixed_point(const MapSpec& m) {
  for (const auto& p : m.known_fixed_points) {
    try {
      fixed_point_rotation(m, p);
      return p;
    } catch (const std::exception&) {
    }
  }
  return std::nullopt;
}

}  // namespace

int cmd_sweep(const RunConfig& cfg, std::ostream& out) {
  const MapSpec m = cfg.build_map();
  const std::string mu_name = cfg.multiplier_name(m);
  const auto pc = elliptic_fixed_point(m);
  SeedRay ray;
  if (cfg.origin) {
    ray.origin = *cfg.origin;
  } else if (pc) {
    ray.origin = *pc;
  } else {
    throw ConfigError(fmt::format("map '{}' has no elliptic fixed point to start from; give --origin", m.name));
  }
  ray.direction = cfg.direction ? *cfg.direction : Vec(m.n, 1.0);
  ray.s_min = cfg.s_min;
  ray.s_max = cfg.s_max;
  const auto rows =
      sweep(m, m.multiplier(mu_name).field, ray, cfg.count, cfg.integrator, SweepOptions{cfg.mmax, cfg.threshold});

  std::string csv = join(csv_header(m.n)) + "\n";
  for (const auto& r : rows) csv += csv_line(r, m.n) + "\n";
  if (!cfg.out.empty())
    write_atomic(cfg.out, csv);
  else
    out << csv;

  std::size_t valid = 0;
  int row_m = 1;
  for (const auto& r : rows)
    if (r.ok()) {
      if (valid++ == 0) row_m = r.m;
    }
  out << fmt::format("# rows {} valid {}\n", rows.size(), valid);

  std::optional<EndpointReference> ref;
  if (pc) {
    try {
      const MapSpec fm = row_m == 1 ? m : power(m, row_m);
      ref = EndpointReference{integral_values(m, *pc), fixed_point_rotation(fm, *pc)};
    } catch (const std::exception&) {
    }
  }
  MonotonicityReport rep;
  try {
    rep = monotonicity_report(rows, ref);
  } catch (const std::invalid_argument& e) {
    out << "# " << e.what() << '\n';
    return kCheckFailed;
  }
  std::string viol;
  for (const auto& [i, j] : rep.violations) viol += fmt::format(" ({},{})", i, j);
  out << fmt::format("# verdict {}{} violations {}{}\n", to_string(rep.verdict),
                     rep.constant ? fmt::format(" constant rho {:.9f}", rep.rows.front().rho) : "",
                     rep.violations.size(), viol);
  if (rep.endpoint)
    out << fmt::format("# endpoint estimate {:.9f} nearest {:.9f} fixed_point {:.9f} error {:.3e}\n",
                       rep.endpoint->estimate, rep.endpoint->nearest, rep.endpoint->reference, rep.endpoint->error());
  out << "# rho is folded into (0, 1/2]: rotations by f and 1 - f differ only in orientation\n";
  return kPass;
}

// ---------------------------------------------------------------- portrait

namespace {

std::vector<double> default_bounds(const MapSpec& m) {
  const auto param = [&](const char* k) { return m.params.count(k) ? m.params.at(k) : 0.0; };
  if (m.name.rfind("lyness", 0) == 0 || m.name.rfind("kulenovic", 0) == 0) return {0, 8, 0, 8};
  if (m.name.rfind("todd", 0) == 0 || m.name.rfind("hky_y1", 0) == 0) return {0, 8, 0, 8};
  if (m.name.rfind("tilde_lyness", 0) == 0) return {-6, 6, -6, 6};
  if (m.name.rfind("gumovski_mira", 0) == 0 && param("A") < 0) {
    const double r = std::sqrt(-param("A")) + 1.0;
    return {-r, r, -r, r};
  }
  return {-3, 3, -3, 3};
}

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf",
                                    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22"};

}  // namespace

int cmd_portrait(const RunConfig& cfg, std::ostream& out) {
  const MapSpec m = cfg.build_map();
  const std::string mu_name = cfg.multiplier_name(m);
  const VectorField X = build_field(m, mu_name);
  const std::vector<double> b = cfg.bounds ? *cfg.bounds : default_bounds(m);
  const int ax = cfg.axes[0], ay = cfg.axes[1];
  constexpr double W = 640, H = 640, pad = 20;
  auto sx = [&](double x) { return pad + (x - b[0]) / (b[1] - b[0]) * (W - 2 * pad); };
  auto sy = [&](double y) { return H - pad - (y - b[2]) / (b[3] - b[2]) * (H - 2 * pad); };
  auto inside = [&](const Vec& q) {
    return q[ax] >= b[0] && q[ax] <= b[1] && q[ay] >= b[2] && q[ay] <= b[3];
  };

  std::vector<Vec> seeds;
  if (cfg.origin) {
    SeedRay ray{*cfg.origin, cfg.direction ? *cfg.direction : Vec(m.n, 1.0), cfg.s_min, cfg.s_max};
    seeds = ray.seeds(cfg.count);
  } else {
    // Evenly along the window's diagonal, ends excluded.
    for (std::size_t i = 0; i < cfg.count; ++i) {
      const double t = (static_cast<double>(i) + 1) / (static_cast<double>(cfg.count) + 1);
      Vec q(m.n, b[0] + t * (b[1] - b[0]));
      q[ay] = b[2] + t * (b[3] - b[2]);
      seeds.push_back(q);
    }
  }

  std::string body, skipped;
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    const Vec& p = seeds[i];
    const char* color = kPalette[i % std::size(kPalette)];
    if (!m.in_domain(p)) {
      skipped += fmt::format("  seed {}: outside the domain\n", i + 1);
      continue;
    }
    OrbitTrace tr;
    try {
      tr = trace_orbit(X, p, cfg.integrator);
    } catch (const std::exception& e) {
      skipped += fmt::format("  seed {}: {}\n", i + 1, e.what());
      continue;
    }
    if (tr.result.classification == OrbitKind::critical_point) {
      skipped += fmt::format("  seed {}: critical point\n", i + 1);
      continue;
    }
    auto polyline = [&](const std::vector<Segment>& segs) {
      std::string d;
      bool pen = false;
      for (const auto& seg : segs) {
        for (double f : {0.0, 0.5, 1.0}) {
          const Vec q = seg.eval(seg.t0 + f * (seg.t1 - seg.t0));
          if (!inside(q)) {
            pen = false;
            continue;
          }
          d += fmt::format("{}{:.2f} {:.2f} ", pen ? "L" : "M", sx(q[ax]), sy(q[ay]));
          pen = true;
        }
      }
      if (!d.empty())
        body += fmt::format("<path d=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"1\"/>\n", trim(d), color);
    };
    polyline(tr.forward);
    polyline(tr.backward);
    Vec q = p;
    for (int k = 0; k <= cfg.iterations; ++k) {
      if (inside(q))
        body += fmt::format("<circle cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"2\" fill=\"{}\"/>\n", sx(q[ax]), sy(q[ay]), color);
      q = m.forward(q);
      if (!m.in_domain(q)) break;
    }
  }
  for (const auto& pf : m.known_fixed_points)
    if (inside(pf))
      body += fmt::format("<rect x=\"{:.2f}\" y=\"{:.2f}\" width=\"5\" height=\"5\" fill=\"black\"/>\n",
                          sx(pf[ax]) - 2.5, sy(pf[ay]) - 2.5);

  std::string svg;
  svg += fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" viewBox=\"0 0 {0} {1}\">\n", W, H);
  svg += fmt::format("<!-- {} window [{:g},{:g}]x[{:g},{:g}] axes {},{} -->\n", describe(cfg, m), b[0], b[1], b[2],
                     b[3], ax, ay);
  if (!skipped.empty()) svg += "<!-- skipped seeds\n" + skipped + "-->\n";
  svg += fmt::format("<rect x=\"0\" y=\"0\" width=\"{}\" height=\"{}\" fill=\"white\"/>\n", W, H);
  svg += fmt::format("<rect x=\"{0}\" y=\"{0}\" width=\"{1}\" height=\"{2}\" fill=\"none\" stroke=\"#999\"/>\n", pad,
                     W - 2 * pad, H - 2 * pad);
  svg += body;
  svg += "</svg>\n";
  if (!cfg.out.empty())
    write_atomic(cfg.out, svg);
  else
    out << svg;
  return kPass;
}

// ---------------------------------------------------------------- entry

int run(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Flows of integrable maps: verification, rotation numbers, sweeps and portraits", "mapflow"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string config_path;
  app.add_option("--config", config_path, "config file (default: $MAPFLOW_CONFIG)");
  std::map<std::string, std::string> flags;
  for (const auto& k : kKeys) {
    std::string flag = k.name;
    std::replace(flag.begin(), flag.end(), '_', '-');
    app.add_option("--" + flag, flags[k.name], k.help)->group(k.section);
  }
  for (const char* sub : {"verify", "rotnum", "sweep", "portrait"}) app.add_subcommand(sub);
  app.get_subcommand("verify")->description("check condition mu/X, integrals, Jacobian and invariant measure");
  app.get_subcommand("rotnum")->description("period, flight time, multiplicity and rotation number of one seed");
  app.get_subcommand("sweep")->description("rotation numbers along a ray of seeds, with a monotonicity summary");
  app.get_subcommand("portrait")->description("SVG phase portrait: flow orbits and discrete orbits");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return e.get_exit_code() == 0 ? app.exit(e, out, err) : (app.exit(e, out, err), int(kConfigError));
  }
  const std::string command = app.get_subcommands().front()->get_name();

  try {
    Settings settings;
    if (config_path.empty())
      if (const char* env = std::getenv("MAPFLOW_CONFIG")) config_path = env;
    if (!config_path.empty()) settings = load_config_file(config_path);
    for (const auto& k : kKeys) {
      std::string flag = k.name;
      std::replace(flag.begin(), flag.end(), '_', '-');
      if (app.count("--" + flag) > 0) settings[k.name] = Setting{flags[k.name], "--" + flag};
    }
    const RunConfig cfg = make_run_config(command, settings);
    if (command == "verify") return cmd_verify(cfg, out);
    if (command == "rotnum") return cmd_rotnum(cfg, out);
    if (command == "sweep") return cmd_sweep(cfg, out);
    return cmd_portrait(cfg, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const DomainExitError& e) {
    err << "domain exit: " << e.what() << '\n';
    return kDomainExit;
  } catch (const OutsideDomainError& e) {
    err << "domain exit: " << e.what() << '\n';
    return kDomainExit;
  } catch (const NonClosureError& e) {
    err << "non-closure: " << e.what() << '\n';
    return kNonClosure;
  } catch (const NotInvariantError& e) {
    err << "not invariant: " << e.what() << '\n';
    return kNotInvariant;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kCheckFailed;
  }
}

}  // namespace mapflow::cli
