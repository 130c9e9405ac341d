#include <doctest.h>

#include <cmath>

#include "mapflow/fields.hpp"
#include "support.hpp"

using namespace mapflow;

TEST_SUITE("fields") {

TEST_CASE("built fields at reference points") {
  const MapSpec l1 = builtin("lyness", {{"a", 1.0}});
  const VectorField X = build_field(l1, "xy");
  const Vec x = X({1, 1});
  CHECK(x[0] == doctest::Approx(2.0));
  CHECK(x[1] == doctest::Approx(-2.0));
  const double phi = (1 + std::sqrt(5.0)) / 2;
  CHECK(norm(X({phi, phi})) <= 1e-12);

  const MapSpec td = builtin("todd", {{"a", 1.0}});
  const VectorField T = build_field(td, "xyz");
  const Vec t = T({1, 1, 1});
  CHECK(t[0] == doctest::Approx(48.0));
  CHECK(std::abs(t[1]) <= 1e-12);
  CHECK(t[2] == doctest::Approx(-48.0));
  CHECK(td.extras.at("G")({1, 1, 1}) == doctest::Approx(-4.0));
  CHECK(integral_values(td, {1, 1, 1}) == Vec{32, 45});
}

TEST_CASE("built fields match the printed components") {
  for (double a : {1.0, 2.0, 0.3}) {
    const MapSpec ly = builtin("lyness", {{"a", a}});
    const VectorField X = build_field(ly, "xy");
    const MapSpec td = builtin("todd", {{"a", a}});
    const VectorField T = build_field(td, "xyz");
    const VectorField Tt = build_field(td, "mu_tilde");
    Rng rng(10);
    for (int i = 0; i < 100; ++i) {
      const Vec p = sample_domain(ly, rng);
      CHECK(oracle::rel_diff(X(p), oracle::lyness_published(a, p)) <= 1e-10);
      const Vec q = sample_domain(td, rng);
      CHECK(oracle::rel_diff(T(q), oracle::todd_published_X(a, q)) <= 1e-10);
      CHECK(oracle::rel_diff(Tt(q), oracle::todd_published_Xtilde(a, q)) <= 1e-10);
    }
  }
}

TEST_CASE("fields are orthogonal to every integral gradient") {
  const std::vector<std::pair<MapSpec, std::string>> cases{
      {builtin("lyness", {{"a", 2.0}}), "xy"},
      {builtin("gumovski_mira", {{"A", 1.0}, {"B", 1.0}, {"C", 0.0}}), "V"},
      {builtin("kulenovic"), "xyV"},
      {builtin("tilde_lyness"), "z1z"},
      {builtin("todd", {{"a", 1.0}}), "xyz"},
      {builtin("hky_y1"), "G"}};
  for (const auto& [m, mu] : cases) {
    CAPTURE(m.name);
    const VectorField X = build_field(m, mu);
    Rng rng(11);
    for (int i = 0; i < 1000; ++i) {
      const Vec p = sample_domain(m, rng);
      const Vec x = X(p);
      for (const auto& g : integral_gradients(m, p)) CHECK(std::abs(dot(x, g)) <= 1e-9 * norm(x) * norm(g) + 1e-300);
    }
  }
}

TEST_CASE("condition X and condition mu") {
  Rng rng(12);
  const MapSpec l2 = builtin("lyness", {{"a", 2.0}});
  const MapSpec td = builtin("todd", {{"a", 1.0}});
  const MapSpec gm = builtin("gumovski_mira", {{"A", 1.0}, {"B", 1.5}, {"C", 0.0}});
  const VectorField Xl = build_field(l2, "xy");
  const VectorField Xg = build_field(td, "G");
  const VectorField Xm = build_field(td, "xyz");
  for (int i = 0; i < 50; ++i) {
    const Vec p = sample_domain(l2, rng);
    CHECK(check_condition_X(l2, Xl, p).relative <= 1e-10);
    CHECK(check_condition_mu(l2, l2.multiplier("xy").field, p).relative <= 1e-12);
    const Vec q = sample_domain(td, rng);
    CHECK(check_condition_X(td, Xg, q).relative <= 1e-10);
    // xyz is in sigma- for F: the residual is twice the scale.
    const Residual r = check_condition_X(td, Xm, q);
    CHECK(r.value / r.scale == doctest::Approx(2.0).epsilon(1e-8));
    const Residual rm = check_condition_mu(td, td.multiplier("xyz").field, q);
    CHECK(rm.value / rm.scale == doctest::Approx(2.0).epsilon(1e-8));
    CHECK(check_condition_mu(power(td, 2), td.multiplier("xyz").field, q).relative <= 1e-12);
    const Vec g = sample_domain(gm, rng);
    CHECK(check_condition_mu(gm, gm.multiplier("V").field, g).relative <= 1e-12);
  }
  CHECK_THROWS_AS(check_condition_mu(l2, l2.multiplier("xy").field, {-1, 1}), OutsideDomainError);
}

TEST_CASE("residual convention") {
  const Residual r = Residual::make(3.0, 0.5);
  CHECK(r.relative == 3.0);
  CHECK(Residual::make(3.0, 6.0).relative == 0.5);
}

TEST_CASE("condition mu passes exactly where condition X passes") {
  const std::vector<std::pair<MapSpec, std::string>> cases{
      {builtin("lyness", {{"a", 2.0}}), "xy"},
      {builtin("todd", {{"a", 1.0}}), "xyz"},
      {builtin("todd", {{"a", 1.0}}), "G"},
      {builtin("gumovski_mira", {{"A", 1.0}, {"B", 1.0}, {"C", 0.0}}), "V"}};
  for (const auto& [m, mu] : cases) {
    CAPTURE(m.name);
    CAPTURE(mu);
    const VectorField X = build_field(m, mu);
    Rng rng(13);
    for (int i = 0; i < 500; ++i) {
      const Vec p = sample_domain(m, rng);
      CHECK(check_condition_mu(m, X.mu(), p).passes(kDefaultThreshold) ==
            check_condition_X(m, X, p).passes(kDefaultThreshold));
    }
  }
}

TEST_CASE("classification") {
  CHECK(classify_multiplier(builtin("lyness"), builtin("lyness").multiplier("xy").field, 200).verdict ==
        SigmaClass::plus);
  const MapSpec td = builtin("todd", {{"a", 1.0}});
  CHECK(classify_multiplier(td, td.multiplier("xyz").field, 200).verdict == SigmaClass::minus);
  CHECK(classify_multiplier(td, td.multiplier("G").field, 200).verdict == SigmaClass::plus);
  const MapSpec k = builtin("kulenovic");
  CHECK(classify_multiplier(k, k.multiplier("one").field, 200).verdict == SigmaClass::none);
  CHECK(classify_multiplier(k, k.multiplier("xyV").field, 200).verdict == SigmaClass::plus);

  ScalarField zero{[](const Vec&) { return 0.0; }, [](const Vec&) { return Vec{0, 0}; }};
  const Classification c = classify_multiplier(builtin("lyness"), zero, 100);
  CHECK(c.verdict == SigmaClass::none);
  CHECK(c.degenerate);
}

TEST_CASE("sigma algebra") {
  const MapSpec td = builtin("todd", {{"a", 1.0}});
  const std::vector<SigmaTerm> terms{{td.multiplier("xyz").field, SigmaClass::minus},
                                     {td.extras.at("G"), SigmaClass::plus}};
  const std::vector<int> exps{2, -1};
  Rng rng(14);
  std::vector<Vec> probes;
  for (int i = 0; i < 50; ++i) probes.push_back(sample_domain(td, rng));
  const DerivedMultiplier d = sigma_combine(terms, exps, std::nullopt, probes);
  CHECK(d.predicted == SigmaClass::plus);
  CHECK(d.power == 2);
  for (const auto& p : probes) {
    const double x = p[0], y = p[1], z = p[2];
    CHECK(d.field(p) == doctest::Approx(x * x * y * y * z * z / td.extras.at("G")(p)).epsilon(1e-12));
    CHECK(check_condition_mu(power(td, 2), d.field, p).relative <= 1e-10);
    CHECK(oracle::rel_diff(d.field.grad(p), oracle::gradient(d.field.eval, p)) <= 1e-6);
  }

  const MapSpec ly = builtin("lyness", {{"a", 2.0}});
  const std::vector<SigmaTerm> one{{ly.multiplier("xy").field, SigmaClass::plus}};
  const std::vector<int> e1{1};
  const DerivedMultiplier xyv = sigma_combine(one, e1, ly.integrals[0]);
  CHECK(xyv.predicted == SigmaClass::plus);
  CHECK(xyv.power == 1);
  CHECK(classify_multiplier(ly, xyv.field, 200).verdict == SigmaClass::plus);

  const DerivedMultiplier it = sigma_iterate({ly.multiplier("xy").field, SigmaClass::plus}, 3);
  CHECK(it.predicted == SigmaClass::plus);
  CHECK(classify_multiplier(power(ly, 3), it.field, 100).verdict == SigmaClass::plus);

  CHECK_THROWS(sigma_combine(terms, std::vector<int>{1, 1}));
  // Dividing by G on its zero set must be refused.
  std::vector<Vec> bad{{1, 1, 1}};
  ScalarField vanishing{[](const Vec& p) { return p[0] - 1; }, [](const Vec&) { return Vec{1, 0, 0}; }};
  const std::vector<SigmaTerm> t2{{td.multiplier("xyz").field, SigmaClass::minus}, {vanishing, SigmaClass::plus}};
  CHECK_THROWS_AS(sigma_combine(t2, exps, std::nullopt, bad), std::domain_error);
}

TEST_CASE("zero set of mu is invariant") {
  // Points with |mu(p)| <= eps map to points with |mu(F(p))| <= eps (1 + |det DF|).
  const MapSpec hky = builtin("hky_y1");
  const ScalarField& G = hky.multiplier("G").field;
  Rng rng(15);
  int tested = 0;
  for (int i = 0; i < 2000 && tested < 50; ++i) {
    Vec p = sample_domain(hky, rng);
    // Slide along y onto G = 0 by Newton.
    for (int it = 0; it < 30; ++it) p[1] -= G(p) / G.grad(p)[1];
    if (!hky.in_domain(p) || std::abs(G(p)) > 1e-10) continue;
    ++tested;
    const double eps = std::max(std::abs(G(p)), 1e-12);
    CHECK(std::abs(G(hky.forward(p))) <= eps * (1 + std::abs(jacobian_det(hky, p))) * 10);
  }
  CHECK(tested >= 10);
}

TEST_CASE("invariant measure") {
  const MapSpec gm = builtin("gumovski_mira", {{"A", 1.0}, {"B", 1.0}, {"C", 0.0}});
  const MeasureCheck c1 = check_invariant_measure(gm, gm.multiplier("one").field, Box{{0.2, -0.5}, {0.9, 0.4}}, 100000, 1);
  CHECK(c1.agrees());
  CHECK(c1.power_used == 1);
  const MapSpec ly = builtin("lyness", {{"a", 2.0}});
  const MeasureCheck c2 = check_invariant_measure(ly, ly.multiplier("xy").field, Box{{1, 1}, {2, 2}}, 100000, 2);
  CHECK(c2.agrees());
  const MapSpec td = builtin("todd", {{"a", 1.0}});
  const MeasureCheck c3 = check_invariant_measure(td, td.multiplier("xyz").field, Box{{1, 1, 1}, {2, 2, 2}}, 100000, 3);
  CHECK(c3.agrees());
  CHECK(c3.power_used == 2);

  // A wrong density must be caught: nu = 1 is not invariant for Lyness.
  ScalarField one{[](const Vec&) { return 1.0; }, [](const Vec&) { return Vec{0, 0}; }};
  const MeasureCheck bad = check_invariant_measure(ly, one, Box{{1, 1}, {2, 2}}, 100000, 4);
  CHECK_FALSE(bad.agrees());
  // Boxes touching the zero set of mu are rejected.
  CHECK_THROWS_AS(check_invariant_measure(td, td.extras.at("G"), Box{{0.5, 0.5, 0.5}, {3, 3, 3}}, 1000, 5),
                  std::domain_error);
}

}  // TEST_SUITE
