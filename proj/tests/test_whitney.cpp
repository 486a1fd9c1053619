#include <cmath>

#include "doctest.h"
#include "jetcalc/error.hpp"
#include "jetcalc/whitney.hpp"
#include "support.hpp"

using namespace jetcalc;

namespace {

JetFamily sample_family(const Expression& s, const std::vector<std::vector<double>>& pts, int order) {
  JetFamily f;
  f.dimension = static_cast<int>(pts.front().size());
  f.order = order;
  for (const auto& p : pts) f.entries.push_back(prolong(s, p, order));
  return f;
}

std::vector<std::vector<double>> line(double lo, double hi, int count) {
  std::vector<std::vector<double>> pts;
  for (int i = 0; i < count; ++i) pts.push_back({lo + (hi - lo) * i / (count - 1)});
  return pts;
}

// a_k = 2^-k, k = 1..K, in R with lambda_(0) = value(a_k), higher entries 0.
JetFamily dyadic_family(int K, int order, double (*value)(int k)) {
  JetFamily f;
  f.dimension = 1;
  f.order = order;
  for (int k = 1; k <= K; ++k) {
    Jet j = Jet::zero({std::ldexp(1.0, -k)}, order);
    j.mutable_coeffs()[0] = value(k);
    f.entries.push_back(j);
  }
  f.limit = Jet::zero({0.0}, order);
  return f;
}

}  // namespace

TEST_CASE("taylor_remainder examples") {
  const auto e = parse("exp(x1)", 1);
  const auto a = prolong(e, std::vector<double>{0.3}, 4);
  CHECK(taylor_remainder(a, a, MultiIndex{0}, 2) == 0.0);

  const auto cubic = parse("x1^3", 1);
  CHECK(taylor_remainder(prolong(cubic, std::vector<double>{0.0}, 3), prolong(cubic, std::vector<double>{1.0}, 3),
                         MultiIndex{0}, 3) == 0.0);

  const double r =
      taylor_remainder(prolong(e, std::vector<double>{0.0}, 2), prolong(e, std::vector<double>{0.5}, 2), MultiIndex{0}, 2);
  CHECK(r == doctest::Approx(std::exp(0.5) - 1.625).epsilon(1e-12));
  CHECK(r == doctest::Approx(0.0237213).epsilon(1e-6));

  CHECK_THROWS_AS(taylor_remainder(prolong(e, std::vector<double>{0.0}, 2), prolong(e, std::vector<double>{0.5}, 2),
                                   MultiIndex{1}, 2),
                  PreconditionError);
}

TEST_CASE("taylor_remainder is not symmetric") {
  const auto e = parse("exp(x1)", 1);
  const auto a = prolong(e, std::vector<double>{0.0}, 3);
  const auto b = prolong(e, std::vector<double>{1.0}, 3);
  CHECK(taylor_remainder(a, b, MultiIndex{0}, 2) != doctest::Approx(taylor_remainder(b, a, MultiIndex{0}, 2)));
}

TEST_CASE("sampled sine satisfies the Taylor condition") {
  const auto fam = sample_family(parse("sin(x1)", 1), line(-1.0, 1.0, 50), 4);
  const auto rep = check_taylor_condition(fam, 2, {0.1}, [](double) { return 0.5; });
  CHECK(rep.holds());
  CHECK(!rep.entries[0].scales[0].vacuous);
  CHECK(rep.entries.size() == 3);
}

TEST_CASE("moduli of a single function decay with the scale") {
  std::vector<std::vector<double>> grid;
  for (int i = 0; i < 20; ++i)
    for (int j = 0; j < 20; ++j) grid.push_back({-0.5 + 0.05 * i, -0.5 + 0.05 * j});
  const auto fam = sample_family(parse("exp(x1 + x2)", 2), grid, 6);
  const auto scales = default_scales();
  auto probe = check_taylor_condition(fam, 3, scales, [](double) { return 1e300; });
  const double C = probe.modulus_at(0) / scales[0];
  auto rep = check_taylor_condition(fam, 3, scales, [C](double d) { return C * d; }, 2);
  for (std::size_t s = 1; s < scales.size(); ++s) {
    INFO("scale ", scales[s]);
    CHECK(rep.holds_at(s));
  }
  // parallel and serial runs agree exactly, witnesses included
  for (std::size_t i = 0; i < rep.entries.size(); ++i)
    for (std::size_t s = 0; s < scales.size(); ++s) {
      CHECK(rep.entries[i].scales[s].modulus == probe.entries[i].scales[s].modulus);
      CHECK(rep.entries[i].scales[s].witness_from == probe.entries[i].scales[s].witness_from);
      CHECK(rep.entries[i].scales[s].witness_to == probe.entries[i].scales[s].witness_to);
    }
}

TEST_CASE("a jump in the first derivative violates the Taylor condition") {
  JetFamily fam;
  fam.dimension = 1;
  fam.order = 2;
  for (int k = 1; k <= 400; ++k) {
    for (double sgn : {1.0, -1.0}) {
      const double a = sgn / k;
      Jet j = Jet::zero({a}, 2);
      if (a > 0) {
        j.mutable_coeffs()[0] = a;
        j.mutable_coeffs()[1] = 1.0;
      }
      fam.entries.push_back(j);
    }
  }
  const auto rep = check_taylor_condition(fam, 1, default_scales(), [](double) { return 0.5; });
  const auto& first_derivative = rep.entries[1];
  CHECK(first_derivative.index == MultiIndex{1});
  CHECK(first_derivative.scales.back().modulus >= 1.0 / 0.01 * 0.5);
  // the closest straddling pair (1/400, -1/400) gives 1 / (2/400)
  CHECK(first_derivative.scales.back().modulus == doctest::Approx(200.0));
  CHECK(!rep.holds());
  const auto& w = first_derivative.scales.back();
  CHECK(w.witness_from[0] * w.witness_to[0] < 0.0);  // straddles the jump
}

TEST_CASE("single point families are vacuous") {
  const auto fam = sample_family(parse("sin(x1)", 1), {{0.0}}, 4);
  const auto rep = check_taylor_condition(fam, 2, default_scales(), [](double) { return 0.0; });
  CHECK(rep.holds());
  for (const auto& e : rep.entries)
    for (const auto& s : e.scales) {
      CHECK(s.vacuous);
      CHECK(s.modulus == 0.0);
    }
  CHECK_THROWS_AS(check_taylor_condition(fam, 3, default_scales(), [](double) { return 0.0; }), PreconditionError);
}

TEST_CASE("cone membership") {
  const ConeGeometry g{2};
  CHECK(cone_membership(std::vector<double>{0.0, 0.5}, g) == ConeRegion::K1);
  CHECK(cone_membership(std::vector<double>{0.3, -0.5}, g) == ConeRegion::K2);
  CHECK(cone_membership(std::vector<double>{1.0, 0.5}, g) == ConeRegion::Outside);
  CHECK(cone_membership(std::vector<double>{0.0, 0.0}, g) == ConeRegion::Apex);
  CHECK(cone_membership(std::vector<double>{0.0, 1.5}, g) == ConeRegion::Outside);
  for (const auto& x : sample_nappe(g, ConeRegion::K2, 50, 1)) CHECK(cone_membership(x, g) == ConeRegion::K2);
  const ConeGeometry g3{3};
  for (const auto& x : sample_nappe(g3, ConeRegion::K1, 50, 1)) CHECK(cone_membership(x, g3) == ConeRegion::K1);
}

TEST_CASE("cone gluing") {
  const ConeGeometry g{2};
  SUBCASE("equal functions") {
    const auto u = parse("sin(x1) + x2^2", 2);
    const auto f = cone_glue(u, u, g, 4);
    std::mt19937_64 rng(8);
    for (int k = 0; k < 50; ++k) {
      const auto x = testsupport::random_point(rng, 2);
      CHECK(f(x) == doctest::Approx(evaluate(u, x)).epsilon(1e-15));
    }
  }
  SUBCASE("flat bump against zero") {
    const auto u = parse("flat(x1^2 + x2^2)", 2);
    const auto f = cone_glue(u, Expression::constant(0.0), g, 6);
    CHECK(f(std::vector<double>{0.0, 0.5}) == evaluate(u, {0.0, 0.5}));
    CHECK(f(std::vector<double>{0.0, -0.5}) == 0.0);
    CHECK(f(std::vector<double>{0.0, 0.0}) == 0.0);
    const auto cert = smoothness_certificate(f, std::vector<double>{0.0, 0.0}, 4);
    CHECK(cert.passed);
  }
  SUBCASE("functions differing by a flat term") {
    const auto u = parse("x1^2*x2", 2);
    const auto v = parse("x1^2*x2 + flat(x1^2 + x2^2)", 2);
    const auto f = cone_glue(u, v, g, 5);
    for (const auto& x : sample_nappe(g, ConeRegion::K1, 100, 3)) CHECK(std::abs(f(x) - evaluate(u, x)) <= 1e-12);
    for (const auto& x : sample_nappe(g, ConeRegion::K2, 100, 3)) CHECK(std::abs(f(x) - evaluate(v, x)) <= 1e-12);
  }
  SUBCASE("mismatched jets are rejected") {
    CHECK_THROWS_AS(cone_glue(parse("x1", 2), Expression::constant(0.0), g, 2), PreconditionError);
    // agreement to order 2 suffices when only order 2 is requested
    CHECK_NOTHROW(cone_glue(parse("x1^3", 2), Expression::constant(0.0), g, 2));
  }
}

TEST_CASE("certificate rejects a kink") {
  auto kink = [](std::span<const double> x) { return std::abs(x[0]); };
  const auto rep = smoothness_certificate(kink, std::vector<double>{0.0}, 3);
  CHECK(!rep.passed);
  REQUIRE(rep.first_failing_order);
  CHECK(*rep.first_failing_order == 2);
  auto jump = [](std::span<const double> x) { return x[0] >= 0 ? 1.0 : 0.0; };
  CHECK(*smoothness_certificate(jump, std::vector<double>{0.0}, 2).first_failing_order == 1);
  auto smooth = [](std::span<const double> x) { return std::exp(x[0]) * std::cos(x[1]); };
  CHECK(smoothness_certificate(smooth, std::vector<double>{0.1, -0.2}, 4).passed);
}

TEST_CASE("extension on separated points") {
  SUBCASE("single jet") {
    JetFamily fam = sample_family(parse("exp(x1)", 1), {{0.0}}, 3);
    const auto f = extend_separated(fam);
    const auto j = prolong(f, std::vector<double>{0.0}, 3);
    for (double c : j.coeffs()) CHECK(c == 1.0);
  }
  SUBCASE("two prescribed jets") {
    JetFamily fam;
    fam.dimension = 1;
    fam.order = 1;
    fam.entries = {Jet({-1.0}, 1, {0.0, 1.0}), Jet({1.0}, 1, {1.0, 0.0})};
    const auto f = extend_separated(fam);
    CHECK(prolong(f, std::vector<double>{-1.0}, 1).coeffs() == std::vector<double>{0.0, 1.0});
    CHECK(prolong(f, std::vector<double>{1.0}, 1).coeffs() == std::vector<double>{1.0, 0.0});
  }
  SUBCASE("jets of a square") {
    const auto fam = sample_family(parse("x1^2", 1), {{-1.0}, {0.0}, {1.0}}, 2);
    const auto f = extend_separated(fam);
    for (double a : {-1.0, 0.0, 1.0})
      CHECK(prolong(f, std::vector<double>{a}, 2).coeffs() == std::vector<double>{a * a, 2 * a, 2.0});
  }
  SUBCASE("random families reproduce to 1e-9") {
    std::mt19937_64 rng(21);
    for (int c = 0; c < 10; ++c) {
      JetFamily fam;
      fam.dimension = 2;
      fam.order = 3;
      for (int k = 0; k < 5; ++k) {
        std::vector<double> coeffs(10);
        for (auto& v : coeffs) v = testsupport::uniform(rng, -1, 1);
        fam.entries.emplace_back(testsupport::random_point(rng, 2), 3, coeffs);
      }
      const auto f = extend_separated(fam);
      for (const auto& T : fam.entries) CHECK(max_coefficient_difference(prolong(f, T.base(), 3), T) <= 1e-9);
    }
  }
  SUBCASE("duplicates are rejected") {
    JetFamily fam = sample_family(parse("x1", 1), {{0.5}, {0.5}}, 1);
    CHECK_THROWS_AS(extend_separated(fam), PreconditionError);
  }
}

TEST_CASE("extension along a sequence") {
  SUBCASE("zero jets") {
    const auto fam = dyadic_family(10, 3, [](int) { return 0.0; });
    const auto ext = extend_sequence(fam);
    CHECK(ext.f.is_constant(0.0));
    REQUIRE(ext.certificate);
    CHECK(ext.certificate->passed);
  }
  SUBCASE("super-polynomial decay") {
    const auto fam = dyadic_family(12, 3, [](int k) { return std::ldexp(1.0, -2 * k * k); });
    const auto ext = extend_sequence(fam);
    for (const auto& T : fam.entries) CHECK(max_coefficient_difference(prolong(ext.f, T.base(), 3), T) <= 1e-9);
    REQUIRE(ext.certificate);
    CHECK(ext.certificate->passed);
    CHECK(ext.decay.holds());
  }
  SUBCASE("order one decay is rejected") {
    const auto fam = dyadic_family(12, 3, [](int k) { return std::ldexp(1.0, -k); });
    try {
      extend_sequence(fam);
      FAIL("expected the decay hypothesis to fail");
    } catch (const PreconditionError& e) {
      CHECK(std::string(e.what()).find("decay hypothesis fails for m=3") != std::string::npos);
    }
  }
  SUBCASE("separation is checked") {
    JetFamily fam;
    fam.dimension = 1;
    fam.order = 1;
    fam.entries = {Jet::zero({1.0}, 1), Jet::zero({0.9}, 1)};
    CHECK(separation_violation(fam, 2.0));
    CHECK_THROWS_AS(extend_sequence(fam), PreconditionError);
    CHECK(!separation_violation(dyadic_family(12, 1, [](int) { return 0.0; }), 2.0));
  }
}
