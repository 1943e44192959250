#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <forlion/forlion.hpp>
#include <support/oracle.hpp>

#include <cmath>
#include <random>

using namespace forlion;

namespace {

DesignSpace dose_space() {
  return DesignSpace({Factor::make_continuous("x", 0.0, 200.0)});
}

ModelSpec dose_model() {
  return ModelSpec::mlm(MlmLink::continuation, 3,
                        parse_formula({"1 + x + x^2", "1 + x", "0"}, dose_space()));
}

Vector dose_theta() {
  Vector th(5);
  th << -1.935, -0.02642, 0.0003174, -9.159, 0.06386;
  return th;
}

// the published dose-response optimum
ApproximateDesign dose_design() {
  ApproximateDesign xi;
  xi.points = {{103.53}, {0.0}, {149.2116}};
  xi.weights = {0.3981, 0.2027, 0.3992};
  return xi;
}

} // namespace

TEST_CASE("design_info basics") {
  LocalProvider prov(dose_model(), dose_theta());
  ApproximateDesign one;
  one.points = {{100.0}};
  one.weights = {1.0};
  CHECK((design_info(prov, one) - prov.info({100.0})).norm() < 1e-12);

  ApproximateDesign split;
  split.points = {{100.0}, {100.0}};
  split.weights = {0.3, 0.7};
  CHECK((design_info(prov, split) - prov.info({100.0})).norm() <
        1e-14 * prov.info({100.0}).norm());
}

TEST_CASE("published dose-response design determinant") {
  LocalProvider prov(dose_model(), dose_theta());
  const double det = std::exp(log_det(design_info(prov, dose_design())));
  CHECK(det == doctest::Approx(54016299.0).epsilon(1e-3));
}

TEST_CASE("design_info is linear in the weights") {
  LocalProvider prov(dose_model(), dose_theta());
  ApproximateDesign a = dose_design();
  ApproximateDesign b = a;
  b.weights = {0.2, 0.5, 0.3};
  const double alpha = 0.37;
  ApproximateDesign mix = a;
  for (std::size_t i = 0; i < 3; ++i)
    mix.weights[i] = alpha * a.weights[i] + (1.0 - alpha) * b.weights[i];
  Matrix lhs = design_info(prov, mix);
  Matrix rhs = alpha * design_info(prov, a) + (1.0 - alpha) * design_info(prov, b);
  CHECK((lhs - rhs).norm() < 1e-9 * rhs.norm());
}

TEST_CASE("log_det closed cases and permutation invariance") {
  CHECK(log_det(Matrix::Identity(5, 5)) == doctest::Approx(0.0).epsilon(1e-14));
  Matrix d = Matrix::Zero(2, 2);
  d(0, 0) = 2.0;
  d(1, 1) = 3.0;
  CHECK(log_det(d) == doctest::Approx(std::log(6.0)).epsilon(1e-14));
  Matrix sing = Matrix::Ones(3, 3);
  CHECK(std::isinf(log_det(sing)));

  LocalProvider prov(dose_model(), dose_theta());
  ApproximateDesign xi = dose_design();
  const double ld = log_det(design_info(prov, xi));
  std::swap(xi.points[0], xi.points[2]);
  std::swap(xi.weights[0], xi.weights[2]);
  CHECK(log_det(design_info(prov, xi)) == doctest::Approx(ld).epsilon(1e-12));
}

TEST_CASE("sensitivity at design points") {
  LocalProvider prov(dose_model(), dose_theta());
  const ApproximateDesign xi = dose_design();
  const Matrix M = design_info(prov, xi);
  // equivalence theorem at a support point of the published optimum
  CHECK(sensitivity(prov, M, {103.53}) == doctest::Approx(5.0).epsilon(2e-4));
  CHECK(sensitivity(prov, M, {50.0}) < 5.0);

  // one-point design: trace(F^{-1} F) = p when F is nonsingular
  DesignSpace s({Factor::make_continuous("x", -1.0, 1.0)});
  auto glm = ModelSpec::glm(GlmLink::logit, parse_formula({"1"}, s));
  Vector th(1);
  th << 0.0;
  LocalProvider p1(glm, th);
  ApproximateDesign one;
  one.points = {{0.2}};
  one.weights = {1.0};
  CHECK(sensitivity(p1, one, {0.9}) == doctest::Approx(1.0).epsilon(1e-12));

  Matrix singular = Matrix::Zero(5, 5);
  CHECK_THROWS_AS(sensitivity(prov, singular, {10.0}), NumericalError);
}

TEST_CASE("sensitivity maximum over a grid certifies the published design") {
  LocalProvider prov(dose_model(), dose_theta());
  const Matrix M = design_info(prov, dose_design());
  double dmax = 0.0;
  for (int i = 0; i <= 2000; ++i)
    dmax = std::max(dmax, sensitivity(prov, M, {200.0 * i / 2000.0}));
  CHECK(dmax <= 5.0 * (1.0 + 1e-3));
}

TEST_CASE("merge_design") {
  LocalProvider prov(dose_model(), dose_theta());
  ApproximateDesign xi;
  xi.points = {{148.7592}, {149.5954}, {0.0}, {103.6}};
  xi.weights = {0.2598, 0.1394, 0.2027, 0.3981};

  SUBCASE("delta = 0 is the identity") {
    auto out = merge_design(prov, xi, 0.0, 1);
    CHECK(out.points == xi.points);
    CHECK(out.weights == xi.weights);
  }

  SUBCASE("close pair merges to the weight-proportional mean") {
    auto out = merge_design(prov, xi, 1.0, 1);
    REQUIRE(out.size() == 3);
    const double expected = (0.2598 * 148.7592 + 0.1394 * 149.5954) / 0.3992;
    bool found = false;
    double total = 0.0;
    for (std::size_t i = 0; i < out.size(); ++i) {
      total += out.weights[i];
      if (std::abs(out.points[i][0] - expected) < 1e-9) {
        found = true;
        CHECK(out.weights[i] == doctest::Approx(0.3992).epsilon(1e-12));
        CHECK(out.points[i][0] == doctest::Approx(149.05).epsilon(1e-3));
      }
    }
    CHECK(found);
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  }

  SUBCASE("differing discrete coordinates are never merged") {
    DesignSpace s({Factor::make_continuous("v", 0.0, 10.0),
                   Factor::make_discrete("a", {-1.0, 1.0})});
    auto glm = ModelSpec::glm(GlmLink::logit, parse_formula({"1 + v + a"}, s));
    Vector th(3);
    th << 0.0, 0.1, 0.2;
    LocalProvider p(glm, th);
    ApproximateDesign d;
    d.points = {{5.0, -1.0}, {5.0, 1.0}, {0.0, 1.0}};
    d.weights = {0.4, 0.3, 0.3};
    auto out = merge_design(p, d, 3.0, 1);
    CHECK(out.size() == 3);
  }
}

TEST_CASE("relative_efficiency") {
  LocalProvider prov(dose_model(), dose_theta());
  const ApproximateDesign xi = dose_design();
  CHECK(relative_efficiency(prov, xi, xi, 5) == doctest::Approx(1.0).epsilon(1e-12));

  ApproximateDesign exact01;
  exact01.points = {{103.5}, {0.0}, {149.2}};
  exact01.weights = {1393.0 / 3500.0, 710.0 / 3500.0, 1397.0 / 3500.0};
  CHECK(relative_efficiency(prov, exact01, xi, 5) ==
        doctest::Approx(0.9999989).epsilon(1e-6));

  ApproximateDesign exact20;
  exact20.points = {{100.0}, {0.0}, {140.0}};
  exact20.weights = {1393.0 / 3500.0, 710.0 / 3500.0, 1397.0 / 3500.0};
  CHECK(relative_efficiency(prov, exact20, xi, 5) ==
        doctest::Approx(0.9465724).epsilon(1e-5));

  const double ab = relative_efficiency(prov, exact20, xi, 5);
  const double ba = relative_efficiency(prov, xi, exact20, 5);
  CHECK(ab * ba == doctest::Approx(1.0).epsilon(1e-10));

  ApproximateDesign singular;
  singular.points = {{0.0}};
  singular.weights = {1.0};
  CHECK_THROWS_AS(relative_efficiency(prov, xi, singular, 5), NumericalError);
}

TEST_CASE("closest pair reporting") {
  ApproximateDesign xi = dose_design();
  const auto [dist, idx] = closest_pair(xi);
  CHECK(dist == doctest::Approx(149.2116 - 103.53).epsilon(1e-9));
  CHECK(xi.points[idx.first][0] == doctest::Approx(103.53));
  CHECK(xi.points[idx.second][0] == doctest::Approx(149.2116));

  ApproximateDesign one;
  one.points = {{3.0}};
  one.weights = {1.0};
  CHECK(std::isinf(closest_pair(one).first));
}

TEST_CASE("provider memoization returns identical matrices") {
  LocalProvider prov(dose_model(), dose_theta());
  Matrix a = prov.info({77.7});
  Matrix b = prov.info({77.7});
  CHECK((a - b).norm() == 0.0);
}
