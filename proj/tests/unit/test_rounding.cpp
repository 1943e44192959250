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

ApproximateDesign dose_design() {
  ApproximateDesign xi;
  xi.points = {{0.0}, {103.53}, {149.2116}};
  xi.weights = {0.2027, 0.3981, 0.3992};
  return xi;
}

// provider whose "points" are indices into a fixed list of matrices;
// used to exercise the allocation greedy in isolation
class TableProvider : public InfoProvider {
public:
  explicit TableProvider(std::vector<Matrix> mats) : mats_(std::move(mats)) {}
  std::size_t p() const override { return static_cast<std::size_t>(mats_[0].rows()); }

protected:
  Matrix compute(const Point& x) const override {
    return mats_[static_cast<std::size_t>(x[0])];
  }

private:
  std::vector<Matrix> mats_;
};

} // namespace

TEST_CASE("published dose-response exact designs across grid levels") {
  LocalProvider prov(dose_model(), dose_theta());
  const DesignSpace space = dose_space();
  const ApproximateDesign xi = dose_design();

  struct Row {
    double L, x2, x3, eff;
  };
  // grid level, snapped middle/upper points, relative efficiency
  const Row rows[] = {{0.1, 103.5, 149.2, 0.9999989},
                      {1.0, 104.0, 149.0, 0.9998448},
                      {5.0, 105.0, 150.0, 0.9993424},
                      {10.0, 100.0, 150.0, 0.9948902},
                      {20.0, 100.0, 140.0, 0.9465724}};
  for (const Row& r : rows) {
    CAPTURE(r.L);
    RoundingConfig cfg;
    cfg.delta2 = 1.0;
    cfg.grid = {r.L};
    cfg.N = 3500;
    auto rep = round_design(prov, space, xi, cfg);
    REQUIRE(rep.exact.points.size() == 3);
    CHECK(rep.exact.points[0][0] == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(rep.exact.points[1][0] == doctest::Approx(r.x2).epsilon(1e-12));
    CHECK(rep.exact.points[2][0] == doctest::Approx(r.x3).epsilon(1e-12));
    CHECK(rep.exact.counts == std::vector<long>{710, 1393, 1397});
    CHECK(rep.exact.total == 3500);
    CHECK(rep.rel_efficiency == doctest::Approx(r.eff).epsilon(2e-6));
  }
}

TEST_CASE("snap is half-up and clamps to the factor bounds") {
  DesignSpace space({Factor::make_continuous("x", 0.0, 1.0)});
  auto m = ModelSpec::glm(GlmLink::identity, parse_formula({"1 + x"}, space));
  Vector th(2);
  th << 0.0, 0.0;
  LocalProvider prov(m, th);

  RoundingConfig cfg;
  cfg.grid = {0.5};
  cfg.N = 10;
  ApproximateDesign xi;
  // 0.25 is an exactly representable midpoint of the 0.5 grid
  xi.points = {{0.25}, {0.9}};
  xi.weights = {0.5, 0.5};
  auto rep = round_design(prov, space, xi, cfg);
  // exact midpoints round away from zero
  CHECK(rep.exact.points[0][0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(rep.exact.points[1][0] == doctest::Approx(1.0).epsilon(1e-12));

  cfg.grid = {0.6};
  xi.points = {{0.05}, {0.99}};
  rep = round_design(prov, space, xi, cfg);
  CHECK(rep.exact.points[0][0] == doctest::Approx(0.0).epsilon(1e-12));
  // 0.99 snaps to 1.2 and is clamped back to the upper bound
  CHECK(rep.exact.points[1][0] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("points coinciding after the snap are combined") {
  DesignSpace space({Factor::make_continuous("x", 0.0, 1.0)});
  auto m = ModelSpec::glm(GlmLink::identity, parse_formula({"1 + x"}, space));
  Vector th = Vector::Zero(2);
  LocalProvider prov(m, th);

  RoundingConfig cfg;
  cfg.grid = {0.1};
  cfg.N = 12;
  ApproximateDesign xi;
  xi.points = {{0.11}, {0.13}, {0.9}};
  xi.weights = {0.25, 0.25, 0.5};
  auto rep = round_design(prov, space, xi, cfg);
  REQUIRE(rep.exact.points.size() == 2);
  CHECK(rep.exact.points[0][0] == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(rep.exact.counts[0] == 6);
  CHECK(rep.exact.counts[1] == 6);
}

TEST_CASE("allocations sum to N and respect the floor") {
  LocalProvider prov(dose_model(), dose_theta());
  const DesignSpace space = dose_space();
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> ux(0.0, 200.0), uw(0.1, 1.0);
  for (int trial = 0; trial < 25; ++trial) {
    ApproximateDesign xi;
    double total = 0.0;
    for (int i = 0; i < 4; ++i) {
      xi.points.push_back({ux(rng)});
      xi.weights.push_back(uw(rng));
      total += xi.weights.back();
    }
    for (double& w : xi.weights) w /= total;
    RoundingConfig cfg;
    cfg.delta2 = 0.0;
    cfg.grid = {0.1};
    cfg.N = 37 + trial;
    RoundingReport rep;
    try {
      rep = round_design(prov, space, xi, cfg);
    } catch (const NumericalError&) {
      continue; // a random 4-point design may round to a singular allocation
    }
    long sum = 0;
    for (std::size_t i = 0; i < rep.exact.points.size(); ++i) {
      sum += rep.exact.counts[i];
      CHECK(rep.exact.counts[i] >= 0);
    }
    CHECK(sum == cfg.N);
    CHECK(rep.rel_efficiency > 0.0);
  }
}

TEST_CASE("greedy allocation matches the exhaustive oracle") {
  std::mt19937_64 rng(43);
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_int_distribution<int> msize(2, 4), psize(2, 3), nsize(5, 12);
  for (int trial = 0; trial < 20; ++trial) {
    const int m = msize(rng), p = psize(rng);
    std::vector<Matrix> mats;
    for (int i = 0; i < m; ++i) {
      Matrix A(p, p);
      for (Eigen::Index r = 0; r < p; ++r)
        for (Eigen::Index c = 0; c < p; ++c) A(r, c) = g(rng);
      mats.push_back(A * A.transpose());
    }
    std::vector<double> w(static_cast<std::size_t>(m));
    double total = 0.0;
    for (double& wi : w) {
      std::uniform_real_distribution<double> u(0.05, 1.0);
      wi = u(rng);
      total += wi;
    }
    for (double& wi : w) wi /= total;

    std::vector<double> levels;
    ApproximateDesign xi;
    for (int i = 0; i < m; ++i) {
      levels.push_back(i);
      xi.points.push_back({static_cast<double>(i)});
      xi.weights.push_back(w[static_cast<std::size_t>(i)]);
    }
    DesignSpace space({Factor::make_discrete("idx", levels)});
    TableProvider prov(mats);
    RoundingConfig cfg;
    cfg.N = nsize(rng);
    auto rep = round_design(prov, space, xi, cfg);

    Matrix M = Matrix::Zero(p, p);
    for (std::size_t i = 0; i < rep.exact.points.size(); ++i)
      M += (static_cast<double>(rep.exact.counts[i]) / static_cast<double>(cfg.N)) *
           prov.info(rep.exact.points[i]);
    const double greedy_ld = log_det(M);
    const double oracle_ld = oracle::best_exact_allocation_logdet(mats, w, cfg.N);
    // ties inside the greedy's tolerance may cost at most tie_tol per unit
    CHECK(greedy_ld >= oracle_ld - 1e-5 * static_cast<double>(cfg.N) - 1e-9);
  }
}

TEST_CASE("an integral allocation is reproduced exactly") {
  LocalProvider prov(dose_model(), dose_theta());
  const DesignSpace space = dose_space();
  ApproximateDesign xi;
  xi.points = {{0.0}, {100.0}, {150.0}};
  xi.weights = {0.25, 0.25, 0.5};
  RoundingConfig cfg;
  cfg.grid = {0.1};
  cfg.N = 8;
  auto rep = round_design(prov, space, xi, cfg);
  CHECK(rep.exact.counts == std::vector<long>{2, 2, 4});
  CHECK(rep.rel_efficiency == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("singular rounded designs raise") {
  LocalProvider prov(dose_model(), dose_theta());
  const DesignSpace space = dose_space();
  ApproximateDesign xi;
  xi.points = {{0.0}, {100.0}};
  xi.weights = {0.5, 0.5};
  RoundingConfig cfg;
  cfg.grid = {0.1};
  cfg.N = 10; // two support points cannot carry a five-parameter model
  CHECK_THROWS_AS(round_design(prov, space, xi, cfg), NumericalError);
}

TEST_CASE("config validation") {
  RoundingConfig cfg;
  cfg.grid = {0.1, 0.1};
  CHECK_THROWS_AS(cfg.validate(1), ConfigError);
  cfg.grid = {-0.1};
  CHECK_THROWS_AS(cfg.validate(1), ConfigError);
  cfg.grid = {0.1};
  cfg.N = 0;
  CHECK_THROWS_AS(cfg.validate(1), ConfigError);
}
