#ifndef FORLION_ROUNDING_HPP
#define FORLION_ROUNDING_HPP

#include "forlion/design.hpp"
#include "forlion/types.hpp"

#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

namespace forlion {

struct RoundingConfig {
  double delta2 = 0.0;
  std::vector<double> grid; // step per continuous factor, all > 0
  long N = 1;

  void validate(std::size_t continuous_count) const {
    if (grid.size() != continuous_count)
      throw ConfigError("rounding: one grid step per continuous factor is required");
    for (double g : grid)
      if (!(g > 0.0)) throw ConfigError("rounding: grid steps must be positive");
    if (N < 1) throw ConfigError("rounding: N must be >= 1");
  }
};

struct RoundingReport {
  ExactDesign exact;
  double rel_efficiency = 0.0;
};

/// Convert an approximate design to a grid-feasible exact design:
/// merge within delta2, snap continuous coordinates to the nearest grid
/// multiples (half-up, exact midpoints away from zero), floor the
/// allocations, then hand out the remaining units greedily by log det.
inline RoundingReport round_design(const InfoProvider& provider, const DesignSpace& space,
                                   const ApproximateDesign& xi, const RoundingConfig& config) {
  const std::size_t k = space.continuous_count();
  config.validate(k);

  // Step 1: merge close points
  ApproximateDesign merged = merge_design(provider, xi, config.delta2, k);

  // Step 2: snap to the grid and combine coincident points
  ApproximateDesign snapped;
  for (std::size_t i = 0; i < merged.size(); ++i) {
    Point x = merged.points[i];
    for (std::size_t j = 0; j < k; ++j) {
      const auto& f = space.factors()[j];
      const double L = config.grid[j];
      x[j] = std::clamp(std::round(x[j] / L) * L, f.lower, f.upper);
    }
    bool combined = false;
    for (std::size_t q = 0; q < snapped.size(); ++q)
      if (point_distance(snapped.points[q], x) < 1e-12) {
        snapped.weights[q] += merged.weights[i];
        combined = true;
        break;
      }
    if (!combined) {
      snapped.points.push_back(std::move(x));
      snapped.weights.push_back(merged.weights[i]);
    }
  }

  // Step 3: floor, then assign leftover units one by one to the count
  // vector maximizing log det of the per-unit-normalized information
  const std::size_t m = snapped.size();
  std::vector<Matrix> F(m);
  for (std::size_t i = 0; i < m; ++i) F[i] = provider.info(snapped.points[i]);
  std::vector<long> counts(m);
  long assigned = 0;
  for (std::size_t i = 0; i < m; ++i) {
    counts[i] = static_cast<long>(
        std::floor(static_cast<double>(config.N) * snapped.weights[i] + 1e-9));
    assigned += counts[i];
  }
  auto counts_logdet = [&](const std::vector<long>& n) {
    const auto dim = static_cast<Eigen::Index>(provider.p());
    Matrix M = Matrix::Zero(dim, dim);
    for (std::size_t i = 0; i < m; ++i)
      M += (static_cast<double>(n[i]) / static_cast<double>(config.N)) * F[i];
    return log_det(M);
  };
  // candidates within tie_tol of the best log det count as tied and the
  // lowest index wins; tie_tol is far below any single-unit effect on a
  // small design yet absorbs evaluation noise on near-equivalent splits
  constexpr double tie_tol = 1e-5;
  for (long unit = assigned; unit < config.N; ++unit) {
    double best = -std::numeric_limits<double>::infinity();
    std::size_t best_i = 0;
    for (std::size_t i = 0; i < m; ++i) {
      ++counts[i];
      const double ld = counts_logdet(counts);
      --counts[i];
      if (ld > best + tie_tol) {
        best = ld;
        best_i = i;
      }
    }
    ++counts[best_i];
  }
  if (std::isinf(counts_logdet(counts)))
    throw NumericalError("round_design: rounded exact design is singular");

  RoundingReport report;
  report.exact.points = snapped.points;
  report.exact.counts = counts;
  report.exact.total = config.N;
  report.rel_efficiency =
      relative_efficiency(provider, report.exact.as_approximate(), xi, provider.p());
  return report;
}

} // namespace forlion

#endif
