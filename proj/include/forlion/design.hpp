#ifndef FORLION_DESIGN_HPP
#define FORLION_DESIGN_HPP

#include "forlion/factor.hpp"
#include "forlion/linalg.hpp"
#include "forlion/model.hpp"
#include "forlion/types.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <mutex>
#include <utility>
#include <vector>

namespace forlion {

/// m distinct design points with nonnegative weights summing to 1.
struct ApproximateDesign {
  std::vector<Point> points;
  std::vector<double> weights;

  std::size_t size() const { return points.size(); }
};

/// Design points with integer allocations summing to N.
struct ExactDesign {
  std::vector<Point> points;
  std::vector<long> counts;
  long total = 0;

  ApproximateDesign as_approximate() const {
    ApproximateDesign xi;
    xi.points = points;
    xi.weights.reserve(counts.size());
    for (long n : counts) xi.weights.push_back(static_cast<double>(n) / static_cast<double>(total));
    return xi;
  }
};

/// Closed evaluation context mapping a design point to its (possibly
/// expected) information matrix. Evaluations are memoized per exact
/// coordinates; the cache is guarded so callers may evaluate points
/// concurrently.
class InfoProvider {
public:
  virtual ~InfoProvider() = default;

  Matrix info(const Point& x) const {
    {
      std::lock_guard<std::mutex> lock(mutex_);
      auto it = cache_.find(x);
      if (it != cache_.end()) return it->second;
    }
    Matrix F = compute(x);
    std::lock_guard<std::mutex> lock(mutex_);
    return cache_.emplace(x, std::move(F)).first->second;
  }

  virtual std::size_t p() const = 0;

protected:
  virtual Matrix compute(const Point& x) const = 0;

private:
  mutable std::mutex mutex_;
  mutable std::map<Point, Matrix> cache_;
};

/// Locally D-optimal regime: information at one fixed theta.
class LocalProvider : public InfoProvider {
public:
  LocalProvider(ModelSpec model, Vector theta)
      : model_(std::move(model)), theta_(std::move(theta)) {
    if (static_cast<std::size_t>(theta_.size()) != model_.p())
      throw ConfigError("theta length does not match the formula's coefficient count");
  }

  std::size_t p() const override { return model_.p(); }
  const ModelSpec& model() const { return model_; }
  const Vector& theta() const { return theta_; }

protected:
  Matrix compute(const Point& x) const override { return fisher_info(model_, theta_, x); }

private:
  ModelSpec model_;
  Vector theta_;
};

/// F(xi) = sum_i w_i F(x_i).
inline Matrix design_info(const InfoProvider& provider, const ApproximateDesign& xi) {
  const auto n = static_cast<Eigen::Index>(provider.p());
  Matrix M = Matrix::Zero(n, n);
  for (std::size_t i = 0; i < xi.size(); ++i) M += xi.weights[i] * provider.info(xi.points[i]);
  return M;
}

/// Sensitivity d(x, xi) = tr(F(xi)^{-1} F_x), via linear solves.
inline double sensitivity(const InfoProvider& provider, const Matrix& design_information,
                          const Point& x) {
  Eigen::LLT<Matrix> llt(design_information);
  if (llt.info() != Eigen::Success)
    throw NumericalError("sensitivity: design information matrix is singular");
  return llt.solve(provider.info(x)).trace();
}

inline double sensitivity(const InfoProvider& provider, const ApproximateDesign& xi,
                          const Point& x) {
  return sensitivity(provider, design_info(provider, xi), x);
}

namespace detail {

inline bool same_discrete_coords(const Point& a, const Point& b, std::size_t k) {
  for (std::size_t j = k; j < a.size(); ++j)
    if (a[j] != b[j]) return false;
  return true;
}

} // namespace detail

/// Closest pair of design points and their distance. A one-point design
/// reports +inf and no pair.
inline std::pair<double, std::pair<std::size_t, std::size_t>> closest_pair(
    const ApproximateDesign& xi) {
  double best = std::numeric_limits<double>::infinity();
  std::pair<std::size_t, std::size_t> pair{0, 0};
  for (std::size_t i = 0; i < xi.size(); ++i)
    for (std::size_t j = i + 1; j < xi.size(); ++j) {
      const double d = point_distance(xi.points[i], xi.points[j]);
      if (d < best) {
        best = d;
        pair = {i, j};
      }
    }
  return {best, pair};
}

/// Repeatedly merge the closest pair of points with identical discrete
/// coordinates and distance < delta. The merged point takes the
/// weight-proportional mean of the continuous coordinates; a merge is
/// committed only if the merged design stays nonsingular.
inline ApproximateDesign merge_design(const InfoProvider& provider, const ApproximateDesign& xi,
                                      double delta, std::size_t continuous_count) {
  ApproximateDesign cur = xi;
  if (delta <= 0.0) return cur;
  for (;;) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t bi = 0, bj = 0;
    bool found = false;
    for (std::size_t i = 0; i < cur.size(); ++i)
      for (std::size_t j = i + 1; j < cur.size(); ++j) {
        if (!detail::same_discrete_coords(cur.points[i], cur.points[j], continuous_count))
          continue;
        const double d = point_distance(cur.points[i], cur.points[j]);
        if (d < delta && d < best) {
          best = d;
          bi = i;
          bj = j;
          found = true;
        }
      }
    if (!found) break;
    ApproximateDesign merged;
    const double wsum = cur.weights[bi] + cur.weights[bj];
    Point mp = cur.points[bi];
    if (wsum > 0.0)
      for (std::size_t c = 0; c < continuous_count; ++c)
        mp[c] = (cur.weights[bi] * cur.points[bi][c] + cur.weights[bj] * cur.points[bj][c]) / wsum;
    for (std::size_t i = 0; i < cur.size(); ++i) {
      if (i == bi || i == bj) continue;
      merged.points.push_back(cur.points[i]);
      merged.weights.push_back(cur.weights[i]);
    }
    merged.points.push_back(std::move(mp));
    merged.weights.push_back(wsum);
    if (std::isinf(log_det(design_info(provider, merged)))) break; // keep the unmerged design
    cur = std::move(merged);
  }
  return cur;
}

/// (det_num / det_den)^{1/p}; may exceed 1.
inline double relative_efficiency(const InfoProvider& provider, const ApproximateDesign& num,
                                  const ApproximateDesign& den, std::size_t p) {
  const double ld_den = log_det(design_info(provider, den));
  if (std::isinf(ld_den))
    throw NumericalError("relative_efficiency: denominator design is singular");
  const double ld_num = log_det(design_info(provider, num));
  if (std::isinf(ld_num)) return 0.0;
  return std::exp((ld_num - ld_den) / static_cast<double>(p));
}

} // namespace forlion

#endif
