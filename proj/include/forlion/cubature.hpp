#ifndef FORLION_CUBATURE_HPP
#define FORLION_CUBATURE_HPP

#include "forlion/types.hpp"

#include <cmath>
#include <cstddef>
#include <functional>
#include <queue>
#include <utility>
#include <vector>

namespace forlion {

using VectorIntegrand = std::function<Vector(const Vector&)>;

struct CubatureResult {
  Vector value;
  Vector error;
  bool converged = false;
  std::size_t evals = 0;
};

namespace cubature_detail {

struct Region {
  Vector lower;
  Vector upper;
  Vector value;
  Vector error;
  double total_error = 0.0;
  int split_dim = 0;
};

struct RegionOrder {
  bool operator()(const Region& a, const Region& b) const {
    return a.total_error < b.total_error;
  }
};

// Genz-Malik degree-7 rule with embedded degree-5 error estimate over a
// hyper-rectangle, dimension >= 2. Also reports the axis with the
// largest scaled fourth difference for subdivision.
class GenzMalikRule {
public:
  explicit GenzMalikRule(int dim) : dim_(dim) {
    const double n = dim;
    lambda2_ = std::sqrt(9.0 / 70.0);
    lambda4_ = std::sqrt(9.0 / 10.0);
    lambda5_ = std::sqrt(9.0 / 19.0);
    w1_ = (12824.0 - 9120.0 * n + 400.0 * n * n) / 19683.0;
    w2_ = 980.0 / 6561.0;
    w3_ = (1820.0 - 400.0 * n) / 19683.0;
    w4_ = 200.0 / 19683.0;
    w5_ = 6859.0 / 19683.0 / std::ldexp(1.0, dim_);
    e1_ = (729.0 - 950.0 * n + 50.0 * n * n) / 729.0;
    e2_ = 245.0 / 486.0;
    e3_ = (265.0 - 100.0 * n) / 1458.0;
    e4_ = 25.0 / 729.0;
  }

  std::size_t points_per_region() const {
    const std::size_t d = static_cast<std::size_t>(dim_);
    return 1 + 4 * d + 2 * d * (d - 1) + (std::size_t{1} << d);
  }

  void apply(const VectorIntegrand& f, Region& r) const {
    const Vector center = 0.5 * (r.lower + r.upper);
    const Vector half = 0.5 * (r.upper - r.lower);
    double volume = 1.0;
    for (int j = 0; j < dim_; ++j) volume *= r.upper[j] - r.lower[j];

    const Vector fc = f(center);
    const auto nc = fc.size();
    Vector sum2 = Vector::Zero(nc), sum3 = Vector::Zero(nc), sum4 = Vector::Zero(nc),
           sum5 = Vector::Zero(nc);

    // axis-wise points, tracking the fourth difference per axis
    const double ratio = (lambda2_ * lambda2_) / (lambda4_ * lambda4_);
    double best_diff = -1.0;
    int best_dim = 0;
    Vector pt = center;
    for (int j = 0; j < dim_; ++j) {
      const double h = half[j];
      pt[j] = center[j] - lambda2_ * h;
      const Vector f2a = f(pt);
      pt[j] = center[j] + lambda2_ * h;
      const Vector f2b = f(pt);
      pt[j] = center[j] - lambda4_ * h;
      const Vector f4a = f(pt);
      pt[j] = center[j] + lambda4_ * h;
      const Vector f4b = f(pt);
      pt[j] = center[j];
      sum2 += f2a + f2b;
      sum3 += f4a + f4b;
      const double diff =
          ((f2a + f2b - 2.0 * fc) - ratio * (f4a + f4b - 2.0 * fc)).cwiseAbs().sum();
      if (diff > best_diff) {
        best_diff = diff;
        best_dim = j;
      }
    }
    // pair points (+-lambda4, +-lambda4)
    for (int i = 0; i < dim_; ++i)
      for (int j = i + 1; j < dim_; ++j)
        for (int si : {-1, 1})
          for (int sj : {-1, 1}) {
            pt[i] = center[i] + si * lambda4_ * half[i];
            pt[j] = center[j] + sj * lambda4_ * half[j];
            sum4 += f(pt);
            pt[i] = center[i];
            pt[j] = center[j];
          }
    // corner points (+-lambda5, ..., +-lambda5)
    const std::size_t corners = std::size_t{1} << dim_;
    for (std::size_t mask = 0; mask < corners; ++mask) {
      for (int j = 0; j < dim_; ++j)
        pt[j] = center[j] + ((mask >> j) & 1 ? lambda5_ : -lambda5_) * half[j];
      sum5 += f(pt);
    }

    const Vector res7 = volume * (w1_ * fc + w2_ * sum2 + w3_ * sum3 + w4_ * sum4 + w5_ * sum5);
    const Vector res5 = volume * (e1_ * fc + e2_ * sum2 + e3_ * sum3 + e4_ * sum4);
    r.value = res7;
    r.error = (res7 - res5).cwiseAbs();
    r.total_error = r.error.sum();
    r.split_dim = best_dim;
  }

private:
  int dim_;
  double lambda2_, lambda4_, lambda5_;
  double w1_, w2_, w3_, w4_, w5_;
  double e1_, e2_, e3_, e4_;
};

// Gauss-Kronrod 7-15 pair for the one-dimensional case.
inline void gk15_apply(const VectorIntegrand& f, Region& r) {
  static const double xgk[8] = {0.991455371120813, 0.949107912342759, 0.864864423359769,
                                0.741531185599394, 0.586087235467691, 0.405845151377397,
                                0.207784955007898, 0.0};
  static const double wgk[8] = {0.022935322010529, 0.063092092629979, 0.104790010322250,
                                0.140653259715525, 0.169004726639267, 0.190350578064785,
                                0.204432940075298, 0.209482141084728};
  static const double wg[4] = {0.129484966168870, 0.279705391489277, 0.381830050505119,
                               0.417959183673469};
  const double a = r.lower[0], b = r.upper[0];
  const double c = 0.5 * (a + b), h = 0.5 * (b - a);
  Vector one(1);
  one[0] = c;
  const Vector fc = f(one);
  Vector resk = wgk[7] * fc;
  Vector resg = wg[3] * fc;
  for (int j = 0; j < 7; ++j) {
    one[0] = c - h * xgk[j];
    const Vector fa = f(one);
    one[0] = c + h * xgk[j];
    const Vector fb = f(one);
    resk += wgk[j] * (fa + fb);
    if (j % 2 == 1) resg += wg[j / 2] * (fa + fb);
  }
  r.value = h * resk;
  r.error = (h * (resk - resg)).cwiseAbs();
  r.total_error = r.error.sum();
  r.split_dim = 0;
}

} // namespace cubature_detail

/// Adaptive integration of a vector-valued integrand over a box.
/// Dimension >= 2 uses the Genz-Malik degree-7 rule with embedded
/// degree-5 error estimate; dimension 1 uses a Gauss-Kronrod 7-15 pair.
/// Regions are kept in a max-error priority queue; the worst region is
/// split along the axis with the largest scaled fourth difference until
/// the total estimated error drops below reltol * ||value|| or the
/// evaluation budget runs out (reported via `converged`).
inline CubatureResult adaptive_cubature(const VectorIntegrand& f, const Vector& lower,
                                        const Vector& upper, double reltol,
                                        std::size_t max_evals) {
  using namespace cubature_detail;
  const int dim = static_cast<int>(lower.size());

  // collapse zero-width dimensions
  std::vector<int> active;
  for (int j = 0; j < dim; ++j)
    if (upper[j] > lower[j]) active.push_back(j);

  if (active.empty()) {
    CubatureResult res;
    res.value = f(lower);
    res.error = Vector::Zero(res.value.size());
    res.converged = true;
    res.evals = 1;
    return res;
  }
  if (static_cast<int>(active.size()) < dim) {
    Vector fixed = lower;
    auto g = [&](const Vector& y) {
      Vector full = fixed;
      for (std::size_t j = 0; j < active.size(); ++j) full[active[j]] = y[static_cast<Eigen::Index>(j)];
      return f(full);
    };
    Vector lo(active.size()), hi(active.size());
    for (std::size_t j = 0; j < active.size(); ++j) {
      lo[static_cast<Eigen::Index>(j)] = lower[active[j]];
      hi[static_cast<Eigen::Index>(j)] = upper[active[j]];
    }
    return adaptive_cubature(g, lo, hi, reltol, max_evals);
  }

  const bool one_dim = dim == 1;
  GenzMalikRule rule(one_dim ? 2 : dim);
  const std::size_t per_region = one_dim ? 15 : rule.points_per_region();

  auto evaluate = [&](Region& r) {
    if (one_dim)
      gk15_apply(f, r);
    else
      rule.apply(f, r);
  };

  Region root;
  root.lower = lower;
  root.upper = upper;
  evaluate(root);
  std::size_t evals = per_region;

  Vector total_value = root.value;
  Vector total_error = root.error;
  std::priority_queue<Region, std::vector<Region>, RegionOrder> heap;
  heap.push(std::move(root));

  auto done = [&]() {
    const double vnorm = total_value.norm();
    return total_error.sum() <= reltol * std::max(vnorm, 1e-300);
  };

  while (!done() && evals + 2 * per_region <= max_evals && !heap.empty()) {
    Region worst = heap.top();
    heap.pop();
    total_value -= worst.value;
    total_error -= worst.error;

    const int sd = worst.split_dim;
    const double mid = 0.5 * (worst.lower[sd] + worst.upper[sd]);
    Region left, right;
    left.lower = worst.lower;
    left.upper = worst.upper;
    left.upper[sd] = mid;
    right.lower = worst.lower;
    right.upper = worst.upper;
    right.lower[sd] = mid;
    evaluate(left);
    evaluate(right);
    evals += 2 * per_region;
    total_value += left.value + right.value;
    total_error += left.error + right.error;
    heap.push(std::move(left));
    heap.push(std::move(right));
  }

  CubatureResult res;
  res.value = total_value;
  res.error = total_error;
  res.converged = done();
  res.evals = evals;
  return res;
}

} // namespace forlion

#endif
