#ifndef FORLION_LIFTONE_HPP
#define FORLION_LIFTONE_HPP

#include "forlion/linalg.hpp"
#include "forlion/types.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

namespace forlion {

/// D-optimal weight optimization over a fixed set of per-point
/// information matrices.
struct LiftOneProblem {
  std::vector<Matrix> matrices;
  std::vector<double> start; // empty -> uniform
  double reltol = 1e-5;
  int maxit = 100;
  bool random_order = false;
  int nram = 3;          // random restarts (first attempt uses `start`)
  double epsilon = 1e-12; // weights below this are snapped to zero
  bool log_mode = true;  // golden-section on log det; false: polynomial solver
};

struct LiftOneResult {
  std::vector<double> weights;
  double logdet = -std::numeric_limits<double>::infinity();
};

struct PathMaximum {
  double z = 0.0;
  double logdet = -std::numeric_limits<double>::infinity();
};

/// w_i(z): set component i to z and rescale the rest proportionally.
inline std::vector<double> lift_path(const std::vector<double>& w, std::size_t i, double z) {
  if (w[i] >= 1.0) throw NumericalError("lift_path: w_i = 1 leaves no mass to rescale");
  const double scale = (1.0 - z) / (1.0 - w[i]);
  std::vector<double> out(w.size());
  for (std::size_t j = 0; j < w.size(); ++j) out[j] = w[j] * scale;
  out[i] = z;
  return out;
}

namespace detail {

// Mixture along the lift-one path: M(z) = (1-z) A + z F_i with
// A = (M(w) - w_i F_i) / (1 - w_i).
struct LiftPathMix {
  Matrix A;
  const Matrix* Fi;

  Matrix at(double z) const { return (1.0 - z) * A + z * (*Fi); }
};

inline LiftPathMix lift_path_mix(const std::vector<Matrix>& F, const std::vector<double>& w,
                                 std::size_t i) {
  if (w[i] >= 1.0) throw NumericalError("lift-one path: w_i = 1");
  const auto n = F[0].rows();
  Matrix M = Matrix::Zero(n, n);
  for (std::size_t j = 0; j < F.size(); ++j) M += w[j] * F[j];
  return LiftPathMix{(M - w[i] * F[i]) / (1.0 - w[i]), &F[i]};
}

inline PathMaximum golden_section_path(const LiftPathMix& mix) {
  auto g = [&](double z) { return log_det(mix.at(z)); };
  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = 0.0, b = 1.0;
  double c = b - invphi * (b - a);
  double d = a + invphi * (b - a);
  double gc = g(c), gd = g(d);
  // log det is concave along the segment, so golden section applies
  while (b - a > 1e-10) {
    if (gc >= gd) {
      b = d;
      d = c;
      gd = gc;
      c = b - invphi * (b - a);
      gc = g(c);
    } else {
      a = c;
      c = d;
      gc = gd;
      d = a + invphi * (b - a);
      gd = g(d);
    }
  }
  PathMaximum best;
  for (double z : {0.0, 0.5 * (a + b), 1.0}) {
    const double v = g(z);
    if (v > best.logdet) {
      best.z = z;
      best.logdet = v;
    }
  }
  return best;
}

inline double eval_poly(const std::vector<double>& coef, double z) {
  double v = 0.0;
  for (std::size_t k = coef.size(); k-- > 0;) v = v * z + coef[k];
  return v;
}

// Signed determinant fallback for singular path points (polynomial
// interpolation needs the raw value, not -inf).
inline double detail_signed_det(const Matrix& M) { return M.determinant(); }

// det along the path is a polynomial of degree <= p in z; interpolate it
// exactly from p+1 Chebyshev nodes and maximize via derivative sign
// changes plus bisection.
inline PathMaximum polynomial_path(const LiftPathMix& mix) {
  const auto p = static_cast<std::size_t>(mix.A.rows());
  const std::size_t n = p + 1;
  Eigen::MatrixXd V(n, n);
  Eigen::VectorXd y(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double z = 0.5 + 0.5 * std::cos(M_PI * (2.0 * k + 1.0) / (2.0 * n));
    const double ld = log_det(mix.at(z));
    y[static_cast<Eigen::Index>(k)] = std::isinf(ld) ? detail_signed_det(mix.at(z)) : std::exp(ld);
    double zp = 1.0;
    for (std::size_t c = 0; c < n; ++c) {
      V(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(c)) = zp;
      zp *= z;
    }
  }
  Eigen::VectorXd coef_v = V.fullPivLu().solve(y);
  std::vector<double> coef(coef_v.data(), coef_v.data() + coef_v.size());
  std::vector<double> dcoef;
  for (std::size_t k = 1; k < coef.size(); ++k) dcoef.push_back(coef[k] * static_cast<double>(k));

  std::vector<double> candidates{0.0, 1.0};
  const int scan = 512;
  double prev = eval_poly(dcoef, 0.0);
  for (int s = 1; s <= scan; ++s) {
    const double z = static_cast<double>(s) / scan;
    const double cur = eval_poly(dcoef, z);
    if ((prev <= 0.0) != (cur <= 0.0)) {
      double lo = static_cast<double>(s - 1) / scan, hi = z;
      for (int it = 0; it < 80; ++it) {
        const double mid = 0.5 * (lo + hi);
        if ((eval_poly(dcoef, lo) <= 0.0) != (eval_poly(dcoef, mid) <= 0.0))
          hi = mid;
        else
          lo = mid;
      }
      candidates.push_back(0.5 * (lo + hi));
    }
    prev = cur;
  }
  PathMaximum best;
  for (double z : candidates) {
    const double v = log_det(mix.at(z));
    if (v > best.logdet) {
      best.z = z;
      best.logdet = v;
    }
  }
  return best;
}

} // namespace detail

/// Maximize log det of the weight mixture along the lift-one path for
/// coordinate i. Both solver modes agree on the optimum; the polynomial
/// mode is exact for the degree <= p determinant, the log mode exploits
/// concavity of log det on the segment.
inline PathMaximum maximize_along_path(const std::vector<Matrix>& matrices,
                                       const std::vector<double>& w, std::size_t i,
                                       bool log_mode = true) {
  const auto mix = detail::lift_path_mix(matrices, w, i);
  const PathMaximum best = log_mode ? detail::golden_section_path(mix)
                                    : detail::polynomial_path(mix);
  if (std::isinf(best.logdet))
    throw NumericalError("lift-one path is singular for every z in [0,1]");
  return best;
}

/// As maximize_along_path but reporting an all-singular path as a
/// -inf maximum instead of throwing.
inline PathMaximum try_maximize_along_path(const std::vector<Matrix>& matrices,
                                           const std::vector<double>& w, std::size_t i,
                                           bool log_mode = true) {
  const auto mix = detail::lift_path_mix(matrices, w, i);
  return log_mode ? detail::golden_section_path(mix) : detail::polynomial_path(mix);
}

namespace detail {

inline LiftOneResult liftone_single(const LiftOneProblem& prob, std::vector<double> w,
                                    std::mt19937_64& rng) {
  const std::size_t m = prob.matrices.size();
  const auto n = prob.matrices[0].rows();
  auto mixture_logdet = [&](const std::vector<double>& wt) {
    Matrix M = Matrix::Zero(n, n);
    for (std::size_t j = 0; j < m; ++j) M += wt[j] * prob.matrices[j];
    return log_det(M);
  };
  double ld = mixture_logdet(w);
  if (std::isinf(ld)) return LiftOneResult{std::move(w), ld};

  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  for (int sweep = 0; sweep < prob.maxit; ++sweep) {
    if (prob.random_order) std::shuffle(order.begin(), order.end(), rng);
    const double ld_before = ld;
    bool moved = false;
    for (std::size_t i : order) {
      if (w[i] >= 1.0 - 1e-12) continue;
      const PathMaximum pm = try_maximize_along_path(prob.matrices, w, i, prob.log_mode);
      // only accept moves above the numerical noise floor of log_det,
      // so the sweep loop reaches a genuine fixed point
      if (pm.logdet > ld + 1e-14 * std::max(1.0, std::abs(ld))) {
        w = lift_path(w, i, pm.z);
        ld = pm.logdet;
        moved = true;
      }
    }
    if (!moved || ld - ld_before < prob.reltol * std::max(1.0, std::abs(ld_before))) break;
  }
  // snap numerical zeros and renormalize; keep the unsnapped allocation
  // when a below-epsilon weight turns out to be load-bearing (e.g. a
  // minimally supported design, where every support point carries rank)
  std::vector<double> snapped = w;
  double total = 0.0;
  for (double& wi : snapped) {
    if (wi < prob.epsilon) wi = 0.0;
    total += wi;
  }
  for (double& wi : snapped) wi /= total;
  const double ld_snapped = mixture_logdet(snapped);
  if (std::isfinite(ld_snapped) || !std::isfinite(ld)) {
    w = std::move(snapped);
    ld = ld_snapped;
  }
  return LiftOneResult{std::move(w), ld};
}

inline std::vector<double> random_simplex(std::size_t m, std::mt19937_64& rng) {
  std::exponential_distribution<double> exp_dist(1.0);
  std::vector<double> w(m);
  double total = 0.0;
  for (double& wi : w) {
    wi = exp_dist(rng);
    total += wi;
  }
  for (double& wi : w) wi /= total;
  return w;
}

} // namespace detail

/// Sweep lift-one moves until the per-sweep relative improvement drops
/// below reltol; with nram > 1 rerun from random starting allocations
/// and keep the best.
inline LiftOneResult liftone_optimize(const LiftOneProblem& prob, std::mt19937_64& rng) {
  if (prob.matrices.empty()) throw ConfigError("liftone: no candidate matrices");
  const std::size_t m = prob.matrices.size();
  std::vector<double> start = prob.start;
  if (start.empty()) start.assign(m, 1.0 / static_cast<double>(m));

  LiftOneResult best;
  const int attempts = std::max(1, prob.nram);
  for (int a = 0; a < attempts; ++a) {
    std::vector<double> w = (a == 0) ? start : detail::random_simplex(m, rng);
    LiftOneResult r = detail::liftone_single(prob, std::move(w), rng);
    if (r.logdet > best.logdet) best = std::move(r);
  }
  if (std::isinf(best.logdet))
    throw NumericalError("liftone: no nonsingular allocation found over the candidate set");
  return best;
}

} // namespace forlion

#endif
