#ifndef FORLION_LINK_HPP
#define FORLION_LINK_HPP

#include "forlion/types.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace forlion {

enum class GlmLink { identity, logit, probit, cloglog, loglog, cauchit, log };
enum class MlmLink { baseline, cumulative, adjacent, continuation };

inline GlmLink glm_link_from_string(const std::string& s) {
  if (s == "identity") return GlmLink::identity;
  if (s == "logit") return GlmLink::logit;
  if (s == "probit") return GlmLink::probit;
  if (s == "cloglog") return GlmLink::cloglog;
  if (s == "loglog") return GlmLink::loglog;
  if (s == "cauchit") return GlmLink::cauchit;
  if (s == "log") return GlmLink::log;
  throw ConfigError("unknown GLM link '" + s + "'");
}

inline MlmLink mlm_link_from_string(const std::string& s) {
  if (s == "baseline") return MlmLink::baseline;
  if (s == "cumulative") return MlmLink::cumulative;
  if (s == "adjacent") return MlmLink::adjacent;
  if (s == "continuation") return MlmLink::continuation;
  throw ConfigError("unknown MLM link '" + s + "'");
}

inline const char* to_string(GlmLink l) {
  switch (l) {
    case GlmLink::identity: return "identity";
    case GlmLink::logit: return "logit";
    case GlmLink::probit: return "probit";
    case GlmLink::cloglog: return "cloglog";
    case GlmLink::loglog: return "loglog";
    case GlmLink::cauchit: return "cauchit";
    case GlmLink::log: return "log";
  }
  return "?";
}

inline const char* to_string(MlmLink l) {
  switch (l) {
    case MlmLink::baseline: return "baseline";
    case MlmLink::cumulative: return "cumulative";
    case MlmLink::adjacent: return "adjacent";
    case MlmLink::continuation: return "continuation";
  }
  return "?";
}

namespace detail {

inline double norm_pdf(double z) {
  static const double inv_sqrt_2pi = 0.3989422804014326779;
  return inv_sqrt_2pi * std::exp(-0.5 * z * z);
}

inline double norm_cdf(double z) { return 0.5 * std::erfc(-z * M_SQRT1_2); }

inline double logistic(double eta) {
  if (eta >= 0.0) return 1.0 / (1.0 + std::exp(-eta));
  const double e = std::exp(eta);
  return e / (1.0 + e);
}

// Clamp saturating tails to exact zero instead of letting 0/0 produce NaN.
inline double tail_zero(double v) { return (std::isfinite(v) && v > 1e-300) ? v : 0.0; }

} // namespace detail

/// GLM weight nu(eta) = (dmu/deta)^2 / Var(Y), the scalar Fisher
/// information of the linear predictor. Identity link uses sigma^2 = 1.
inline double glm_weight(GlmLink link, double eta) {
  using namespace detail;
  switch (link) {
    case GlmLink::identity:
      return 1.0;
    case GlmLink::logit: {
      const double mu = logistic(eta);
      return tail_zero(mu * (1.0 - mu));
    }
    case GlmLink::probit: {
      const double phi = norm_pdf(eta);
      const double Phi = norm_cdf(eta);
      return tail_zero(phi * phi / (Phi * (1.0 - Phi)));
    }
    case GlmLink::cloglog: {
      // mu = 1 - exp(-e^eta)
      const double u = std::exp(eta);
      const double mu = -std::expm1(-u);
      return tail_zero(std::exp(2.0 * eta - 2.0 * u) / (mu * (1.0 - mu)));
    }
    case GlmLink::loglog: {
      // mu = exp(-e^eta)
      const double u = std::exp(eta);
      const double mu = std::exp(-u);
      return tail_zero(std::exp(2.0 * eta - 2.0 * u) / (mu * (1.0 - mu)));
    }
    case GlmLink::cauchit: {
      const double mu = 0.5 + std::atan(eta) / M_PI;
      const double dmu = 1.0 / (M_PI * (1.0 + eta * eta));
      return tail_zero(dmu * dmu / (mu * (1.0 - mu)));
    }
    case GlmLink::log: {
      // saturate instead of overflowing to inf, which would poison
      // information matrices downstream
      const double v = std::exp(eta);
      return std::isfinite(v) ? v : std::numeric_limits<double>::max();
    }
  }
  return 0.0;
}

/// d nu / d eta, closed form per link (used by the analytic new-point
/// gradient).
inline double glm_weight_deriv(GlmLink link, double eta) {
  using namespace detail;
  switch (link) {
    case GlmLink::identity:
      return 0.0;
    case GlmLink::logit: {
      const double mu = logistic(eta);
      const double nu = tail_zero(mu * (1.0 - mu));
      return nu * (1.0 - 2.0 * mu);
    }
    case GlmLink::probit: {
      const double phi = norm_pdf(eta);
      const double Phi = norm_cdf(eta);
      const double v = Phi * (1.0 - Phi);
      if (!(v > 1e-300)) return 0.0;
      return phi * phi * (-2.0 * eta * v - phi * (1.0 - 2.0 * Phi)) / (v * v);
    }
    case GlmLink::cloglog: {
      const double u = std::exp(eta);
      const double mu = -std::expm1(-u);
      const double v = mu * (1.0 - mu);
      if (!(v > 1e-300)) return 0.0;
      const double n = std::exp(2.0 * eta - 2.0 * u);
      const double dmu = std::exp(eta - u);
      return (n * (2.0 - 2.0 * u) * v - n * dmu * (1.0 - 2.0 * mu)) / (v * v);
    }
    case GlmLink::loglog: {
      const double u = std::exp(eta);
      const double mu = std::exp(-u);
      const double v = mu * (1.0 - mu);
      if (!(v > 1e-300)) return 0.0;
      const double n = std::exp(2.0 * eta - 2.0 * u);
      const double dmu = -std::exp(eta - u);
      return (n * (2.0 - 2.0 * u) * v - n * dmu * (1.0 - 2.0 * mu)) / (v * v);
    }
    case GlmLink::cauchit: {
      const double mu = 0.5 + std::atan(eta) / M_PI;
      const double v = mu * (1.0 - mu);
      if (!(v > 1e-300)) return 0.0;
      const double dmu = 1.0 / (M_PI * (1.0 + eta * eta));
      const double c = dmu * dmu;
      const double dc = -4.0 * eta / (1.0 + eta * eta) * c;
      return (dc * v - c * dmu * (1.0 - 2.0 * mu)) / (v * v);
    }
    case GlmLink::log: {
      // saturate instead of overflowing to inf, which would poison
      // information matrices downstream
      const double v = std::exp(eta);
      return std::isfinite(v) ? v : std::numeric_limits<double>::max();
    }
  }
  return 0.0;
}

} // namespace forlion

#endif
