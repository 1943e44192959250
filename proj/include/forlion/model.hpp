#ifndef FORLION_MODEL_HPP
#define FORLION_MODEL_HPP

#include "forlion/formula.hpp"
#include "forlion/link.hpp"
#include "forlion/types.hpp"

#include <cmath>
#include <cstddef>
#include <string>

namespace forlion {

enum class Family { glm, mlm };

struct ModelSpec {
  Family family = Family::glm;
  GlmLink glm_link = GlmLink::logit;
  MlmLink mlm_link = MlmLink::continuation;
  std::size_t J = 2; // MLM response categories
  PredictorFormula formula;

  std::size_t p() const { return formula.p(); }

  static ModelSpec glm(GlmLink link, PredictorFormula f) {
    ModelSpec m;
    m.family = Family::glm;
    m.glm_link = link;
    m.formula = std::move(f);
    if (m.formula.rows() != 1) throw ConfigError("a GLM formula must have exactly one row");
    return m;
  }

  static ModelSpec mlm(MlmLink link, std::size_t J, PredictorFormula f) {
    if (J < 2) throw ConfigError("MLM needs J >= 2 response categories");
    ModelSpec m;
    m.family = Family::mlm;
    m.mlm_link = link;
    m.J = J;
    m.formula = std::move(f);
    if (m.formula.rows() != J)
      throw ConfigError("MLM formula must have exactly J = " + std::to_string(J) + " rows");
    return m;
  }
};

/// Category probabilities from the first J-1 linear predictors. The
/// cumulative link requires strictly increasing cumulative logits;
/// otherwise the parameter is infeasible at this point.
inline Vector mlm_probabilities(MlmLink link, const Vector& eta, std::size_t J) {
  Vector pi(J);
  switch (link) {
    case MlmLink::baseline: {
      // log(pi_j / pi_J) = eta_j
      double mx = 0.0;
      for (std::size_t j = 0; j + 1 < J; ++j) mx = std::max(mx, eta[static_cast<Eigen::Index>(j)]);
      double denom = std::exp(-mx);
      for (std::size_t j = 0; j + 1 < J; ++j)
        denom += std::exp(eta[static_cast<Eigen::Index>(j)] - mx);
      for (std::size_t j = 0; j + 1 < J; ++j)
        pi[static_cast<Eigen::Index>(j)] = std::exp(eta[static_cast<Eigen::Index>(j)] - mx) / denom;
      pi[static_cast<Eigen::Index>(J - 1)] = std::exp(-mx) / denom;
      break;
    }
    case MlmLink::cumulative: {
      // log(P(Y<=j)/P(Y>j)) = eta_j, gamma_j strictly increasing
      double prev = 0.0;
      for (std::size_t j = 0; j + 1 < J; ++j) {
        const double g = detail::logistic(eta[static_cast<Eigen::Index>(j)]);
        if (g <= prev)
          throw InfeasibleParameterError(
              "cumulative link: cumulative logits are not strictly increasing");
        pi[static_cast<Eigen::Index>(j)] = g - prev;
        prev = g;
      }
      pi[static_cast<Eigen::Index>(J - 1)] = 1.0 - prev;
      break;
    }
    case MlmLink::adjacent: {
      // log(pi_j / pi_{j+1}) = eta_j => pi_j proportional to exp(sum_{l>=j} eta_l)
      Vector s = Vector::Zero(static_cast<Eigen::Index>(J));
      for (std::size_t j = J - 1; j-- > 0;)
        s[static_cast<Eigen::Index>(j)] =
            s[static_cast<Eigen::Index>(j + 1)] + eta[static_cast<Eigen::Index>(j)];
      const double mx = s.maxCoeff();
      double denom = 0.0;
      for (std::size_t j = 0; j < J; ++j)
        denom += std::exp(s[static_cast<Eigen::Index>(j)] - mx);
      for (std::size_t j = 0; j < J; ++j)
        pi[static_cast<Eigen::Index>(j)] = std::exp(s[static_cast<Eigen::Index>(j)] - mx) / denom;
      break;
    }
    case MlmLink::continuation: {
      // log(pi_j / sum_{l>j} pi_l) = eta_j
      double remaining = 1.0;
      for (std::size_t j = 0; j + 1 < J; ++j) {
        const double s = detail::logistic(eta[static_cast<Eigen::Index>(j)]);
        pi[static_cast<Eigen::Index>(j)] = remaining * s;
        remaining *= (1.0 - s);
      }
      pi[static_cast<Eigen::Index>(J - 1)] = remaining;
      break;
    }
  }
  return pi;
}

/// d pi_{1:J-1} / d eta_{1:J-1}. Analytic for baseline and continuation,
/// central differences for cumulative and adjacent.
inline Matrix mlm_dpi_deta(MlmLink link, const Vector& eta, std::size_t J) {
  const auto n = static_cast<Eigen::Index>(J - 1);
  Matrix D = Matrix::Zero(n, n);
  switch (link) {
    case MlmLink::baseline: {
      const Vector pi = mlm_probabilities(link, eta, J);
      for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index l = 0; l < n; ++l)
          D(i, l) = pi[i] * ((i == l ? 1.0 : 0.0) - pi[l]);
      break;
    }
    case MlmLink::continuation: {
      const Vector pi = mlm_probabilities(link, eta, J);
      for (Eigen::Index i = 0; i < n; ++i) {
        const double s_i = detail::logistic(eta[i]);
        D(i, i) = pi[i] * (1.0 - s_i);
        for (Eigen::Index l = 0; l < i; ++l) D(i, l) = -pi[i] * detail::logistic(eta[l]);
      }
      break;
    }
    case MlmLink::cumulative:
    case MlmLink::adjacent: {
      for (Eigen::Index l = 0; l < n; ++l) {
        const double h = 1e-6 * std::max(1.0, std::abs(eta[l]));
        Vector ep = eta, em = eta;
        ep[l] += h;
        em[l] -= h;
        const Vector pp = mlm_probabilities(link, ep, J);
        const Vector pm = mlm_probabilities(link, em, J);
        for (Eigen::Index i = 0; i < n; ++i) D(i, l) = (pp[i] - pm[i]) / (2.0 * h);
      }
      break;
    }
  }
  return D;
}

/// Per-point Fisher information for a GLM: nu(h'theta) h h'.
inline Matrix fisher_info_glm(const ModelSpec& m, const Vector& theta, const Point& x) {
  const Vector h = m.formula.model_matrix(x).row(0).transpose();
  const double nu = glm_weight(m.glm_link, h.dot(theta));
  return nu * (h * h.transpose());
}

/// Per-point Fisher information for a single-trial MLM:
/// F = G' Sigma^{-1} G with G = (dpi/deta) X and the reduced covariance
/// Sigma = diag(pi) - pi pi' over the first J-1 categories.
inline Matrix fisher_info_mlm(const ModelSpec& m, const Vector& theta, const Point& x) {
  const Matrix X = m.formula.model_matrix(x);
  const Vector eta = X * theta;
  const Vector pi = mlm_probabilities(m.mlm_link, eta, m.J);
  const auto n = static_cast<Eigen::Index>(m.J - 1);
  for (Eigen::Index j = 0; j < pi.size(); ++j)
    if (pi[j] < 1e-14)
      throw DegenerateProbabilityError("category probability degenerate at this design point");
  const Vector pr = pi.head(n);
  Matrix Sigma = Matrix(pr.asDiagonal()) - pr * pr.transpose();
  const Matrix G = mlm_dpi_deta(m.mlm_link, eta, m.J) * X.topRows(n);
  Eigen::LLT<Matrix> llt(Sigma);
  if (llt.info() != Eigen::Success)
    throw DegenerateProbabilityError("reduced category covariance is singular");
  const Matrix F = G.transpose() * llt.solve(G);
  return 0.5 * (F + F.transpose());
}

/// Per-point Fisher information for either family.
inline Matrix fisher_info(const ModelSpec& m, const Vector& theta, const Point& x) {
  return m.family == Family::glm ? fisher_info_glm(m, theta, x) : fisher_info_mlm(m, theta, x);
}

} // namespace forlion

#endif
