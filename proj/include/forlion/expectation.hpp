#ifndef FORLION_EXPECTATION_HPP
#define FORLION_EXPECTATION_HPP

#include "forlion/cubature.hpp"
#include "forlion/design.hpp"
#include "forlion/model.hpp"
#include "forlion/types.hpp"

#include <atomic>
#include <cstddef>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace forlion {

/// Independent box prior over the parameter space with a pointwise joint
/// density. The default density is the normalized product of uniforms on
/// the box.
struct BoxPrior {
  Vector lower;
  Vector upper;
  std::function<double(const Vector&)> density; // empty -> product uniform
  double cubature_reltol = 1e-4;
  std::size_t cubature_max_evals = 1000000;

  void validate() const {
    if (lower.size() != upper.size()) throw ConfigError("prior: bound vectors differ in length");
    for (Eigen::Index j = 0; j < lower.size(); ++j)
      if (!(lower[j] <= upper[j]))
        throw ConfigError("prior: lower bound exceeds upper bound at coordinate " +
                          std::to_string(j + 1));
  }

  double density_at(const Vector& theta) const {
    if (density) return density(theta);
    double volume = 1.0;
    for (Eigen::Index j = 0; j < lower.size(); ++j)
      if (upper[j] > lower[j]) volume *= upper[j] - lower[j];
    return 1.0 / volume;
  }
};

/// B x p matrix of bootstrapped or simulated parameter vectors.
struct ParameterSample {
  std::vector<std::string> names;
  Matrix rows;

  std::size_t B() const { return static_cast<std::size_t>(rows.rows()); }
};

/// Reads a parameter sample CSV: one header row naming the coefficients
/// in formula order, then B data rows.
inline ParameterSample load_parameter_sample(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open parameter sample file '" + path + "'");
  ParameterSample sample;
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("parameter sample file '" + path + "' is empty");
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) sample.names.push_back(cell);
  }
  const std::size_t p = sample.names.size();
  std::vector<std::vector<double>> data;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> row;
    while (std::getline(ss, cell, ',')) {
      std::size_t used = 0;
      double v = std::stod(cell, &used);
      row.push_back(v);
    }
    if (row.size() != p)
      throw ConfigError("parameter sample file '" + path + "' line " + std::to_string(lineno) +
                        ": expected " + std::to_string(p) + " columns, got " +
                        std::to_string(row.size()));
    for (double v : row)
      if (!std::isfinite(v))
        throw ConfigError("parameter sample file '" + path + "' line " + std::to_string(lineno) +
                          ": non-finite value");
    data.push_back(std::move(row));
  }
  if (data.empty()) throw ConfigError("parameter sample file '" + path + "' has no data rows");
  sample.rows.resize(static_cast<Eigen::Index>(data.size()), static_cast<Eigen::Index>(p));
  for (std::size_t i = 0; i < data.size(); ++i)
    for (std::size_t j = 0; j < p; ++j)
      sample.rows(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = data[i][j];
  return sample;
}

/// Expected information under a box prior: the p(p+1)/2 upper-triangle
/// entries of F(x, theta) * density(theta) are integrated as one vector
/// integrand and mirrored back to a symmetric matrix.
inline Matrix ew_info_integral(const ModelSpec& m, const BoxPrior& prior, const Point& x,
                               bool* budget_warning = nullptr) {
  if (m.family == Family::mlm && m.mlm_link == MlmLink::cumulative)
    throw InfeasibleParameterError(
        "integral-based EW is unsupported for cumulative-link MLM over a box that may contain "
        "infeasible parameters; use sample-based EW");
  const auto p = static_cast<Eigen::Index>(m.p());
  const Eigen::Index ntri = p * (p + 1) / 2;
  auto integrand = [&](const Vector& theta) {
    const Matrix F = fisher_info(m, theta, x) * prior.density_at(theta);
    Vector v(ntri);
    Eigen::Index k = 0;
    for (Eigen::Index i = 0; i < p; ++i)
      for (Eigen::Index j = i; j < p; ++j) v[k++] = F(i, j);
    return v;
  };
  const CubatureResult res =
      adaptive_cubature(integrand, prior.lower, prior.upper, prior.cubature_reltol,
                        prior.cubature_max_evals);
  if (!res.converged && budget_warning) *budget_warning = true;
  Matrix M(p, p);
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < p; ++i)
    for (Eigen::Index j = i; j < p; ++j) {
      M(i, j) = res.value[k];
      M(j, i) = res.value[k];
      ++k;
    }
  return M;
}

namespace detail {

// Pairwise (tree) reduction so large B sums neither drift nor depend on
// evaluation order.
inline Matrix pairwise_mean(const ModelSpec& m, const Matrix& rows, const Point& x,
                            Eigen::Index lo, Eigen::Index hi) {
  if (hi - lo == 1) {
    try {
      return fisher_info(m, Vector(rows.row(lo)), x);
    } catch (const InfeasibleParameterError&) {
      throw InfeasibleParameterError("parameter sample row " + std::to_string(lo + 1) +
                                     " is infeasible for this model");
    }
  }
  const Eigen::Index mid = lo + (hi - lo) / 2;
  const double wl = static_cast<double>(mid - lo) / static_cast<double>(hi - lo);
  return wl * pairwise_mean(m, rows, x, lo, mid) +
         (1.0 - wl) * pairwise_mean(m, rows, x, mid, hi);
}

} // namespace detail

/// Sample-based expected information: arithmetic mean of per-row F(x, theta_j).
inline Matrix ew_info_sample(const ModelSpec& m, const ParameterSample& sample, const Point& x) {
  if (sample.B() == 0) throw ConfigError("parameter sample is empty");
  return detail::pairwise_mean(m, sample.rows, x, 0, sample.rows.rows());
}

/// Integral-based EW regime.
class IntegralEwProvider : public InfoProvider {
public:
  IntegralEwProvider(ModelSpec model, BoxPrior prior)
      : model_(std::move(model)), prior_(std::move(prior)) {
    prior_.validate();
    if (static_cast<std::size_t>(prior_.lower.size()) != model_.p())
      throw ConfigError("prior bound length does not match the formula's coefficient count");
  }

  std::size_t p() const override { return model_.p(); }
  const ModelSpec& model() const { return model_; }
  const BoxPrior& prior() const { return prior_; }
  bool budget_exceeded() const { return budget_warning_.load(); }

protected:
  Matrix compute(const Point& x) const override {
    bool warn = false;
    Matrix M = ew_info_integral(model_, prior_, x, &warn);
    if (warn) budget_warning_ = true;
    return M;
  }

private:
  ModelSpec model_;
  BoxPrior prior_;
  mutable std::atomic<bool> budget_warning_{false};
};

/// Sample-based EW regime.
class SampleEwProvider : public InfoProvider {
public:
  SampleEwProvider(ModelSpec model, ParameterSample sample)
      : model_(std::move(model)), sample_(std::move(sample)) {
    if (static_cast<std::size_t>(sample_.rows.cols()) != model_.p())
      throw ConfigError("parameter sample column count does not match the formula's coefficient count");
  }

  std::size_t p() const override { return model_.p(); }
  const ModelSpec& model() const { return model_; }
  const ParameterSample& sample() const { return sample_; }

protected:
  Matrix compute(const Point& x) const override { return ew_info_sample(model_, sample_, x); }

private:
  ModelSpec model_;
  ParameterSample sample_;
};

} // namespace forlion

#endif
