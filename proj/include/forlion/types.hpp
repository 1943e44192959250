#ifndef FORLION_TYPES_HPP
#define FORLION_TYPES_HPP

#include <Eigen/Dense>
#include <stdexcept>
#include <string>
#include <vector>

namespace forlion {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// A design point: one coordinate per factor, continuous factors first.
using Point = std::vector<double>;

class ConfigError : public std::runtime_error {
public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

class NumericalError : public std::runtime_error {
public:
  explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Thrown when a parameter vector is infeasible for the model, e.g. a
/// cumulative-link MLM whose cutpoint logits are not strictly increasing.
class InfeasibleParameterError : public NumericalError {
public:
  explicit InfeasibleParameterError(const std::string& msg) : NumericalError(msg) {}
};

/// Thrown when category probabilities degenerate to 0/1 so the reduced
/// covariance is singular.
class DegenerateProbabilityError : public NumericalError {
public:
  explicit DegenerateProbabilityError(const std::string& msg) : NumericalError(msg) {}
};

} // namespace forlion

#endif
