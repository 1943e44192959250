#ifndef FORLION_FACTOR_HPP
#define FORLION_FACTOR_HPP

#include "forlion/types.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace forlion {

struct Factor {
  std::string name;
  bool continuous = true;
  double lower = 0.0; // continuous only
  double upper = 0.0;
  std::vector<double> levels; // discrete only, >=2 distinct values

  static Factor make_continuous(std::string name, double lower, double upper) {
    if (!(lower < upper))
      throw ConfigError("factor '" + name + "': lower bound must be < upper bound");
    Factor f;
    f.name = std::move(name);
    f.continuous = true;
    f.lower = lower;
    f.upper = upper;
    return f;
  }

  static Factor make_discrete(std::string name, std::vector<double> levels) {
    std::set<double> distinct(levels.begin(), levels.end());
    if (distinct.size() < 2)
      throw ConfigError("factor '" + name + "': discrete factors need >=2 distinct levels");
    Factor f;
    f.name = std::move(name);
    f.continuous = false;
    f.levels = std::move(levels);
    return f;
  }
};

/// Mixed design region: k continuous intervals followed by d-k discrete
/// level sets, optionally restricted to an explicit list of discrete
/// level combinations.
class DesignSpace {
public:
  DesignSpace() = default;

  explicit DesignSpace(std::vector<Factor> factors,
                       std::optional<std::vector<std::vector<double>>> fixed_discrete = {})
      : factors_(std::move(factors)), fixed_discrete_(std::move(fixed_discrete)) {
    bool seen_discrete = false;
    for (const auto& f : factors_) {
      if (!f.continuous) seen_discrete = true;
      else if (seen_discrete)
        throw ConfigError("factor '" + f.name + "': continuous factors must precede discrete ones");
    }
    if (fixed_discrete_) {
      const std::size_t k = continuous_count();
      const std::size_t nd = factors_.size() - k;
      for (const auto& combo : *fixed_discrete_) {
        if (combo.size() != nd)
          throw ConfigError("fixed discrete combination has wrong arity");
        for (std::size_t j = 0; j < nd; ++j) {
          const auto& lv = factors_[k + j].levels;
          if (std::find(lv.begin(), lv.end(), combo[j]) == lv.end())
            throw ConfigError("fixed discrete combination uses undeclared level of factor '" +
                              factors_[k + j].name + "'");
        }
      }
    }
  }

  const std::vector<Factor>& factors() const { return factors_; }
  std::size_t dim() const { return factors_.size(); }

  std::size_t continuous_count() const {
    std::size_t k = 0;
    while (k < factors_.size() && factors_[k].continuous) ++k;
    return k;
  }

  std::size_t factor_index(const std::string& name) const {
    for (std::size_t j = 0; j < factors_.size(); ++j)
      if (factors_[j].name == name) return j;
    throw ConfigError("unknown factor name '" + name + "'");
  }

  bool contains(const Point& x) const {
    if (x.size() != factors_.size()) return false;
    for (std::size_t j = 0; j < factors_.size(); ++j) {
      const auto& f = factors_[j];
      if (f.continuous) {
        if (x[j] < f.lower || x[j] > f.upper) return false;
      } else {
        if (std::find(f.levels.begin(), f.levels.end(), x[j]) == f.levels.end()) return false;
      }
    }
    return true;
  }

  /// All discrete level combinations under consideration (the explicit
  /// list when present, otherwise the full Cartesian product). Each entry
  /// has d-k coordinates. k=d yields one empty combination.
  std::vector<std::vector<double>> discrete_combinations() const {
    if (fixed_discrete_) return *fixed_discrete_;
    const std::size_t k = continuous_count();
    std::vector<std::vector<double>> combos{{}};
    for (std::size_t j = k; j < factors_.size(); ++j) {
      std::vector<std::vector<double>> next;
      next.reserve(combos.size() * factors_[j].levels.size());
      for (const auto& c : combos)
        for (double lv : factors_[j].levels) {
          auto e = c;
          e.push_back(lv);
          next.push_back(std::move(e));
        }
      combos = std::move(next);
    }
    return combos;
  }

private:
  std::vector<Factor> factors_;
  std::optional<std::vector<std::vector<double>>> fixed_discrete_;
};

inline double point_distance(const Point& a, const Point& b) {
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    const double d = a[j] - b[j];
    s += d * d;
  }
  return std::sqrt(s);
}

} // namespace forlion

#endif
