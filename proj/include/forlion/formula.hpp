#ifndef FORLION_FORMULA_HPP
#define FORLION_FORMULA_HPP

#include "forlion/factor.hpp"
#include "forlion/types.hpp"

#include <cctype>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

namespace forlion {

/// One monomial term: exponent per factor; the all-zero vector is the
/// intercept.
struct Term {
  std::vector<unsigned> exponents;

  bool operator==(const Term& other) const { return exponents == other.exponents; }
};

/// Predictor structure as ordered monomial terms. GLM: a single row
/// (h(x), a p-vector). MLM: J rows forming the J x p model matrix X_x,
/// where an empty row is all zeros. Coefficient order is textual term
/// order with rows concatenated.
class PredictorFormula {
public:
  PredictorFormula() = default;
  PredictorFormula(std::vector<std::vector<Term>> rows, std::size_t d)
      : rows_(std::move(rows)), dim_(d) {
    p_ = 0;
    for (const auto& r : rows_) p_ += r.size();
  }

  std::size_t rows() const { return rows_.size(); }
  std::size_t p() const { return p_; }
  std::size_t dim() const { return dim_; }
  const std::vector<std::vector<Term>>& row_terms() const { return rows_; }

  /// Model matrix at x: rows() x p for MLM, and the single row is h(x)
  /// for a GLM. Column layout follows coefficient order.
  Matrix model_matrix(const Point& x) const {
    Matrix X = Matrix::Zero(static_cast<Eigen::Index>(rows_.size()),
                            static_cast<Eigen::Index>(p_));
    std::size_t col = 0;
    for (std::size_t r = 0; r < rows_.size(); ++r)
      for (const auto& t : rows_[r])
        X(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(col++)) = eval_term(t, x);
    return X;
  }

  /// Partial derivative of the model matrix with respect to factor j,
  /// from the monomial exponents.
  Matrix model_matrix_grad(const Point& x, std::size_t j) const {
    Matrix D = Matrix::Zero(static_cast<Eigen::Index>(rows_.size()),
                            static_cast<Eigen::Index>(p_));
    std::size_t col = 0;
    for (std::size_t r = 0; r < rows_.size(); ++r)
      for (const auto& t : rows_[r]) {
        D(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(col++)) =
            eval_term_deriv(t, x, j);
      }
    return D;
  }

private:
  static double eval_term(const Term& t, const Point& x) {
    double v = 1.0;
    for (std::size_t j = 0; j < t.exponents.size(); ++j)
      if (t.exponents[j] > 0) v *= std::pow(x[j], t.exponents[j]);
    return v;
  }

  static double eval_term_deriv(const Term& t, const Point& x, std::size_t j) {
    const unsigned e = t.exponents[j];
    if (e == 0) return 0.0;
    double v = e * std::pow(x[j], e - 1);
    for (std::size_t l = 0; l < t.exponents.size(); ++l)
      if (l != j && t.exponents[l] > 0) v *= std::pow(x[l], t.exponents[l]);
    return v;
  }

  std::vector<std::vector<Term>> rows_;
  std::size_t dim_ = 0;
  std::size_t p_ = 0;
};

namespace detail {

class FormulaLexer {
public:
  FormulaLexer(const std::string& s, const std::string& row_name)
      : s_(s), row_(row_name) {}

  void skip_ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  bool eof() {
    skip_ws();
    return pos_ >= s_.size();
  }

  bool accept(char c) {
    skip_ws();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  char peek() {
    skip_ws();
    return pos_ < s_.size() ? s_[pos_] : '\0';
  }

  std::string ident() {
    skip_ws();
    std::size_t start = pos_;
    while (pos_ < s_.size() &&
           (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_'))
      ++pos_;
    if (start == pos_) fail("expected factor name");
    return s_.substr(start, pos_ - start);
  }

  unsigned uint_lit() {
    skip_ws();
    std::size_t start = pos_;
    while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    if (start == pos_) fail("expected integer exponent");
    return static_cast<unsigned>(std::stoul(s_.substr(start, pos_ - start)));
  }

  [[noreturn]] void fail(const std::string& what) {
    throw ConfigError("formula " + row_ + ": " + what + " at position " +
                      std::to_string(pos_) + " in \"" + s_ + "\"");
  }

private:
  const std::string& s_;
  std::string row_;
  std::size_t pos_ = 0;
};

// term := "1" | factor_pow ("*" factor_pow)* ; factor_pow := IDENT ("^" UINT)?
inline Term parse_term(FormulaLexer& lex, const DesignSpace& space) {
  Term t;
  t.exponents.assign(space.dim(), 0u);
  if (lex.accept('1')) return t;
  for (;;) {
    const std::string name = lex.ident();
    const std::size_t j = space.factor_index(name);
    unsigned e = 1;
    if (lex.accept('^')) {
      e = lex.uint_lit();
      if (e == 0) lex.fail("exponent must be positive");
    }
    t.exponents[j] += e;
    if (!lex.accept('*')) break;
  }
  return t;
}

} // namespace detail

/// Parse per-row formula strings into exponent-vector form. Grammar:
///   row := "0" | term ("+" term)*
///   term := "1" | factor_pow ("*" factor_pow)*
///   factor_pow := IDENT ("^" UINT)?
/// An empty or "0" row yields an all-zero predictor row (MLM only).
inline PredictorFormula parse_formula(const std::vector<std::string>& rows,
                                      const DesignSpace& space) {
  if (rows.empty()) throw ConfigError("formula: no rows given");
  std::vector<std::vector<Term>> parsed;
  parsed.reserve(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const std::string row_name = "row " + std::to_string(r + 1);
    detail::FormulaLexer lex(rows[r], row_name);
    std::vector<Term> terms;
    if (lex.eof()) {
      parsed.push_back(terms);
      continue;
    }
    if (lex.peek() == '0') {
      lex.accept('0');
      if (!lex.eof()) lex.fail("'0' row admits no further terms");
      parsed.push_back(terms);
      continue;
    }
    for (;;) {
      Term t = detail::parse_term(lex, space);
      for (const auto& prev : terms)
        if (prev == t)
          throw ConfigError("formula " + row_name + ": duplicate term in \"" + rows[r] + "\"");
      terms.push_back(std::move(t));
      if (!lex.accept('+')) break;
    }
    if (!lex.eof()) lex.fail("trailing input");
    parsed.push_back(std::move(terms));
  }
  if (rows.size() == 1 && parsed[0].empty())
    throw ConfigError("formula: a GLM formula may not be empty");
  return PredictorFormula(std::move(parsed), space.dim());
}

} // namespace forlion

#endif
