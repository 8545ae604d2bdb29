#pragma once

// Arithmetic expressions in one variable x, used for coefficient fields and
// manufactured solutions in run configurations.
//
// Grammar (loosest binding first):
//   expr    := term (('+' | '-') term)*
//   term    := unary (('*' | '/') unary)*
//   unary   := '-' unary | power
//   power   := primary ('^' unary)?        right-associative
//   primary := number | 'x' | 'pi' | 'e' | name '(' args ')' | '(' expr ')'
// So -x^2 is -(x^2), 2^3^2 is 2^(3^2) and 2^-x is allowed.

#include <cstddef>
#include <string>
#include <vector>

#include "fracvar/errors.hpp"
#include "fracvar/grid.hpp"

namespace fracvar {

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t offset, std::vector<std::string> expected)
      : Error(ErrorKind::parse, what), offset_(offset), expected_(std::move(expected)) {}

  /// Byte offset of the offending token in the input.
  std::size_t offset() const noexcept { return offset_; }
  /// Token classes that would have been accepted there.
  const std::vector<std::string>& expected() const noexcept { return expected_; }

 private:
  std::size_t offset_;
  std::vector<std::string> expected_;
};

struct Expr {
  enum class Kind { number, variable, constant, neg, add, sub, mul, div, pow, call };

  Kind kind = Kind::number;
  double value = 0.0;  // number literal, or the value of a named constant
  std::string name;    // constant or function name
  std::vector<Expr> children;

  friend bool operator==(const Expr&, const Expr&) = default;
};

Expr parse_expression(const std::string& text);

/// Minimal-parenthesis rendering that parses back to an identical tree.
std::string to_string(const Expr& e);

/// Value at x; throws DataError when the result is not finite.
double evaluate(const Expr& e, double x);

/// d/dx with light constant folding. An x-dependent exponent needs a
/// positive constant base (its logarithm folds to a literal); anything else
/// has no derivative inside the grammar and raises ConfigError.
Expr differentiate(const Expr& e);

/// Wraps an expression as a callable.
ScalarField to_field(Expr e);

}  // namespace fracvar
