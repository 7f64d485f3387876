#pragma once

#include "corrugator/numeric.hpp"
#include "corrugator/taylor.hpp"

#include <memory>
#include <string>
#include <string_view>

namespace corrugator {

struct ParseError : std::runtime_error {
  ParseError(std::size_t offset, const std::string& what)
      : std::runtime_error(what + " at offset " + std::to_string(offset)), offset(offset) {}
  std::size_t offset;
};

struct SingularityError : NumericError {
  using NumericError::NumericError;
};

enum class Op { Num, X, Y, Add, Sub, Mul, Div, Neg, Pow, Sin, Cos, Exp, Sqrt };

struct ExprNode;

// Immutable expression tree over (x, y). Literals keep their decimal text so
// they are converted at the evaluation precision.
class Expr {
 public:
  Expr() = default;  // the constant 0
  explicit Expr(std::shared_ptr<const ExprNode> node) : node_(std::move(node)) {}

  static Expr number(const std::string& literal);
  static Expr number(double v);
  static Expr x();
  static Expr y();

  const ExprNode& node() const { return node_ ? *node_ : zero_node(); }
  bool is_constant() const;

  friend Expr operator+(const Expr& a, const Expr& b);
  friend Expr operator-(const Expr& a, const Expr& b);
  friend Expr operator*(const Expr& a, const Expr& b);
  friend Expr operator/(const Expr& a, const Expr& b);
  friend Expr operator-(const Expr& a);

 private:
  static const ExprNode& zero_node();
  std::shared_ptr<const ExprNode> node_;
};

struct ExprNode {
  Op op = Op::Num;
  std::string literal;  // Num
  double number = 0.0;  // Num, parsed once for the double path
  int exponent = 0;     // Pow
  double floor = 0.0;   // Sqrt: argument must stay strictly above this
  Expr a, b;
};

Expr pow(const Expr& e, int exponent);
Expr sin(const Expr& e);
Expr cos(const Expr& e);
Expr exp(const Expr& e);
Expr sqrt(const Expr& e, double floor = 0.0);

// Grammar:
//   expr   := term (('+'|'-') term)*
//   term   := unary (('*'|'/') unary)*
//   unary  := '-' unary | factor
//   factor := base ('^' integer)?
//   base   := number | 'x' | 'y' | func '(' expr ')' | '(' expr ')'
//   func   := 'sin' | 'cos' | 'exp' | 'sqrt'
Expr parse(std::string_view text);

// Fully parenthesized text that parses back to an equivalent tree.
std::string to_string(const Expr& e);

// Taylor expansion of e at p up to `order`.
template <class T>
Taylor2<T> eval(const Expr& e, const Vec2<T>& p, int order);

template <class T>
T eval_value(const Expr& e, const Vec2<T>& p) {
  return eval(e, p, 0).value();
}

// Value and derivatives up to `order` (0..3).
template <class T>
Jet<T> eval_jet(const Expr& e, const Vec2<T>& p, int order);

}  // namespace corrugator
