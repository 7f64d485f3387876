#include "corrugator/expr.hpp"

#include <cctype>
#include <charconv>
#include <limits>
#include <sstream>

namespace corrugator {

namespace {

Expr make(Op op, Expr a = Expr(), Expr b = Expr()) {
  auto n = std::make_shared<ExprNode>();
  n->op = op;
  n->a = std::move(a);
  n->b = std::move(b);
  return Expr(std::move(n));
}

class Parser {
 public:
  explicit Parser(std::string_view s) : s_(s) {}

  Expr run() {
    Expr e = expr();
    skip();
    if (pos_ != s_.size()) throw ParseError(pos_, "unexpected character '" + std::string(1, s_[pos_]) + "'");
    return e;
  }

 private:
  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  bool accept(char c) {
    skip();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }
  void expect(char c) {
    if (!accept(c)) {
      if (pos_ >= s_.size()) throw ParseError(pos_, std::string("expected '") + c + "' but input ended");
      throw ParseError(pos_, std::string("expected '") + c + "'");
    }
  }

  Expr expr() {
    Expr e = term();
    for (;;) {
      if (accept('+'))
        e = e + term();
      else if (accept('-'))
        e = e - term();
      else
        return e;
    }
  }

  Expr term() {
    Expr e = unary();
    for (;;) {
      if (accept('*'))
        e = e * unary();
      else if (accept('/'))
        e = e / unary();
      else
        return e;
    }
  }

  Expr unary() {
    if (accept('-')) return -unary();
    return factor();
  }

  Expr factor() {
    Expr b = base();
    if (accept('^')) {
      skip();
      const std::size_t start = pos_;
      bool negative = false;
      if (pos_ < s_.size() && s_[pos_] == '-') {
        negative = true;
        ++pos_;
      }
      const std::size_t digits_start = pos_;
      while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
      if (pos_ == digits_start) throw ParseError(start, "integer exponent expected");
      int value = 0;
      auto [ptr, ec] = std::from_chars(s_.data() + digits_start, s_.data() + pos_, value);
      if (ec != std::errc()) throw ParseError(start, "exponent out of range");
      return pow(b, negative ? -value : value);
    }
    return b;
  }

  Expr base() {
    skip();
    if (pos_ >= s_.size()) throw ParseError(pos_, "unexpected end of input");
    const char c = s_[pos_];
    if (c == '(') {
      ++pos_;
      Expr e = expr();
      expect(')');
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c))) {
      const std::size_t start = pos_;
      while (pos_ < s_.size() && std::isalnum(static_cast<unsigned char>(s_[pos_]))) ++pos_;
      const std::string_view id = s_.substr(start, pos_ - start);
      if (id == "x") return Expr::x();
      if (id == "y") return Expr::y();
      Op op;
      if (id == "sin")
        op = Op::Sin;
      else if (id == "cos")
        op = Op::Cos;
      else if (id == "exp")
        op = Op::Exp;
      else if (id == "sqrt")
        op = Op::Sqrt;
      else
        throw ParseError(start, "unknown identifier '" + std::string(id) + "'");
      expect('(');
      Expr arg = expr();
      expect(')');
      return op == Op::Sqrt ? sqrt(arg) : make(op, arg);
    }
    throw ParseError(pos_, "unexpected character '" + std::string(1, c) + "'");
  }

  Expr number() {
    const std::size_t start = pos_;
    auto digits = [&] {
      const std::size_t b = pos_;
      while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
      return pos_ - b;
    };
    std::size_t n = digits();
    if (pos_ < s_.size() && s_[pos_] == '.') {
      ++pos_;
      n += digits();
    }
    if (n == 0) throw ParseError(start, "malformed number");
    if (pos_ < s_.size() && (s_[pos_] == 'e' || s_[pos_] == 'E')) {
      const std::size_t save = pos_;
      ++pos_;
      if (pos_ < s_.size() && (s_[pos_] == '+' || s_[pos_] == '-')) ++pos_;
      if (digits() == 0) pos_ = save;
    }
    return Expr::number(std::string(s_.substr(start, pos_ - start)));
  }

  std::string_view s_;
  std::size_t pos_ = 0;
};

void print(const Expr& e, std::ostringstream& os) {
  const ExprNode& n = e.node();
  switch (n.op) {
    case Op::Num:
      os << n.literal;
      return;
    case Op::X:
      os << 'x';
      return;
    case Op::Y:
      os << 'y';
      return;
    case Op::Add:
    case Op::Sub:
    case Op::Mul:
    case Op::Div: {
      const char sym = n.op == Op::Add ? '+' : n.op == Op::Sub ? '-' : n.op == Op::Mul ? '*' : '/';
      os << '(';
      print(n.a, os);
      os << ' ' << sym << ' ';
      print(n.b, os);
      os << ')';
      return;
    }
    case Op::Neg:
      os << "(-";
      print(n.a, os);
      os << ')';
      return;
    case Op::Pow:
      os << '(';
      print(n.a, os);
      os << ")^" << n.exponent;
      return;
    case Op::Sin:
    case Op::Cos:
    case Op::Exp:
    case Op::Sqrt:
      os << (n.op == Op::Sin ? "sin(" : n.op == Op::Cos ? "cos(" : n.op == Op::Exp ? "exp(" : "sqrt(");
      print(n.a, os);
      os << ')';
      return;
  }
}

template <class T>
T literal_value(const ExprNode& n) {
  if constexpr (std::is_same_v<T, double>) {
    return n.number;
  } else {
    return T(n.literal);
  }
}

}  // namespace

const ExprNode& Expr::zero_node() {
  static const ExprNode zero{Op::Num, "0", 0.0, 0, 0.0, {}, {}};
  return zero;
}

Expr Expr::number(const std::string& literal) {
  auto n = std::make_shared<ExprNode>();
  n->op = Op::Num;
  n->literal = literal;
  n->number = std::stod(literal);
  return Expr(std::move(n));
}

Expr Expr::number(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  std::string s = os.str();
  if (v < 0) return -number(s.substr(1));
  return number(s);
}

Expr Expr::x() { return make(Op::X); }
Expr Expr::y() { return make(Op::Y); }

bool Expr::is_constant() const {
  const ExprNode& n = node();
  switch (n.op) {
    case Op::Num:
      return true;
    case Op::X:
    case Op::Y:
      return false;
    case Op::Add:
    case Op::Sub:
    case Op::Mul:
    case Op::Div:
      return n.a.is_constant() && n.b.is_constant();
    default:
      return n.a.is_constant();
  }
}

Expr operator+(const Expr& a, const Expr& b) { return make(Op::Add, a, b); }
Expr operator-(const Expr& a, const Expr& b) { return make(Op::Sub, a, b); }
Expr operator*(const Expr& a, const Expr& b) { return make(Op::Mul, a, b); }
Expr operator/(const Expr& a, const Expr& b) { return make(Op::Div, a, b); }
Expr operator-(const Expr& a) { return make(Op::Neg, a); }

Expr pow(const Expr& e, int exponent) {
  auto n = std::make_shared<ExprNode>();
  n->op = Op::Pow;
  n->exponent = exponent;
  n->a = e;
  return Expr(std::move(n));
}
Expr sin(const Expr& e) { return make(Op::Sin, e); }
Expr cos(const Expr& e) { return make(Op::Cos, e); }
Expr exp(const Expr& e) { return make(Op::Exp, e); }
Expr sqrt(const Expr& e, double floor) {
  auto n = std::make_shared<ExprNode>();
  n->op = Op::Sqrt;
  n->floor = floor;
  n->a = e;
  return Expr(std::move(n));
}

Expr parse(std::string_view text) { return Parser(text).run(); }

std::string to_string(const Expr& e) {
  std::ostringstream os;
  print(e, os);
  return os.str();
}

template <class T>
Taylor2<T> eval(const Expr& e, const Vec2<T>& p, int order) {
  const ExprNode& n = e.node();
  switch (n.op) {
    case Op::Num:
      return Taylor2<T>::constant(order, literal_value<T>(n));
    case Op::X:
      return Taylor2<T>::variable(order, p.x, 0);
    case Op::Y:
      return Taylor2<T>::variable(order, p.y, 1);
    case Op::Add:
      return eval(n.a, p, order) + eval(n.b, p, order);
    case Op::Sub:
      return eval(n.a, p, order) - eval(n.b, p, order);
    case Op::Mul:
      return eval(n.a, p, order) * eval(n.b, p, order);
    case Op::Div:
      return eval(n.a, p, order) / eval(n.b, p, order);
    case Op::Neg:
      return -eval(n.a, p, order);
    case Op::Pow:
      return pow(eval(n.a, p, order), n.exponent);
    case Op::Sin:
      return sin(eval(n.a, p, order));
    case Op::Cos:
      return cos(eval(n.a, p, order));
    case Op::Exp:
      return exp(eval(n.a, p, order));
    case Op::Sqrt: {
      Taylor2<T> u = eval(n.a, p, order);
      if (!(u.value() > T(n.floor)) || !(u.value() > 0)) {
        std::ostringstream os;
        os << "sqrt argument " << format_real(u.value(), 17) << " not above floor " << n.floor
           << " at (" << format_real(p.x, 17) << ", " << format_real(p.y, 17) << ")";
        throw SingularityError(os.str());
      }
      return sqrt(u, T(n.floor));
    }
  }
  throw std::logic_error("unhandled expression node");
}

template <class T>
Jet<T> eval_jet(const Expr& e, const Vec2<T>& p, int order) {
  if (order < 0 || order > 3) throw std::invalid_argument("jet order must be in 0..3");
  return to_jet(eval(e, p, order), order);
}

template Taylor2<double> eval<double>(const Expr&, const Vec2<double>&, int);
template Taylor2<Real> eval<Real>(const Expr&, const Vec2<Real>&, int);
template Jet<double> eval_jet<double>(const Expr&, const Vec2<double>&, int);
template Jet<Real> eval_jet<Real>(const Expr&, const Vec2<Real>&, int);

}  // namespace corrugator
