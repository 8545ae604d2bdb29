#include "fracvar/expression.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <memory>
#include <sstream>

namespace fracvar {
namespace {

using Kind = Expr::Kind;

struct FunctionInfo {
  const char* name;
  std::size_t arity;
};

constexpr FunctionInfo kFunctions[] = {
    {"sin", 1}, {"cos", 1}, {"exp", 1}, {"sqrt", 1}, {"abs", 1}, {"pow", 2},
};

const FunctionInfo* find_function(const std::string& name) {
  for (const auto& f : kFunctions)
    if (name == f.name) return &f;
  return nullptr;
}

Expr number(double v) { return Expr{Kind::number, v, {}, {}}; }
Expr node(Kind k, std::vector<Expr> children) { return Expr{k, 0.0, {}, std::move(children)}; }
Expr call(const std::string& name, std::vector<Expr> args) { return Expr{Kind::call, 0.0, name, std::move(args)}; }

const std::vector<std::string> kPrimary = {"number", "identifier", "'('", "'-'"};

class Parser {
 public:
  explicit Parser(const std::string& text) : s_(text) {}

  Expr parse() {
    Expr e = expr();
    skip();
    if (pos_ < s_.size()) fail("unexpected input", {"operator", "end of input"});
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& what, std::vector<std::string> expected) const {
    std::ostringstream msg;
    msg << "syntax error at offset " << pos_ << ": " << what;
    if (!expected.empty()) {
      msg << " [accepted here: ";
      for (std::size_t i = 0; i < expected.size(); ++i) msg << (i ? ", " : "") << expected[i];
      msg << "]";
    }
    throw ParseError(msg.str(), pos_, std::move(expected));
  }

  void skip() {
    while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\t' || s_[pos_] == '\n' || s_[pos_] == '\r')) ++pos_;
  }

  bool accept(char c) {
    skip();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  Expr expr() {
    Expr left = term();
    while (true) {
      if (accept('+')) left = node(Kind::add, {std::move(left), term()});
      else if (accept('-')) left = node(Kind::sub, {std::move(left), term()});
      else return left;
    }
  }

  Expr term() {
    Expr left = unary();
    while (true) {
      if (accept('*')) left = node(Kind::mul, {std::move(left), unary()});
      else if (accept('/')) left = node(Kind::div, {std::move(left), unary()});
      else return left;
    }
  }

  Expr unary() {
    if (accept('-')) return node(Kind::neg, {unary()});
    return power();
  }

  Expr power() {
    Expr base = primary();
    if (accept('^')) return node(Kind::pow, {std::move(base), unary()});
    return base;
  }

  Expr primary() {
    skip();
    if (pos_ >= s_.size()) fail("expected primary expression, found end of input", kPrimary);
    const char c = s_[pos_];
    if (c == '(') {
      ++pos_;
      Expr inner = expr();
      if (!accept(')')) fail("unbalanced parenthesis", {"')'"});
      return inner;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return literal();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return identifier();
    fail("expected primary expression", kPrimary);
  }

  Expr literal() {
    const std::size_t start = pos_;
    auto digits = [&] {
      std::size_t n = 0;
      while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_, ++n;
      return n;
    };
    std::size_t count = digits();
    if (pos_ < s_.size() && s_[pos_] == '.') {
      ++pos_;
      count += digits();
    }
    if (count == 0) {
      pos_ = start;
      fail("malformed number", {"digit"});
    }
    // An exponent only when digits follow, so "2e" stays a syntax error
    // rather than silently swallowing the constant e.
    if (pos_ < s_.size() && (s_[pos_] == 'e' || s_[pos_] == 'E')) {
      std::size_t look = pos_ + 1;
      if (look < s_.size() && (s_[look] == '+' || s_[look] == '-')) ++look;
      if (look < s_.size() && std::isdigit(static_cast<unsigned char>(s_[look]))) {
        pos_ = look;
        digits();
      }
    }
    double v = 0.0;
    const auto res = std::from_chars(s_.data() + start, s_.data() + pos_, v);
    if (res.ec != std::errc() || !std::isfinite(v)) {
      pos_ = start;
      fail("number out of range", {"finite number"});
    }
    return number(v);
  }

  Expr identifier() {
    const std::size_t start = pos_;
    while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) ++pos_;
    const std::string name = s_.substr(start, pos_ - start);
    if (name == "x") return Expr{Kind::variable, 0.0, "x", {}};
    if (name == "pi") return Expr{Kind::constant, M_PI, "pi", {}};
    if (name == "e") return Expr{Kind::constant, M_E, "e", {}};
    const FunctionInfo* f = find_function(name);
    if (f == nullptr) {
      pos_ = start;
      fail("unknown identifier '" + name + "'", {"x", "pi", "e", "sin", "cos", "exp", "sqrt", "abs", "pow"});
    }
    if (!accept('(')) fail("function '" + name + "' needs an argument list", {"'('"});
    // Arity is enforced token by token so the error points at the separator.
    std::vector<Expr> args;
    args.push_back(expr());
    while (args.size() < f->arity) {
      if (!accept(',')) {
        skip();
        std::ostringstream msg;
        msg << "function '" << name << "' takes " << f->arity << " arguments, got " << args.size();
        fail(msg.str(), {"','"});
      }
      args.push_back(expr());
    }
    if (!accept(')')) {
      skip();
      std::ostringstream msg;
      msg << "function '" << name << "' takes " << f->arity << " argument" << (f->arity == 1 ? "" : "s");
      fail(pos_ < s_.size() && s_[pos_] == ',' ? msg.str() : "unterminated argument list", {"')'"});
    }
    return call(name, std::move(args));
  }

  const std::string& s_;
  std::size_t pos_ = 0;
};

int precedence(const Expr& e) {
  switch (e.kind) {
    case Kind::add:
    case Kind::sub: return 1;
    case Kind::mul:
    case Kind::div: return 2;
    case Kind::neg: return 3;
    case Kind::pow: return 4;
    default: return 5;
  }
}

const char* symbol(Kind k) {
  switch (k) {
    case Kind::add: return " + ";
    case Kind::sub: return " - ";
    case Kind::mul: return "*";
    case Kind::div: return "/";
    default: return "^";
  }
}

std::string wrap(const Expr& e, bool parens) {
  std::string s = to_string(e);
  return parens ? "(" + s + ")" : s;
}

bool is_number(const Expr& e, double v) { return e.kind == Kind::number && e.value == v; }
bool is_const(const Expr& e) {
  if (e.kind == Kind::variable) return false;
  for (const auto& c : e.children)
    if (!is_const(c)) return false;
  return true;
}

// Constructors with constant folding of the trivial cases.
Expr add(Expr a, Expr b) {
  if (is_number(a, 0.0)) return b;
  if (is_number(b, 0.0)) return a;
  return node(Kind::add, {std::move(a), std::move(b)});
}
Expr neg(Expr a) {
  if (a.kind == Kind::number) return number(-a.value);
  if (a.kind == Kind::neg) return std::move(a.children[0]);
  return node(Kind::neg, {std::move(a)});
}
Expr sub(Expr a, Expr b) {
  if (is_number(b, 0.0)) return a;
  if (is_number(a, 0.0)) return neg(std::move(b));
  return node(Kind::sub, {std::move(a), std::move(b)});
}
Expr mul(Expr a, Expr b) {
  if (is_number(a, 0.0) || is_number(b, 0.0)) return number(0.0);
  if (is_number(a, 1.0)) return b;
  if (is_number(b, 1.0)) return a;
  if (a.kind == Kind::number && b.kind == Kind::number) return number(a.value * b.value);
  return node(Kind::mul, {std::move(a), std::move(b)});
}
Expr div(Expr a, Expr b) {
  if (is_number(a, 0.0)) return number(0.0);
  if (is_number(b, 1.0)) return a;
  return node(Kind::div, {std::move(a), std::move(b)});
}
Expr pow(Expr a, Expr b) {
  if (is_number(b, 1.0)) return a;
  if (is_number(b, 0.0)) return number(1.0);
  return node(Kind::pow, {std::move(a), std::move(b)});
}

}  // namespace

Expr parse_expression(const std::string& text) { return Parser(text).parse(); }

std::string to_string(const Expr& e) {
  switch (e.kind) {
    case Kind::number: {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.17g", e.value);
      // Folded negative literals print as a negated group so that the text
      // still parses under any operator.
      return std::signbit(e.value) ? "(" + std::string(buf) + ")" : std::string(buf);
    }
    case Kind::variable:
    case Kind::constant: return e.name;
    case Kind::neg: return "-" + wrap(e.children[0], precedence(e.children[0]) < 3);
    case Kind::call: {
      std::string s = e.name + "(";
      for (std::size_t i = 0; i < e.children.size(); ++i) s += (i ? ", " : "") + to_string(e.children[i]);
      return s + ")";
    }
    case Kind::pow:
      // Left operand binds tighter than '^'; the right one is parsed as a unary.
      return wrap(e.children[0], precedence(e.children[0]) <= 4) + "^" +
             wrap(e.children[1], precedence(e.children[1]) < 3);
    default: {
      const int p = precedence(e);
      return wrap(e.children[0], precedence(e.children[0]) < p) + symbol(e.kind) +
             wrap(e.children[1], precedence(e.children[1]) <= p);
    }
  }
}

namespace {

double eval(const Expr& e, double x) {
  switch (e.kind) {
    case Kind::number:
    case Kind::constant: return e.value;
    case Kind::variable: return x;
    case Kind::neg: return -eval(e.children[0], x);
    case Kind::add: return eval(e.children[0], x) + eval(e.children[1], x);
    case Kind::sub: return eval(e.children[0], x) - eval(e.children[1], x);
    case Kind::mul: return eval(e.children[0], x) * eval(e.children[1], x);
    case Kind::div: return eval(e.children[0], x) / eval(e.children[1], x);
    case Kind::pow: return std::pow(eval(e.children[0], x), eval(e.children[1], x));
    case Kind::call: {
      const double a = eval(e.children[0], x);
      if (e.name == "sin") return std::sin(a);
      if (e.name == "cos") return std::cos(a);
      if (e.name == "exp") return std::exp(a);
      if (e.name == "sqrt") return std::sqrt(a);
      if (e.name == "abs") return std::abs(a);
      return std::pow(a, eval(e.children[1], x));
    }
  }
  return 0.0;
}

}  // namespace

double evaluate(const Expr& e, double x) {
  const double v = eval(e, x);
  if (!std::isfinite(v)) {
    std::ostringstream msg;
    msg << "expression '" << to_string(e) << "' is not finite at x = " << x;
    throw DataError(msg.str());
  }
  return v;
}

Expr differentiate(const Expr& e) {
  switch (e.kind) {
    case Kind::number:
    case Kind::constant: return number(0.0);
    case Kind::variable: return number(1.0);
    case Kind::neg: return neg(differentiate(e.children[0]));
    case Kind::add: return add(differentiate(e.children[0]), differentiate(e.children[1]));
    case Kind::sub: return sub(differentiate(e.children[0]), differentiate(e.children[1]));
    case Kind::mul: {
      const Expr& u = e.children[0];
      const Expr& v = e.children[1];
      return add(mul(differentiate(u), v), mul(u, differentiate(v)));
    }
    case Kind::div: {
      const Expr& u = e.children[0];
      const Expr& v = e.children[1];
      return div(sub(mul(differentiate(u), v), mul(u, differentiate(v))), pow(v, number(2.0)));
    }
    case Kind::pow:
    case Kind::call:
      if (e.kind == Kind::pow || e.name == "pow") {
        const Expr& u = e.children[0];
        const Expr& k = e.children[1];
        if (is_const(k)) return mul(mul(k, pow(u, sub(k, number(1.0)))), differentiate(u));
        // b^g with b free of x: ln b folds to a literal.
        if (is_const(u)) {
          const double b = eval(u, 0.0);
          if (b > 0.0) return mul(mul(e, number(std::log(b))), differentiate(k));
        }
        throw ConfigError("cannot differentiate '" + to_string(e) + "': exponent depends on x and the base is not a positive constant");
      } else {
        const Expr& u = e.children[0];
        const Expr du = differentiate(u);
        if (e.name == "sin") return mul(call("cos", {u}), du);
        if (e.name == "cos") return mul(neg(call("sin", {u})), du);
        if (e.name == "exp") return mul(e, du);
        if (e.name == "sqrt") return div(du, mul(number(2.0), e));
        return mul(div(u, e), du);  // abs
      }
  }
  return number(0.0);
}

ScalarField to_field(Expr e) {
  auto shared = std::make_shared<const Expr>(std::move(e));
  return [shared](double x) { return evaluate(*shared, x); };
}

}  // namespace fracvar
