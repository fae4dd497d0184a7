#include "nch/expression.hpp"

#include <cctype>
#include <cmath>
#include <numbers>
#include <vector>

#include "nch/errors.hpp"

namespace nch {

struct Expression::Node {
  enum class Kind { Number, VarX, VarY, VarT, Neg, Add, Sub, Mul, Div, Pow, Call };
  Kind kind = Kind::Number;
  double value = 0.0;
  double (*fn)(double) = nullptr;
  std::shared_ptr<const Node> lhs;
  std::shared_ptr<const Node> rhs;

  double eval(double x, double y, double t) const {
    switch (kind) {
      case Kind::Number: return value;
      case Kind::VarX: return x;
      case Kind::VarY: return y;
      case Kind::VarT: return t;
      case Kind::Neg: return -lhs->eval(x, y, t);
      case Kind::Add: return lhs->eval(x, y, t) + rhs->eval(x, y, t);
      case Kind::Sub: return lhs->eval(x, y, t) - rhs->eval(x, y, t);
      case Kind::Mul: return lhs->eval(x, y, t) * rhs->eval(x, y, t);
      case Kind::Div: return lhs->eval(x, y, t) / rhs->eval(x, y, t);
      case Kind::Pow: return std::pow(lhs->eval(x, y, t), rhs->eval(x, y, t));
      case Kind::Call: return fn(lhs->eval(x, y, t));
    }
    return 0.0;
  }

  bool uses_t() const {
    if (kind == Kind::VarT) return true;
    return (lhs && lhs->uses_t()) || (rhs && rhs->uses_t());
  }
};

namespace {

using NodePtr = std::shared_ptr<const Expression::Node>;
using Kind = Expression::Node::Kind;

struct Function {
  const char* name;
  double (*fn)(double);
};

const std::vector<Function>& functions() {
  static const std::vector<Function> table = {
      {"sin", [](double v) { return std::sin(v); }},   {"cos", [](double v) { return std::cos(v); }},
      {"tan", [](double v) { return std::tan(v); }},   {"exp", [](double v) { return std::exp(v); }},
      {"log", [](double v) { return std::log(v); }},   {"sqrt", [](double v) { return std::sqrt(v); }},
      {"tanh", [](double v) { return std::tanh(v); }}, {"cosh", [](double v) { return std::cosh(v); }},
      {"sinh", [](double v) { return std::sinh(v); }}, {"abs", [](double v) { return std::abs(v); }},
  };
  return table;
}

NodePtr leaf(Kind k, double v = 0.0) {
  auto n = std::make_shared<Expression::Node>();
  n->kind = k;
  n->value = v;
  return n;
}

NodePtr binary(Kind k, NodePtr a, NodePtr b) {
  auto n = std::make_shared<Expression::Node>();
  n->kind = k;
  n->lhs = std::move(a);
  n->rhs = std::move(b);
  return n;
}

class Parser {
 public:
  explicit Parser(const std::string& s) : s_(s) {}

  NodePtr parse() {
    NodePtr n = expr();
    skip();
    if (pos_ != s_.size()) fail("unexpected '" + std::string(1, s_[pos_]) + "'");
    return n;
  }

 private:
  const std::string& s_;
  std::size_t pos_ = 0;

  [[noreturn]] void fail(const std::string& msg) const {
    throw PreconditionError("expression '" + s_ + "': " + msg + " at position " +
                            std::to_string(pos_));
  }

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

  NodePtr expr() {
    NodePtr n = term();
    for (;;) {
      if (accept('+')) {
        n = binary(Kind::Add, n, term());
      } else if (accept('-')) {
        n = binary(Kind::Sub, n, term());
      } else {
        return n;
      }
    }
  }

  NodePtr term() {
    NodePtr n = unary();
    for (;;) {
      if (accept('*')) {
        n = binary(Kind::Mul, n, unary());
      } else if (accept('/')) {
        n = binary(Kind::Div, n, unary());
      } else {
        return n;
      }
    }
  }

  NodePtr unary() {
    if (accept('-')) return binary(Kind::Neg, unary(), nullptr);
    if (accept('+')) return unary();
    return power();
  }

  NodePtr power() {
    NodePtr base = primary();
    if (accept('^')) return binary(Kind::Pow, base, unary());
    return base;
  }

  NodePtr primary() {
    skip();
    if (pos_ >= s_.size()) fail("unexpected end of input");
    if (accept('(')) {
      NodePtr n = expr();
      if (!accept(')')) fail("expected ')'");
      return n;
    }
    const char c = s_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      const char* begin = s_.c_str() + pos_;
      char* end = nullptr;
      const double v = std::strtod(begin, &end);
      if (end == begin) fail("malformed number");
      pos_ += static_cast<std::size_t>(end - begin);
      return leaf(Kind::Number, v);
    }
    if (std::isalpha(static_cast<unsigned char>(c))) {
      const std::size_t start = pos_;
      while (pos_ < s_.size() &&
             (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) {
        ++pos_;
      }
      const std::string name = s_.substr(start, pos_ - start);
      if (name == "x") return leaf(Kind::VarX);
      if (name == "y") return leaf(Kind::VarY);
      if (name == "t") return leaf(Kind::VarT);
      if (name == "pi") return leaf(Kind::Number, std::numbers::pi);
      for (const auto& f : functions()) {
        if (name == f.name) {
          if (!accept('(')) fail("expected '(' after " + name);
          auto n = std::make_shared<Expression::Node>();
          n->kind = Kind::Call;
          n->fn = f.fn;
          n->lhs = expr();
          if (!accept(')')) fail("expected ')'");
          return n;
        }
      }
      pos_ = start;
      fail("unknown identifier '" + name + "'");
    }
    fail("unexpected '" + std::string(1, c) + "'");
  }
};

}  // namespace

Expression::Expression(const std::string& text) : text_(text), root_(Parser(text_).parse()) {}
Expression::~Expression() = default;
Expression::Expression(const Expression&) = default;
Expression& Expression::operator=(const Expression&) = default;
Expression::Expression(Expression&&) noexcept = default;
Expression& Expression::operator=(Expression&&) noexcept = default;

double Expression::operator()(double x, double y, double t) const { return root_->eval(x, y, t); }

bool Expression::time_independent() const noexcept { return !root_->uses_t(); }

}  // namespace nch
