#pragma once

#include <memory>
#include <string>

namespace nch {

/// Arithmetic expression over the variables x, y, t and the constant pi.
/// Grammar: + - * / ^ (right-associative), unary minus, parentheses, numbers
/// and the functions sin cos tan exp log sqrt tanh cosh sinh abs.
class Expression {
 public:
  /// Throws PreconditionError with the offending position on malformed input.
  explicit Expression(const std::string& text);
  ~Expression();
  Expression(const Expression&);
  Expression& operator=(const Expression&);
  Expression(Expression&&) noexcept;
  Expression& operator=(Expression&&) noexcept;

  double operator()(double x, double y, double t) const;
  const std::string& text() const noexcept { return text_; }
  /// True when the expression does not reference t.
  bool time_independent() const noexcept;

  struct Node;

 private:
  std::string text_;
  std::shared_ptr<const Node> root_;
};

}  // namespace nch
