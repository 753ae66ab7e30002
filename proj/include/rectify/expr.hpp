/**
 * @file expr.hpp
 * @brief Arithmetic expressions over (t, x1..xn): parsing, evaluation, printing,
 *        symbolic differentiation and substitution.
 *
 * Grammar:
 *   expr   := term (("+" | "-") term)*
 *   term   := factor (("*" | "/") factor)*
 *   factor := atom ("^" factor)?
 *   atom   := number | "t" | "x" digits | "pi" | "e" | func "(" expr ")" | "(" expr ")" | "-" atom
 *   func   := sin | cos | tan | exp | log | sqrt | abs | tanh | sign
 *
 * Spatial variables are 1-based in text (x1..xn) and 0-based in the API.
 * Expressions are immutable; nodes are shared between expressions built from one another.
 */
#pragma once

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <memory>
#include <numbers>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "rectify/errors.hpp"
#include "rectify/geometry.hpp"

namespace rectify {

/// Differentiation / substitution target: the time variable or a 0-based spatial index.
class Variable {
 public:
  static constexpr Variable time() noexcept { return Variable(true, 0); }
  static constexpr Variable space(std::size_t index) noexcept { return Variable(false, index); }

  [[nodiscard]] constexpr bool is_time() const noexcept { return time_; }
  [[nodiscard]] constexpr std::size_t index() const noexcept { return index_; }

  friend constexpr bool operator==(const Variable&, const Variable&) = default;

 private:
  constexpr Variable(bool is_time, std::size_t index) : time_(is_time), index_(index) {}
  bool time_;
  std::size_t index_;
};

enum class NodeKind { Number, Time, Space, Negate, Add, Subtract, Multiply, Divide, Power, Call };

enum class Function { Sin, Cos, Tan, Exp, Log, Sqrt, Abs, Tanh, Sign };

namespace detail {

struct Node;
using NodePtr = std::shared_ptr<const Node>;

struct Node {
  NodeKind kind = NodeKind::Number;
  double value = 0.0;       // Number
  std::size_t index = 0;    // Space
  Function func = Function::Sin;  // Call
  NodePtr lhs;              // unary operand / left operand / call argument
  NodePtr rhs;
};

inline constexpr std::pair<std::string_view, Function> kFunctionNames[] = {
    {"sin", Function::Sin},   {"cos", Function::Cos}, {"tan", Function::Tan},
    {"exp", Function::Exp},   {"log", Function::Log}, {"sqrt", Function::Sqrt},
    {"abs", Function::Abs},   {"tanh", Function::Tanh}, {"sign", Function::Sign},
};

[[nodiscard]] inline std::string_view function_name(Function f) {
  for (const auto& [name, fn] : kFunctionNames) {
    if (fn == f) {
      return name;
    }
  }
  return "?";
}

[[nodiscard]] inline NodePtr number(double v) {
  auto n = std::make_shared<Node>();
  n->kind = NodeKind::Number;
  n->value = v;
  return n;
}

[[nodiscard]] inline NodePtr time_var() {
  auto n = std::make_shared<Node>();
  n->kind = NodeKind::Time;
  return n;
}

[[nodiscard]] inline NodePtr space_var(std::size_t i) {
  auto n = std::make_shared<Node>();
  n->kind = NodeKind::Space;
  n->index = i;
  return n;
}

// Raw constructors: no folding. The parser uses these so that printing round-trips.
[[nodiscard]] inline NodePtr raw_unary(NodeKind kind, NodePtr a, Function f = Function::Sin) {
  auto n = std::make_shared<Node>();
  n->kind = kind;
  n->func = f;
  n->lhs = std::move(a);
  return n;
}

[[nodiscard]] inline NodePtr raw_binary(NodeKind kind, NodePtr a, NodePtr b) {
  auto n = std::make_shared<Node>();
  n->kind = kind;
  n->lhs = std::move(a);
  n->rhs = std::move(b);
  return n;
}

[[nodiscard]] inline bool is_number(const NodePtr& n, double v) { return n->kind == NodeKind::Number && n->value == v; }
[[nodiscard]] inline bool is_number(const NodePtr& n) { return n->kind == NodeKind::Number; }

[[nodiscard]] inline double apply_function(Function f, double a) {
  switch (f) {
    case Function::Sin: return std::sin(a);
    case Function::Cos: return std::cos(a);
    case Function::Tan: return std::tan(a);
    case Function::Exp: return std::exp(a);
    case Function::Log:
      if (!(a > 0.0)) {
        throw EvalError("log of non-positive value");
      }
      return std::log(a);
    case Function::Sqrt:
      if (a < 0.0) {
        throw EvalError("sqrt of negative value");
      }
      return std::sqrt(a);
    case Function::Abs: return std::abs(a);
    case Function::Tanh: return std::tanh(a);
    case Function::Sign: return a > 0.0 ? 1.0 : (a < 0.0 ? -1.0 : 0.0);
  }
  return 0.0;
}

[[nodiscard]] inline double apply_binary(NodeKind kind, double a, double b) {
  switch (kind) {
    case NodeKind::Add: return a + b;
    case NodeKind::Subtract: return a - b;
    case NodeKind::Multiply: return a * b;
    case NodeKind::Divide:
      if (b == 0.0) {
        throw EvalError("division by zero");
      }
      return a / b;
    case NodeKind::Power: return std::pow(a, b);
    default: return 0.0;
  }
}

/// Fold when the result is an ordinary finite number; otherwise keep the node.
[[nodiscard]] inline bool try_fold_binary(NodeKind kind, double a, double b, double& out) {
  try {
    out = apply_binary(kind, a, b);
  } catch (const EvalError&) {
    return false;
  }
  return std::isfinite(out);
}

// Folding constructors used by differentiate/substitute.
[[nodiscard]] inline NodePtr neg(NodePtr a) {
  if (is_number(a)) {
    return number(-a->value);
  }
  if (a->kind == NodeKind::Negate) {
    return a->lhs;
  }
  return raw_unary(NodeKind::Negate, std::move(a));
}

[[nodiscard]] inline NodePtr add(NodePtr a, NodePtr b) {
  double v = 0.0;
  if (is_number(a) && is_number(b) && try_fold_binary(NodeKind::Add, a->value, b->value, v)) {
    return number(v);
  }
  if (is_number(a, 0.0)) {
    return b;
  }
  if (is_number(b, 0.0)) {
    return a;
  }
  return raw_binary(NodeKind::Add, std::move(a), std::move(b));
}

[[nodiscard]] inline NodePtr sub(NodePtr a, NodePtr b) {
  double v = 0.0;
  if (is_number(a) && is_number(b) && try_fold_binary(NodeKind::Subtract, a->value, b->value, v)) {
    return number(v);
  }
  if (is_number(b, 0.0)) {
    return a;
  }
  if (is_number(a, 0.0)) {
    return neg(std::move(b));
  }
  return raw_binary(NodeKind::Subtract, std::move(a), std::move(b));
}

[[nodiscard]] inline NodePtr mul(NodePtr a, NodePtr b) {
  double v = 0.0;
  if (is_number(a) && is_number(b) && try_fold_binary(NodeKind::Multiply, a->value, b->value, v)) {
    return number(v);
  }
  if (is_number(a, 0.0) || is_number(b, 0.0)) {
    return number(0.0);
  }
  if (is_number(a, 1.0)) {
    return b;
  }
  if (is_number(b, 1.0)) {
    return a;
  }
  return raw_binary(NodeKind::Multiply, std::move(a), std::move(b));
}

[[nodiscard]] inline NodePtr div(NodePtr a, NodePtr b) {
  double v = 0.0;
  if (is_number(a) && is_number(b) && try_fold_binary(NodeKind::Divide, a->value, b->value, v)) {
    return number(v);
  }
  if (is_number(a, 0.0)) {
    return number(0.0);
  }
  if (is_number(b, 1.0)) {
    return a;
  }
  return raw_binary(NodeKind::Divide, std::move(a), std::move(b));
}

[[nodiscard]] inline NodePtr pow(NodePtr a, NodePtr b) {
  double v = 0.0;
  if (is_number(a) && is_number(b) && try_fold_binary(NodeKind::Power, a->value, b->value, v)) {
    return number(v);
  }
  if (is_number(b, 1.0)) {
    return a;
  }
  if (is_number(b, 0.0)) {
    return number(1.0);
  }
  return raw_binary(NodeKind::Power, std::move(a), std::move(b));
}

[[nodiscard]] inline NodePtr call(Function f, NodePtr a) {
  if (is_number(a)) {
    try {
      const double v = apply_function(f, a->value);
      if (std::isfinite(v)) {
        return number(v);
      }
    } catch (const EvalError&) {
    }
  }
  return raw_unary(NodeKind::Call, std::move(a), f);
}

[[nodiscard]] inline double eval_node(const Node& n, double t, std::span<const double> x) {
  switch (n.kind) {
    case NodeKind::Number: return n.value;
    case NodeKind::Time: return t;
    case NodeKind::Space: return x[n.index];
    case NodeKind::Negate: return -eval_node(*n.lhs, t, x);
    case NodeKind::Call: return apply_function(n.func, eval_node(*n.lhs, t, x));
    default: return apply_binary(n.kind, eval_node(*n.lhs, t, x), eval_node(*n.rhs, t, x));
  }
}

[[nodiscard]] inline bool depends_on(const Node& n, Variable v) {
  switch (n.kind) {
    case NodeKind::Number: return false;
    case NodeKind::Time: return v.is_time();
    case NodeKind::Space: return !v.is_time() && n.index == v.index();
    case NodeKind::Negate:
    case NodeKind::Call: return depends_on(*n.lhs, v);
    default: return depends_on(*n.lhs, v) || depends_on(*n.rhs, v);
  }
}

[[nodiscard]] inline std::size_t max_space_index_plus_one(const Node& n) {
  switch (n.kind) {
    case NodeKind::Number:
    case NodeKind::Time: return 0;
    case NodeKind::Space: return n.index + 1;
    case NodeKind::Negate:
    case NodeKind::Call: return max_space_index_plus_one(*n.lhs);
    default: return std::max(max_space_index_plus_one(*n.lhs), max_space_index_plus_one(*n.rhs));
  }
}

[[nodiscard]] inline bool structurally_equal(const Node& a, const Node& b) {
  if (a.kind != b.kind) {
    return false;
  }
  switch (a.kind) {
    case NodeKind::Number: return a.value == b.value;
    case NodeKind::Time: return true;
    case NodeKind::Space: return a.index == b.index;
    case NodeKind::Negate: return structurally_equal(*a.lhs, *b.lhs);
    case NodeKind::Call: return a.func == b.func && structurally_equal(*a.lhs, *b.lhs);
    default: return structurally_equal(*a.lhs, *b.lhs) && structurally_equal(*a.rhs, *b.rhs);
  }
}

[[nodiscard]] inline std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline void print_node(const Node& n, std::string& out) {
  switch (n.kind) {
    case NodeKind::Number:
      if (n.value < 0.0 || std::signbit(n.value)) {
        out += "(-";
        out += format_number(-n.value);
        out += ')';
      } else {
        out += format_number(n.value);
      }
      return;
    case NodeKind::Time: out += 't'; return;
    case NodeKind::Space:
      out += 'x';
      out += std::to_string(n.index + 1);
      return;
    case NodeKind::Negate:
      out += "(-";
      print_node(*n.lhs, out);
      out += ')';
      return;
    case NodeKind::Call:
      out += function_name(n.func);
      out += '(';
      print_node(*n.lhs, out);
      out += ')';
      return;
    default: break;
  }
  const char* op = " + ";
  switch (n.kind) {
    case NodeKind::Subtract: op = " - "; break;
    case NodeKind::Multiply: op = " * "; break;
    case NodeKind::Divide: op = " / "; break;
    case NodeKind::Power: op = " ^ "; break;
    default: break;
  }
  out += '(';
  print_node(*n.lhs, out);
  out += op;
  print_node(*n.rhs, out);
  out += ')';
}

/// Partial derivative. abs' = sign, sign' = 0 (one-sided convention at the kink).
[[nodiscard]] inline NodePtr derive(const NodePtr& n, Variable v) {
  if (!depends_on(*n, v)) {
    return number(0.0);
  }
  switch (n->kind) {
    case NodeKind::Number: return number(0.0);
    case NodeKind::Time:
    case NodeKind::Space: return number(1.0);
    case NodeKind::Negate: return neg(derive(n->lhs, v));
    case NodeKind::Add: return add(derive(n->lhs, v), derive(n->rhs, v));
    case NodeKind::Subtract: return sub(derive(n->lhs, v), derive(n->rhs, v));
    case NodeKind::Multiply:
      return add(mul(derive(n->lhs, v), n->rhs), mul(n->lhs, derive(n->rhs, v)));
    case NodeKind::Divide: {
      // (u/w)' = (u' w - u w') / w^2
      auto num = sub(mul(derive(n->lhs, v), n->rhs), mul(n->lhs, derive(n->rhs, v)));
      return div(std::move(num), pow(n->rhs, number(2.0)));
    }
    case NodeKind::Power: {
      const auto& u = n->lhs;
      const auto& w = n->rhs;
      if (!depends_on(*w, v)) {
        return mul(mul(w, pow(u, sub(w, number(1.0)))), derive(u, v));
      }
      if (!depends_on(*u, v)) {
        return mul(mul(n, call(Function::Log, u)), derive(w, v));
      }
      auto inner = add(mul(derive(w, v), call(Function::Log, u)), div(mul(w, derive(u, v)), u));
      return mul(n, std::move(inner));
    }
    case NodeKind::Call: {
      const auto& u = n->lhs;
      auto du = derive(u, v);
      NodePtr outer;
      switch (n->func) {
        case Function::Sin: outer = call(Function::Cos, u); break;
        case Function::Cos: outer = neg(call(Function::Sin, u)); break;
        case Function::Tan: outer = div(number(1.0), pow(call(Function::Cos, u), number(2.0))); break;
        case Function::Exp: outer = n; break;
        case Function::Log: outer = div(number(1.0), u); break;
        case Function::Sqrt: outer = div(number(1.0), mul(number(2.0), n)); break;
        case Function::Abs: outer = call(Function::Sign, u); break;
        case Function::Tanh: outer = sub(number(1.0), pow(n, number(2.0))); break;
        case Function::Sign: return number(0.0);
      }
      return mul(std::move(outer), std::move(du));
    }
  }
  return number(0.0);
}

[[nodiscard]] inline NodePtr substitute_node(const NodePtr& n, const NodePtr& time_repl,
                                             const std::vector<NodePtr>& space_repl) {
  switch (n->kind) {
    case NodeKind::Number: return n;
    case NodeKind::Time: return time_repl;
    case NodeKind::Space: return space_repl[n->index];
    case NodeKind::Negate: return neg(substitute_node(n->lhs, time_repl, space_repl));
    case NodeKind::Call: return call(n->func, substitute_node(n->lhs, time_repl, space_repl));
    case NodeKind::Add:
      return add(substitute_node(n->lhs, time_repl, space_repl), substitute_node(n->rhs, time_repl, space_repl));
    case NodeKind::Subtract:
      return sub(substitute_node(n->lhs, time_repl, space_repl), substitute_node(n->rhs, time_repl, space_repl));
    case NodeKind::Multiply:
      return mul(substitute_node(n->lhs, time_repl, space_repl), substitute_node(n->rhs, time_repl, space_repl));
    case NodeKind::Divide:
      return div(substitute_node(n->lhs, time_repl, space_repl), substitute_node(n->rhs, time_repl, space_repl));
    case NodeKind::Power:
      return pow(substitute_node(n->lhs, time_repl, space_repl), substitute_node(n->rhs, time_repl, space_repl));
  }
  return n;
}

class Parser {
 public:
  Parser(std::string_view src, std::size_t dimension) : src_(src), dim_(dimension) {}

  NodePtr run() {
    skip_ws();
    if (pos_ >= src_.size()) {
      throw SyntaxError(pos_, "empty expression");
    }
    auto e = expr();
    skip_ws();
    if (pos_ < src_.size()) {
      throw SyntaxError(pos_, std::string("unexpected '") + src_[pos_] + "'");
    }
    return e;
  }

 private:
  void skip_ws() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) {
      ++pos_;
    }
  }

  bool accept(char c) {
    skip_ws();
    if (pos_ < src_.size() && src_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!accept(c)) {
      throw SyntaxError(pos_, std::string("expected '") + c + "'");
    }
  }

  NodePtr expr() {
    auto lhs = term();
    while (true) {
      if (accept('+')) {
        lhs = raw_binary(NodeKind::Add, lhs, term());
      } else if (accept('-')) {
        lhs = raw_binary(NodeKind::Subtract, lhs, term());
      } else {
        return lhs;
      }
    }
  }

  NodePtr term() {
    auto lhs = factor();
    while (true) {
      if (accept('*')) {
        lhs = raw_binary(NodeKind::Multiply, lhs, factor());
      } else if (accept('/')) {
        lhs = raw_binary(NodeKind::Divide, lhs, factor());
      } else {
        return lhs;
      }
    }
  }

  NodePtr factor() {
    auto base = atom();
    if (accept('^')) {
      return raw_binary(NodeKind::Power, base, factor());
    }
    return base;
  }

  NodePtr atom() {
    skip_ws();
    if (pos_ >= src_.size()) {
      throw SyntaxError(pos_, "unexpected end of input");
    }
    const char c = src_[pos_];
    if (c == '-') {
      ++pos_;
      return raw_unary(NodeKind::Negate, atom());
    }
    if (c == '(') {
      ++pos_;
      auto e = expr();
      expect(')');
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      return number_literal();
    }
    if (std::isalpha(static_cast<unsigned char>(c))) {
      return identifier();
    }
    throw SyntaxError(pos_, std::string("unexpected '") + c + "'");
  }

  NodePtr number_literal() {
    const std::size_t start = pos_;
    auto digits = [&] {
      std::size_t k = 0;
      while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
        ++pos_;
        ++k;
      }
      return k;
    };
    std::size_t count = digits();
    if (pos_ < src_.size() && src_[pos_] == '.') {
      ++pos_;
      count += digits();
    }
    if (count == 0) {
      throw SyntaxError(start, "malformed number");
    }
    // Exponent only when followed by digits, so "2e" is not swallowed.
    if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
      std::size_t look = pos_ + 1;
      if (look < src_.size() && (src_[look] == '+' || src_[look] == '-')) {
        ++look;
      }
      if (look < src_.size() && std::isdigit(static_cast<unsigned char>(src_[look]))) {
        pos_ = look;
        digits();
      }
    }
    double value = 0.0;
    const auto text = src_.substr(start, pos_ - start);
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size()) {
      throw SyntaxError(start, "malformed number '" + std::string(text) + "'");
    }
    return number(value);
  }

  NodePtr identifier() {
    const std::size_t start = pos_;
    while (pos_ < src_.size() && std::isalnum(static_cast<unsigned char>(src_[pos_]))) {
      ++pos_;
    }
    const auto name = src_.substr(start, pos_ - start);
    if (name == "t") {
      return time_var();
    }
    if (name == "pi") {
      return number(std::numbers::pi);
    }
    if (name == "e") {
      return number(std::numbers::e);
    }
    if (name.size() > 1 && name[0] == 'x') {
      std::size_t index = 0;
      const auto digits = name.substr(1);
      const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), index);
      if (ec == std::errc() && ptr == digits.data() + digits.size() && digits[0] != '0') {
        if (index > dim_) {
          throw DimensionError("variable " + std::string(name) + " exceeds dimension " + std::to_string(dim_));
        }
        return space_var(index - 1);
      }
    }
    for (const auto& [fname, fn] : kFunctionNames) {
      if (name == fname) {
        if (!accept('(')) {
          throw SyntaxError(pos_, "expected '(' after " + std::string(name));
        }
        auto arg = expr();
        expect(')');
        return raw_unary(NodeKind::Call, std::move(arg), fn);
      }
    }
    throw SyntaxError(start, "unknown identifier '" + std::string(name) + "'");
  }

  std::string_view src_;
  std::size_t dim_;
  std::size_t pos_ = 0;
};

}  // namespace detail

/// Immutable expression over (t, x1..xn) with a declared spatial dimension n.
class Expression {
 public:
  Expression() : root_(detail::number(0.0)), dim_(0) {}
  Expression(detail::NodePtr root, std::size_t dimension) : root_(std::move(root)), dim_(dimension) {
    if (detail::max_space_index_plus_one(*root_) > dim_) {
      throw DimensionError("expression references a variable beyond dimension " + std::to_string(dim_));
    }
  }

  static Expression constant(double v, std::size_t dimension) { return {detail::number(v), dimension}; }
  static Expression time(std::size_t dimension) { return {detail::time_var(), dimension}; }
  static Expression space(std::size_t index, std::size_t dimension) { return {detail::space_var(index), dimension}; }

  [[nodiscard]] std::size_t dimension() const noexcept { return dim_; }
  [[nodiscard]] const detail::Node& root() const noexcept { return *root_; }
  [[nodiscard]] const detail::NodePtr& root_ptr() const noexcept { return root_; }

  /// Throws EvalError on domain violations or a non-finite result.
  [[nodiscard]] double evaluate(double t, std::span<const double> x) const {
    if (x.size() != dim_) {
      throw DimensionError("evaluation point has dimension " + std::to_string(x.size()) + ", expected " +
                           std::to_string(dim_));
    }
    const double v = detail::eval_node(*root_, t, x);
    if (!std::isfinite(v)) {
      throw EvalError("non-finite result");
    }
    return v;
  }

  [[nodiscard]] double evaluate(double t, const Vector& x) const {
    return evaluate(t, std::span<const double>(x.data(), static_cast<std::size_t>(x.size())));
  }

  [[nodiscard]] bool depends_on(Variable v) const { return detail::depends_on(*root_, v); }
  [[nodiscard]] bool depends_on_time() const { return depends_on(Variable::time()); }

  [[nodiscard]] bool is_constant() const noexcept { return root_->kind == NodeKind::Number; }

  [[nodiscard]] std::string to_string() const {
    std::string out;
    detail::print_node(*root_, out);
    return out;
  }

  friend bool operator==(const Expression& a, const Expression& b) {
    return a.dim_ == b.dim_ && detail::structurally_equal(*a.root_, *b.root_);
  }

 private:
  detail::NodePtr root_;
  std::size_t dim_;
};

/// Point (t, x) at which expressions are evaluated.
struct EvalPoint {
  double t = 0.0;
  Vector x;
};

[[nodiscard]] inline Expression parse(std::string_view source, std::size_t dimension) {
  detail::Parser p(source, dimension);
  return {p.run(), dimension};
}

[[nodiscard]] inline double evaluate(const Expression& e, const EvalPoint& p) { return e.evaluate(p.t, p.x); }

[[nodiscard]] inline std::string to_string(const Expression& e) { return e.to_string(); }

[[nodiscard]] inline Expression differentiate(const Expression& e, Variable v) {
  if (!v.is_time() && v.index() >= e.dimension()) {
    throw DimensionError("differentiation variable beyond dimension");
  }
  return {detail::derive(e.root_ptr(), v), e.dimension()};
}

/// Replace t by `time_replacement` and x_i by `space_replacement[i]`, folding constants.
/// The result has the dimension of the replacements.
[[nodiscard]] inline Expression substitute(const Expression& e, const Expression& time_replacement,
                                           const std::vector<Expression>& space_replacement) {
  if (space_replacement.size() != e.dimension()) {
    throw DimensionError("substitution needs one replacement per spatial variable");
  }
  const std::size_t out_dim = time_replacement.dimension();
  std::vector<detail::NodePtr> repl;
  repl.reserve(space_replacement.size());
  for (const auto& r : space_replacement) {
    if (r.dimension() != out_dim) {
      throw DimensionError("substitution replacements disagree on dimension");
    }
    repl.push_back(r.root_ptr());
  }
  return {detail::substitute_node(e.root_ptr(), time_replacement.root_ptr(), repl), out_dim};
}

/// Evaluate each expression at the same point.
[[nodiscard]] inline Vector evaluate_all(const std::vector<Expression>& es, double t, const Vector& x) {
  Vector out(static_cast<Eigen::Index>(es.size()));
  for (std::size_t i = 0; i < es.size(); ++i) {
    out[static_cast<Eigen::Index>(i)] = es[i].evaluate(t, x);
  }
  return out;
}

}  // namespace rectify
