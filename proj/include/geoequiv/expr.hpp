#pragma once

// Expression language for metric entries.
//
//   expr    := term (('+' | '-') term)*
//   term    := unary (('*' | '/') unary)*
//   unary   := '-' unary | power
//   power   := primary ('^' unary)?          right-associative
//   primary := number | 'pi' | variable | function '(' expr ')' | '(' expr ')'
//
// Binding strength: ^ > unary minus > * / > + -.  So "-x^2" is -(x^2) and
// "2^3^2" is 2^(3^2).  Functions: sin cos tan sqrt exp log abs.
// See docs/grammar.md for the full description.

#include "geoequiv/errors.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <memory>
#include <numbers>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace geoequiv {

enum class Function { Sin, Cos, Tan, Sqrt, Exp, Log, Abs };

inline constexpr std::pair<std::string_view, Function> kFunctionNames[] = {
    {"sin", Function::Sin},   {"cos", Function::Cos}, {"tan", Function::Tan},
    {"sqrt", Function::Sqrt}, {"exp", Function::Exp}, {"log", Function::Log},
    {"abs", Function::Abs}};

inline std::string_view function_name(Function f) {
  for (const auto& [name, fn] : kFunctionNames)
    if (fn == f) return name;
  return "?";
}

class Expression {
 public:
  enum class Kind { Constant, Pi, Variable, Negate, Add, Subtract, Multiply, Divide, Power, Call };

  struct Node;
  using NodePtr = std::shared_ptr<const Node>;

  struct Node {
    Kind kind = Kind::Constant;
    double value = 0.0;         // Constant
    std::size_t variable = 0;   // Variable: index into the variable list
    Function function = Function::Sin;
    NodePtr lhs;                // operand of Negate / Call, left side of binary ops
    NodePtr rhs;
  };

  static NodePtr constant(double v) { return std::make_shared<Node>(Node{Kind::Constant, v}); }
  static NodePtr pi() { return std::make_shared<Node>(Node{Kind::Pi}); }
  static NodePtr variable(std::size_t index) {
    Node n;
    n.kind = Kind::Variable;
    n.variable = index;
    return std::make_shared<Node>(std::move(n));
  }
  static NodePtr unary(Kind kind, NodePtr operand, Function f = Function::Sin) {
    Node n;
    n.kind = kind;
    n.function = f;
    n.lhs = std::move(operand);
    return std::make_shared<Node>(std::move(n));
  }
  static NodePtr binary(Kind kind, NodePtr lhs, NodePtr rhs) {
    Node n;
    n.kind = kind;
    n.lhs = std::move(lhs);
    n.rhs = std::move(rhs);
    return std::make_shared<Node>(std::move(n));
  }

  Expression() : Expression(constant(0.0), {}) {}
  Expression(NodePtr root, std::vector<std::string> variables)
      : root_(std::move(root)),
        variables_(std::make_shared<const std::vector<std::string>>(std::move(variables))) {}

  const Node& root() const { return *root_; }
  const std::vector<std::string>& variables() const { return *variables_; }

  double evaluate(std::span<const double> point) const {
    if (point.size() < variables_->size())
      throw DomainError("expression needs " + std::to_string(variables_->size()) +
                        " coordinates, got " + std::to_string(point.size()));
    return eval_node(*root_, point);
  }

  // Fully parenthesised text; parsing it back yields a structurally equal tree.
  std::string serialize() const { return serialize_node(*root_); }

  friend bool operator==(const Expression& a, const Expression& b) {
    return same_tree(*a.root_, *b.root_);
  }

 private:
  static bool same_tree(const Node& a, const Node& b) {
    if (a.kind != b.kind) return false;
    switch (a.kind) {
      case Kind::Constant:
        return a.value == b.value;
      case Kind::Pi:
        return true;
      case Kind::Variable:
        return a.variable == b.variable;
      case Kind::Negate:
        return same_tree(*a.lhs, *b.lhs);
      case Kind::Call:
        return a.function == b.function && same_tree(*a.lhs, *b.lhs);
      default:
        return same_tree(*a.lhs, *b.lhs) && same_tree(*a.rhs, *b.rhs);
    }
  }

  std::string serialize_node(const Node& n) const {
    switch (n.kind) {
      case Kind::Constant: {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.17g", n.value);
        return buf;
      }
      case Kind::Pi:
        return "pi";
      case Kind::Variable:
        return (*variables_)[n.variable];
      case Kind::Negate:
        return "(-" + serialize_node(*n.lhs) + ")";
      case Kind::Call:
        return std::string(function_name(n.function)) + "(" + serialize_node(*n.lhs) + ")";
      case Kind::Add:
        return "(" + serialize_node(*n.lhs) + "+" + serialize_node(*n.rhs) + ")";
      case Kind::Subtract:
        return "(" + serialize_node(*n.lhs) + "-" + serialize_node(*n.rhs) + ")";
      case Kind::Multiply:
        return "(" + serialize_node(*n.lhs) + "*" + serialize_node(*n.rhs) + ")";
      case Kind::Divide:
        return "(" + serialize_node(*n.lhs) + "/" + serialize_node(*n.rhs) + ")";
      case Kind::Power:
        return "(" + serialize_node(*n.lhs) + "^" + serialize_node(*n.rhs) + ")";
    }
    return {};
  }

  [[noreturn]] void domain_error(const char* what, const Node& n) const {
    throw DomainError(std::string(what) + " in " + serialize_node(n));
  }

  double eval_node(const Node& n, std::span<const double> x) const {
    switch (n.kind) {
      case Kind::Constant:
        return n.value;
      case Kind::Pi:
        return std::numbers::pi;
      case Kind::Variable:
        return x[n.variable];
      case Kind::Negate:
        return -eval_node(*n.lhs, x);
      case Kind::Add:
        return eval_node(*n.lhs, x) + eval_node(*n.rhs, x);
      case Kind::Subtract:
        return eval_node(*n.lhs, x) - eval_node(*n.rhs, x);
      case Kind::Multiply:
        return eval_node(*n.lhs, x) * eval_node(*n.rhs, x);
      case Kind::Divide: {
        const double num = eval_node(*n.lhs, x);
        const double den = eval_node(*n.rhs, x);
        if (den == 0.0) domain_error("division by zero", n);
        return num / den;
      }
      case Kind::Power: {
        const double base = eval_node(*n.lhs, x);
        const double exponent = eval_node(*n.rhs, x);
        const double r = std::pow(base, exponent);
        if (std::isnan(r) && !std::isnan(base) && !std::isnan(exponent))
          domain_error("non-integer power of a negative number", n);
        if (base == 0.0 && exponent < 0.0) domain_error("negative power of zero", n);
        return r;
      }
      case Kind::Call: {
        const double a = eval_node(*n.lhs, x);
        switch (n.function) {
          case Function::Sin: return std::sin(a);
          case Function::Cos: return std::cos(a);
          case Function::Tan: return std::tan(a);
          case Function::Sqrt:
            if (a < 0.0) domain_error("sqrt of negative value", n);
            return std::sqrt(a);
          case Function::Exp: return std::exp(a);
          case Function::Log:
            if (a <= 0.0) domain_error("log of non-positive value", n);
            return std::log(a);
          case Function::Abs: return std::fabs(a);
        }
      }
    }
    return 0.0;
  }

  NodePtr root_;
  std::shared_ptr<const std::vector<std::string>> variables_;
};

namespace detail {

class ExpressionParser {
 public:
  ExpressionParser(std::string_view src, const std::vector<std::string>& vars)
      : src_(src), vars_(vars) {}

  Expression::NodePtr run() {
    skip_space();
    if (pos_ == src_.size()) throw ParseError("empty expression", 0);
    auto root = parse(0);
    skip_space();
    if (pos_ != src_.size())
      throw ParseError(std::string("unexpected '") + src_[pos_] + "'", pos_);
    return root;
  }

 private:
  using Kind = Expression::Kind;

  // Pratt binding powers.
  static constexpr int kAdditive = 10;
  static constexpr int kMultiplicative = 20;
  static constexpr int kPrefixMinus = 30;
  static constexpr int kPowerLeft = 41;
  static constexpr int kPowerRight = 40;

  void skip_space() {
    while (pos_ < src_.size() && (src_[pos_] == ' ' || src_[pos_] == '\t' ||
                                  src_[pos_] == '\n' || src_[pos_] == '\r'))
      ++pos_;
  }

  static bool ident_start(char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_';
  }
  static bool ident_char(char c) { return ident_start(c) || (c >= '0' && c <= '9'); }
  static bool digit(char c) { return c >= '0' && c <= '9'; }

  [[noreturn]] void expected_operand() {
    if (pos_ == src_.size()) throw ParseError("unexpected end of input", pos_);
    throw ParseError(std::string("expected operand, found '") + src_[pos_] + "'", pos_);
  }

  void expect(char c) {
    skip_space();
    if (pos_ == src_.size() || src_[pos_] != c) {
      if (pos_ == src_.size())
        throw ParseError(std::string("expected '") + c + "' before end of input", pos_);
      throw ParseError(std::string("expected '") + c + "', found '" + src_[pos_] + "'", pos_);
    }
    ++pos_;
  }

  Expression::NodePtr parse_number() {
    const std::size_t start = pos_;
    while (pos_ < src_.size() && digit(src_[pos_])) ++pos_;
    if (pos_ < src_.size() && src_[pos_] == '.') {
      ++pos_;
      while (pos_ < src_.size() && digit(src_[pos_])) ++pos_;
    }
    if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
      std::size_t p = pos_ + 1;
      if (p < src_.size() && (src_[p] == '+' || src_[p] == '-')) ++p;
      if (p < src_.size() && digit(src_[p])) {
        pos_ = p;
        while (pos_ < src_.size() && digit(src_[pos_])) ++pos_;
      }
    }
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(src_.data() + start, src_.data() + pos_, value);
    if (ec != std::errc() || ptr != src_.data() + pos_)
      throw ParseError("malformed number", start);
    return Expression::constant(value);
  }

  Expression::NodePtr parse_identifier() {
    const std::size_t start = pos_;
    while (pos_ < src_.size() && ident_char(src_[pos_])) ++pos_;
    const std::string_view name = src_.substr(start, pos_ - start);
    skip_space();
    if (pos_ < src_.size() && src_[pos_] == '(') {
      for (const auto& [fname, fn] : kFunctionNames) {
        if (fname == name) {
          ++pos_;
          auto arg = parse(0);
          expect(')');
          return Expression::unary(Kind::Call, std::move(arg), fn);
        }
      }
      throw ParseError("unknown function '" + std::string(name) + "'", start);
    }
    for (std::size_t i = 0; i < vars_.size(); ++i)
      if (vars_[i] == name) return Expression::variable(i);
    if (name == "pi") return Expression::pi();
    throw ParseError("unknown identifier '" + std::string(name) + "'", start);
  }

  Expression::NodePtr parse_prefix() {
    skip_space();
    if (pos_ == src_.size()) expected_operand();
    const char c = src_[pos_];
    if (c == '-') {
      ++pos_;
      return Expression::unary(Kind::Negate, parse(kPrefixMinus));
    }
    if (c == '(') {
      ++pos_;
      auto inner = parse(0);
      expect(')');
      return inner;
    }
    if (digit(c) || c == '.') return parse_number();
    if (ident_start(c)) return parse_identifier();
    expected_operand();
  }

  Expression::NodePtr parse(int min_bp) {
    auto lhs = parse_prefix();
    for (;;) {
      skip_space();
      if (pos_ == src_.size()) break;
      const char op = src_[pos_];
      int lbp = 0, rbp = 0;
      Kind kind{};
      switch (op) {
        case '+': lbp = kAdditive; rbp = kAdditive + 1; kind = Kind::Add; break;
        case '-': lbp = kAdditive; rbp = kAdditive + 1; kind = Kind::Subtract; break;
        case '*': lbp = kMultiplicative; rbp = kMultiplicative + 1; kind = Kind::Multiply; break;
        case '/': lbp = kMultiplicative; rbp = kMultiplicative + 1; kind = Kind::Divide; break;
        case '^': lbp = kPowerLeft; rbp = kPowerRight; kind = Kind::Power; break;
        default: return lhs;
      }
      if (lbp < min_bp) break;
      ++pos_;
      auto rhs = parse(rbp);
      lhs = Expression::binary(kind, std::move(lhs), std::move(rhs));
    }
    return lhs;
  }

  std::string_view src_;
  const std::vector<std::string>& vars_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline Expression parse(std::string_view source, const std::vector<std::string>& allowed_vars) {
  detail::ExpressionParser parser(source, allowed_vars);
  return Expression(parser.run(), allowed_vars);
}

inline double evaluate(const Expression& e, std::span<const double> point) {
  return e.evaluate(point);
}

}  // namespace geoequiv
