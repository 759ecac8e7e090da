/// @file expr.hpp
/// @brief Recursive-descent parser, printer and evaluator for the small
///        arithmetic language used to specify forcing terms f'(x1, x2).
///
/// Grammar (standard precedence, '^' binds tightest and associates right):
///   expr    := term (('+' | '-') term)*
///   term    := unary (('*' | '/') unary)*
///   unary   := '-' unary | power
///   power   := primary ('^' unary)?
///   primary := number | 'x1' | 'x2' | func '(' expr ')' | '(' expr ')'
///   func    := 'sin' | 'cos' | 'exp' | 'sqrt'
#pragma once

#include <cdarcy/core.hpp>

#include <cctype>
#include <charconv>
#include <cmath>
#include <string>
#include <vector>

namespace cdarcy {

// ===========================================================================
// Abstract syntax tree (index-based arena, so ForcingExpr is a plain value)
// ===========================================================================

/// Forcing expression over the variables x1, x2.
class ForcingExpr {
public:
  /// Parses `text`; throws SyntaxError{line, col, expected} on failure.
  static ForcingExpr parse(const std::string& text);

  /// Evaluates at (x1, x2). Throws Error on sqrt of a negative value.
  double eval(double x1, double x2) const { return eval_node(root_, x1, x2); }

  /// Prints with minimal parentheses; parse(print()) reproduces the tree.
  std::string print() const { return print_node(root_, 0); }

  /// Source text the expression was parsed from.
  const std::string& source() const { return source_; }

private:
  enum class Kind { Number, Var, Neg, Add, Sub, Mul, Div, Pow, Call };
  enum class Func { Sin, Cos, Exp, Sqrt };

  struct Node {
    Kind kind;
    double value = 0.0;  // Number
    int var = 0;         // Var: 0 -> x1, 1 -> x2
    Func func = Func::Sin;
    int a = -1, b = -1;  // children
  };

  std::vector<Node> nodes_;
  int root_ = -1;
  std::string source_;

  int add(Node n) {
    nodes_.push_back(n);
    return static_cast<int>(nodes_.size()) - 1;
  }

  double eval_node(int i, double x1, double x2) const {
    const Node& n = nodes_[static_cast<std::size_t>(i)];
    switch (n.kind) {
      case Kind::Number: return n.value;
      case Kind::Var: return n.var == 0 ? x1 : x2;
      case Kind::Neg: return -eval_node(n.a, x1, x2);
      case Kind::Add: return eval_node(n.a, x1, x2) + eval_node(n.b, x1, x2);
      case Kind::Sub: return eval_node(n.a, x1, x2) - eval_node(n.b, x1, x2);
      case Kind::Mul: return eval_node(n.a, x1, x2) * eval_node(n.b, x1, x2);
      case Kind::Div: return eval_node(n.a, x1, x2) / eval_node(n.b, x1, x2);
      case Kind::Pow:
        return std::pow(eval_node(n.a, x1, x2), eval_node(n.b, x1, x2));
      case Kind::Call: {
        const double v = eval_node(n.a, x1, x2);
        switch (n.func) {
          case Func::Sin: return std::sin(v);
          case Func::Cos: return std::cos(v);
          case Func::Exp: return std::exp(v);
          case Func::Sqrt:
            if (v < 0.0)
              throw Error("sqrt of negative value " + format_full(v));
            return std::sqrt(v);
        }
        return 0.0;
      }
    }
    return 0.0;
  }

  // Precedence levels for printing: 0 add/sub, 1 mul/div, 2 unary, 3 pow.
  static int precedence(Kind k) {
    switch (k) {
      case Kind::Add:
      case Kind::Sub: return 0;
      case Kind::Mul:
      case Kind::Div: return 1;
      case Kind::Neg: return 2;
      case Kind::Pow: return 3;
      default: return 4;  // atoms never need parentheses
    }
  }

  std::string print_node(int i, int needed) const {
    const Node& n = nodes_[static_cast<std::size_t>(i)];
    std::string out;
    switch (n.kind) {
      case Kind::Number: out = format_full(n.value); break;
      case Kind::Var: out = n.var == 0 ? "x1" : "x2"; break;
      case Kind::Neg: out = "-" + print_node(n.a, precedence(Kind::Neg) + 1); break;
      case Kind::Add:
        out = print_node(n.a, 0) + "+" + print_node(n.b, 1);
        break;
      case Kind::Sub:
        // Left-associative: right child needs one level more.
        out = print_node(n.a, 0) + "-" + print_node(n.b, 1);
        break;
      case Kind::Mul:
        out = print_node(n.a, 1) + "*" + print_node(n.b, 2);
        break;
      case Kind::Div:
        out = print_node(n.a, 1) + "/" + print_node(n.b, 2);
        break;
      case Kind::Pow:
        // Right-associative; '-' below '^' must be parenthesized on the left.
        out = print_node(n.a, 4) + "^" + print_node(n.b, 3);
        break;
      case Kind::Call: {
        const char* name = "";
        switch (n.func) {
          case Func::Sin: name = "sin"; break;
          case Func::Cos: name = "cos"; break;
          case Func::Exp: name = "exp"; break;
          case Func::Sqrt: name = "sqrt"; break;
        }
        out = std::string(name) + "(" + print_node(n.a, 0) + ")";
        break;
      }
    }
    if (precedence(n.kind) < needed) return "(" + out + ")";
    return out;
  }

  // --- lexer / parser -------------------------------------------------------

  struct Lexer {
    const std::string& text;
    std::size_t pos = 0;
    int line = 1, col = 1;

    explicit Lexer(const std::string& t) : text(t) {}

    void skip_space() {
      while (pos < text.size()) {
        const char c = text[pos];
        if (c == '\n') {
          ++line;
          col = 1;
          ++pos;
        } else if (std::isspace(static_cast<unsigned char>(c))) {
          ++col;
          ++pos;
        } else {
          break;
        }
      }
    }

    char peek() {
      skip_space();
      return pos < text.size() ? text[pos] : '\0';
    }

    void advance(std::size_t n) {
      col += static_cast<int>(n);
      pos += n;
    }
  };

  Lexer* lex_ = nullptr;

  [[noreturn]] void fail(const std::string& expected) const {
    lex_->skip_space();
    throw SyntaxError(lex_->line, lex_->col, expected);
  }

  bool consume(char c) {
    if (lex_->peek() == c) {
      lex_->advance(1);
      return true;
    }
    return false;
  }

  int parse_expr_rule() {
    int left = parse_term();
    while (true) {
      if (consume('+')) {
        int right = parse_term();
        left = add({Kind::Add, 0, 0, Func::Sin, left, right});
      } else if (consume('-')) {
        int right = parse_term();
        left = add({Kind::Sub, 0, 0, Func::Sin, left, right});
      } else {
        return left;
      }
    }
  }

  int parse_term() {
    int left = parse_unary();
    while (true) {
      if (consume('*')) {
        int right = parse_unary();
        left = add({Kind::Mul, 0, 0, Func::Sin, left, right});
      } else if (consume('/')) {
        int right = parse_unary();
        left = add({Kind::Div, 0, 0, Func::Sin, left, right});
      } else {
        return left;
      }
    }
  }

  int parse_unary() {
    if (consume('-')) {
      int child = parse_unary();
      return add({Kind::Neg, 0, 0, Func::Sin, child, -1});
    }
    return parse_power();
  }

  int parse_power() {
    int base = parse_primary();
    if (consume('^')) {
      int exp = parse_unary();  // right-associative, allows 2^-3
      return add({Kind::Pow, 0, 0, Func::Sin, base, exp});
    }
    return base;
  }

  int parse_primary() {
    const char c = lex_->peek();
    if (c == '(') {
      lex_->advance(1);
      int inner = parse_expr_rule();
      if (!consume(')')) fail("')'");
      return inner;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.')
      return parse_number();
    if (std::isalpha(static_cast<unsigned char>(c))) return parse_identifier();
    fail("a number, variable, function or '('");
  }

  int parse_number() {
    lex_->skip_space();
    const char* begin = lex_->text.data() + lex_->pos;
    const char* end = lex_->text.data() + lex_->text.size();
    double value = 0.0;
    auto res = std::from_chars(begin, end, value);
    if (res.ec != std::errc()) fail("a numeric literal");
    lex_->advance(static_cast<std::size_t>(res.ptr - begin));
    return add({Kind::Number, value, 0, Func::Sin, -1, -1});
  }

  int parse_identifier() {
    lex_->skip_space();
    std::size_t start = lex_->pos;
    while (start < lex_->text.size() &&
           (std::isalnum(static_cast<unsigned char>(lex_->text[start])) ||
            lex_->text[start] == '_'))
      ++start;
    const std::string name = lex_->text.substr(lex_->pos, start - lex_->pos);
    if (name == "x1" || name == "x2") {
      lex_->advance(name.size());
      return add({Kind::Var, 0, name == "x1" ? 0 : 1, Func::Sin, -1, -1});
    }
    Func f;
    if (name == "sin") f = Func::Sin;
    else if (name == "cos") f = Func::Cos;
    else if (name == "exp") f = Func::Exp;
    else if (name == "sqrt") f = Func::Sqrt;
    else fail("x1, x2, sin, cos, exp or sqrt");
    lex_->advance(name.size());
    if (!consume('(')) fail("'(' after function name");
    int arg = parse_expr_rule();
    if (!consume(')')) fail("')'");
    return add({Kind::Call, 0, 0, f, arg, -1});
  }
};

inline ForcingExpr ForcingExpr::parse(const std::string& text) {
  ForcingExpr e;
  e.source_ = text;
  Lexer lex(text);
  e.lex_ = &lex;
  e.root_ = e.parse_expr_rule();
  if (lex.peek() != '\0') e.fail("end of input or an operator");
  e.lex_ = nullptr;
  return e;
}

/// Convenience wrapper matching the operation name used elsewhere.
inline ForcingExpr parse_expr(const std::string& text) {
  return ForcingExpr::parse(text);
}

}  // namespace cdarcy
