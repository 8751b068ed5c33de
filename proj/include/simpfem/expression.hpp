#pragma once

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <memory>
#include <string>

#include "simpfem/core.hpp"

namespace simpfem {

/// Thrown for malformed expressions; `position` is a 0-based offset.
class ExpressionError : public InvalidArgument {
 public:
  ExpressionError(const std::string& what, std::size_t position)
      : InvalidArgument(what + " at offset " + std::to_string(position)), position_(position) {}
  std::size_t position() const noexcept { return position_; }

 private:
  std::size_t position_;
};

/// f(x, y) compiled from text such as "-10*sin(pi*x)^2 + 0.5*y".
/// Grammar: sum := term (('+'|'-') term)*; term := unary (('*'|'/') unary)*;
/// unary := ('+'|'-') unary | power; power := atom ('^' unary)?;
/// atom := number | x | y | pi | fn '(' sum ')' | '(' sum ')'.
/// Functions: sin cos tan exp sqrt abs.
class Expression {
 public:
  using Fn = std::function<double(double, double)>;

  static Expression parse(const std::string& text) {
    Parser p{text, 0};
    Fn f = p.sum();
    p.skip();
    if (p.pos != text.size()) throw ExpressionError("unexpected character '" + std::string(1, text[p.pos]) + "'", p.pos);
    return Expression(text, std::move(f));
  }

  double operator()(double x, double y) const { return fn_(x, y); }
  const std::string& text() const { return text_; }

 private:
  Expression(std::string text, Fn fn) : text_(std::move(text)), fn_(std::move(fn)) {}

  struct Parser {
    const std::string& s;
    std::size_t pos;

    void skip() {
      while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
    }
    bool eat(char c) {
      skip();
      if (pos < s.size() && s[pos] == c) {
        ++pos;
        return true;
      }
      return false;
    }

    Fn sum() {
      Fn lhs = term();
      while (true) {
        if (eat('+')) {
          Fn rhs = term();
          lhs = [lhs, rhs](double x, double y) { return lhs(x, y) + rhs(x, y); };
        } else if (eat('-')) {
          Fn rhs = term();
          lhs = [lhs, rhs](double x, double y) { return lhs(x, y) - rhs(x, y); };
        } else {
          return lhs;
        }
      }
    }

    Fn term() {
      Fn lhs = unary();
      while (true) {
        if (eat('*')) {
          Fn rhs = unary();
          lhs = [lhs, rhs](double x, double y) { return lhs(x, y) * rhs(x, y); };
        } else if (eat('/')) {
          Fn rhs = unary();
          lhs = [lhs, rhs](double x, double y) { return lhs(x, y) / rhs(x, y); };
        } else {
          return lhs;
        }
      }
    }

    Fn unary() {
      if (eat('-')) {
        Fn a = unary();
        return [a](double x, double y) { return -a(x, y); };
      }
      if (eat('+')) return unary();
      return power();
    }

    Fn power() {
      Fn base = atom();
      if (eat('^')) {
        Fn ex = unary();
        return [base, ex](double x, double y) { return std::pow(base(x, y), ex(x, y)); };
      }
      return base;
    }

    Fn atom() {
      skip();
      if (pos >= s.size()) throw ExpressionError("unexpected end of expression", pos);
      const char c = s[pos];
      if (c == '(') {
        ++pos;
        Fn inner = sum();
        if (!eat(')')) throw ExpressionError("expected ')'", pos);
        return inner;
      }
      if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
        const char* begin = s.c_str() + pos;
        char* end = nullptr;
        const double v = std::strtod(begin, &end);
        if (end == begin) throw ExpressionError("bad number", pos);
        pos += static_cast<std::size_t>(end - begin);
        return [v](double, double) { return v; };
      }
      if (std::isalpha(static_cast<unsigned char>(c))) {
        const std::size_t start = pos;
        while (pos < s.size() && std::isalnum(static_cast<unsigned char>(s[pos]))) ++pos;
        const std::string name = s.substr(start, pos - start);
        if (name == "x") return [](double x, double) { return x; };
        if (name == "y") return [](double, double y) { return y; };
        if (name == "pi") return [](double, double) { return 3.14159265358979323846; };
        double (*f)(double) = nullptr;
        if (name == "sin") f = [](double v) { return std::sin(v); };
        else if (name == "cos") f = [](double v) { return std::cos(v); };
        else if (name == "tan") f = [](double v) { return std::tan(v); };
        else if (name == "exp") f = [](double v) { return std::exp(v); };
        else if (name == "sqrt") f = [](double v) { return std::sqrt(v); };
        else if (name == "abs") f = [](double v) { return std::abs(v); };
        else throw ExpressionError("unknown identifier '" + name + "'", start);
        if (!eat('(')) throw ExpressionError("expected '(' after " + name, pos);
        Fn arg = sum();
        if (!eat(')')) throw ExpressionError("expected ')'", pos);
        return [f, arg](double x, double y) { return f(arg(x, y)); };
      }
      throw ExpressionError("unexpected character '" + std::string(1, c) + "'", pos);
    }
  };

  std::string text_;
  Fn fn_;
};

}  // namespace simpfem
