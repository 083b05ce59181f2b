#pragma once

#include <cctype>
#include <cmath>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "evosemi/error.hpp"
#include "evosemi/growth_rate.hpp"

namespace evosemi::expr {

/// Values bound to the variables an expression may reference.
struct Vars {
  double t = 0.0;
  double s = 0.0;
  double xi = 0.0;
};

enum Var : unsigned { kT = 1u, kS = 2u, kXi = 4u };

/// A compiled closed-form expression.
///
/// Grammar:
///   cmp     := sum (("<" | "<=" | ">" | ">=" | "==" | "!=") sum)?
///   sum     := product (("+" | "-") product)*
///   product := unary (("*" | "/") unary)*
///   unary   := ("-" | "+") unary | power
///   power   := primary ("^" unary)?
///   primary := number | name | name "(" cmp ("," cmp)* ")" | "(" cmp ")"
///
/// Names: the variables t, s, xi (also ξ), the constants pi and e, and the
/// functions exp, ln, log, sqrt, abs, sign, sin, cos, min, max, pow,
/// piecewise(c1, v1, ..., cn, vn, otherwise) and, when a growth rate is
/// supplied, mu, muinv and dmu. Comparisons yield 1 or 0.
class Expression {
 public:
  using Fn = std::function<double(const Vars&)>;

  static Expression parse(const std::string& text, unsigned allowed_vars,
                          const GrowthRate* mu = nullptr);

  double operator()(const Vars& v) const { return fn_(v); }
  double operator()(double t) const { return fn_(Vars{t, 0.0, 0.0}); }
  double operator()(double t, double s) const { return fn_(Vars{t, s, 0.0}); }
  const std::string& text() const { return text_; }

 private:
  Expression(Fn fn, std::string text) : fn_(std::move(fn)), text_(std::move(text)) {}
  Fn fn_;
  std::string text_;
};

namespace detail {

class Parser {
 public:
  Parser(const std::string& src, unsigned allowed, const GrowthRate* mu)
      : src_(src), allowed_(allowed), mu_(mu ? std::make_shared<GrowthRate>(*mu) : nullptr) {}

  Expression::Fn run() {
    auto f = cmp();
    skip();
    if (pos_ != src_.size()) fail("unexpected '" + std::string(1, src_[pos_]) + "'");
    return f;
  }

 private:
  using Fn = Expression::Fn;

  [[noreturn]] void fail(const std::string& msg) const {
    throw Error(ErrorKind::ConfigError,
                "expression '" + src_ + "': " + msg + " at column " + std::to_string(pos_ + 1));
  }

  void skip() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
  }

  bool eat(const std::string& tok) {
    skip();
    if (src_.compare(pos_, tok.size(), tok) == 0) {
      pos_ += tok.size();
      return true;
    }
    return false;
  }

  void expect(const std::string& tok) {
    if (!eat(tok)) fail("expected '" + tok + "'");
  }

  Fn cmp() {
    Fn a = sum();
    skip();
    static const char* ops[] = {"<=", ">=", "==", "!=", "<", ">"};
    for (const char* op : ops) {
      if (!eat(op)) continue;
      Fn b = sum();
      const std::string o = op;
      if (o == "<=") return [a, b](const Vars& v) { return a(v) <= b(v) ? 1.0 : 0.0; };
      if (o == ">=") return [a, b](const Vars& v) { return a(v) >= b(v) ? 1.0 : 0.0; };
      if (o == "==") return [a, b](const Vars& v) { return a(v) == b(v) ? 1.0 : 0.0; };
      if (o == "!=") return [a, b](const Vars& v) { return a(v) != b(v) ? 1.0 : 0.0; };
      if (o == "<") return [a, b](const Vars& v) { return a(v) < b(v) ? 1.0 : 0.0; };
      return [a, b](const Vars& v) { return a(v) > b(v) ? 1.0 : 0.0; };
    }
    return a;
  }

  Fn sum() {
    Fn a = product();
    for (;;) {
      if (eat("+")) {
        Fn b = product();
        a = [a, b](const Vars& v) { return a(v) + b(v); };
      } else if (eat("-")) {
        Fn b = product();
        a = [a, b](const Vars& v) { return a(v) - b(v); };
      } else {
        return a;
      }
    }
  }

  Fn product() {
    Fn a = unary();
    for (;;) {
      if (eat("*")) {
        Fn b = unary();
        a = [a, b](const Vars& v) { return a(v) * b(v); };
      } else if (eat("/")) {
        Fn b = unary();
        a = [a, b](const Vars& v) { return a(v) / b(v); };
      } else {
        return a;
      }
    }
  }

  Fn unary() {
    if (eat("-")) {
      Fn a = unary();
      return [a](const Vars& v) { return -a(v); };
    }
    if (eat("+")) return unary();
    return power();
  }

  Fn power() {
    Fn a = primary();
    if (eat("^")) {
      Fn b = unary();
      return [a, b](const Vars& v) { return std::pow(a(v), b(v)); };
    }
    return a;
  }

  Fn primary() {
    skip();
    if (pos_ >= src_.size()) fail("unexpected end");
    const char c = src_[pos_];
    if (eat("(")) {
      Fn a = cmp();
      expect(")");
      return a;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (eat("ξ")) return variable("xi");
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      const std::size_t start = pos_;
      while (pos_ < src_.size() &&
             (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_')) {
        ++pos_;
      }
      const std::string name = src_.substr(start, pos_ - start);
      if (eat("(")) return call(name);
      return variable(name);
    }
    fail("unexpected '" + std::string(1, c) + "'");
  }

  Fn number() {
    const char* begin = src_.c_str() + pos_;
    char* end = nullptr;
    const double x = std::strtod(begin, &end);
    if (end == begin) fail("bad number");
    pos_ += static_cast<std::size_t>(end - begin);
    return [x](const Vars&) { return x; };
  }

  Fn variable(const std::string& name) {
    if (name == "pi") return [](const Vars&) { return M_PI; };
    if (name == "e") return [](const Vars&) { return M_E; };
    if (name == "t" && (allowed_ & kT)) return [](const Vars& v) { return v.t; };
    if (name == "s" && (allowed_ & kS)) return [](const Vars& v) { return v.s; };
    if (name == "xi" && (allowed_ & kXi)) return [](const Vars& v) { return v.xi; };
    fail("unknown name '" + name + "'");
  }

  std::vector<Fn> args() {
    std::vector<Fn> out;
    if (eat(")")) return out;
    do {
      out.push_back(cmp());
    } while (eat(","));
    expect(")");
    return out;
  }

  Fn call(const std::string& name) {
    auto a = args();
    auto arity = [&](std::size_t n) {
      if (a.size() != n) fail(name + " takes " + std::to_string(n) + " argument(s)");
    };
    using D = double (*)(double);
    static const std::pair<const char*, D> unary_fns[] = {
        {"exp", [](double x) { return std::exp(x); }},   {"ln", [](double x) { return std::log(x); }},
        {"log", [](double x) { return std::log(x); }},   {"sqrt", [](double x) { return std::sqrt(x); }},
        {"abs", [](double x) { return std::abs(x); }},   {"sin", [](double x) { return std::sin(x); }},
        {"cos", [](double x) { return std::cos(x); }},
        {"sign", [](double x) { return x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0); }},
    };
    for (const auto& [n, f] : unary_fns) {
      if (name == n) {
        arity(1);
        Fn x = a[0];
        return [x, f](const Vars& v) { return f(x(v)); };
      }
    }
    if (name == "pow") {
      arity(2);
      Fn x = a[0], y = a[1];
      return [x, y](const Vars& v) { return std::pow(x(v), y(v)); };
    }
    if (name == "min" || name == "max") {
      if (a.empty()) fail(name + " needs arguments");
      const bool lo = name == "min";
      return [a, lo](const Vars& v) {
        double r = a[0](v);
        for (std::size_t i = 1; i < a.size(); ++i) r = lo ? std::min(r, a[i](v)) : std::max(r, a[i](v));
        return r;
      };
    }
    if (name == "piecewise") {
      if (a.size() % 2 == 0) fail("piecewise takes condition/value pairs and a fallback");
      return [a](const Vars& v) {
        for (std::size_t i = 0; i + 1 < a.size(); i += 2) {
          if (a[i](v) != 0.0) return a[i + 1](v);
        }
        return a.back()(v);
      };
    }
    if (name == "mu" || name == "muinv" || name == "dmu") {
      if (!mu_) fail(name + " is not available here");
      arity(1);
      Fn x = a[0];
      auto m = mu_;
      if (name == "mu") return [x, m](const Vars& v) { return (*m)(x(v)); };
      if (name == "muinv") return [x, m](const Vars& v) { return m->invert(x(v)); };
      return [x, m](const Vars& v) { return m->derivative(x(v)); };
    }
    fail("unknown function '" + name + "'");
  }

  const std::string& src_;
  std::size_t pos_ = 0;
  unsigned allowed_;
  std::shared_ptr<const GrowthRate> mu_;
};

}  // namespace detail

inline Expression Expression::parse(const std::string& text, unsigned allowed_vars, const GrowthRate* mu) {
  detail::Parser p(text, allowed_vars, mu);
  return Expression(p.run(), text);
}

}  // namespace evosemi::expr
