#pragma once

// Small arithmetic expression language used for custom dispersion symbols
// ("sqrt(tanh(xi)/xi)") and initial profiles ("cos(x) + 0.5*cos(2*x)").
//
// Grammar:
//   expr    := term (('+' | '-') term)*
//   term    := unary (('*' | '/') unary)*
//   unary   := ('+' | '-') unary | power
//   power   := primary (('^' | '**') unary)?
//   primary := number | name | name '(' expr (',' expr)* ')' | '(' expr ')'
//
// One free variable (its name is chosen by the caller) plus the constants
// `pi` and `e`. Evaluation is available in plain doubles and in second-order
// forward-mode jets, which give exact first and second derivatives.

#include <cctype>
#include <cmath>
#include <cstddef>
#include <memory>
#include <numbers>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "whitham/errors.hpp"

namespace whitham {

/// Value with its first and second derivative with respect to the variable.
struct Jet {
    double v = 0.0;
    double d = 0.0;
    double dd = 0.0;

    static constexpr Jet constant(double c) { return {c, 0.0, 0.0}; }
    static constexpr Jet variable(double x) { return {x, 1.0, 0.0}; }
};

inline Jet operator+(Jet a, Jet b) { return {a.v + b.v, a.d + b.d, a.dd + b.dd}; }
inline Jet operator-(Jet a, Jet b) { return {a.v - b.v, a.d - b.d, a.dd - b.dd}; }
inline Jet operator-(Jet a) { return {-a.v, -a.d, -a.dd}; }
inline Jet operator*(Jet a, Jet b) {
    return {a.v * b.v, a.d * b.v + a.v * b.d, a.dd * b.v + 2.0 * a.d * b.d + a.v * b.dd};
}

namespace detail {
// Composition f(g) given f, f', f'' evaluated at g.v.
inline Jet chain(Jet g, double f0, double f1, double f2) {
    return {f0, f1 * g.d, f2 * g.d * g.d + f1 * g.dd};
}
}  // namespace detail

inline Jet operator/(Jet a, Jet b) {
    const double inv = 1.0 / b.v;
    return a * detail::chain(b, inv, -inv * inv, 2.0 * inv * inv * inv);
}

inline Jet sin(Jet a) { return detail::chain(a, std::sin(a.v), std::cos(a.v), -std::sin(a.v)); }
inline Jet cos(Jet a) { return detail::chain(a, std::cos(a.v), -std::sin(a.v), -std::cos(a.v)); }
inline Jet tan(Jet a) {
    const double t = std::tan(a.v);
    const double s = 1.0 + t * t;
    return detail::chain(a, t, s, 2.0 * t * s);
}
inline Jet exp(Jet a) {
    const double e = std::exp(a.v);
    return detail::chain(a, e, e, e);
}
inline Jet log(Jet a) { return detail::chain(a, std::log(a.v), 1.0 / a.v, -1.0 / (a.v * a.v)); }
inline Jet sqrt(Jet a) {
    const double s = std::sqrt(a.v);
    return detail::chain(a, s, 0.5 / s, -0.25 / (s * a.v));
}
inline Jet abs(Jet a) {
    const double sg = a.v > 0 ? 1.0 : (a.v < 0 ? -1.0 : 0.0);
    return detail::chain(a, std::abs(a.v), sg, 0.0);
}
inline Jet tanh(Jet a) {
    const double t = std::tanh(a.v);
    const double s = 1.0 - t * t;
    return detail::chain(a, t, s, -2.0 * t * s);
}
inline Jet sinh(Jet a) { return detail::chain(a, std::sinh(a.v), std::cosh(a.v), std::sinh(a.v)); }
inline Jet cosh(Jet a) { return detail::chain(a, std::cosh(a.v), std::sinh(a.v), std::cosh(a.v)); }
inline Jet pow(Jet a, Jet b) {
    if (b.d == 0.0 && b.dd == 0.0) {
        const double c = b.v;
        return detail::chain(a, std::pow(a.v, c), c * std::pow(a.v, c - 1.0),
                             c * (c - 1.0) * std::pow(a.v, c - 2.0));
    }
    return exp(b * log(a));
}

/// Parsed, immutable expression in one variable. Cheap to copy; safe to
/// evaluate concurrently.
class Expression {
  public:
    /// Parses `text`; `variable` is the name of the free variable.
    /// Throws ValidationError with the offending position on bad input.
    static Expression parse(std::string_view text, std::string variable);

    double operator()(double x) const { return eval<double>(*root_, x); }
    Jet jet(double x) const { return eval<Jet>(*root_, Jet::variable(x)); }

    const std::string& text() const { return text_; }
    const std::string& variable() const { return variable_; }

  private:
    enum class Op { constant, variable, neg, add, sub, mul, div, pow, call };
    enum class Fn { sin, cos, tan, exp, log, sqrt, abs, tanh, sinh, cosh, pow };

    struct Node {
        Op op = Op::constant;
        Fn fn = Fn::sin;
        double value = 0.0;
        std::vector<std::shared_ptr<const Node>> args;
    };
    using NodePtr = std::shared_ptr<const Node>;

    class Parser;

    template <class T>
    static T eval(const Node& n, const T& x);

    std::string text_;
    std::string variable_;
    NodePtr root_;
};

class Expression::Parser {
  public:
    Parser(std::string_view text, const std::string& variable) : s_(text), var_(variable) {}

    NodePtr parse() {
        auto n = expr();
        skip_ws();
        if (pos_ != s_.size()) fail("unexpected character");
        return n;
    }

  private:
    [[noreturn]] void fail(const std::string& what) const {
        throw ValidationError("expression '" + std::string(s_) + "': " + what + " at position " +
                              std::to_string(pos_));
    }

    void skip_ws() {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    }

    bool accept(std::string_view tok) {
        skip_ws();
        if (s_.substr(pos_, tok.size()) == tok) {
            pos_ += tok.size();
            return true;
        }
        return false;
    }

    static NodePtr make(Op op, std::vector<NodePtr> args = {}, double value = 0.0,
                        Fn fn = Fn::sin) {
        auto n = std::make_shared<Node>();
        n->op = op;
        n->fn = fn;
        n->value = value;
        n->args = std::move(args);
        return n;
    }

    NodePtr expr() {
        auto lhs = term();
        for (;;) {
            if (accept("+")) {
                lhs = make(Op::add, {lhs, term()});
            } else if (accept("-")) {
                lhs = make(Op::sub, {lhs, term()});
            } else {
                return lhs;
            }
        }
    }

    NodePtr term() {
        auto lhs = unary();
        for (;;) {
            skip_ws();
            if (s_.substr(pos_, 2) == "**") return lhs;  // handled by power()
            if (accept("*")) {
                lhs = make(Op::mul, {lhs, unary()});
            } else if (accept("/")) {
                lhs = make(Op::div, {lhs, unary()});
            } else {
                return lhs;
            }
        }
    }

    NodePtr unary() {
        if (accept("-")) return make(Op::neg, {unary()});
        if (accept("+")) return unary();
        return power();
    }

    NodePtr power() {
        auto base = primary();
        if (accept("^") || accept("**")) return make(Op::pow, {base, unary()});
        return base;
    }

    NodePtr primary() {
        skip_ws();
        if (pos_ >= s_.size()) fail("unexpected end of input");
        const char c = s_[pos_];
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return name();
        if (accept("(")) {
            auto n = expr();
            if (!accept(")")) fail("expected ')'");
            return n;
        }
        fail("unexpected character");
    }

    NodePtr number() {
        const std::string rest(s_.substr(pos_));
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(rest, &used);
        } catch (const std::exception&) {
            fail("malformed number");
        }
        pos_ += used;
        return make(Op::constant, {}, v);
    }

    NodePtr name() {
        const std::size_t start = pos_;
        while (pos_ < s_.size() &&
               (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) {
            ++pos_;
        }
        const std::string id(s_.substr(start, pos_ - start));
        if (accept("(")) {
            static const std::pair<const char*, Fn> table[] = {
                {"sin", Fn::sin},   {"cos", Fn::cos},   {"tan", Fn::tan},   {"exp", Fn::exp},
                {"log", Fn::log},   {"sqrt", Fn::sqrt}, {"abs", Fn::abs},   {"tanh", Fn::tanh},
                {"sinh", Fn::sinh}, {"cosh", Fn::cosh}, {"pow", Fn::pow},
            };
            const Fn* fn = nullptr;
            for (const auto& [fname, f] : table) {
                if (id == fname) fn = &f;
            }
            if (fn == nullptr) fail("unknown function '" + id + "'");
            std::vector<NodePtr> args{expr()};
            while (accept(",")) args.push_back(expr());
            if (!accept(")")) fail("expected ')'");
            const std::size_t arity = *fn == Fn::pow ? 2 : 1;
            if (args.size() != arity) fail("wrong number of arguments to '" + id + "'");
            return make(Op::call, std::move(args), 0.0, *fn);
        }
        if (id == var_) return make(Op::variable);
        if (id == "pi") return make(Op::constant, {}, std::numbers::pi);
        if (id == "e") return make(Op::constant, {}, std::numbers::e);
        fail("unknown name '" + id + "'");
    }

    std::string_view s_;
    const std::string& var_;
    std::size_t pos_ = 0;
};

inline Expression Expression::parse(std::string_view text, std::string variable) {
    Expression e;
    e.text_ = std::string(text);
    e.variable_ = std::move(variable);
    Parser p(e.text_, e.variable_);
    e.root_ = p.parse();
    return e;
}

template <class T>
T Expression::eval(const Node& n, const T& x) {
    using std::abs, std::cos, std::cosh, std::exp, std::log, std::pow, std::sin, std::sinh,
        std::sqrt, std::tan, std::tanh;
    auto arg = [&](std::size_t i) { return eval<T>(*n.args[i], x); };
    auto lift = [](double c) {
        if constexpr (std::is_same_v<T, Jet>) {
            return Jet::constant(c);
        } else {
            return c;
        }
    };
    switch (n.op) {
        case Op::constant: return lift(n.value);
        case Op::variable: return x;
        case Op::neg: return -arg(0);
        case Op::add: return arg(0) + arg(1);
        case Op::sub: return arg(0) - arg(1);
        case Op::mul: return arg(0) * arg(1);
        case Op::div: return arg(0) / arg(1);
        case Op::pow: return pow(arg(0), arg(1));
        case Op::call:
            switch (n.fn) {
                case Fn::sin: return sin(arg(0));
                case Fn::cos: return cos(arg(0));
                case Fn::tan: return tan(arg(0));
                case Fn::exp: return exp(arg(0));
                case Fn::log: return log(arg(0));
                case Fn::sqrt: return sqrt(arg(0));
                case Fn::abs: return abs(arg(0));
                case Fn::tanh: return tanh(arg(0));
                case Fn::sinh: return sinh(arg(0));
                case Fn::cosh: return cosh(arg(0));
                case Fn::pow: return pow(arg(0), arg(1));
            }
    }
    return lift(0.0);
}

}  // namespace whitham
