#pragma once

#include <cctype>
#include <cmath>
#include <cstddef>
#include <map>
#include <memory>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace nlgpe {

/// Small arithmetic expression language used for coefficient fields.
///
/// Grammar: numbers, `+ - * / ^` (right-associative power), unary minus,
/// parentheses, functions `sin cos tan exp log sqrt abs`, constants `pi e`,
/// named constants supplied at compile time and named variables bound to
/// slots of the argument span.
class Expression {
 public:
  Expression() = default;

  static Expression compile(const std::string& text, const std::vector<std::string>& variables = {"x"},
                            const std::map<std::string, double>& constants = {}) {
    Parser p{text, variables, constants, 0};
    Expression e;
    e.root_ = p.parse_sum();
    p.skip_ws();
    if (p.pos != text.size()) {
      throw std::invalid_argument("unexpected '" + std::string(1, text[p.pos]) + "' at column " + std::to_string(p.pos + 1));
    }
    e.text_ = text;
    e.arity_ = variables.size();
    return e;
  }

  double operator()(std::span<const double> vars) const {
    if (!root_) {
      throw std::logic_error("empty expression");
    }
    if (vars.size() < arity_) {
      throw std::invalid_argument("expression needs " + std::to_string(arity_) + " variables");
    }
    return root_->eval(vars);
  }

  double operator()(double x) const { return (*this)(std::span<const double>(&x, 1)); }

  const std::string& text() const noexcept { return text_; }
  bool empty() const noexcept { return !root_; }

 private:
  struct Node {
    enum Kind { number, variable, neg, add, sub, mul, div, pow, call } kind = number;
    double value = 0.0;
    std::size_t slot = 0;
    double (*fn)(double) = nullptr;
    std::shared_ptr<const Node> lhs, rhs;

    double eval(std::span<const double> v) const {
      switch (kind) {
        case number: return value;
        case variable: return v[slot];
        case neg: return -lhs->eval(v);
        case add: return lhs->eval(v) + rhs->eval(v);
        case sub: return lhs->eval(v) - rhs->eval(v);
        case mul: return lhs->eval(v) * rhs->eval(v);
        case div: return lhs->eval(v) / rhs->eval(v);
        case pow: return std::pow(lhs->eval(v), rhs->eval(v));
        case call: return fn(lhs->eval(v));
      }
      return 0.0;
    }
  };
  using NodePtr = std::shared_ptr<const Node>;

  static NodePtr make(Node::Kind k, NodePtr a, NodePtr b = nullptr) {
    auto n = std::make_shared<Node>();
    n->kind = k;
    n->lhs = std::move(a);
    n->rhs = std::move(b);
    return n;
  }

  struct Parser {
    const std::string& s;
    const std::vector<std::string>& vars;
    const std::map<std::string, double>& consts;
    std::size_t pos;

    void skip_ws() {
      while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) {
        ++pos;
      }
    }

    bool eat(char c) {
      skip_ws();
      if (pos < s.size() && s[pos] == c) {
        ++pos;
        return true;
      }
      return false;
    }

    [[noreturn]] void fail(const std::string& what) const {
      throw std::invalid_argument(what + " at column " + std::to_string(pos + 1));
    }

    NodePtr parse_sum() {
      NodePtr left = parse_product();
      while (true) {
        if (eat('+')) {
          left = make(Node::add, left, parse_product());
        } else if (eat('-')) {
          left = make(Node::sub, left, parse_product());
        } else {
          return left;
        }
      }
    }

    NodePtr parse_product() {
      NodePtr left = parse_unary();
      while (true) {
        if (eat('*')) {
          left = make(Node::mul, left, parse_unary());
        } else if (eat('/')) {
          left = make(Node::div, left, parse_unary());
        } else {
          return left;
        }
      }
    }

    NodePtr parse_unary() {
      if (eat('-')) {
        return make(Node::neg, parse_unary());
      }
      if (eat('+')) {
        return parse_unary();
      }
      return parse_power();
    }

    NodePtr parse_power() {
      NodePtr base = parse_atom();
      if (eat('^')) {
        return make(Node::pow, base, parse_unary());
      }
      return base;
    }

    NodePtr parse_atom() {
      skip_ws();
      if (pos >= s.size()) {
        fail("unexpected end of expression");
      }
      const char c = s[pos];
      if (eat('(')) {
        NodePtr inner = parse_sum();
        if (!eat(')')) {
          fail("expected ')'");
        }
        return inner;
      }
      if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
        const char* begin = s.c_str() + pos;
        char* end = nullptr;
        const double v = std::strtod(begin, &end);
        if (end == begin) {
          fail("bad number");
        }
        pos += static_cast<std::size_t>(end - begin);
        auto n = std::make_shared<Node>();
        n->value = v;
        return n;
      }
      if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
        const std::size_t start = pos;
        while (pos < s.size() && (std::isalnum(static_cast<unsigned char>(s[pos])) || s[pos] == '_')) {
          ++pos;
        }
        const std::string name = s.substr(start, pos - start);
        if (auto fn = function(name)) {
          if (!eat('(')) {
            fail("expected '(' after " + name);
          }
          NodePtr arg = parse_sum();
          if (!eat(')')) {
            fail("expected ')'");
          }
          auto n = std::make_shared<Node>();
          n->kind = Node::call;
          n->fn = fn;
          n->lhs = arg;
          return n;
        }
        for (std::size_t k = 0; k < vars.size(); ++k) {
          if (vars[k] == name) {
            auto n = std::make_shared<Node>();
            n->kind = Node::variable;
            n->slot = k;
            return n;
          }
        }
        auto n = std::make_shared<Node>();
        if (auto it = consts.find(name); it != consts.end()) {
          n->value = it->second;
        } else if (name == "pi") {
          n->value = std::numbers::pi;
        } else if (name == "e") {
          n->value = std::numbers::e;
        } else {
          pos = start;
          fail("unknown identifier '" + name + "'");
        }
        return n;
      }
      fail("unexpected '" + std::string(1, c) + "'");
    }

    static double (*function(const std::string& name))(double) {
      if (name == "sin") return [](double v) { return std::sin(v); };
      if (name == "cos") return [](double v) { return std::cos(v); };
      if (name == "tan") return [](double v) { return std::tan(v); };
      if (name == "exp") return [](double v) { return std::exp(v); };
      if (name == "log") return [](double v) { return std::log(v); };
      if (name == "sqrt") return [](double v) { return std::sqrt(v); };
      if (name == "abs") return [](double v) { return std::abs(v); };
      return nullptr;
    }
  };

  NodePtr root_;
  std::string text_;
  std::size_t arity_ = 0;
};

}  // namespace nlgpe
