#include "sfo/expr.hpp"

#include <cctype>
#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <optional>

namespace sfo::expr {

Expr Expr::constant(double v) {
  Expr e;
  e.kind = NodeKind::Constant;
  e.number = v;
  return e;
}

Expr Expr::variable(std::string name) {
  Expr e;
  e.kind = NodeKind::Variable;
  e.name = std::move(name);
  return e;
}

namespace {

enum class Tok { Number, Ident, Plus, Minus, Star, Slash, Caret, LParen, RParen, End };

struct Token {
  Tok kind;
  std::size_t offset;
  std::size_t length;
  double number = 0.0;
  std::string_view text;
};

const char* tok_name(Tok t) {
  switch (t) {
    case Tok::Number: return "number";
    case Tok::Ident: return "identifier";
    case Tok::Plus: return "'+'";
    case Tok::Minus: return "'-'";
    case Tok::Star: return "'*'";
    case Tok::Slash: return "'/'";
    case Tok::Caret: return "'^'";
    case Tok::LParen: return "'('";
    case Tok::RParen: return "')'";
    case Tok::End: return "end of input";
  }
  return "?";
}

class Parser {
 public:
  explicit Parser(std::string_view src) : src_(src) { advance(); }

  Expr parse_all() {
    Expr e = parse_sum();
    expect(Tok::End, "end of input or operator");
    return e;
  }

 private:
  std::string_view src_;
  std::size_t pos_ = 0;
  Token cur_{};

  [[noreturn]] void fail(const std::string& expected) {
    throw ParseError("syntax error at offset " + std::to_string(cur_.offset) +
                         ": expected " + expected + ", got " + tok_name(cur_.kind),
                     cur_.offset, expected);
  }

  void expect(Tok t, const std::string& what) {
    if (cur_.kind != t) fail(what);
  }

  void advance() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    cur_.offset = pos_;
    if (pos_ >= src_.size()) {
      cur_.kind = Tok::End;
      cur_.length = 0;
      return;
    }
    const char c = src_[pos_];
    auto single = [&](Tok t) {
      cur_.kind = t;
      cur_.length = 1;
      ++pos_;
    };
    switch (c) {
      case '+': single(Tok::Plus); return;
      case '-': single(Tok::Minus); return;
      case '*': single(Tok::Star); return;
      case '/': single(Tok::Slash); return;
      case '^': single(Tok::Caret); return;
      case '(': single(Tok::LParen); return;
      case ')': single(Tok::RParen); return;
      default: break;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      const char* begin = src_.data() + pos_;
      char* end = nullptr;
      const double v = std::strtod(begin, &end);
      if (end == begin)
        throw ParseError("syntax error at offset " + std::to_string(pos_) +
                             ": malformed number",
                         pos_, "number");
      cur_.kind = Tok::Number;
      cur_.number = v;
      cur_.length = static_cast<std::size_t>(end - begin);
      pos_ += cur_.length;
      return;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t e = pos_;
      while (e < src_.size() &&
             (std::isalnum(static_cast<unsigned char>(src_[e])) || src_[e] == '_'))
        ++e;
      cur_.kind = Tok::Ident;
      cur_.text = src_.substr(pos_, e - pos_);
      cur_.length = e - pos_;
      pos_ = e;
      return;
    }
    throw ParseError("syntax error at offset " + std::to_string(pos_) +
                         ": unexpected character '" + std::string(1, c) + "'",
                     pos_, "expression");
  }

  Expr parse_sum() {
    Expr e = parse_product();
    while (cur_.kind == Tok::Plus || cur_.kind == Tok::Minus) {
      const NodeKind k = cur_.kind == Tok::Plus ? NodeKind::Add : NodeKind::Sub;
      advance();
      Expr rhs = parse_product();
      Expr out;
      out.kind = k;
      out.kids.push_back(std::move(e));
      out.kids.push_back(std::move(rhs));
      e = std::move(out);
    }
    return e;
  }

  Expr parse_product() {
    Expr e = parse_unary();
    while (cur_.kind == Tok::Star || cur_.kind == Tok::Slash) {
      const NodeKind k = cur_.kind == Tok::Star ? NodeKind::Mul : NodeKind::Div;
      advance();
      Expr rhs = parse_unary();
      Expr out;
      out.kind = k;
      out.kids.push_back(std::move(e));
      out.kids.push_back(std::move(rhs));
      e = std::move(out);
    }
    return e;
  }

  Expr parse_unary() {
    if (cur_.kind == Tok::Minus) {
      advance();
      Expr out;
      out.kind = NodeKind::Negate;
      out.kids.push_back(parse_unary());
      return out;
    }
    return parse_power();
  }

  Expr parse_power() {
    Expr base = parse_primary();
    if (cur_.kind == Tok::Caret) {
      advance();
      Expr expo = parse_unary();  // right-associative; exponent may carry unary minus
      Expr out;
      out.kind = NodeKind::Pow;
      out.kids.push_back(std::move(base));
      out.kids.push_back(std::move(expo));
      return out;
    }
    return base;
  }

  static std::optional<Fn> fn_by_name(std::string_view s) {
    if (s == "exp") return Fn::Exp;
    if (s == "ln") return Fn::Ln;
    if (s == "sin") return Fn::Sin;
    if (s == "cos") return Fn::Cos;
    if (s == "sqrt") return Fn::Sqrt;
    if (s == "abs") return Fn::Abs;
    return std::nullopt;
  }

  Expr parse_primary() {
    if (cur_.kind == Tok::Number) {
      Expr e = Expr::constant(cur_.number);
      advance();
      return e;
    }
    if (cur_.kind == Tok::Ident) {
      const std::string name(cur_.text);
      const std::size_t off = cur_.offset;
      advance();
      if (cur_.kind == Tok::LParen) {
        const auto fn = fn_by_name(name);
        if (!fn)
          throw ParseError("unknown function '" + name + "' at offset " +
                               std::to_string(off),
                           off, "one of exp, ln, sin, cos, sqrt, abs");
        advance();
        Expr arg = parse_sum();
        expect(Tok::RParen, "')'");
        advance();
        Expr out;
        out.kind = NodeKind::Call;
        out.fn = *fn;
        out.kids.push_back(std::move(arg));
        return out;
      }
      return Expr::variable(name);
    }
    if (cur_.kind == Tok::LParen) {
      advance();
      Expr e = parse_sum();
      expect(Tok::RParen, "')'");
      advance();
      return e;
    }
    fail("number, identifier, or '('");
  }
};

int precedence(const Expr& e) {
  switch (e.kind) {
    case NodeKind::Add:
    case NodeKind::Sub: return 1;
    case NodeKind::Mul:
    case NodeKind::Div: return 2;
    case NodeKind::Negate: return 3;
    case NodeKind::Pow: return 4;
    default: return 5;
  }
}

std::string format_number(double v) {
  char buf[40];
  for (int prec = 15; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

const char* fn_name(Fn f) {
  switch (f) {
    case Fn::Exp: return "exp";
    case Fn::Ln: return "ln";
    case Fn::Sin: return "sin";
    case Fn::Cos: return "cos";
    case Fn::Sqrt: return "sqrt";
    case Fn::Abs: return "abs";
  }
  return "?";
}

void unparse_into(const Expr& e, std::string& out) {
  auto child = [&](const Expr& c, bool parens) {
    if (parens) out += '(';
    unparse_into(c, out);
    if (parens) out += ')';
  };
  const int p = precedence(e);
  switch (e.kind) {
    case NodeKind::Constant:
      out += format_number(e.number);
      return;
    case NodeKind::Variable:
      out += e.name;
      return;
    case NodeKind::Negate:
      out += '-';
      child(e.kids[0], precedence(e.kids[0]) < p);
      return;
    case NodeKind::Add:
    case NodeKind::Sub:
    case NodeKind::Mul:
    case NodeKind::Div: {
      child(e.kids[0], precedence(e.kids[0]) < p);
      out += e.kind == NodeKind::Add   ? " + "
             : e.kind == NodeKind::Sub ? " - "
             : e.kind == NodeKind::Mul ? "*"
                                       : "/";
      child(e.kids[1], precedence(e.kids[1]) <= p);
      return;
    }
    case NodeKind::Pow:
      child(e.kids[0], precedence(e.kids[0]) <= p);
      out += '^';
      child(e.kids[1], precedence(e.kids[1]) < p);
      return;
    case NodeKind::Call:
      out += fn_name(e.fn);
      out += '(';
      unparse_into(e.kids[0], out);
      out += ')';
      return;
  }
}

bool is_integer(double v) { return std::isfinite(v) && v == std::floor(v) && std::abs(v) < 1e9; }

Dual int_pow(Dual base, long k) {
  if (k < 0) {
    Dual r = int_pow(base, -k);
    return Dual{1.0} / r;
  }
  Dual acc{1.0};
  Dual b = base;
  while (k > 0) {
    if (k & 1) acc = acc * b;
    b = b * b;
    k >>= 1;
  }
  return acc;
}

}  // namespace

Expr parse(std::string_view source) { return Parser(source).parse_all(); }

std::string unparse(const Expr& e) {
  std::string out;
  unparse_into(e, out);
  return out;
}

bool structurally_equal(const Expr& a, const Expr& b) {
  if (a.kind != b.kind) return false;
  switch (a.kind) {
    case NodeKind::Constant:
      if (a.number != b.number) return false;
      break;
    case NodeKind::Variable:
      if (a.name != b.name) return false;
      break;
    case NodeKind::Call:
      if (a.fn != b.fn) return false;
      break;
    default: break;
  }
  if (a.kids.size() != b.kids.size()) return false;
  for (std::size_t i = 0; i < a.kids.size(); ++i)
    if (!structurally_equal(a.kids[i], b.kids[i])) return false;
  return true;
}

namespace {

Dual eval_rec(const Expr& e, const Env& env, std::string_view seed) {
  auto fail = [&](const std::string& what) -> Dual {
    throw EvalError(what + " in '" + unparse(e) + "'", unparse(e));
  };
  switch (e.kind) {
    case NodeKind::Constant:
      return {e.number, 0.0};
    case NodeKind::Variable: {
      auto it = env.find(e.name);
      if (it == env.end())
        throw EvalError("unbound variable '" + e.name + "'", e.name);
      return {it->second, e.name == seed ? 1.0 : 0.0};
    }
    case NodeKind::Negate:
      return -eval_rec(e.kids[0], env, seed);
    case NodeKind::Add:
      return eval_rec(e.kids[0], env, seed) + eval_rec(e.kids[1], env, seed);
    case NodeKind::Sub:
      return eval_rec(e.kids[0], env, seed) - eval_rec(e.kids[1], env, seed);
    case NodeKind::Mul:
      return eval_rec(e.kids[0], env, seed) * eval_rec(e.kids[1], env, seed);
    case NodeKind::Div: {
      const Dual den = eval_rec(e.kids[1], env, seed);
      if (den.val == 0.0) return fail("division by zero");
      return eval_rec(e.kids[0], env, seed) / den;
    }
    case NodeKind::Pow: {
      const Dual b = eval_rec(e.kids[0], env, seed);
      const Dual x = eval_rec(e.kids[1], env, seed);
      if (x.der == 0.0 && is_integer(x.val)) {
        const long k = static_cast<long>(x.val);
        if (b.val == 0.0 && k < 0) return fail("division by zero");
        return int_pow(b, k);
      }
      if (b.val <= 0.0) return fail("non-integer power of non-positive base");
      const double v = std::pow(b.val, x.val);
      return {v, v * (x.der * std::log(b.val) + x.val * b.der / b.val)};
    }
    case NodeKind::Call: {
      const Dual a = eval_rec(e.kids[0], env, seed);
      switch (e.fn) {
        case Fn::Exp: {
          const double v = std::exp(a.val);
          return {v, a.der * v};
        }
        case Fn::Ln:
          if (a.val <= 0.0) return fail("log of non-positive value");
          return {std::log(a.val), a.der / a.val};
        case Fn::Sin: return {std::sin(a.val), a.der * std::cos(a.val)};
        case Fn::Cos: return {std::cos(a.val), -a.der * std::sin(a.val)};
        case Fn::Sqrt: {
          if (a.val < 0.0) return fail("square root of negative value");
          if (a.val == 0.0 && a.der != 0.0) return fail("square-root derivative at zero");
          const double v = std::sqrt(a.val);
          return {v, a.val == 0.0 ? 0.0 : a.der / (2.0 * v)};
        }
        case Fn::Abs:
          return {std::abs(a.val),
                  a.der * (a.val > 0.0 ? 1.0 : a.val < 0.0 ? -1.0 : 0.0)};
      }
      return fail("unknown function");
    }
  }
  return fail("malformed expression node");
}

}  // namespace

double eval(const Expr& e, const Env& env) { return eval_rec(e, env, {}).val; }

std::pair<double, double> eval_dual(const Expr& e, const Env& env,
                                    std::string_view seed) {
  const Dual d = eval_rec(e, env, seed);
  return {d.val, d.der};
}

BoundExpr bind(const Expr& e, std::span<const std::string> names) {
  BoundExpr b;
  b.source_ = std::make_shared<const Expr>(e);
  // post-order flatten
  struct Visitor {
    std::span<const std::string> names;
    std::vector<BoundExpr::Node>& nodes;
    int visit(const Expr& x) {
      BoundExpr::Node n{};
      n.kind = x.kind;
      n.number = x.number;
      n.fn = x.fn;
      if (x.kind == NodeKind::Variable) {
        n.var = -1;
        for (std::size_t i = 0; i < names.size(); ++i)
          if (names[i] == x.name) {
            n.var = static_cast<int>(i);
            break;
          }
        if (n.var < 0)
          throw EvalError("unbound variable '" + x.name + "'", x.name);
      }
      if (!x.kids.empty()) n.a = visit(x.kids[0]);
      if (x.kids.size() > 1) n.b = visit(x.kids[1]);
      nodes.push_back(n);
      return static_cast<int>(nodes.size()) - 1;
    }
  };
  Visitor v{names, b.nodes_};
  v.visit(e);
  return b;
}

Dual BoundExpr::eval_node(int idx, std::span<const double> values, int seed) const {
  const Node& n = nodes_[idx];
  auto fail = [&](const std::string& what) -> Dual {
    throw EvalError(what + " in '" + unparse(*source_) + "'", unparse(*source_));
  };
  switch (n.kind) {
    case NodeKind::Constant: return {n.number, 0.0};
    case NodeKind::Variable: return {values[n.var], n.var == seed ? 1.0 : 0.0};
    case NodeKind::Negate: return -eval_node(n.a, values, seed);
    case NodeKind::Add:
      return eval_node(n.a, values, seed) + eval_node(n.b, values, seed);
    case NodeKind::Sub:
      return eval_node(n.a, values, seed) - eval_node(n.b, values, seed);
    case NodeKind::Mul:
      return eval_node(n.a, values, seed) * eval_node(n.b, values, seed);
    case NodeKind::Div: {
      const Dual den = eval_node(n.b, values, seed);
      if (den.val == 0.0) return fail("division by zero");
      return eval_node(n.a, values, seed) / den;
    }
    case NodeKind::Pow: {
      const Dual b = eval_node(n.a, values, seed);
      const Dual x = eval_node(n.b, values, seed);
      if (x.der == 0.0 && is_integer(x.val)) {
        const long k = static_cast<long>(x.val);
        if (b.val == 0.0 && k < 0) return fail("division by zero");
        return int_pow(b, k);
      }
      if (b.val <= 0.0) return fail("non-integer power of non-positive base");
      const double v = std::pow(b.val, x.val);
      return {v, v * (x.der * std::log(b.val) + x.val * b.der / b.val)};
    }
    case NodeKind::Call: {
      const Dual a = eval_node(n.a, values, seed);
      switch (n.fn) {
        case Fn::Exp: {
          const double v = std::exp(a.val);
          return {v, a.der * v};
        }
        case Fn::Ln:
          if (a.val <= 0.0) return fail("log of non-positive value");
          return {std::log(a.val), a.der / a.val};
        case Fn::Sin: return {std::sin(a.val), a.der * std::cos(a.val)};
        case Fn::Cos: return {std::cos(a.val), -a.der * std::sin(a.val)};
        case Fn::Sqrt: {
          if (a.val < 0.0) return fail("square root of negative value");
          if (a.val == 0.0 && a.der != 0.0) return fail("square-root derivative at zero");
          const double v = std::sqrt(a.val);
          return {v, a.val == 0.0 ? 0.0 : a.der / (2.0 * v)};
        }
        case Fn::Abs:
          return {std::abs(a.val),
                  a.der * (a.val > 0.0 ? 1.0 : a.val < 0.0 ? -1.0 : 0.0)};
      }
      return fail("unknown function");
    }
  }
  return fail("malformed expression node");
}

double BoundExpr::eval(std::span<const double> values) const {
  return eval_node(static_cast<int>(nodes_.size()) - 1, values, -1).val;
}

Dual BoundExpr::eval_dual(std::span<const double> values, int seed_index) const {
  return eval_node(static_cast<int>(nodes_.size()) - 1, values, seed_index);
}

}  // namespace sfo::expr
