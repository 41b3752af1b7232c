#pragma once

#include <cmath>
#include <map>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace sfo::expr {

/// Forward-mode dual number: value plus one directional derivative.
struct Dual {
  double val = 0.0;
  double der = 0.0;

  Dual() = default;
  Dual(double v) : val(v) {}
  Dual(double v, double d) : val(v), der(d) {}

  Dual operator-() const { return {-val, -der}; }
  Dual operator+(const Dual& o) const { return {val + o.val, der + o.der}; }
  Dual operator-(const Dual& o) const { return {val - o.val, der - o.der}; }
  Dual operator*(const Dual& o) const {
    return {val * o.val, der * o.val + val * o.der};
  }
  Dual operator/(const Dual& o) const {
    const double q = val / o.val;
    return {q, (der - q * o.der) / o.val};
  }
};

enum class NodeKind { Constant, Variable, Negate, Add, Sub, Mul, Div, Pow, Call };
enum class Fn { Exp, Ln, Sin, Cos, Sqrt, Abs };

/// Immutable expression tree. Value semantics; children owned by the node.
struct Expr {
  NodeKind kind = NodeKind::Constant;
  double number = 0.0;     // Constant
  std::string name;        // Variable
  Fn fn = Fn::Exp;         // Call
  std::vector<Expr> kids;

  static Expr constant(double v);
  static Expr variable(std::string name);
};

struct ParseError : std::runtime_error {
  std::size_t offset;
  std::string expected;
  ParseError(std::string msg, std::size_t off, std::string exp)
      : std::runtime_error(std::move(msg)), offset(off), expected(std::move(exp)) {}
};

struct EvalError : std::runtime_error {
  std::string subexpr;  // offending subexpression, unparsed
  EvalError(std::string msg, std::string sub)
      : std::runtime_error(std::move(msg)), subexpr(std::move(sub)) {}
};

Expr parse(std::string_view source);
std::string unparse(const Expr& e);
bool structurally_equal(const Expr& a, const Expr& b);

using Env = std::map<std::string, double, std::less<>>;

double eval(const Expr& e, const Env& env);
/// Value and exact partial derivative with respect to the seed variable.
std::pair<double, double> eval_dual(const Expr& e, const Env& env,
                                    std::string_view seed);

/// Expression with variable references resolved to slot indices, for hot paths.
class BoundExpr {
 public:
  BoundExpr() = default;
  double eval(std::span<const double> values) const;
  Dual eval_dual(std::span<const double> values, int seed_index) const;

 private:
  struct Node {
    NodeKind kind;
    double number;
    int var = -1;
    Fn fn = Fn::Exp;
    int a = -1, b = -1;  // child slots
  };
  std::vector<Node> nodes_;  // post-order, root last
  std::shared_ptr<const Expr> source_;  // for error reporting
  friend BoundExpr bind(const Expr&, std::span<const std::string>);
  Dual eval_node(int idx, std::span<const double> values, int seed) const;
};

/// Resolves every variable in `e` against `names`; throws EvalError on unknowns.
BoundExpr bind(const Expr& e, std::span<const std::string> names);

}  // namespace sfo::expr
