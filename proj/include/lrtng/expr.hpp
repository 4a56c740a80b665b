#pragma once

// Immutable expression trees for ODE right-hand sides.
//
// Nodes are hash-consed: two structurally identical expressions share one
// node, so pointer equality is structural equality and memoized passes
// (differentiation, substitution) reuse work across a whole DAG.

#include <cstddef>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

namespace lrtng {

enum class NodeKind { Constant, Variable, Unary, Binary, Power };
enum class UnaryOp { Neg, Sin, Cos, Tan, Tanh, Exp, Ln, Sqrt };
enum class BinaryOp { Add, Sub, Mul, Div };

struct Node;

class Expr {
 public:
  /// Empty handle; only valid as a placeholder to assign into.
  Expr() = default;

  static Expr constant(double value);
  static Expr variable(std::size_t index);
  static Expr unary(UnaryOp op, const Expr& child);
  static Expr binary(BinaryOp op, const Expr& lhs, const Expr& rhs);
  static Expr power(const Expr& base, int exponent);

  NodeKind kind() const;
  double value() const;          // Constant
  std::size_t var() const;       // Variable
  UnaryOp unary_op() const;      // Unary
  BinaryOp binary_op() const;    // Binary
  int exponent() const;          // Power
  const Expr& lhs() const;       // Unary / Power child, Binary left
  const Expr& rhs() const;       // Binary right

  bool empty() const { return node_ == nullptr; }
  bool is_constant() const { return kind() == NodeKind::Constant; }
  bool is_constant(double v) const { return is_constant() && value() == v; }
  /// Largest variable index + 1 appearing in the expression (0 if none).
  std::size_t arity() const;

  const Node* id() const { return node_.get(); }
  friend bool operator==(const Expr& a, const Expr& b) { return a.node_ == b.node_; }

 private:
  explicit Expr(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
  friend struct NodeFactory;
  std::shared_ptr<const Node> node_;
};

struct Node {
  NodeKind kind = NodeKind::Constant;
  double value = 0.0;
  std::size_t var = 0;
  UnaryOp uop = UnaryOp::Neg;
  BinaryOp bop = BinaryOp::Add;
  int exponent = 0;
  Expr lhs_child;
  Expr rhs_child;
  std::size_t arity = 0;
};

Expr operator+(const Expr& a, const Expr& b);
Expr operator-(const Expr& a, const Expr& b);
Expr operator*(const Expr& a, const Expr& b);
Expr operator/(const Expr& a, const Expr& b);
Expr operator-(const Expr& a);
Expr pow(const Expr& base, int exponent);
Expr sin(const Expr& e);
Expr cos(const Expr& e);
Expr tan(const Expr& e);
Expr tanh(const Expr& e);
Expr exp(const Expr& e);
Expr ln(const Expr& e);
Expr sqrt(const Expr& e);

/// Symbolic partial derivative with respect to variable `var`.
Expr differentiate(const Expr& e, std::size_t var);

/// Memoizing differentiator; reuse one instance for many related derivatives.
class Differentiator {
 public:
  Expr operator()(const Expr& e, std::size_t var);

 private:
  struct Key {
    const Node* node;
    std::size_t var;
    bool operator==(const Key&) const = default;
  };
  struct KeyHash {
    std::size_t operator()(const Key& k) const {
      return std::hash<const Node*>()(k.node) ^ (k.var * 0x9e3779b97f4a7c15ULL);
    }
  };
  // Holds the source node alive so its address stays unique.
  std::unordered_map<Key, std::pair<Expr, Expr>, KeyHash> memo_;
};

/// Replaces every variable k by replacements[k] (k < replacements.size()).
Expr substitute(const Expr& e, const std::vector<Expr>& replacements);

/// Lie derivative of g along the vector field f: sum_k (dg/dx_k) f_k.
Expr lie_derivative(const Expr& g, const std::vector<Expr>& field, Differentiator& d);

/// Infix rendering with variables named x1, x2, ...; reparses to the same node.
std::string to_string(const Expr& e);

/// Number of distinct nodes reachable from the given roots.
std::size_t dag_size(const std::vector<Expr>& roots);

const char* op_name(UnaryOp op);

}  // namespace lrtng
