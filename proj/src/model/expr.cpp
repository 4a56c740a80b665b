#include "lrtng/expr.hpp"

#include <bit>
#include <charconv>
#include <mutex>
#include <optional>
#include <unordered_set>

#include "lrtng/errors.hpp"
#include "lrtng/rounding.hpp"

namespace lrtng {

struct NodeFactory {
  struct Key {
    NodeKind kind;
    std::uint64_t value_bits;
    std::size_t var;
    int op;
    int exponent;
    const Node* lhs;
    const Node* rhs;
    bool operator==(const Key&) const = default;
  };
  struct KeyHash {
    std::size_t operator()(const Key& k) const {
      std::size_t h = static_cast<std::size_t>(k.kind);
      auto mix = [&h](std::size_t v) { h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2); };
      mix(k.value_bits);
      mix(k.var);
      mix(static_cast<std::size_t>(k.op));
      mix(static_cast<std::size_t>(k.exponent));
      mix(std::hash<const Node*>()(k.lhs));
      mix(std::hash<const Node*>()(k.rhs));
      return h;
    }
  };

  static NodeFactory& instance() {
    static NodeFactory f;
    return f;
  }

  Expr make(Node proto) {
    const Key key{proto.kind,
                  std::bit_cast<std::uint64_t>(proto.value),
                  proto.var,
                  proto.kind == NodeKind::Unary ? static_cast<int>(proto.uop) : static_cast<int>(proto.bop),
                  proto.exponent,
                  proto.lhs_child.id(),
                  proto.rhs_child.id()};
    std::lock_guard lock(mutex_);
    if (auto it = table_.find(key); it != table_.end()) {
      if (auto alive = it->second.lock()) return Expr(std::move(alive));
    }
    auto node = std::make_shared<const Node>(std::move(proto));
    table_[key] = node;
    if (table_.size() > 2 * live_hint_ + 1024) prune();
    return Expr(std::move(node));
  }

 private:
  void prune() {
    for (auto it = table_.begin(); it != table_.end();) {
      it = it->second.expired() ? table_.erase(it) : std::next(it);
    }
    live_hint_ = table_.size();
  }

  std::mutex mutex_;
  std::unordered_map<Key, std::weak_ptr<const Node>, KeyHash> table_;
  std::size_t live_hint_ = 0;
};

namespace {

Expr make_constant(double v) {
  Node n;
  n.kind = NodeKind::Constant;
  n.value = v == 0.0 ? 0.0 : v;  // fold -0 into +0
  return NodeFactory::instance().make(std::move(n));
}

std::optional<double> exact_add(double a, double b) {
  const double lo = rounding::add_down(a, b);
  const double hi = rounding::add_up(a, b);
  if (lo == hi && std::isfinite(lo)) return lo;
  return std::nullopt;
}

std::optional<double> exact_mul(double a, double b) {
  const double lo = rounding::mul_down(a, b);
  const double hi = rounding::mul_up(a, b);
  if (lo == hi && std::isfinite(lo)) return lo;
  return std::nullopt;
}

std::optional<double> exact_div(double a, double b) {
  if (b == 0.0) return std::nullopt;
  const double lo = rounding::div_down(a, b);
  const double hi = rounding::div_up(a, b);
  if (lo == hi && std::isfinite(lo)) return lo;
  return std::nullopt;
}

std::optional<double> exact_pow(double a, int n) {
  if (n < 0) {
    auto p = exact_pow(a, -n);
    if (!p) return std::nullopt;
    return exact_div(1.0, *p);
  }
  double r = 1.0;
  for (int i = 0; i < n; ++i) {
    auto next = exact_mul(r, a);
    if (!next) return std::nullopt;
    r = *next;
  }
  return r;
}

}  // namespace

Expr Expr::constant(double value) {
  if (!std::isfinite(value)) throw UsageError("non-finite constant in expression");
  return make_constant(value);
}

Expr Expr::variable(std::size_t index) {
  Node n;
  n.kind = NodeKind::Variable;
  n.var = index;
  n.arity = index + 1;
  return NodeFactory::instance().make(std::move(n));
}

Expr Expr::unary(UnaryOp op, const Expr& child) {
  if (child.is_constant()) {
    const double c = child.value();
    switch (op) {
      case UnaryOp::Neg:
        return make_constant(-c);
      case UnaryOp::Sin:
      case UnaryOp::Tan:
      case UnaryOp::Tanh:
        if (c == 0.0) return make_constant(0.0);
        break;
      case UnaryOp::Cos:
      case UnaryOp::Exp:
        if (c == 0.0) return make_constant(1.0);
        break;
      case UnaryOp::Ln:
        if (c == 1.0) return make_constant(0.0);
        break;
      case UnaryOp::Sqrt:
        if (c >= 0.0 && rounding::sqrt_down(c) == rounding::sqrt_up(c)) return make_constant(std::sqrt(c));
        break;
    }
  }
  if (op == UnaryOp::Neg && child.kind() == NodeKind::Unary && child.unary_op() == UnaryOp::Neg) {
    return child.lhs();
  }
  Node n;
  n.kind = NodeKind::Unary;
  n.uop = op;
  n.lhs_child = child;
  n.arity = child.arity();
  return NodeFactory::instance().make(std::move(n));
}

Expr Expr::binary(BinaryOp op, const Expr& lhs, const Expr& rhs) {
  const bool lc = lhs.is_constant();
  const bool rc = rhs.is_constant();
  if (lc && rc) {
    std::optional<double> folded;
    switch (op) {
      case BinaryOp::Add:
        folded = exact_add(lhs.value(), rhs.value());
        break;
      case BinaryOp::Sub:
        folded = exact_add(lhs.value(), -rhs.value());
        break;
      case BinaryOp::Mul:
        folded = exact_mul(lhs.value(), rhs.value());
        break;
      case BinaryOp::Div:
        folded = exact_div(lhs.value(), rhs.value());
        break;
    }
    if (folded) return make_constant(*folded);
  }
  switch (op) {
    case BinaryOp::Add:
      if (lhs.is_constant(0.0)) return rhs;
      if (rhs.is_constant(0.0)) return lhs;
      break;
    case BinaryOp::Sub:
      if (rhs.is_constant(0.0)) return lhs;
      if (lhs.is_constant(0.0)) return unary(UnaryOp::Neg, rhs);
      break;
    case BinaryOp::Mul:
      if (lhs.is_constant(0.0) || rhs.is_constant(0.0)) return make_constant(0.0);
      if (lhs.is_constant(1.0)) return rhs;
      if (rhs.is_constant(1.0)) return lhs;
      if (lhs.is_constant(-1.0)) return unary(UnaryOp::Neg, rhs);
      if (rhs.is_constant(-1.0)) return unary(UnaryOp::Neg, lhs);
      break;
    case BinaryOp::Div:
      if (rhs.is_constant(1.0)) return lhs;
      if (lhs.is_constant(0.0) && !rhs.is_constant(0.0)) return make_constant(0.0);
      break;
  }
  Node n;
  n.kind = NodeKind::Binary;
  n.bop = op;
  n.lhs_child = lhs;
  n.rhs_child = rhs;
  n.arity = std::max(lhs.arity(), rhs.arity());
  return NodeFactory::instance().make(std::move(n));
}

Expr Expr::power(const Expr& base, int exponent) {
  if (exponent == 0) return make_constant(1.0);
  if (exponent == 1) return base;
  if (base.is_constant()) {
    if (auto p = exact_pow(base.value(), exponent)) return make_constant(*p);
  }
  Node n;
  n.kind = NodeKind::Power;
  n.exponent = exponent;
  n.lhs_child = base;
  n.arity = base.arity();
  return NodeFactory::instance().make(std::move(n));
}

NodeKind Expr::kind() const { return node_->kind; }
double Expr::value() const { return node_->value; }
std::size_t Expr::var() const { return node_->var; }
UnaryOp Expr::unary_op() const { return node_->uop; }
BinaryOp Expr::binary_op() const { return node_->bop; }
int Expr::exponent() const { return node_->exponent; }
const Expr& Expr::lhs() const { return node_->lhs_child; }
const Expr& Expr::rhs() const { return node_->rhs_child; }
std::size_t Expr::arity() const { return node_->arity; }

Expr operator+(const Expr& a, const Expr& b) { return Expr::binary(BinaryOp::Add, a, b); }
Expr operator-(const Expr& a, const Expr& b) { return Expr::binary(BinaryOp::Sub, a, b); }
Expr operator*(const Expr& a, const Expr& b) { return Expr::binary(BinaryOp::Mul, a, b); }
Expr operator/(const Expr& a, const Expr& b) { return Expr::binary(BinaryOp::Div, a, b); }
Expr operator-(const Expr& a) { return Expr::unary(UnaryOp::Neg, a); }
Expr pow(const Expr& base, int exponent) { return Expr::power(base, exponent); }
Expr sin(const Expr& e) { return Expr::unary(UnaryOp::Sin, e); }
Expr cos(const Expr& e) { return Expr::unary(UnaryOp::Cos, e); }
Expr tan(const Expr& e) { return Expr::unary(UnaryOp::Tan, e); }
Expr tanh(const Expr& e) { return Expr::unary(UnaryOp::Tanh, e); }
Expr exp(const Expr& e) { return Expr::unary(UnaryOp::Exp, e); }
Expr ln(const Expr& e) { return Expr::unary(UnaryOp::Ln, e); }
Expr sqrt(const Expr& e) { return Expr::unary(UnaryOp::Sqrt, e); }

Expr Differentiator::operator()(const Expr& e, std::size_t var) {
  if (var >= e.arity()) return Expr::constant(0.0);
  const Key key{e.id(), var};
  if (auto it = memo_.find(key); it != memo_.end()) return it->second.second;

  Expr d;
  switch (e.kind()) {
    case NodeKind::Constant:
      d = Expr::constant(0.0);
      break;
    case NodeKind::Variable:
      d = Expr::constant(e.var() == var ? 1.0 : 0.0);
      break;
    case NodeKind::Power: {
      const Expr& u = e.lhs();
      const int n = e.exponent();
      d = Expr::constant(static_cast<double>(n)) * pow(u, n - 1) * (*this)(u, var);
      break;
    }
    case NodeKind::Unary: {
      const Expr& u = e.lhs();
      const Expr du = (*this)(u, var);
      if (du.is_constant(0.0)) {
        d = du;
        break;
      }
      switch (e.unary_op()) {
        case UnaryOp::Neg:
          d = -du;
          break;
        case UnaryOp::Sin:
          d = cos(u) * du;
          break;
        case UnaryOp::Cos:
          d = -(sin(u) * du);
          break;
        case UnaryOp::Tan:
          d = (Expr::constant(1.0) + pow(e, 2)) * du;
          break;
        case UnaryOp::Tanh:
          d = (Expr::constant(1.0) - pow(e, 2)) * du;
          break;
        case UnaryOp::Exp:
          d = e * du;
          break;
        case UnaryOp::Ln:
          d = du / u;
          break;
        case UnaryOp::Sqrt:
          d = du / (Expr::constant(2.0) * e);
          break;
      }
      break;
    }
    case NodeKind::Binary: {
      const Expr& u = e.lhs();
      const Expr& v = e.rhs();
      const Expr du = (*this)(u, var);
      const Expr dv = (*this)(v, var);
      switch (e.binary_op()) {
        case BinaryOp::Add:
          d = du + dv;
          break;
        case BinaryOp::Sub:
          d = du - dv;
          break;
        case BinaryOp::Mul:
          d = du * v + u * dv;
          break;
        case BinaryOp::Div:
          if (dv.is_constant(0.0)) {
            d = du / v;
          } else {
            d = (du * v - u * dv) / pow(v, 2);
          }
          break;
      }
      break;
    }
  }
  memo_.emplace(key, std::make_pair(e, d));
  return d;
}

Expr differentiate(const Expr& e, std::size_t var) {
  Differentiator d;
  return d(e, var);
}

namespace {

Expr substitute_rec(const Expr& e, const std::vector<Expr>& repl,
                    std::unordered_map<const Node*, std::pair<Expr, Expr>>& memo) {
  if (auto it = memo.find(e.id()); it != memo.end()) return it->second.second;
  Expr r;
  switch (e.kind()) {
    case NodeKind::Constant:
      r = e;
      break;
    case NodeKind::Variable:
      r = e.var() < repl.size() ? repl[e.var()] : e;
      break;
    case NodeKind::Unary:
      r = Expr::unary(e.unary_op(), substitute_rec(e.lhs(), repl, memo));
      break;
    case NodeKind::Power:
      r = Expr::power(substitute_rec(e.lhs(), repl, memo), e.exponent());
      break;
    case NodeKind::Binary:
      r = Expr::binary(e.binary_op(), substitute_rec(e.lhs(), repl, memo), substitute_rec(e.rhs(), repl, memo));
      break;
  }
  memo.emplace(e.id(), std::make_pair(e, r));
  return r;
}

}  // namespace

Expr substitute(const Expr& e, const std::vector<Expr>& replacements) {
  std::unordered_map<const Node*, std::pair<Expr, Expr>> memo;
  return substitute_rec(e, replacements, memo);
}

Expr lie_derivative(const Expr& g, const std::vector<Expr>& field, Differentiator& d) {
  Expr sum = Expr::constant(0.0);
  for (std::size_t k = 0; k < field.size(); ++k) {
    const Expr dk = d(g, k);
    if (dk.is_constant(0.0) || field[k].is_constant(0.0)) continue;
    sum = sum + dk * field[k];
  }
  return sum;
}

const char* op_name(UnaryOp op) {
  switch (op) {
    case UnaryOp::Neg:
      return "-";
    case UnaryOp::Sin:
      return "sin";
    case UnaryOp::Cos:
      return "cos";
    case UnaryOp::Tan:
      return "tan";
    case UnaryOp::Tanh:
      return "tanh";
    case UnaryOp::Exp:
      return "exp";
    case UnaryOp::Ln:
      return "ln";
    case UnaryOp::Sqrt:
      return "sqrt";
  }
  return "?";
}

namespace {

constexpr int kPrecAdd = 1;
constexpr int kPrecMul = 2;
constexpr int kPrecNeg = 3;
constexpr int kPrecAtom = 5;

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

int precedence(const Expr& e) {
  switch (e.kind()) {
    case NodeKind::Constant:
      return e.value() < 0.0 ? kPrecAtom : kPrecAtom;
    case NodeKind::Variable:
      return kPrecAtom;
    case NodeKind::Power:
      return 4;
    case NodeKind::Unary:
      return e.unary_op() == UnaryOp::Neg ? kPrecNeg : kPrecAtom;
    case NodeKind::Binary:
      return (e.binary_op() == BinaryOp::Add || e.binary_op() == BinaryOp::Sub) ? kPrecAdd : kPrecMul;
  }
  return kPrecAtom;
}

void print(const Expr& e, int min_prec, std::string& out) {
  const bool paren = precedence(e) < min_prec;
  if (paren) out += '(';
  switch (e.kind()) {
    case NodeKind::Constant:
      if (e.value() < 0.0) {
        out += "(-" + format_double(-e.value()) + ")";
      } else {
        out += format_double(e.value());
      }
      break;
    case NodeKind::Variable:
      out += "x" + std::to_string(e.var() + 1);
      break;
    case NodeKind::Power:
      print(e.lhs(), kPrecAtom, out);
      out += "^" + std::to_string(e.exponent());
      break;
    case NodeKind::Unary:
      if (e.unary_op() == UnaryOp::Neg) {
        out += '-';
        print(e.lhs(), kPrecNeg, out);
      } else {
        out += op_name(e.unary_op());
        out += '(';
        print(e.lhs(), 0, out);
        out += ')';
      }
      break;
    case NodeKind::Binary: {
      const int p = precedence(e);
      print(e.lhs(), p, out);
      switch (e.binary_op()) {
        case BinaryOp::Add:
          out += " + ";
          break;
        case BinaryOp::Sub:
          out += " - ";
          break;
        case BinaryOp::Mul:
          out += "*";
          break;
        case BinaryOp::Div:
          out += "/";
          break;
      }
      // Right operands bind tighter so "a - (b - c)" keeps its grouping.
      print(e.rhs(), p == kPrecAdd ? kPrecMul : kPrecNeg, out);
      break;
    }
  }
  if (paren) out += ')';
}

}  // namespace

std::string to_string(const Expr& e) {
  std::string out;
  print(e, 0, out);
  return out;
}

std::size_t dag_size(const std::vector<Expr>& roots) {
  std::unordered_set<const Node*> seen;
  std::vector<const Expr*> stack;
  for (const auto& r : roots) stack.push_back(&r);
  while (!stack.empty()) {
    const Expr* e = stack.back();
    stack.pop_back();
    if (!seen.insert(e->id()).second) continue;
    if (!e->lhs().empty()) stack.push_back(&e->lhs());
    if (!e->rhs().empty()) stack.push_back(&e->rhs());
  }
  return seen.size();
}

}  // namespace lrtng
