#include "lrtng/tape.hpp"

#include <string>
#include <unordered_map>

namespace lrtng {
namespace {

double apply(UnaryOp op, double x) {
  switch (op) {
    case UnaryOp::Neg:
      return -x;
    case UnaryOp::Sin:
      return std::sin(x);
    case UnaryOp::Cos:
      return std::cos(x);
    case UnaryOp::Tan:
      return std::tan(x);
    case UnaryOp::Tanh:
      return std::tanh(x);
    case UnaryOp::Exp:
      return std::exp(x);
    case UnaryOp::Ln:
      return std::log(x);
    case UnaryOp::Sqrt:
      return std::sqrt(x);
  }
  return x;
}

double ipow(double x, int n) {
  if (n < 0) return 1.0 / ipow(x, -n);
  double r = 1.0;
  for (int i = 0; i < n; ++i) r *= x;
  return r;
}

}  // namespace

Tape::Tape(const std::vector<Expr>& outputs, std::size_t num_inputs) : num_inputs_(num_inputs) {
  std::unordered_map<const Node*, std::uint32_t> slot;
  // Iterative post-order so deep expressions do not exhaust the stack.
  auto compile = [&](const Expr& root) -> std::uint32_t {
    std::vector<std::pair<const Expr*, bool>> stack{{&root, false}};
    while (!stack.empty()) {
      auto [e, expanded] = stack.back();
      stack.pop_back();
      if (slot.count(e->id())) continue;
      if (!expanded) {
        stack.emplace_back(e, true);
        if (!e->rhs().empty()) stack.emplace_back(&e->rhs(), false);
        if (!e->lhs().empty()) stack.emplace_back(&e->lhs(), false);
        continue;
      }
      Instr ins{};
      switch (e->kind()) {
        case NodeKind::Constant:
          ins.op = Op::Const;
          ins.value = e->value();
          break;
        case NodeKind::Variable:
          ins.op = Op::Var;
          ins.a = static_cast<std::uint32_t>(e->var());
          num_inputs_ = std::max(num_inputs_, e->var() + 1);
          break;
        case NodeKind::Power:
          ins.op = Op::Pow;
          ins.a = slot.at(e->lhs().id());
          ins.exponent = e->exponent();
          break;
        case NodeKind::Unary:
          ins.op = static_cast<Op>(static_cast<int>(Op::Neg) + static_cast<int>(e->unary_op()));
          ins.a = slot.at(e->lhs().id());
          break;
        case NodeKind::Binary:
          ins.op = static_cast<Op>(static_cast<int>(Op::Add) + static_cast<int>(e->binary_op()));
          ins.a = slot.at(e->lhs().id());
          ins.b = slot.at(e->rhs().id());
          break;
      }
      slot.emplace(e->id(), static_cast<std::uint32_t>(code_.size()));
      code_.push_back(ins);
      sources_.push_back(*e);
    }
    return slot.at(root.id());
  };
  for (const auto& out : outputs) outputs_.push_back(compile(out));
}

template <class T>
void Tape::run(std::span<const T> in, std::vector<T>& s) const {
  if (in.size() < num_inputs_) throw UsageError("tape evaluated with too few inputs");
  s.resize(code_.size());
  std::size_t i = 0;
  try {
    for (; i < code_.size(); ++i) {
      const Instr& ins = code_[i];
      switch (ins.op) {
        case Op::Const:
          s[i] = T(ins.value);
          break;
        case Op::Var:
          s[i] = in[ins.a];
          break;
        case Op::Neg:
          s[i] = -s[ins.a];
          break;
        case Op::Add:
          s[i] = s[ins.a] + s[ins.b];
          break;
        case Op::Sub:
          s[i] = s[ins.a] - s[ins.b];
          break;
        case Op::Mul:
          s[i] = s[ins.a] * s[ins.b];
          break;
        case Op::Div:
          s[i] = s[ins.a] / s[ins.b];
          break;
        case Op::Pow:
          if constexpr (std::is_same_v<T, double>) {
            s[i] = ipow(s[ins.a], ins.exponent);
          } else {
            s[i] = pow(s[ins.a], ins.exponent);
          }
          break;
        default: {
          const auto op = static_cast<UnaryOp>(static_cast<int>(ins.op) - static_cast<int>(Op::Neg));
          if constexpr (std::is_same_v<T, double>) {
            s[i] = apply(op, s[ins.a]);
          } else {
            const Interval& x = s[ins.a];
            switch (op) {
              case UnaryOp::Sin:
                s[i] = sin(x);
                break;
              case UnaryOp::Cos:
                s[i] = cos(x);
                break;
              case UnaryOp::Tan:
                s[i] = tan(x);
                break;
              case UnaryOp::Tanh:
                s[i] = tanh(x);
                break;
              case UnaryOp::Exp:
                s[i] = exp(x);
                break;
              case UnaryOp::Ln:
                s[i] = log(x);
                break;
              case UnaryOp::Sqrt:
                s[i] = sqrt(x);
                break;
              case UnaryOp::Neg:
                s[i] = -x;
                break;
            }
          }
          break;
        }
      }
    }
  } catch (const DomainError& err) {
    std::string where = to_string(sources_[i]);
    if (where.size() > 160) where = where.substr(0, 157) + "...";
    throw DomainError(std::string(err.what()) + " in '" + where + "'");
  }
}

void Tape::eval(std::span<const double> in, std::span<double> out, std::vector<double>& scratch) const {
  run<double>(in, scratch);
  for (std::size_t k = 0; k < outputs_.size(); ++k) out[k] = scratch[outputs_[k]];
}

void Tape::eval(std::span<const Interval> in, std::span<Interval> out, std::vector<Interval>& scratch) const {
  run<Interval>(in, scratch);
  for (std::size_t k = 0; k < outputs_.size(); ++k) out[k] = scratch[outputs_[k]];
}

std::vector<double> Tape::eval(std::span<const double> in) const {
  std::vector<double> out(outputs_.size());
  std::vector<double> scratch;
  eval(in, out, scratch);
  return out;
}

std::vector<Interval> Tape::eval(std::span<const Interval> in) const {
  std::vector<Interval> out(outputs_.size());
  std::vector<Interval> scratch;
  eval(in, out, scratch);
  return out;
}

Vector Tape::eval(const Vector& in) const {
  Vector out(static_cast<Eigen::Index>(outputs_.size()));
  std::vector<double> scratch;
  eval(std::span<const double>(in.data(), static_cast<std::size_t>(in.size())),
       std::span<double>(out.data(), static_cast<std::size_t>(out.size())), scratch);
  return out;
}

Box Tape::eval(const Box& in) const {
  std::vector<Interval> xs(in.begin(), in.end());
  return Box(eval(std::span<const Interval>(xs)));
}

}  // namespace lrtng
