#include "hirpcn/ad/tape.hpp"

#include "hirpcn/error.hpp"

namespace hirpcn::ad {

const Matrix& Var::value() const { return tape->value(id); }

Var Tape::constant(Matrix value) {
  nodes_.push_back(Node{std::move(value), {}, false, nullptr, {}});
  return {this, static_cast<std::uint32_t>(nodes_.size() - 1)};
}

Var Tape::parameter(Parameter& p) {
  nodes_.push_back(Node{{}, {}, grad_enabled_, grad_enabled_ ? &p : nullptr, {}, &p.value});
  return {this, static_cast<std::uint32_t>(nodes_.size() - 1)};
}

Var Tape::record(Matrix value, std::initializer_list<Var> inputs, BackwardFn backward) {
  bool needs = false;
  if (grad_enabled_) {
    for (const Var& v : inputs) needs = needs || nodes_[v.id].requires_grad;
  }
  nodes_.push_back(Node{std::move(value), {}, needs, nullptr, needs ? std::move(backward) : BackwardFn{}});
  return {this, static_cast<std::uint32_t>(nodes_.size() - 1)};
}

Var Tape::record(Matrix value, const std::vector<Var>& inputs, BackwardFn backward) {
  bool needs = false;
  if (grad_enabled_) {
    for (const Var& v : inputs) needs = needs || nodes_[v.id].requires_grad;
  }
  nodes_.push_back(Node{std::move(value), {}, needs, nullptr, needs ? std::move(backward) : BackwardFn{}});
  return {this, static_cast<std::uint32_t>(nodes_.size() - 1)};
}

Matrix& Tape::grad(std::uint32_t id) {
  auto& n = nodes_[id];
  const Matrix& v = n.param_value ? *n.param_value : n.value;
  if (n.grad.empty() && !v.empty()) n.grad = Matrix(v.rows(), v.cols());
  return n.grad;
}

void Tape::accumulate(std::uint32_t id, const Matrix& g) {
  if (!nodes_[id].requires_grad) return;
  grad(id) += g;
}

void Tape::backward(Var loss) {
  if (loss.tape != this) throw Error(ErrorCode::NotRecorded, "loss belongs to another tape");
  const auto& top = nodes_[loss.id];
  if (value(loss.id).size() != 1) {
    throw Error(ErrorCode::NotScalar, "loss has shape " + shape_string(value(loss.id)));
  }
  if (!top.requires_grad) throw Error(ErrorCode::NotRecorded, "loss does not depend on any parameter");
  grad(loss.id)[0] += 1.0;
  for (std::uint32_t i = loss.id + 1; i-- > 0;) {
    auto& n = nodes_[i];
    if (!n.requires_grad || n.grad.empty()) continue;
    if (n.param) {
      n.param->grad += n.grad;
    } else if (n.backward) {
      n.backward(*this, i);
    }
  }
}

}  // namespace hirpcn::ad
