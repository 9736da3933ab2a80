#pragma once

#include <cstdint>
#include <functional>
#include <initializer_list>
#include <vector>

#include "hirpcn/ad/matrix.hpp"
#include "hirpcn/ad/param_store.hpp"

namespace hirpcn::ad {

class Tape;

/// Handle to a value recorded on a tape.
struct Var {
  Tape* tape = nullptr;
  std::uint32_t id = 0;

  const Matrix& value() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
};

/// Reverse-mode tape. Nodes are appended in evaluation order, so recording
/// order is a topological order and backward() walks it in reverse.
/// A tape and its values are confined to one thread.
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, std::uint32_t self)>;

  /// With grad disabled nothing is retained for backward (inference mode).
  explicit Tape(bool grad_enabled = true) : grad_enabled_(grad_enabled) {}

  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool grad_enabled() const noexcept { return grad_enabled_; }

  Var constant(Matrix value);
  /// Leaf bound to a parameter; backward adds into p.grad.
  Var parameter(Parameter& p);
  /// Records an op result. It requires grad when any input does.
  Var record(Matrix value, std::initializer_list<Var> inputs, BackwardFn backward);
  Var record(Matrix value, const std::vector<Var>& inputs, BackwardFn backward);

  const Matrix& value(std::uint32_t id) const {
    const auto& n = nodes_[id];
    return n.param_value ? *n.param_value : n.value;
  }
  bool requires_grad(std::uint32_t id) const { return nodes_[id].requires_grad; }
  /// Gradient buffer of a node, zero-initialised on first access.
  Matrix& grad(std::uint32_t id);
  /// grad(id) += g when the node requires grad.
  void accumulate(std::uint32_t id, const Matrix& g);

  /// Seeds d(loss)/d(loss) = 1 and propagates to every parameter leaf.
  /// Throws NotScalar or NotRecorded.
  void backward(Var loss);

  std::size_t size() const noexcept { return nodes_.size(); }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    bool requires_grad = false;
    Parameter* param = nullptr;
    BackwardFn backward;
    const Matrix* param_value = nullptr;  // parameter leaves read in place
  };

  std::vector<Node> nodes_;
  bool grad_enabled_;
};

}  // namespace hirpcn::ad
