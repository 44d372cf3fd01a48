#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "antipure/tensor.hpp"

namespace antipure {

class Tape;

// Handle to a value recorded on a Tape. Cheap to copy; valid while the tape lives.
struct Var {
  Tape* tape = nullptr;
  std::size_t id = 0;

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  bool requires_grad() const;
};

// Gradient buffers for the parents of the node being back-propagated.
class GradSink {
 public:
  // True when parent `i` leads to a marked leaf; skip its adjoint otherwise.
  bool wants(std::size_t i) const;
  // Zero-initialized on first access.
  Tensor& grad(std::size_t i);

 private:
  friend class Tape;
  GradSink(Tape& tape, std::span<const std::size_t> parents) : tape_(tape), parents_(parents) {}
  Tape& tape_;
  std::span<const std::size_t> parents_;
};

using BackwardFn = std::function<void(const Tensor& grad_out, GradSink& sink)>;

// Append-only record of primitive operations. Rebuilt per loss evaluation.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var leaf(Tensor value);
  Var constant(Tensor value);
  Var record(Tensor value, std::vector<std::size_t> parents, BackwardFn backward);

  const Tensor& value(std::size_t id) const { return nodes_.at(id).value; }
  bool requires_grad(std::size_t id) const { return nodes_.at(id).requires_grad; }
  bool is_leaf(std::size_t id) const { return nodes_.at(id).leaf; }
  std::size_t size() const { return nodes_.size(); }

  // Reverse sweep from a scalar `loss`; returns d loss / d leaf for each leaf.
  std::vector<Tensor> gradients(Var loss, std::span<const Var> leaves);

 private:
  friend class GradSink;
  struct Node {
    Tensor value;
    std::vector<std::size_t> parents;
    BackwardFn backward;
    bool requires_grad = false;
    bool leaf = false;
  };
  std::vector<Node> nodes_;
  std::vector<Tensor> grads_;
};

// d loss / d leaf. A leaf that does not belong to `tape` yields zeros and a warning on stderr.
Tensor backward(Var loss, Tape& tape, Var leaf);

}  // namespace antipure
