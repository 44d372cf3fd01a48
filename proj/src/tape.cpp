#include "antipure/tape.hpp"

#include <iostream>
#include <stdexcept>

namespace antipure {

const Tensor& Var::value() const { return tape->value(id); }
bool Var::requires_grad() const { return tape->requires_grad(id); }

bool GradSink::wants(std::size_t i) const { return tape_.nodes_[parents_[i]].requires_grad; }

Tensor& GradSink::grad(std::size_t i) {
  const std::size_t pid = parents_[i];
  Tensor& g = tape_.grads_[pid];
  if (g.size() == 0 && tape_.nodes_[pid].value.size() != 0) {
    g = Tensor::zeros_like(tape_.nodes_[pid].value);
  }
  return g;
}

Var Tape::leaf(Tensor value) {
  nodes_.push_back(Node{std::move(value), {}, {}, true, true});
  return Var{this, nodes_.size() - 1};
}

Var Tape::constant(Tensor value) {
  nodes_.push_back(Node{std::move(value), {}, {}, false, false});
  return Var{this, nodes_.size() - 1};
}

Var Tape::record(Tensor value, std::vector<std::size_t> parents, BackwardFn backward) {
  bool rg = false;
  for (std::size_t p : parents) rg = rg || nodes_.at(p).requires_grad;
  nodes_.push_back(Node{std::move(value), std::move(parents), rg ? std::move(backward) : BackwardFn{},
                        rg, false});
  return Var{this, nodes_.size() - 1};
}

std::vector<Tensor> Tape::gradients(Var loss, std::span<const Var> leaves) {
  if (loss.tape != this) throw std::invalid_argument("loss was not recorded on this tape");
  const Tensor& lv = value(loss.id);
  if (!lv.is_scalar()) {
    throw std::invalid_argument("backward requires a scalar loss, got shape " + shape_str(lv.shape()));
  }
  grads_.assign(nodes_.size(), Tensor{});
  grads_[loss.id] = Tensor(lv.shape(), 1.0);
  for (std::size_t id = loss.id + 1; id-- > 0;) {
    Node& n = nodes_[id];
    if (!n.requires_grad || !n.backward || grads_[id].size() == 0) continue;
    GradSink sink(*this, n.parents);
    n.backward(grads_[id], sink);
    // Intermediate gradients are no longer needed once propagated.
    if (!n.leaf) grads_[id] = Tensor{};
  }
  std::vector<Tensor> out;
  out.reserve(leaves.size());
  for (const Var& l : leaves) {
    if (l.tape != this) {
      std::cerr << "warning: gradient requested for a leaf not on this tape; returning zeros\n";
      out.push_back(Tensor::zeros_like(l.value()));
    } else if (grads_[l.id].size() == 0) {
      out.push_back(Tensor::zeros_like(value(l.id)));
    } else {
      out.push_back(grads_[l.id]);
    }
  }
  grads_.clear();
  return out;
}

Tensor backward(Var loss, Tape& tape, Var leaf) {
  const Var leaves[] = {leaf};
  return std::move(tape.gradients(loss, leaves).front());
}

}  // namespace antipure
