// SPDX-License-Identifier: Apache-2.0
#include "driftbench/ndcore/tape.hpp"

#include <algorithm>

#include "driftbench/common/errors.hpp"

namespace driftbench::nd {

const Tensor& Var::value() const { return tape().value(id_); }

Tape& Var::tape() const {
  if (tape_ == nullptr) throw ContractError("Var is not bound to a tape");
  return *tape_;
}

bool Var::requires_grad() const { return tape().requires_grad(id_); }

Var Tape::push(Node node) {
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Var Tape::parameter(Tensor& t) {
  Node n;
  n.borrowed = &t;
  n.leaf = &t;
  n.requires_grad = true;
  return push(std::move(n));
}

Var Tape::constant(Tensor t) {
  Node n;
  n.owned = std::move(t);
  return push(std::move(n));
}

Var Tape::constant_ref(const Tensor& t) {
  Node n;
  n.borrowed = &t;
  return push(std::move(n));
}

Var Tape::record(Tensor value, std::initializer_list<Var> parents, BackwardFn fn) {
  return record(std::move(value), std::vector<Var>(parents), std::move(fn));
}

Var Tape::record(Tensor value, const std::vector<Var>& parents, BackwardFn fn) {
  Node n;
  n.owned = std::move(value);
  n.parents.reserve(parents.size());
  for (const Var& p : parents) {
    if (&p.tape() != this) throw ContractError("operands recorded on different tapes");
    n.parents.push_back(p.id());
    n.requires_grad = n.requires_grad || requires_grad(p.id());
  }
  if (n.requires_grad) n.backward = std::move(fn);
  return push(std::move(n));
}

const Tensor& Tape::value(std::size_t id) const {
  const Node& n = nodes_.at(id);
  return n.borrowed ? *n.borrowed : n.owned;
}

void Tape::backward(Var loss) {
  if (&loss.tape() != this) throw ContractError("loss was not recorded on this tape");
  if (!value(loss.id()).is_scalar()) {
    throw ContractError("backward() needs a scalar loss, got shape " +
                        shape_str(value(loss.id()).shape()));
  }
  for (Node& n : nodes_) {
    if (n.leaf) n.leaf->zero_grad();
  }
  if (!nodes_[loss.id()].requires_grad) return;

  for (std::size_t i = 0; i <= loss.id(); ++i) {
    Node& n = nodes_[i];
    if (n.requires_grad) n.adjoint.assign(value(i).size(), 0.0);
  }
  nodes_[loss.id()].adjoint[0] = 1.0;
  for (std::size_t i = loss.id() + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (n.requires_grad && n.backward) n.backward(*this, i);
  }
  for (Node& n : nodes_) {
    if (!n.leaf || n.adjoint.empty()) continue;
    std::span<double> g = n.leaf->grad();
    for (std::size_t k = 0; k < g.size(); ++k) g[k] += n.adjoint[k];
  }
  for (Node& n : nodes_) {
    n.adjoint.clear();
    n.adjoint.shrink_to_fit();
  }
}

}  // namespace driftbench::nd
