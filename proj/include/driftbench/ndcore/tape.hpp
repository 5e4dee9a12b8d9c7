// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <span>
#include <vector>

#include "driftbench/ndcore/tensor.hpp"

namespace driftbench::nd {

class Tape;

/// Handle to a value recorded on a Tape. Cheap to copy; valid while the tape lives.
class Var {
 public:
  Var() = default;

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  Tape& tape() const;
  std::size_t id() const { return id_; }
  bool requires_grad() const;

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// Linear record of primitive operations for reverse-mode differentiation.
///
/// Nodes are appended in evaluation order, so every node's parents precede
/// it and one reverse sweep visits each node once. Parameters are bound by
/// reference: backward() writes d(loss)/d(param) into the bound Tensor's grad
/// slot. Constants may be borrowed (no copy) or owned by the tape; a
/// borrowed tensor must outlive the tape.
class Tape {
 public:
  /// Propagates the node's adjoint into its parents' adjoints.
  using BackwardFn = std::function<void(Tape&, std::size_t self)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var parameter(Tensor& t);
  Var constant(Tensor t);
  Var constant_ref(const Tensor& t);

  /// Appends an op node. `fn` may be empty when no parent requires a gradient.
  Var record(Tensor value, std::initializer_list<Var> parents, BackwardFn fn);
  Var record(Tensor value, const std::vector<Var>& parents, BackwardFn fn);

  const Tensor& value(std::size_t id) const;
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  std::span<const std::size_t> parents(std::size_t id) const { return nodes_[id].parents; }

  /// Adjoint of a node; only meaningful during backward() for nodes that
  /// require a gradient.
  std::span<double> adjoint(std::size_t id) { return nodes_[id].adjoint; }

  /// Populates grad of every bound parameter with d(loss)/d(param). Parameters
  /// the loss does not reach receive an all-zero gradient.
  void backward(Var loss);

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor owned;
    const Tensor* borrowed = nullptr;
    Tensor* leaf = nullptr;
    std::vector<std::size_t> parents;
    BackwardFn backward;
    bool requires_grad = false;
    std::vector<double> adjoint;
  };

  Var push(Node node);

  std::vector<Node> nodes_;
};

}  // namespace driftbench::nd
