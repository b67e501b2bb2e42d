// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "dishft/ndgrad/tensor.hpp"

namespace dishft::ndgrad {

class Tape;

// Handle to a node recorded on a Tape. Cheap to copy; valid while the tape
// lives.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape& tape() const { return *tape_; }
  std::size_t id() const noexcept { return id_; }
  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  bool requires_grad() const;
  bool valid() const noexcept { return tape_ != nullptr; }

 private:
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

// Context handed to an op's gradient rule. parent_grads[i] is null when
// parent i does not need a gradient; otherwise it is a zero-initialised (or
// already partially accumulated) buffer the rule must add into.
struct BackwardContext {
  const Tensor& out_grad;
  const Tensor& out_value;
  std::span<const Tensor* const> parent_values;
  std::span<Tensor* const> parent_grads;
};

using BackwardFn = std::function<void(const BackwardContext&)>;

// Result of Tape::backward: gradients of every leaf that requires them.
class Gradients {
 public:
  bool contains(std::size_t id) const { return grads_.contains(id); }
  const Tensor& of(std::size_t id) const;
  const Tensor& of(const Var& v) const { return of(v.id()); }
  std::size_t size() const noexcept { return grads_.size(); }
  const std::unordered_map<std::size_t, Tensor>& all() const noexcept { return grads_; }

 private:
  friend class Tape;
  std::unordered_map<std::size_t, Tensor> grads_;
};

// Linear record of forward operations. Node ids are assigned in execution
// order, so reverse id order is a valid topological order for backward.
// A tape is single-threaded; distinct tapes are independent.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var leaf(Tensor value, bool requires_grad);
  Var constant(Tensor value) { return leaf(std::move(value), false); }
  Var parameter(Tensor value) { return leaf(std::move(value), true); }

  // Records an op output. `backward` may be empty when no parent requires
  // a gradient. Throws NumericError when finite inputs produce a non-finite
  // output.
  Var record(const std::string& op, Tensor value, std::vector<Var> parents, BackwardFn backward);

  // Reverse sweep from a single-element loss. A tape can be swept once.
  Gradients backward(const Var& loss);

  const Tensor& value(std::size_t id) const { return nodes_[id].value; }
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  std::size_t size() const noexcept { return nodes_.size(); }
  bool consumed() const noexcept { return consumed_; }

 private:
  struct Node {
    Tensor value;
    std::vector<std::size_t> parents;
    BackwardFn backward;
    bool requires_grad = false;
    bool is_leaf = false;
  };

  // deque: values handed out by reference stay valid as the tape grows.
  std::deque<Node> nodes_;
  bool consumed_ = false;
};

}  // namespace dishft::ndgrad
