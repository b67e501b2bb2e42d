// SPDX-License-Identifier: Apache-2.0
#include "dishft/ndgrad/tape.hpp"

#include "dishft/error.hpp"

namespace dishft::ndgrad {

const Tensor& Var::value() const { return tape_->value(id_); }

bool Var::requires_grad() const { return tape_->requires_grad(id_); }

const Tensor& Gradients::of(std::size_t id) const {
  auto it = grads_.find(id);
  if (it == grads_.end()) {
    throw Error("no gradient recorded for node " + std::to_string(id));
  }
  return it->second;
}

Var Tape::leaf(Tensor value, bool requires_grad) {
  Node node;
  node.value = std::move(value);
  node.requires_grad = requires_grad;
  node.is_leaf = true;
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Var Tape::record(const std::string& op, Tensor value, std::vector<Var> parents,
                 BackwardFn backward) {
  if (consumed_) {
    throw Error(op + ": tape already consumed by backward()");
  }
  if (!value.all_finite()) {
    bool inputs_finite = true;
    for (const auto& p : parents) inputs_finite = inputs_finite && p.value().all_finite();
    if (inputs_finite) {
      throw NumericError(op + ": non-finite output from finite inputs, shape " +
                         to_string(value.shape()));
    }
  }
  Node node;
  node.value = std::move(value);
  node.parents.reserve(parents.size());
  for (const auto& p : parents) {
    if (&p.tape() != this) {
      throw Error(op + ": operand recorded on a different tape");
    }
    node.parents.push_back(p.id());
    node.requires_grad = node.requires_grad || nodes_[p.id()].requires_grad;
  }
  if (node.requires_grad) node.backward = std::move(backward);
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Gradients Tape::backward(const Var& loss) {
  if (consumed_) {
    throw Error("backward(): tape already consumed");
  }
  if (&loss.tape() != this) {
    throw Error("backward(): loss belongs to another tape");
  }
  if (loss.value().size() != 1) {
    throw ShapeError("backward(): loss must be a single element, got " +
                     to_string(loss.value().shape()));
  }
  consumed_ = true;

  Gradients result;
  if (!nodes_[loss.id()].requires_grad) return result;

  std::vector<Tensor> grads(loss.id() + 1);
  grads[loss.id()] = Tensor(loss.value().shape(), 1.0);

  std::vector<const Tensor*> parent_values;
  std::vector<Tensor*> parent_grads;
  for (std::size_t id = loss.id() + 1; id-- > 0;) {
    Node& node = nodes_[id];
    if (grads[id].empty() || !node.requires_grad) continue;
    if (node.is_leaf) {
      result.grads_.emplace(id, std::move(grads[id]));
      continue;
    }
    parent_values.clear();
    parent_grads.clear();
    for (std::size_t pid : node.parents) {
      parent_values.push_back(&nodes_[pid].value);
      if (nodes_[pid].requires_grad) {
        if (grads[pid].empty()) grads[pid] = Tensor(nodes_[pid].value.shape(), 0.0);
        parent_grads.push_back(&grads[pid]);
      } else {
        parent_grads.push_back(nullptr);
      }
    }
    BackwardContext ctx{grads[id], node.value, parent_values, parent_grads};
    node.backward(ctx);
    grads[id] = Tensor();
  }
  return result;
}

}  // namespace dishft::ndgrad
