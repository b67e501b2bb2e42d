// SPDX-License-Identifier: Apache-2.0
#include "dishft/ndgrad/params.hpp"

#include <cmath>

#include "dishft/error.hpp"

namespace dishft::ndgrad {

void ParameterSet::add(const std::string& name, Tensor value) {
  if (index_.contains(name)) throw Error("duplicate parameter '" + name + "'");
  index_.emplace(name, entries_.size());
  entries_.push_back({name, std::move(value)});
}

Tensor& ParameterSet::get(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw Error("unknown parameter '" + name + "'");
  return entries_[it->second].tensor;
}

const Tensor& ParameterSet::get(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw Error("unknown parameter '" + name + "'");
  return entries_[it->second].tensor;
}

void ParameterSet::assign_from(const std::vector<NamedTensor>& records) {
  std::unordered_map<std::string, const Tensor*> by_name;
  for (const auto& r : records) by_name.emplace(r.name, &r.tensor);
  for (auto& [name, tensor] : entries_) {
    auto it = by_name.find(name);
    if (it == by_name.end()) throw ShapeError("checkpoint is missing parameter '" + name + "'");
    if (it->second->shape() != tensor.shape()) {
      throw ShapeError("parameter '" + name + "' has shape " + to_string(it->second->shape()) +
                       " in checkpoint but the configured model expects " +
                       to_string(tensor.shape()));
    }
  }
  for (auto& [name, tensor] : entries_) tensor = *by_name.at(name);
}

bool ParameterSet::operator==(const ParameterSet& other) const {
  if (entries_.size() != other.entries_.size()) return false;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (entries_[i].name != other.entries_[i].name || !(entries_[i].tensor == other.entries_[i].tensor)) {
      return false;
    }
  }
  return true;
}

Tensor uniform_init(Shape shape, std::size_t fan_in, std::mt19937_64& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  Tensor t(std::move(shape));
  for (double& v : t.values()) v = dist(rng);
  return t;
}

Binding::Binding(Tape& tape, const ParameterSet& params, bool trainable) : params_(&params) {
  ordered_.reserve(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    Var v = tape.leaf(params.at(i), trainable);
    vars_.emplace(params.name(i), v);
    ordered_.push_back(v);
  }
}

Binding::Binding(const ParameterSet& params, std::span<const Var> vars) : params_(&params) {
  if (vars.size() != params.size()) {
    throw ShapeError("binding: " + std::to_string(vars.size()) + " vars for " + std::to_string(params.size()) +
                     " parameters");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (vars[i].shape() != params.at(i).shape()) {
      throw ShapeError("binding: var for '" + params.name(i) + "' has shape " + to_string(vars[i].shape()) +
                       ", expected " + to_string(params.at(i).shape()));
    }
    vars_.emplace(params.name(i), vars[i]);
    ordered_.push_back(vars[i]);
  }
}

const Var& Binding::operator[](const std::string& name) const {
  auto it = vars_.find(name);
  if (it == vars_.end()) throw Error("parameter '" + name + "' is not bound");
  return it->second;
}

std::vector<Tensor> Binding::collect(const Gradients& grads) const {
  std::vector<Tensor> out;
  out.reserve(ordered_.size());
  for (std::size_t i = 0; i < ordered_.size(); ++i) {
    if (grads.contains(ordered_[i].id())) {
      out.push_back(grads.of(ordered_[i].id()));
    } else {
      out.emplace_back(params_->at(i).shape(), 0.0);
    }
  }
  return out;
}

}  // namespace dishft::ndgrad
