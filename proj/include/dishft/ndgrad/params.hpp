// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "dishft/ndgrad/checkpoint.hpp"
#include "dishft/ndgrad/tape.hpp"

namespace dishft::ndgrad {

// Ordered, named collection of trainable tensors.
class ParameterSet {
 public:
  void add(const std::string& name, Tensor value);
  bool contains(const std::string& name) const { return index_.contains(name); }
  Tensor& get(const std::string& name);
  const Tensor& get(const std::string& name) const;

  std::size_t size() const noexcept { return entries_.size(); }
  const std::string& name(std::size_t i) const { return entries_[i].name; }
  Tensor& at(std::size_t i) { return entries_[i].tensor; }
  const Tensor& at(std::size_t i) const { return entries_[i].tensor; }
  const std::vector<NamedTensor>& entries() const noexcept { return entries_; }

  // Replaces values from a checkpoint. Every parameter must be present with
  // the same shape; extra records are ignored.
  void assign_from(const std::vector<NamedTensor>& records);

  bool operator==(const ParameterSet& other) const;

 private:
  std::vector<NamedTensor> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

// uniform(-1/sqrt(fan_in), +1/sqrt(fan_in))
Tensor uniform_init(Shape shape, std::size_t fan_in, std::mt19937_64& rng);

// Parameters placed on a tape, looked up by name.
class Binding {
 public:
  Binding(Tape& tape, const ParameterSet& params, bool trainable);
  // Binds existing vars, one per parameter in ParameterSet order.
  Binding(const ParameterSet& params, std::span<const Var> vars);

  const Var& operator[](const std::string& name) const;
  bool contains(const std::string& name) const { return vars_.contains(name); }

  // Gradients in ParameterSet order; parameters absent from the graph get
  // zeros.
  std::vector<Tensor> collect(const Gradients& grads) const;

 private:
  const ParameterSet* params_;
  std::unordered_map<std::string, Var> vars_;
  std::vector<Var> ordered_;
};

}  // namespace dishft::ndgrad
