// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <vector>

#include "dishft/ndgrad/params.hpp"

namespace dishft::ndgrad {

struct AdamConfig {
  double learning_rate = 5e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Bias-corrected Adam over a ParameterSet.
class Adam {
 public:
  explicit Adam(AdamConfig config) : config_(config) {}

  // Parameters whose `frozen` flag is set are left untouched.
  void step(ParameterSet& params, const std::vector<Tensor>& grads, const std::vector<bool>& frozen = {});
  std::size_t steps() const noexcept { return t_; }

 private:
  AdamConfig config_;
  std::vector<Tensor> m_;
  std::vector<Tensor> v_;
  std::size_t t_ = 0;
};

}  // namespace dishft::ndgrad
