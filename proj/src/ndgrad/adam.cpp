// SPDX-License-Identifier: Apache-2.0
#include "dishft/ndgrad/adam.hpp"

#include <cmath>

#include "dishft/error.hpp"

namespace dishft::ndgrad {

void Adam::step(ParameterSet& params, const std::vector<Tensor>& grads, const std::vector<bool>& frozen) {
  if (grads.size() != params.size()) {
    throw ShapeError("adam: " + std::to_string(grads.size()) + " gradients for " +
                     std::to_string(params.size()) + " parameters");
  }
  if (m_.empty()) {
    for (std::size_t i = 0; i < params.size(); ++i) {
      m_.emplace_back(params.at(i).shape(), 0.0);
      v_.emplace_back(params.at(i).shape(), 0.0);
    }
  }
  ++t_;
  const double bc1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
  for (std::size_t p = 0; p < params.size(); ++p) {
    if (p < frozen.size() && frozen[p]) continue;
    Tensor& w = params.at(p);
    const Tensor& g = grads[p];
    for (std::size_t i = 0; i < w.size(); ++i) {
      m_[p][i] = config_.beta1 * m_[p][i] + (1.0 - config_.beta1) * g[i];
      v_[p][i] = config_.beta2 * v_[p][i] + (1.0 - config_.beta2) * g[i] * g[i];
      const double m_hat = m_[p][i] / bc1;
      const double v_hat = v_[p][i] / bc2;
      w[i] -= config_.learning_rate * m_hat / (std::sqrt(v_hat) + config_.epsilon);
    }
  }
}

}  // namespace dishft::ndgrad
