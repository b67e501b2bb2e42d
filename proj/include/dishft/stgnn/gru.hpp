// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "dishft/ndgrad/tape.hpp"

namespace dishft::stgnn {

// Gate weights of a GRU cell with separate input and hidden projections:
//   z = sigmoid(x W_xz + h W_hz + b_z)
//   r = sigmoid(x W_xr + h W_hr + b_r)
//   n = tanh(x W_xn + b_xn + r * (h W_hn + b_hn))
//   h' = n + z * (h - n)
struct GruWeights {
  ndgrad::Var w_xz, w_xr, w_xn;  // [M x D]
  ndgrad::Var w_hz, w_hr, w_hn;  // [D x D]
  ndgrad::Var b_z, b_r, b_xn, b_hn;  // [D]
};

// Runs the cell over history [N x L x M] from a zero state and returns the
// final hidden state [N x D] as a single tape node with a fused
// backpropagation-through-time backward.
ndgrad::Var gru_sequence(const ndgrad::Var& history, const GruWeights& w);

}  // namespace dishft::stgnn
