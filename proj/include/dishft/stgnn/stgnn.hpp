// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <random>
#include <string>

#include "dishft/marketdata/panel.hpp"
#include "dishft/ndgrad/params.hpp"
#include "dishft/ndgrad/tape.hpp"

namespace dishft::stgnn {

enum class TemporalKind { kGru };
enum class SpatialKind { kGcn, kGat };

struct STConfig {
  TemporalKind temporal_kind = TemporalKind::kGru;
  SpatialKind spatial_kind = SpatialKind::kGcn;
  std::size_t input_dim = marketdata::kPriceColumns;  // M
  std::size_t hidden_dim = 32;                        // D_s
  std::size_t spatial_layers = 1;
  std::size_t output_dim = 32;

  void validate() const;
};

// Spatiotemporal encoder. Parameters live in a caller-owned ParameterSet
// under `<prefix>st.<component>.<layer>.<matrix>`.
class STEncoder {
 public:
  STEncoder(STConfig config, std::string prefix);

  const STConfig& config() const noexcept { return config_; }
  std::string param(const std::string& component, std::size_t layer, const std::string& matrix) const;

  // Adds freshly initialised parameters to `params`.
  void init(ndgrad::ParameterSet& params, std::mt19937_64& rng) const;

  // history [N x L x M] -> final GRU hidden state [N x D_s].
  ndgrad::Var temporal_encode(const ndgrad::Binding& p, const ndgrad::Var& history) const;

  // node_states [N x D_s], relation [N x N] -> [N x output_dim]. When
  // `attention` is non-null and spatial_kind is gat, receives the
  // coefficients of the last attention layer.
  ndgrad::Var spatial_aggregate(const ndgrad::Binding& p, const ndgrad::Var& node_states,
                                const ndgrad::Tensor& relation, ndgrad::Tensor* attention = nullptr) const;

  ndgrad::Var forward(const ndgrad::Binding& p, const ndgrad::Var& history, const ndgrad::Tensor& relation) const;

 private:
  STConfig config_;
  std::string prefix_;
};

}  // namespace dishft::stgnn
