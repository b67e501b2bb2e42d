// SPDX-License-Identifier: Apache-2.0
#include "dishft/stgnn/stgnn.hpp"

#include "dishft/error.hpp"
#include "dishft/ndgrad/ops.hpp"
#include "dishft/stgnn/gru.hpp"

namespace dishft::stgnn {

namespace nd = ndgrad;

namespace {

constexpr double kMasked = -1e30;
constexpr double kAttentionSlope = 0.2;
constexpr const char* kGates[] = {"z", "r", "n"};

}  // namespace

void STConfig::validate() const {
  std::string problems;
  if (input_dim < 1) problems += " input_dim must be >= 1;";
  if (hidden_dim < 1) problems += " hidden_dim must be >= 1;";
  if (output_dim < 1) problems += " output_dim must be >= 1;";
  if (spatial_layers < 1 || spatial_layers > 2) problems += " spatial_layers must be 1 or 2;";
  if (!problems.empty()) throw ConfigError("invalid encoder config:" + problems);
}

STEncoder::STEncoder(STConfig config, std::string prefix) : config_(config), prefix_(std::move(prefix)) {
  config_.validate();
}

std::string STEncoder::param(const std::string& component, std::size_t layer, const std::string& matrix) const {
  return prefix_ + "st." + component + "." + std::to_string(layer) + "." + matrix;
}

void STEncoder::init(nd::ParameterSet& params, std::mt19937_64& rng) const {
  const std::size_t m = config_.input_dim;
  const std::size_t d = config_.hidden_dim;
  for (const char* g : kGates) {
    params.add(param("gru", 0, std::string("w_x") + g), nd::uniform_init({m, d}, m, rng));
    params.add(param("gru", 0, std::string("w_h") + g), nd::uniform_init({d, d}, d, rng));
  }
  params.add(param("gru", 0, "b_z"), nd::Tensor({d}));
  params.add(param("gru", 0, "b_r"), nd::Tensor({d}));
  params.add(param("gru", 0, "b_xn"), nd::Tensor({d}));
  params.add(param("gru", 0, "b_hn"), nd::Tensor({d}));
  for (std::size_t l = 0; l < config_.spatial_layers; ++l) {
    if (config_.spatial_kind == SpatialKind::kGcn) {
      params.add(param("gcn", l, "w"), nd::uniform_init({d, d}, d, rng));
    } else {
      params.add(param("gat", l, "w"), nd::uniform_init({d, d}, d, rng));
      params.add(param("gat", l, "a_src"), nd::uniform_init({d, 1}, d, rng));
      params.add(param("gat", l, "a_dst"), nd::uniform_init({d, 1}, d, rng));
    }
  }
  params.add(param("out", 0, "w"), nd::uniform_init({d, config_.output_dim}, d, rng));
  params.add(param("out", 0, "b"), nd::Tensor({config_.output_dim}));
}

nd::Var STEncoder::temporal_encode(const nd::Binding& p, const nd::Var& history) const {
  const nd::Shape& s = history.shape();
  if (s.size() != 3 || s[2] != config_.input_dim) {
    throw ShapeError("temporal_encode: expected [N x L x " + std::to_string(config_.input_dim) + "], got " +
                     nd::to_string(s));
  }
  if (s[1] < 1) throw ShapeError("temporal_encode: lookback must be >= 1");
  if (!history.value().all_finite()) throw NumericError("temporal_encode: non-finite history input");
  auto g = [&](const char* name) { return p[param("gru", 0, name)]; };
  return gru_sequence(history, {g("w_xz"), g("w_xr"), g("w_xn"), g("w_hz"), g("w_hr"), g("w_hn"), g("b_z"),
                                g("b_r"), g("b_xn"), g("b_hn")});
}

nd::Var STEncoder::spatial_aggregate(const nd::Binding& p, const nd::Var& node_states, const nd::Tensor& relation,
                                     nd::Tensor* attention) const {
  const nd::Shape& s = node_states.shape();
  if (s.size() != 2 || s[1] != config_.hidden_dim) {
    throw ShapeError("spatial_aggregate: expected [N x " + std::to_string(config_.hidden_dim) + "] states, got " +
                     nd::to_string(s));
  }
  const std::size_t n = s[0];
  if (relation.rank() != 2 || relation.dim(0) != n || relation.dim(1) != n) {
    throw ShapeError("spatial_aggregate: relation " + nd::to_string(relation.shape()) + " does not match " +
                     std::to_string(n) + " stocks");
  }
  nd::Tape& tape = node_states.tape();
  nd::Var h = node_states;

  if (config_.spatial_kind == SpatialKind::kGcn) {
    const nd::Var a = tape.constant(relation);
    for (std::size_t l = 0; l < config_.spatial_layers; ++l) {
      h = nd::relu(nd::matmul(a, nd::matmul(h, p[param("gcn", l, "w")])));
    }
  } else {
    nd::Tensor mask({n, n});
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) mask.at(i, j) = relation.at(i, j) != 0.0 || i == j ? 0.0 : kMasked;
    }
    const nd::Var m = tape.constant(std::move(mask));
    const nd::Var ones_row = tape.constant(nd::Tensor({1, n}, 1.0));
    const nd::Var ones_col = tape.constant(nd::Tensor({n, 1}, 1.0));
    for (std::size_t l = 0; l < config_.spatial_layers; ++l) {
      const nd::Var z = nd::matmul(h, p[param("gat", l, "w")]);
      const nd::Var src = nd::matmul(nd::matmul(z, p[param("gat", l, "a_src")]), ones_row);
      const nd::Var dst = nd::matmul(ones_col, nd::transpose(nd::matmul(z, p[param("gat", l, "a_dst")])));
      const nd::Var e = nd::add(nd::leaky_relu(nd::add(src, dst), kAttentionSlope), m);
      const nd::Var alpha = nd::softmax(e, 1);
      if (attention) *attention = alpha.value();
      h = nd::relu(nd::matmul(alpha, z));
    }
  }
  return nd::add(nd::matmul(h, p[param("out", 0, "w")]), p[param("out", 0, "b")]);
}

nd::Var STEncoder::forward(const nd::Binding& p, const nd::Var& history, const nd::Tensor& relation) const {
  return spatial_aggregate(p, temporal_encode(p, history), relation);
}

}  // namespace dishft::stgnn
