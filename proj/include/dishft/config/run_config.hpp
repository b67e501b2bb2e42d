// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "dishft/distill/student.hpp"
#include "dishft/evalkit/experiment.hpp"
#include "dishft/marketdata/synthetic.hpp"
#include "dishft/marketdata/windows.hpp"
#include "dishft/teacher/training.hpp"

namespace dishft::config {

// Flat INI sections: [data] [synthetic] [model] [train] [distill] [eval]
// [output]. Every key is optional; defaults follow the published setting
// (T = 20, delta = 0.04, tau = 0.5, lr = 5e-4, batch = 64).
struct RunConfig {
  // [data]: either prices/relations CSVs or `source = synthetic`.
  bool synthetic = false;
  std::filesystem::path prices;
  std::filesystem::path relations;
  std::size_t lookback = 20;
  std::size_t horizon = 20;
  double delta = 0.04;
  std::size_t window_stride = 1;
  teacher::LabelMode label_mode = teacher::LabelMode::kHorizon;

  // [synthetic]
  marketdata::SyntheticSpec synthetic_spec;
  std::size_t rotation_every = 0;  // > 0 replaces `events` with a rotating schedule
  std::size_t rotation_first_day = 30;
  double rotation_magnitude = 0.004;
  std::uint64_t rotation_seed = 7;

  // [model]
  stgnn::SpatialKind backbone = stgnn::SpatialKind::kGcn;
  std::size_t hidden_dim = 32;
  std::size_t spatial_layers = 1;
  std::size_t fusion_dim = 32;  // also the student output dim
  std::size_t future_dim = 16;
  teacher::FusionKind fusion = teacher::FusionKind::kAttention;
  double tau = 0.5;
  double k_d = 0.0;

  // [train]
  teacher::TrainConfig train;
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  std::vector<stgnn::SpatialKind> experiment_backbones{stgnn::SpatialKind::kGcn};

  // [distill]
  double lambda = 0.5;
  std::vector<double> lambda_grid{0.1, 0.5, 1.0};
  distill::DistillKind distill = distill::DistillKind::kHsic;
  distill::HsicConfig hsic;
  bool unfreeze_head = false;

  // [eval]
  evalkit::BacktestPolicy policy{.top_k = 10, .rebalance_every = 20};
  bool ablations = true;

  // [output]
  std::filesystem::path output_dir = "dishft_out";

  bool operator==(const RunConfig&) const = default;

  // Throws ConfigError naming every invalid field. With `check_paths`,
  // missing CSV inputs are reported too.
  void validate(bool check_paths = true) const;

  marketdata::SyntheticSpec effective_synthetic() const;
  marketdata::WindowSpec window_spec() const;
  teacher::TeacherConfig teacher_config() const;
  distill::StudentConfig student_config() const;
  evalkit::ExperimentConfig experiment_config() const;
};

// Parses INI text. Unknown sections or keys and malformed values are all
// collected into one ConfigError. Does not validate ranges.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);

// Every field, in a form parse_config reads back to an equal RunConfig.
std::string to_ini(const RunConfig& config);

}  // namespace dishft::config
