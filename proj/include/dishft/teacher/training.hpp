// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "dishft/evalkit/metrics.hpp"
#include "dishft/marketdata/windows.hpp"
#include "dishft/ndgrad/params.hpp"
#include "dishft/teacher/teacher.hpp"

namespace dishft::teacher {

struct TrainConfig {
  double learning_rate = 5e-4;
  std::size_t batch_size = 64;
  std::size_t max_epochs = 100;
  std::size_t patience = 10;
  std::uint64_t seed = 1;
  std::size_t train_stride = 1;  // use every k-th training window

  bool operator==(const TrainConfig&) const = default;

  void validate() const;
};

struct Split {
  std::span<const marketdata::WindowSample> train;
  std::span<const marketdata::WindowSample> val;
  std::span<const marketdata::WindowSample> test;
};

// floor(0.85 n) train, floor(0.075 n) validation, remainder test, in
// chronological order. Throws DataError if any part is empty.
Split chronological_split(std::span<const marketdata::WindowSample> windows);

struct EpochLog {
  std::size_t epoch = 0;
  double train_loss = 0.0;    // prediction loss
  double distill_loss = 0.0;  // 0 when there is no distillation term
  double val_acc = 0.0;
  double val_mcc = 0.0;
};

struct LossTerms {
  ndgrad::Var total;
  ndgrad::Var pred;
  ndgrad::Var distill;  // may be invalid
};

// Loss of training window `index` (into the strided training list).
using WindowLoss = std::function<LossTerms(ndgrad::Tape&, const ndgrad::Binding&, std::size_t index)>;

// Class-1 probabilities [N] of one window.
using Scorer = std::function<std::vector<double>(const ndgrad::ParameterSet&, const marketdata::WindowSample&)>;

enum class LabelMode { kHorizon, kPerDay };

struct Score {
  evalkit::Confusion confusion;
  double acc = 0.0;
  double mcc = 0.0;
};

// Pools every (window, stock) decision; class 1 iff probability > 0.5. In
// per-day mode each horizon decision is compared with every per-day label.
Score score_windows(std::span<const marketdata::WindowSample> windows, const ndgrad::ParameterSet& params,
                    const Scorer& scorer, LabelMode mode = LabelMode::kHorizon);

struct FitResult {
  ndgrad::ParameterSet params;  // best validation accuracy
  std::vector<EpochLog> log;
  std::size_t best_epoch = 0;
  double best_val_acc = 0.0;
};

// Mini-batch Adam with per-window tapes, gradients averaged over the batch,
// batch order reshuffled every epoch from the seed, and early stopping on
// validation accuracy.
FitResult fit(ndgrad::ParameterSet init, const std::vector<bool>& frozen, std::size_t train_count,
              std::span<const marketdata::WindowSample> val, const WindowLoss& loss, const Scorer& scorer,
              const TrainConfig& config);

// Indices of the training windows actually used under `train_stride`.
std::vector<std::size_t> strided_indices(std::size_t count, std::size_t stride);

struct TeacherResult {
  TeacherModel model;
  std::vector<EpochLog> log;
};

TeacherResult train_teacher(const Split& split, const ndgrad::Tensor& relation, const TeacherConfig& model_config,
                            const TrainConfig& train_config);

}  // namespace dishft::teacher
