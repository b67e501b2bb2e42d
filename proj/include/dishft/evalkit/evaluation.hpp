// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "dishft/evalkit/metrics.hpp"
#include "dishft/marketdata/windows.hpp"
#include "dishft/teacher/training.hpp"

namespace dishft::evalkit {

struct Decision {
  std::size_t anchor = 0;
  std::size_t stock = 0;
  std::size_t step = 0;  // horizon day the truth refers to (T in horizon mode)
  double prob_up = 0.5;
  std::uint8_t pred = 0;
  std::uint8_t truth = 0;
};

struct WindowEval {
  std::size_t anchor = 0;
  std::size_t decisions = 0;
  double acc = 0.0;
  double mcc = 0.0;
};

struct Evaluation {
  Confusion confusion;
  double acc = 0.0;
  double mcc = 0.0;
  std::vector<WindowEval> windows;
  std::vector<Decision> decisions;
};

// Class 1 iff prob_up > 0.5. `prob_up[i]` is the [N] output for windows[i].
Evaluation evaluate(std::span<const marketdata::WindowSample> windows, std::span<const std::vector<double>> prob_up,
                    teacher::LabelMode mode = teacher::LabelMode::kHorizon);

}  // namespace dishft::evalkit
