// SPDX-License-Identifier: Apache-2.0
#include "dishft/evalkit/evaluation.hpp"

#include <string>

#include "dishft/error.hpp"

namespace dishft::evalkit {

Evaluation evaluate(std::span<const marketdata::WindowSample> windows, std::span<const std::vector<double>> prob_up,
                    teacher::LabelMode mode) {
  if (windows.size() != prob_up.size()) {
    throw ShapeError("evaluate: " + std::to_string(prob_up.size()) + " prediction rows for " +
                     std::to_string(windows.size()) + " windows");
  }
  Evaluation out;
  std::vector<std::uint8_t> all_pred, all_truth;
  for (std::size_t w = 0; w < windows.size(); ++w) {
    const auto& win = windows[w];
    const std::size_t n = win.label.size();
    if (prob_up[w].size() != n) throw ShapeError("evaluate: prediction row does not match the stock count");
    const bool per_day = mode == teacher::LabelMode::kPerDay;
    const std::size_t horizon = win.label_per_day.size() / n;
    const std::size_t steps = per_day ? horizon : 1;
    std::vector<std::uint8_t> pred, truth;
    for (std::size_t s = 0; s < n; ++s) {
      const double p = prob_up[w][s];
      const std::uint8_t yhat = p > 0.5 ? 1 : 0;
      for (std::size_t k = 0; k < steps; ++k) {
        const std::uint8_t y = per_day ? win.label_per_day[s * steps + k] : win.label[s];
        out.decisions.push_back({win.anchor, s, per_day ? k + 1 : horizon, p, yhat, y});
        pred.push_back(yhat);
        truth.push_back(y);
      }
    }
    const Confusion c = confusion(pred, truth);
    out.windows.push_back({win.anchor, c.total(), accuracy(c), mcc(c)});
    all_pred.insert(all_pred.end(), pred.begin(), pred.end());
    all_truth.insert(all_truth.end(), truth.begin(), truth.end());
  }
  out.confusion = confusion(all_pred, all_truth);
  out.acc = accuracy(out.confusion);
  out.mcc = mcc(out.confusion);
  return out;
}

}  // namespace dishft::evalkit
