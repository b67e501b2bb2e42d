// SPDX-License-Identifier: Apache-2.0
#include "dishft/teacher/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "dishft/error.hpp"
#include "dishft/ndgrad/adam.hpp"

namespace dishft::teacher {

namespace nd = ndgrad;
namespace md = marketdata;

void TrainConfig::validate() const {
  std::string problems;
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) problems += " learning_rate must be > 0;";
  if (batch_size < 1) problems += " batch_size must be >= 1;";
  if (max_epochs < 1) problems += " max_epochs must be >= 1;";
  if (patience < 1) problems += " patience must be >= 1;";
  if (train_stride < 1) problems += " train_stride must be >= 1;";
  if (!problems.empty()) throw ConfigError("invalid training config:" + problems);
}

Split chronological_split(std::span<const md::WindowSample> windows) {
  const std::size_t n = windows.size();
  const auto n_train = static_cast<std::size_t>(std::floor(0.85 * static_cast<double>(n)));
  const auto n_val = static_cast<std::size_t>(std::floor(0.075 * static_cast<double>(n)));
  if (n_train == 0 || n_val == 0 || n_train + n_val >= n) {
    throw DataError("chronological split of " + std::to_string(n) +
                    " windows leaves an empty train, validation or test part");
  }
  return {windows.subspan(0, n_train), windows.subspan(n_train, n_val), windows.subspan(n_train + n_val)};
}

std::vector<std::size_t> strided_indices(std::size_t count, std::size_t stride) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < count; i += stride) out.push_back(i);
  return out;
}

Score score_windows(std::span<const md::WindowSample> windows, const nd::ParameterSet& params,
                    const Scorer& scorer, LabelMode mode) {
  md::Bits pred, truth;
  for (const auto& w : windows) {
    const std::vector<double> prob = scorer(params, w);
    const std::size_t n = prob.size();
    if (mode == LabelMode::kHorizon) {
      for (std::size_t i = 0; i < n; ++i) {
        pred.push_back(prob[i] > 0.5 ? 1 : 0);
        truth.push_back(w.label[i]);
      }
    } else {
      const std::size_t horizon = w.label_per_day.size() / n;
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < horizon; ++k) {
          pred.push_back(prob[i] > 0.5 ? 1 : 0);
          truth.push_back(w.label_per_day[i * horizon + k]);
        }
      }
    }
  }
  Score s;
  s.confusion = evalkit::confusion(pred, truth);
  s.acc = evalkit::accuracy(s.confusion);
  s.mcc = evalkit::mcc(s.confusion);
  return s;
}

FitResult fit(nd::ParameterSet init, const std::vector<bool>& frozen, std::size_t train_count,
              std::span<const md::WindowSample> val, const WindowLoss& loss, const Scorer& scorer,
              const TrainConfig& config) {
  config.validate();
  if (train_count == 0) throw DataError("training split is empty");
  if (val.empty()) throw DataError("validation split is empty");

  FitResult result;
  result.params = init;
  nd::ParameterSet params = std::move(init);
  nd::Adam adam({.learning_rate = config.learning_rate});
  std::vector<std::size_t> order(train_count);
  std::size_t since_best = 0;
  bool have_best = false;

  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(config.seed * 1000003ULL + epoch);
    std::shuffle(order.begin(), order.end(), rng);

    double pred_sum = 0.0, distill_sum = 0.0;
    for (std::size_t start = 0; start < train_count; start += config.batch_size) {
      const std::size_t end = std::min(train_count, start + config.batch_size);
      std::vector<nd::Tensor> grads;
      for (std::size_t k = start; k < end; ++k) {
        nd::Tape tape;
        const nd::Binding b(tape, params, true);
        const LossTerms terms = loss(tape, b, order[k]);
        pred_sum += terms.pred.value().item();
        if (terms.distill.valid()) distill_sum += terms.distill.value().item();
        std::vector<nd::Tensor> g = b.collect(tape.backward(terms.total));
        if (grads.empty()) {
          grads = std::move(g);
        } else {
          for (std::size_t p = 0; p < grads.size(); ++p) {
            for (std::size_t i = 0; i < grads[p].size(); ++i) grads[p][i] += g[p][i];
          }
        }
      }
      const double inv = 1.0 / static_cast<double>(end - start);
      for (auto& g : grads) {
        for (double& v : g.values()) v *= inv;
      }
      adam.step(params, grads, frozen);
    }

    const Score s = score_windows(val, params, scorer);
    EpochLog entry{epoch, pred_sum / static_cast<double>(train_count),
                   distill_sum / static_cast<double>(train_count), s.acc, s.mcc};
    result.log.push_back(entry);
    if (!have_best || s.acc > result.best_val_acc) {
      have_best = true;
      result.best_val_acc = s.acc;
      result.best_epoch = epoch;
      result.params = params;
      since_best = 0;
    } else if (++since_best >= config.patience) {
      break;
    }
  }
  return result;
}

TeacherResult train_teacher(const Split& split, const nd::Tensor& relation, const TeacherConfig& model_config,
                            const TrainConfig& train_config) {
  train_config.validate();
  if (split.train.empty()) throw DataError("teacher training split is empty");
  const TeacherNet net(model_config);
  TeacherModel model = make_teacher(model_config, train_config.seed);
  const std::vector<std::size_t> idx = strided_indices(split.train.size(), train_config.train_stride);

  const WindowLoss loss = [&](nd::Tape& tape, const nd::Binding& b, std::size_t k) {
    const md::WindowSample& w = split.train[idx[k]];
    const nd::Var h = net.represent(b, tape.constant(w.history), tape.constant(w.future_trend), relation);
    const nd::Var ce = cross_entropy(net.logits(b, h), w.label);
    return LossTerms{ce, ce, {}};
  };
  const Scorer scorer = [&](const nd::ParameterSet& params, const md::WindowSample& w) {
    return teacher_probabilities(model_config, params, w, relation);
  };
  FitResult fitted = fit(model.params, {}, idx.size(), split.val, loss, scorer, train_config);
  model.params = std::move(fitted.params);
  return {std::move(model), std::move(fitted.log)};
}

}  // namespace dishft::teacher
