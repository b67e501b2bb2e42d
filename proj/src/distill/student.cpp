// SPDX-License-Identifier: Apache-2.0
#include "dishft/distill/student.hpp"

#include <cmath>

#include "dishft/error.hpp"
#include "dishft/ndgrad/ops.hpp"

namespace dishft::distill {

namespace nd = ndgrad;
namespace md = marketdata;

namespace {

constexpr const char* kPrefix = "student.";
// Keeps student initialisation independent of the teacher's stream.
constexpr std::uint64_t kInitSalt = 0x9e3779b97f4a7c15ULL;

std::vector<bool> frozen_mask(const StudentModel& s) {
  std::vector<bool> mask(s.params.size(), false);
  if (s.config.unfreeze_head) return mask;
  for (std::size_t i = 0; i < s.params.size(); ++i) mask[i] = s.params.name(i).starts_with("student.head.");
  return mask;
}

teacher::Scorer student_scorer(const StudentConfig& config, const nd::Tensor& relation) {
  return [&config, &relation](const nd::ParameterSet& params, const md::WindowSample& w) {
    return student_probabilities(config, params, w.history, relation);
  };
}

StudentResult run(StudentModel model, const teacher::Split& split, const nd::Tensor& relation,
                  const teacher::TrainConfig& train, const std::vector<nd::Tensor>* targets) {
  const StudentConfig& cfg = model.config;
  const std::vector<std::size_t> idx = teacher::strided_indices(split.train.size(), train.train_stride);
  if (targets && targets->size() != idx.size()) {
    throw ShapeError("train_student: " + std::to_string(targets->size()) + " teacher targets for " +
                     std::to_string(idx.size()) + " training windows");
  }
  const teacher::WindowLoss loss = [&](nd::Tape& tape, const nd::Binding& b, std::size_t k) {
    const md::WindowSample& w = split.train[idx[k]];
    const nd::Var emb = student_embedding(cfg, b, tape.constant(w.history), relation);
    const nd::Var pred = teacher::cross_entropy(teacher::head_logits(b, kPrefix, emb), w.label);
    if (!targets) return teacher::LossTerms{pred, pred, {}};
    const nd::Var dl = distill_loss(emb, tape.constant((*targets)[k]), cfg.distill, cfg.hsic);
    // At lambda = 0 the distillation term is logged but kept off the gradient path.
    return teacher::LossTerms{cfg.lambda == 0.0 ? pred : combined_loss(pred, dl, cfg.lambda), pred, dl};
  };
  teacher::FitResult fitted =
      teacher::fit(model.params, frozen_mask(model), idx.size(), split.val, loss, student_scorer(cfg, relation), train);
  model.params = std::move(fitted.params);
  return {std::move(model), std::move(fitted.log)};
}

}  // namespace

void StudentConfig::validate() const {
  st.validate();
  hsic.validate();
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ConfigError("invalid student config: lambda must be >= 0");
}

nd::ParameterSet extract_head(const teacher::TeacherModel& teacher) {
  nd::ParameterSet head;
  head.add("head.0.w", teacher.params.get("teacher.head.0.w"));
  head.add("head.0.b", teacher.params.get("teacher.head.0.b"));
  return head;
}

StudentModel make_student(const StudentConfig& config, const nd::ParameterSet& head, std::uint64_t seed) {
  config.validate();
  const nd::Tensor& w = head.get("head.0.w");
  if (w.rank() != 2 || w.dim(0) != config.st.output_dim || w.dim(1) != 2) {
    throw ConfigError("student output_dim " + std::to_string(config.st.output_dim) +
                      " does not match the teacher head input " + nd::to_string(w.shape()));
  }
  StudentModel model{config, {}};
  std::mt19937_64 rng(seed ^ kInitSalt);
  stgnn::STEncoder(config.st, kPrefix).init(model.params, rng);
  model.params.add("student.head.0.w", w);
  model.params.add("student.head.0.b", head.get("head.0.b"));
  return model;
}

nd::Var student_embedding(const StudentConfig& config, const nd::Binding& params, const nd::Var& history,
                          const nd::Tensor& relation) {
  return stgnn::STEncoder(config.st, kPrefix).forward(params, history, relation);
}

std::vector<double> student_probabilities(const StudentConfig& config, const nd::ParameterSet& params,
                                          const nd::Tensor& history, const nd::Tensor& relation) {
  nd::Tape tape;
  const nd::Binding b(tape, params, false);
  const nd::Var emb = student_embedding(config, b, tape.constant(history), relation);
  const nd::Tensor probs = teacher::predict(teacher::head_logits(b, kPrefix, emb)).value();
  std::vector<double> out(probs.dim(0));
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = probs.at(i, 1);
  return out;
}

nd::Tensor student_infer(const StudentModel& student, const nd::Tensor& history, const nd::Tensor& relation) {
  nd::Tape tape;
  const nd::Binding b(tape, student.params, false);
  const nd::Var emb = student_embedding(student.config, b, tape.constant(history), relation);
  return teacher::predict(teacher::head_logits(b, kPrefix, emb)).value();
}

std::vector<nd::Tensor> teacher_targets(const teacher::TeacherModel& teacher, const teacher::Split& split,
                                        const nd::Tensor& relation, const teacher::TrainConfig& train) {
  std::vector<nd::Tensor> out;
  for (std::size_t i : teacher::strided_indices(split.train.size(), train.train_stride)) {
    out.push_back(teacher::teacher_representation(teacher, split.train[i], relation));
  }
  return out;
}

StudentResult train_student(const teacher::TeacherModel& teacher, const teacher::Split& split,
                            const nd::Tensor& relation, const StudentConfig& config,
                            const teacher::TrainConfig& train, const std::vector<nd::Tensor>* targets) {
  if (config.st.output_dim != teacher.config.fusion_dim) {
    throw ConfigError("student output_dim " + std::to_string(config.st.output_dim) +
                      " must equal the teacher fusion_dim " + std::to_string(teacher.config.fusion_dim));
  }
  StudentModel model = make_student(config, extract_head(teacher), train.seed);
  if (targets) return run(std::move(model), split, relation, train, targets);
  const std::vector<nd::Tensor> own = teacher_targets(teacher, split, relation, train);
  return run(std::move(model), split, relation, train, &own);
}

StudentResult train_baseline(const nd::ParameterSet& head, const teacher::Split& split, const nd::Tensor& relation,
                             const StudentConfig& config, const teacher::TrainConfig& train) {
  return run(make_student(config, head, train.seed), split, relation, train, nullptr);
}

}  // namespace dishft::distill
