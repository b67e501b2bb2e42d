// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

#include "dishft/distill/hsic.hpp"
#include "dishft/stgnn/stgnn.hpp"
#include "dishft/teacher/training.hpp"

namespace dishft::distill {

struct StudentConfig {
  stgnn::STConfig st;  // output_dim must equal the teacher's fusion_dim
  double lambda = 0.5;
  DistillKind distill = DistillKind::kHsic;
  HsicConfig hsic;
  bool unfreeze_head = false;

  void validate() const;
};

// Student parameters: `student.st.*` plus the head copy `student.head.0.*`.
struct StudentModel {
  StudentConfig config;
  ndgrad::ParameterSet params;
};

// The teacher's prediction head, stored as `head.0.w` and `head.0.b`.
ndgrad::ParameterSet extract_head(const teacher::TeacherModel& teacher);

// Fresh encoder parameters from `seed`; head copied from `head`.
StudentModel make_student(const StudentConfig& config, const ndgrad::ParameterSet& head, std::uint64_t seed);

// Class probabilities [N x 2]. Takes no future-trend argument.
ndgrad::Tensor student_infer(const StudentModel& student, const ndgrad::Tensor& history,
                             const ndgrad::Tensor& relation);
std::vector<double> student_probabilities(const StudentConfig& config, const ndgrad::ParameterSet& params,
                                          const ndgrad::Tensor& history, const ndgrad::Tensor& relation);

// Embedding h~ [N x D] of the student encoder.
ndgrad::Var student_embedding(const StudentConfig& config, const ndgrad::Binding& params,
                              const ndgrad::Var& history, const ndgrad::Tensor& relation);

// Teacher representations of the training windows that train_student uses
// (after train_stride), in order.
std::vector<ndgrad::Tensor> teacher_targets(const teacher::TeacherModel& teacher, const teacher::Split& split,
                                            const ndgrad::Tensor& relation, const teacher::TrainConfig& train);

struct StudentResult {
  StudentModel model;
  std::vector<teacher::EpochLog> log;
};

// Minimises L_p + lambda * L_d over the student's encoder (and the head when
// unfrozen). `targets`, if given, must come from teacher_targets with the
// same split and training config.
StudentResult train_student(const teacher::TeacherModel& teacher, const teacher::Split& split,
                            const ndgrad::Tensor& relation, const StudentConfig& config,
                            const teacher::TrainConfig& train, const std::vector<ndgrad::Tensor>* targets = nullptr);

// Plain backbone training with cross-entropy only, using `head` as the
// prediction head. Never sees teacher representations.
StudentResult train_baseline(const ndgrad::ParameterSet& head, const teacher::Split& split,
                             const ndgrad::Tensor& relation, const StudentConfig& config,
                             const teacher::TrainConfig& train);

}  // namespace dishft::distill
