// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "dishft/marketdata/windows.hpp"
#include "dishft/ndgrad/params.hpp"
#include "dishft/stgnn/stgnn.hpp"

namespace dishft::teacher {

enum class FusionKind { kAttention, kConcat };

struct TeacherConfig {
  stgnn::STConfig st;            // output_dim is D_p
  std::size_t horizon = 20;      // T
  std::size_t future_dim = 16;   // D_f
  std::size_t fusion_dim = 32;   // D
  FusionKind fusion = FusionKind::kAttention;
  double tau = 0.5;
  double k_d = 0.0;              // 0 selects D

  double effective_k_d() const { return k_d > 0.0 ? k_d : static_cast<double>(fusion_dim); }
  void validate() const;
};

// V[n, d] = p[n]^T F[d] q[n]. p [N x D_p], q [N x D_f], F [D x D_p x D_f].
ndgrad::Var vmv_channels(const ndgrad::Var& p, const ndgrad::Var& q, const ndgrad::Var& f);

// Channel gate: s = tau * (q W_Q) * (p W_K) / sqrt(k_d), alpha = softmax(s)
// over channels, h = D * alpha * V. Writes alpha to `alpha_out` if given.
ndgrad::Var fuse_attention(const ndgrad::Var& p, const ndgrad::Var& q, const ndgrad::Var& f,
                           const ndgrad::Var& w_q, const ndgrad::Var& w_k, double tau, double k_d,
                           ndgrad::Tensor* alpha_out = nullptr);

// ReLU([p | q] W + b).
ndgrad::Var fuse_concat(const ndgrad::Var& p, const ndgrad::Var& q, const ndgrad::Var& w, const ndgrad::Var& b);

// Linear D -> 2 head shared by teacher and student.
ndgrad::Var head_logits(const ndgrad::Binding& params, const std::string& prefix, const ndgrad::Var& h);
void init_head(ndgrad::ParameterSet& params, const std::string& prefix, std::size_t dim, std::mt19937_64& rng);

// Row-wise softmax of logits [N x 2].
ndgrad::Var predict(const ndgrad::Var& logits);

// Mean cross-entropy of logits [N x 2] against 0/1 labels.
ndgrad::Var cross_entropy(const ndgrad::Var& logits, std::span<const std::uint8_t> labels);

class TeacherNet {
 public:
  static constexpr const char* kPrefix = "teacher.";

  explicit TeacherNet(TeacherConfig config);

  const TeacherConfig& config() const noexcept { return config_; }
  const stgnn::STEncoder& encoder() const noexcept { return encoder_; }

  void init(ndgrad::ParameterSet& params, std::mt19937_64& rng) const;

  // future [N x T] of 0/1 -> q [N x D_f], elementwise >= 0.
  ndgrad::Var encode_future(const ndgrad::Binding& p, const ndgrad::Var& future) const;
  ndgrad::Var fuse(const ndgrad::Binding& p, const ndgrad::Var& hist_emb, const ndgrad::Var& future_emb,
                   ndgrad::Tensor* alpha_out = nullptr) const;

  // Future-aware representation h^{t+} [N x D].
  ndgrad::Var represent(const ndgrad::Binding& p, const ndgrad::Var& history, const ndgrad::Var& future,
                        const ndgrad::Tensor& relation) const;
  ndgrad::Var logits(const ndgrad::Binding& p, const ndgrad::Var& h) const;

 private:
  TeacherConfig config_;
  stgnn::STEncoder encoder_;
};

struct TeacherModel {
  TeacherConfig config;
  ndgrad::ParameterSet params;
};

TeacherModel make_teacher(const TeacherConfig& config, std::uint64_t seed);

// Teacher representation h^{t+} for one window; no gradients.
ndgrad::Tensor teacher_representation(const TeacherModel& model, const marketdata::WindowSample& window,
                                      const ndgrad::Tensor& relation);

// Class-1 probabilities [N] for one window.
std::vector<double> teacher_probabilities(const TeacherConfig& config, const ndgrad::ParameterSet& params,
                                          const marketdata::WindowSample& window, const ndgrad::Tensor& relation);
inline std::vector<double> teacher_probabilities(const TeacherModel& model, const marketdata::WindowSample& window,
                                                 const ndgrad::Tensor& relation) {
  return teacher_probabilities(model.config, model.params, window, relation);
}

}  // namespace dishft::teacher
