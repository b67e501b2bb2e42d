// SPDX-License-Identifier: Apache-2.0
#include "dishft/teacher/teacher.hpp"

#include <cmath>

#include "dishft/error.hpp"
#include "dishft/ndgrad/ops.hpp"

namespace dishft::teacher {

namespace nd = ndgrad;

void TeacherConfig::validate() const {
  std::string problems;
  if (horizon < 1) problems += " horizon must be >= 1;";
  if (future_dim < 1) problems += " future_dim must be >= 1;";
  if (fusion_dim < 1) problems += " fusion_dim must be >= 1;";
  if (!(tau > 0.0)) problems += " tau must be > 0;";
  if (k_d < 0.0 || !std::isfinite(k_d)) problems += " k_d must be > 0 (or 0 for the default);";
  if (!problems.empty()) throw ConfigError("invalid teacher config:" + problems);
  st.validate();
}

nd::Var vmv_channels(const nd::Var& p, const nd::Var& q, const nd::Var& f) {
  const nd::Shape& sp = p.shape();
  const nd::Shape& sq = q.shape();
  const nd::Shape& sf = f.shape();
  if (sp.size() != 2 || sq.size() != 2 || sf.size() != 3 || sp[0] != sq[0] || sf[1] != sp[1] || sf[2] != sq[1]) {
    throw ShapeError("vmv_channels: incompatible shapes p " + nd::to_string(sp) + ", q " + nd::to_string(sq) +
                     ", F " + nd::to_string(sf));
  }
  const std::size_t n = sp[0], dp = sp[1], df = sq[1], d = sf[0];
  // p [N x D_p] . F laid out [D_p x (D * D_f)] -> [N x D x D_f], then . q.
  const nd::Var f_by_p = nd::reshape(nd::transpose(f, 0, 1), {dp, d * df});
  const nd::Var pf = nd::reshape(nd::matmul(p, f_by_p), {n, d, df});
  return nd::reshape(nd::batched_matmul(pf, nd::reshape(q, {n, df, 1})), {n, d});
}

nd::Var fuse_attention(const nd::Var& p, const nd::Var& q, const nd::Var& f, const nd::Var& w_q,
                       const nd::Var& w_k, double tau, double k_d, nd::Tensor* alpha_out) {
  const nd::Var v = vmv_channels(p, q, f);
  const nd::Var scores = nd::scale(nd::mul(nd::matmul(q, w_q), nd::matmul(p, w_k)), tau / std::sqrt(k_d));
  if (scores.shape() != v.shape()) {
    throw ShapeError("fuse_attention: scores " + nd::to_string(scores.shape()) + " do not match channels " +
                     nd::to_string(v.shape()));
  }
  const nd::Var alpha = nd::softmax(scores, 1);
  if (alpha_out) *alpha_out = alpha.value();
  return nd::scale(nd::mul(alpha, v), static_cast<double>(v.shape()[1]));
}

nd::Var fuse_concat(const nd::Var& p, const nd::Var& q, const nd::Var& w, const nd::Var& b) {
  return nd::relu(nd::add(nd::matmul(nd::concat({p, q}, 1), w), b));
}

nd::Var head_logits(const nd::Binding& params, const std::string& prefix, const nd::Var& h) {
  return nd::add(nd::matmul(h, params[prefix + "head.0.w"]), params[prefix + "head.0.b"]);
}

void init_head(nd::ParameterSet& params, const std::string& prefix, std::size_t dim, std::mt19937_64& rng) {
  params.add(prefix + "head.0.w", nd::uniform_init({dim, 2}, dim, rng));
  params.add(prefix + "head.0.b", nd::Tensor({2}));
}

nd::Var predict(const nd::Var& logits) { return nd::softmax(logits, 1); }

nd::Var cross_entropy(const nd::Var& logits, std::span<const std::uint8_t> labels) {
  const nd::Shape& s = logits.shape();
  if (s.size() != 2 || s[1] != 2 || s[0] != labels.size()) {
    throw ShapeError("cross_entropy: logits " + nd::to_string(s) + " for " + std::to_string(labels.size()) +
                     " labels");
  }
  nd::Tensor onehot({s[0], 2});
  for (std::size_t i = 0; i < labels.size(); ++i) onehot.at(i, labels[i] ? 1 : 0) = 1.0;
  const nd::Var picked = nd::mul(nd::log_softmax(logits, 1), logits.tape().constant(std::move(onehot)));
  return nd::scale(nd::reduce_sum(picked), -1.0 / static_cast<double>(s[0]));
}

TeacherNet::TeacherNet(TeacherConfig config) : config_(config), encoder_(config.st, kPrefix) {
  config_.validate();
}

void TeacherNet::init(nd::ParameterSet& params, std::mt19937_64& rng) const {
  encoder_.init(params, rng);
  const std::size_t t = config_.horizon, df = config_.future_dim, d = config_.fusion_dim;
  const std::size_t dp = config_.st.output_dim;
  params.add("teacher.future.0.w", nd::uniform_init({t, df}, t, rng));
  params.add("teacher.future.0.b", nd::Tensor({df}));
  params.add("teacher.future.1.w", nd::uniform_init({df, df}, df, rng));
  params.add("teacher.future.1.b", nd::Tensor({df}));
  if (config_.fusion == FusionKind::kAttention) {
    params.add("teacher.fusion.0.f", nd::uniform_init({d, dp, df}, dp * df, rng));
    params.add("teacher.fusion.0.w_q", nd::uniform_init({df, d}, df, rng));
    params.add("teacher.fusion.0.w_k", nd::uniform_init({dp, d}, dp, rng));
  } else {
    params.add("teacher.fusion.0.w_c", nd::uniform_init({dp + df, d}, dp + df, rng));
    params.add("teacher.fusion.0.b_c", nd::Tensor({d}));
  }
  init_head(params, kPrefix, d, rng);
}

nd::Var TeacherNet::encode_future(const nd::Binding& p, const nd::Var& future) const {
  const nd::Shape& s = future.shape();
  if (s.size() != 2 || s[1] != config_.horizon) {
    throw ShapeError("encode_future: expected [N x " + std::to_string(config_.horizon) + "] trend bits, got " +
                     nd::to_string(s));
  }
  for (double v : future.value().values()) {
    if (v != 0.0 && v != 1.0) throw DataError("encode_future: trend entries must be 0 or 1");
  }
  const nd::Var hidden = nd::relu(nd::add(nd::matmul(future, p["teacher.future.0.w"]), p["teacher.future.0.b"]));
  return nd::relu(nd::add(nd::matmul(hidden, p["teacher.future.1.w"]), p["teacher.future.1.b"]));
}

nd::Var TeacherNet::fuse(const nd::Binding& p, const nd::Var& hist_emb, const nd::Var& future_emb,
                         nd::Tensor* alpha_out) const {
  if (config_.fusion == FusionKind::kAttention) {
    return fuse_attention(hist_emb, future_emb, p["teacher.fusion.0.f"], p["teacher.fusion.0.w_q"],
                          p["teacher.fusion.0.w_k"], config_.tau, config_.effective_k_d(), alpha_out);
  }
  return fuse_concat(hist_emb, future_emb, p["teacher.fusion.0.w_c"], p["teacher.fusion.0.b_c"]);
}

nd::Var TeacherNet::represent(const nd::Binding& p, const nd::Var& history, const nd::Var& future,
                              const nd::Tensor& relation) const {
  return fuse(p, encoder_.forward(p, history, relation), encode_future(p, future));
}

nd::Var TeacherNet::logits(const nd::Binding& p, const nd::Var& h) const { return head_logits(p, kPrefix, h); }

TeacherModel make_teacher(const TeacherConfig& config, std::uint64_t seed) {
  TeacherModel model{config, {}};
  std::mt19937_64 rng(seed);
  TeacherNet(config).init(model.params, rng);
  return model;
}

nd::Tensor teacher_representation(const TeacherModel& model, const marketdata::WindowSample& window,
                                  const nd::Tensor& relation) {
  const TeacherNet net(model.config);
  nd::Tape tape;
  const nd::Binding b(tape, model.params, false);
  return net.represent(b, tape.constant(window.history), tape.constant(window.future_trend), relation).value();
}

std::vector<double> teacher_probabilities(const TeacherConfig& config, const nd::ParameterSet& params,
                                          const marketdata::WindowSample& window, const nd::Tensor& relation) {
  const TeacherNet net(config);
  nd::Tape tape;
  const nd::Binding b(tape, params, false);
  const nd::Var h = net.represent(b, tape.constant(window.history), tape.constant(window.future_trend), relation);
  const nd::Tensor probs = predict(net.logits(b, h)).value();
  std::vector<double> out(probs.dim(0));
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = probs.at(i, 1);
  return out;
}

}  // namespace dishft::teacher
