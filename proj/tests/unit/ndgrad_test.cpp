// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <random>
#include <string>

#include "dishft/error.hpp"
#include "dishft/ndgrad/adam.hpp"
#include "dishft/ndgrad/checkpoint.hpp"
#include "dishft/ndgrad/gradcheck.hpp"
#include "dishft/ndgrad/ops.hpp"
#include "dishft/ndgrad/params.hpp"

namespace nd = dishft::ndgrad;
using nd::Shape;
using nd::Tape;
using nd::Tensor;
using nd::Var;

namespace {

Tensor random_tensor(Shape shape, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> dist(lo, hi);
  Tensor t(std::move(shape));
  for (double& v : t.values()) v = dist(rng);
  return t;
}

// Keeps values away from the ReLU / leaky-ReLU kink so central differences
// never straddle it.
Tensor away_from_zero(Shape shape, std::mt19937_64& rng) {
  Tensor t = random_tensor(std::move(shape), rng);
  for (double& v : t.values()) v = (v >= 0.0 ? 0.05 : -0.05) + v;
  return t;
}

}  // namespace

TEST(Ops, SoftmaxOfUniformScoresIsUniform) {
  Tape tape;
  Var x = tape.constant(Tensor({4}, 0.7));
  Var y = nd::softmax(x, 0);
  for (double v : y.value().values()) EXPECT_DOUBLE_EQ(v, 0.25);
}

TEST(Ops, ReluOfNegativeIsZero) {
  Tape tape;
  Var x = tape.constant(Tensor({3}, {0.5, 2.0, 1e-9}));
  Var y = nd::relu(nd::scale(x, -1.0));
  for (double v : y.value().values()) EXPECT_EQ(v, 0.0);
}

TEST(Ops, MatmulMatchesHandProduct) {
  Tape tape;
  Var a = tape.constant(Tensor({2, 3}, {1, 2, 3, 4, 5, 6}));
  Var b = tape.constant(Tensor({3, 2}, {7, 8, 9, 10, 11, 12}));
  Var c = nd::matmul(a, b);
  EXPECT_EQ(c.shape(), (Shape{2, 2}));
  // 1*7+2*9+3*11, 1*8+2*10+3*12, 4*7+5*9+6*11, 4*8+5*10+6*12
  EXPECT_EQ(c.value(), Tensor({2, 2}, {58, 64, 139, 154}));
}

TEST(Ops, ShapeErrorNamesOpAndBothShapes) {
  Tape tape;
  Var a = tape.constant(Tensor({2, 3}));
  Var b = tape.constant(Tensor({2, 3}));
  try {
    nd::matmul(a, b);
    FAIL() << "expected ShapeError";
  } catch (const dishft::ShapeError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("matmul"), std::string::npos);
    EXPECT_NE(msg.find("[2 x 3] and [2 x 3]"), std::string::npos);
  }
  EXPECT_THROW(nd::add(a, tape.constant(Tensor({2}))), dishft::ShapeError);
  EXPECT_NO_THROW(nd::add(a, tape.constant(Tensor({3}))));
}

TEST(Ops, NonFiniteOutputFromFiniteInputIsRejected) {
  Tape tape;
  Var x = tape.constant(Tensor({2}, {1000.0, 1.0}));
  EXPECT_THROW(nd::exp(x), dishft::NumericError);
  EXPECT_THROW(nd::log(tape.constant(Tensor({1}, {0.0}))), dishft::NumericError);
}

TEST(Ops, SoftmaxRowsSumToOneAndIgnoreShift) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    Tensor logits = random_tensor({5, 7}, rng, -20.0, 20.0);
    Tape tape;
    Var y = nd::softmax(tape.constant(logits), 1);
    Tensor shifted = logits;
    for (double& v : shifted.values()) v += 13.25;
    Var ys = nd::softmax(tape.constant(shifted), 1);
    for (std::size_t r = 0; r < 5; ++r) {
      double total = 0.0;
      for (std::size_t c = 0; c < 7; ++c) {
        total += y.value().at(r, c);
        EXPECT_NEAR(y.value().at(r, c), ys.value().at(r, c), 1e-10);
      }
      EXPECT_NEAR(total, 1.0, 1e-12);
    }
  }
}

TEST(Ops, TransposeAndGatherRows) {
  Tape tape;
  Var x = tape.constant(Tensor({2, 3, 2}, {0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11}));
  Var t = nd::transpose(x, 0, 1);
  EXPECT_EQ(t.shape(), (Shape{3, 2, 2}));
  EXPECT_EQ(t.value().at(1, 1, 0), x.value().at(1, 1, 0));
  EXPECT_EQ(t.value().at(2, 0, 1), x.value().at(0, 2, 1));
  Var g = nd::gather_rows(x, {1, 1, 0});
  EXPECT_EQ(g.shape(), (Shape{3, 3, 2}));
  EXPECT_EQ(g.value().at(0, 2, 1), 11.0);
  EXPECT_EQ(g.value().at(2, 0, 0), 0.0);
  EXPECT_THROW(nd::gather_rows(x, {2}), dishft::RangeError);
}

TEST(Backward, SumGivesOnes) {
  Tape tape;
  Var x = tape.parameter(Tensor({2, 3}, {1, -2, 3, 0.5, 0, 9}));
  auto grads = tape.backward(nd::reduce_sum(x));
  EXPECT_EQ(grads.of(x), Tensor({2, 3}, 1.0));
}

TEST(Backward, SquareGivesTwiceInputWithFanOutAccumulation) {
  Tape tape;
  Tensor v({4}, {1.5, -2.0, 0.0, 3.0});
  Var x = tape.parameter(v);
  auto grads = tape.backward(nd::reduce_sum(nd::mul(x, x)));
  for (std::size_t i = 0; i < 4; ++i) EXPECT_DOUBLE_EQ(grads.of(x)[i], 2.0 * v[i]);
}

TEST(Backward, ConstantsReceiveNoGradient) {
  Tape tape;
  Var x = tape.parameter(Tensor({2}, {1.0, 2.0}));
  Var c = tape.constant(Tensor({2}, {3.0, 4.0}));
  auto grads = tape.backward(nd::reduce_sum(nd::mul(x, c)));
  EXPECT_TRUE(grads.contains(x.id()));
  EXPECT_FALSE(grads.contains(c.id()));
  EXPECT_EQ(grads.size(), 1u);
}

TEST(Backward, SecondSweepOnConsumedTapeThrows) {
  Tape tape;
  Var x = tape.parameter(Tensor({2}, 1.0));
  Var loss = nd::reduce_sum(x);
  tape.backward(loss);
  EXPECT_THROW(tape.backward(loss), dishft::Error);
  EXPECT_THROW(nd::scale(x, 2.0), dishft::Error);
}

TEST(Backward, IsLinearInTheLoss) {
  std::mt19937_64 rng(11);
  const Tensor point = random_tensor({3, 4}, rng);
  auto f = [](const Var& x) { return nd::reduce_sum(nd::tanh(nd::mul(x, x))); };
  auto g = [](const Var& x) { return nd::reduce_mean(nd::softmax(x, 1)); };
  const double a = 0.7, b = -2.5;

  Tape t1;
  Var x1 = t1.parameter(point);
  const Tensor gf = t1.backward(f(x1)).of(x1);
  Tape t2;
  Var x2 = t2.parameter(point);
  const Tensor gg = t2.backward(g(x2)).of(x2);
  Tape t3;
  Var x3 = t3.parameter(point);
  const Tensor gc = t3.backward(nd::add(nd::scale(f(x3), a), nd::scale(g(x3), b))).of(x3);
  for (std::size_t i = 0; i < point.size(); ++i) {
    EXPECT_NEAR(gc[i], a * gf[i] + b * gg[i], 1e-10);
  }
}

TEST(GradCheck, SumOfSquaresPasses) {
  std::mt19937_64 rng(5);
  const Tensor point = random_tensor({3, 5}, rng);
  auto report = nd::grad_check(
      [](Tape&, const Var& x) { return nd::reduce_sum(nd::mul(x, x)); }, point, 1e-6, 1e-5);
  EXPECT_TRUE(report.passed) << report.max_rel_error;
  EXPECT_EQ(report.checked, 15u);
}

TEST(GradCheck, WrongRegisteredGradientFails) {
  // Doubles the input but registers a gradient of 3.
  auto bad_double = [](const Var& x) {
    Tensor out = x.value();
    for (double& v : out.values()) v *= 2.0;
    return x.tape().record("bad_double", std::move(out), {x}, [](const nd::BackwardContext& ctx) {
      for (std::size_t i = 0; i < ctx.out_grad.size(); ++i) (*ctx.parent_grads[0])[i] += 3.0 * ctx.out_grad[i];
    });
  };
  std::mt19937_64 rng(6);
  auto report = nd::grad_check([&](Tape&, const Var& x) { return nd::reduce_sum(bad_double(x)); },
                               random_tensor({4}, rng), 1e-6, 1e-4);
  EXPECT_FALSE(report.passed);
  EXPECT_NEAR(report.analytic, 3.0, 1e-12);
  EXPECT_NEAR(report.numeric, 2.0, 1e-6);
}

TEST(GradCheck, SoftmaxCrossEntropyPasses) {
  std::mt19937_64 rng(8);
  const Tensor logits = random_tensor({6, 2}, rng, -3.0, 3.0);
  Tensor onehot({6, 2}, 0.0);
  for (std::size_t i = 0; i < 6; ++i) onehot.at(i, i % 2) = 1.0;
  auto report = nd::grad_check(
      [&](Tape& tape, const Var& x) {
        Var ls = nd::log_softmax(x, 1);
        return nd::scale(nd::reduce_mean(nd::reduce_sum(nd::mul(ls, tape.constant(onehot)), 1)), -1.0);
      },
      logits, 1e-6, 1e-4);
  EXPECT_TRUE(report.passed) << report.max_rel_error;
}

TEST(GradCheck, NonFiniteAtPerturbedPointThrows) {
  Tensor point({1}, {1e-7});
  EXPECT_THROW(nd::grad_check([](Tape&, const Var& x) { return nd::reduce_sum(nd::log(x)); }, point,
                              1e-6, 1e-4),
               dishft::NumericError);
}

// Every registered op, randomized shapes, weighted-sum readout.
TEST(GradCheckProperty, EveryOpOnRandomShapes) {
  using Builder = std::function<Var(Tape&, std::span<const Var>)>;
  struct Case {
    std::string name;
    std::function<std::vector<Tensor>(std::mt19937_64&)> inputs;
    Builder build;
  };
  std::uniform_int_distribution<std::size_t> dim(1, 4);
  std::vector<Case> cases;
  cases.push_back({"matmul", [&](auto& r) { auto n = dim(r), k = dim(r), m = dim(r);
                     return std::vector{random_tensor({n, k}, r), random_tensor({k, m}, r)}; },
                   [](Tape&, auto v) { return nd::matmul(v[0], v[1]); }});
  cases.push_back({"batched_matmul", [&](auto& r) { auto b = dim(r), n = dim(r), k = dim(r), m = dim(r);
                     return std::vector{random_tensor({b, n, k}, r), random_tensor({b, k, m}, r)}; },
                   [](Tape&, auto v) { return nd::batched_matmul(v[0], v[1]); }});
  auto binary = [&](std::string name, auto op, bool positive_rhs) {
    cases.push_back({name, [&, positive_rhs](auto& r) {
                       auto a = dim(r), b = dim(r);
                       Tensor rhs = std::uniform_int_distribution<int>(0, 1)(r) ? random_tensor({a, b}, r) : random_tensor({b}, r);
                       if (positive_rhs) for (double& x : rhs.values()) x = 0.5 + std::abs(x);
                       return std::vector{random_tensor({a, b}, r), rhs}; },
                     [op](Tape&, auto v) { return op(v[0], v[1]); }});
  };
  binary("add", [](const Var& a, const Var& b) { return nd::add(a, b); }, false);
  binary("sub", [](const Var& a, const Var& b) { return nd::sub(a, b); }, false);
  binary("mul", [](const Var& a, const Var& b) { return nd::mul(a, b); }, false);
  binary("div", [](const Var& a, const Var& b) { return nd::div(a, b); }, true);
  auto unary = [&](std::string name, auto op, bool positive) {
    cases.push_back({name, [&, positive](auto& r) {
                       Shape s{dim(r), dim(r)};
                       if (std::uniform_int_distribution<int>(0, 1)(r)) s.push_back(dim(r));
                       Tensor t = positive ? random_tensor(s, r, 0.2, 2.0) : away_from_zero(s, r);
                       return std::vector{t}; },
                     [op](Tape&, auto v) { return op(v[0]); }});
  };
  unary("scale", [](const Var& a) { return nd::scale(a, -1.75); }, false);
  unary("relu", [](const Var& a) { return nd::relu(a); }, false);
  unary("leaky_relu", [](const Var& a) { return nd::leaky_relu(a, 0.2); }, false);
  unary("sigmoid", [](const Var& a) { return nd::sigmoid(a); }, false);
  unary("tanh", [](const Var& a) { return nd::tanh(a); }, false);
  unary("exp", [](const Var& a) { return nd::exp(a); }, false);
  unary("log", [](const Var& a) { return nd::log(a); }, true);
  unary("softmax0", [](const Var& a) { return nd::softmax(a, 0); }, false);
  unary("softmax_last", [](const Var& a) { return nd::softmax(a, a.shape().size() - 1); }, false);
  unary("log_softmax", [](const Var& a) { return nd::log_softmax(a, 1); }, false);
  unary("reduce_sum", [](const Var& a) { return nd::reduce_sum(a); }, false);
  unary("reduce_mean", [](const Var& a) { return nd::reduce_mean(a); }, false);
  unary("reduce_sum_axis", [](const Var& a) { return nd::reduce_sum(a, 1); }, false);
  unary("reduce_mean_axis", [](const Var& a) { return nd::reduce_mean(a, 0); }, false);
  unary("reshape", [](const Var& a) { return nd::reshape(a, {a.value().size()}); }, false);
  unary("transpose", [](const Var& a) { return nd::transpose(a, 0, a.shape().size() - 1); }, false);
  unary("gather_rows", [](const Var& a) { return nd::gather_rows(a, {a.shape()[0] - 1, 0, 0}); }, false);
  cases.push_back({"concat", [&](auto& r) { auto a = dim(r);
                     return std::vector{random_tensor({a, dim(r)}, r), random_tensor({a, dim(r)}, r)}; },
                   [](Tape&, auto v) { return nd::concat({v[0], v[1]}, 1); }});

  std::mt19937_64 rng(2024);
  std::size_t total = 0;
  for (int round = 0; round < 5; ++round) {
    for (const auto& c : cases) {
      const auto inputs = c.inputs(rng);
      // Fixed random readout weights make every output element matter.
      Tape probe;
      std::vector<Var> pv;
      for (const auto& t : inputs) pv.push_back(probe.constant(t));
      const Tensor weights = random_tensor(c.build(probe, pv).shape(), rng);
      auto f = [&](Tape& tape, std::span<const Var> v) {
        return nd::reduce_sum(nd::mul(c.build(tape, v), tape.constant(weights)));
      };
      auto report = nd::grad_check(f, inputs, 1e-6, 1e-4);
      EXPECT_TRUE(report.passed) << c.name << " rel=" << report.max_rel_error;
      ++total;
    }
  }
  EXPECT_GE(total, 100u);
}

TEST(Checkpoint, EncodeDecodeRoundTripsExactly) {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<nd::NamedTensor> records;
    const int n = std::uniform_int_distribution<int>(0, 5)(rng);
    for (int i = 0; i < n; ++i) {
      Shape s;
      const int rank = std::uniform_int_distribution<int>(1, 3)(rng);
      for (int r = 0; r < rank; ++r) s.push_back(std::uniform_int_distribution<std::size_t>(1, 4)(rng));
      records.push_back({"st.gru.0.w_" + std::to_string(i), random_tensor(s, rng, -1e6, 1e6)});
    }
    const auto bytes = nd::encode_checkpoint(records);
    const auto back = nd::decode_checkpoint(bytes);
    ASSERT_EQ(back.size(), records.size());
    for (std::size_t i = 0; i < back.size(); ++i) {
      EXPECT_EQ(back[i].name, records[i].name);
      EXPECT_EQ(back[i].tensor, records[i].tensor);
    }
    EXPECT_EQ(nd::encode_checkpoint(back), bytes);
  }
}

TEST(Checkpoint, LayoutIsLittleEndianWithMagic) {
  std::vector<nd::NamedTensor> records{{"ab", Tensor({1}, {1.0})}};
  const auto bytes = nd::encode_checkpoint(records);
  ASSERT_EQ(bytes.size(), 4u + 4u + 4u + 2u + 4u + 4u + 8u);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "DFT1");
  EXPECT_EQ(bytes[4], 1);  // count
  EXPECT_EQ(bytes[8], 2);  // name length
  EXPECT_EQ(bytes[14], 1);  // rank
  EXPECT_EQ(bytes[18], 1);  // dim 0
  // 1.0 = 0x3FF0000000000000, little-endian
  EXPECT_EQ(bytes[22 + 7], 0x3F);
  EXPECT_EQ(bytes[22 + 6], 0xF0);
  EXPECT_THROW(nd::decode_checkpoint(std::span(bytes).first(bytes.size() - 1)), dishft::IoError);
}

TEST(Adam, MinimizesQuadratic) {
  nd::ParameterSet params;
  params.add("w", Tensor({2}, {3.0, -4.0}));
  nd::Adam adam({.learning_rate = 0.05});
  for (int step = 0; step < 2000; ++step) {
    Tape tape;
    nd::Binding bound(tape, params, true);
    Var w = bound["w"];
    auto grads = bound.collect(tape.backward(nd::reduce_sum(nd::mul(w, w))));
    adam.step(params, grads);
  }
  EXPECT_NEAR(params.get("w")[0], 0.0, 1e-3);
  EXPECT_NEAR(params.get("w")[1], 0.0, 1e-3);
}
