// Copyright 2026 The collapse-lab Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <random>

#include "collapse_lab/layers.hpp"
#include "collapse_lab/model.hpp"
#include "gradcheck.hpp"

using namespace collapse_lab::net;
using namespace collapse_lab::testing;

namespace {

constexpr double kTol = 1e-4;

class Seeded : public ::testing::TestWithParam<std::uint64_t> {};

}  // namespace

TEST_P(Seeded, DenseGradients) {
  std::mt19937_64 gen(GetParam());
  Dense d(5, 3, true);
  d.init(gen);
  for (double& b : d.bias.storage()) b = std::normal_distribution<double>()(gen);
  Tensor x = random_tensor(6, 5, gen), proj = random_tensor(6, 3, gen);
  auto loss = [&] { return dot(d.forward(x), proj); };
  loss();
  d.zero_grad();
  Tensor dx = d.backward(proj);
  EXPECT_LT(fd_check(x.flat(), dx.flat(), loss), kTol);
  EXPECT_LT(fd_check(d.weight.flat(), d.grad_weight.flat(), loss), kTol);
  EXPECT_LT(fd_check(d.bias.flat(), d.grad_bias.flat(), loss), kTol);
}

TEST_P(Seeded, BatchNormGradients) {
  for (double alpha : {0.0, 0.1}) {
    std::mt19937_64 gen(GetParam());
    auto state = BnLayerState::make(4, 1.0, alpha);
    std::normal_distribution<double> nd;
    for (auto& g : state.gamma) g = nd(gen);
    for (auto& b : state.beta) b = nd(gen);
    BatchNorm bn(state);
    Tensor x = random_tensor(8, 4, gen, 2.0), proj = random_tensor(8, 4, gen);
    auto loss = [&] { return dot(bn.forward(x, Mode::Train), proj); };
    loss();
    auto g = bn.backward(proj);
    EXPECT_LT(fd_check(x.flat(), g.grad_in.flat(), loss), kTol);
    EXPECT_LT(fd_check(bn.state.gamma, g.grad_gamma, loss), kTol);
    EXPECT_LT(fd_check(bn.state.beta, g.grad_beta, loss), kTol);
  }
}

TEST_P(Seeded, ActivationGradientsAwayFromZero) {
  for (auto kind : {ActivationKind::ReLU, ActivationKind::LeakyReLU}) {
    std::mt19937_64 gen(GetParam());
    Tensor x = random_tensor(6, 5, gen), proj = random_tensor(6, 5, gen);
    for (double& v : x.storage()) {
      if (std::abs(v) < 0.01) v = 0.5;  // keep every entry farther than the FD step from the kink
    }
    Activation act(kind);
    auto loss = [&] { return dot(act.forward(x), proj); };
    loss();
    Tensor dx = act.backward(proj);
    EXPECT_LT(fd_check(x.flat(), dx.flat(), loss), kTol);
  }
}

TEST_P(Seeded, SoftmaxCrossEntropyGradient) {
  std::mt19937_64 gen(GetParam());
  Tensor logits = random_tensor(7, 4, gen, 3.0);
  std::vector<int> y(7);
  for (auto& v : y) v = static_cast<int>(gen() % 4);
  auto res = softmax_cross_entropy(logits, y);
  auto loss = [&] { return softmax_cross_entropy(logits, y).loss; };
  EXPECT_LT(fd_check(logits.flat(), res.grad.flat(), loss), kTol);
}

TEST_P(Seeded, MlpParameterGradients) {
  for (auto norm : {NormKind::BN, NormKind::PsBN, NormKind::None}) {
    std::mt19937_64 gen(GetParam());
    ModelSpec spec;
    spec.input_dim = 6;
    spec.classes = 3;
    spec.hidden = {5, 4};
    spec.norm = norm;
    // Identity keeps the composite loss smooth; the activations are
    // checked on their own above.
    spec.activation = ActivationKind::Identity;
    Mlp m(spec, gen);
    Tensor x = random_tensor(8, 6, gen);
    std::vector<int> y(8);
    for (auto& v : y) v = static_cast<int>(gen() % 3);
    auto loss = [&] { return softmax_cross_entropy(m.forward(x, Mode::Train), y).loss; };
    m.zero_grad();
    m.backward(softmax_cross_entropy(m.forward(x, Mode::Train), y).grad);
    for (auto& p : m.params()) {
      std::vector<double> grad(p.grad.begin(), p.grad.end());
      EXPECT_LT(fd_check(p.value, grad, loss), kTol) << to_string(norm) << " " << p.name;
    }
  }
}

INSTANTIATE_TEST_SUITE_P(FiveSeeds, Seeded, ::testing::Values(1u, 2u, 3u, 4u, 5u));

TEST(BatchNorm, EvalIdentityStats) {
  BatchNorm bn(BnLayerState::make(3));
  Tensor x(2, 3);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = 0.5 * static_cast<double>(i) - 1.0;
  Tensor y = bn.forward(x, Mode::Eval);
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_DOUBLE_EQ(y[i], x[i] / std::sqrt(1.0 + 1e-5));
}

TEST(BatchNorm, PsbnPureShift) {
  BatchNorm bn(BnLayerState::make(2, 1.0, 0.1));
  Tensor y = bn.forward(Tensor(1, 2, 0.0), Mode::Eval);
  EXPECT_DOUBLE_EQ(y[0], 0.1);
  EXPECT_DOUBLE_EQ(y[1], 0.1);
}

TEST(BatchNorm, TrainNormalizedStatistics) {
  std::mt19937_64 gen(4);
  Tensor x = random_tensor(32, 6, gen, 5.0);
  for (std::size_t b = 0; b < 32; ++b) x.at(b, 2) += 100.0;
  BatchNorm bn(BnLayerState::make(6, 0.3));
  bn.forward(x, Mode::Train);
  const Tensor& xh = bn.normalized();
  for (std::size_t j = 0; j < 6; ++j) {
    double m = 0.0, v = 0.0;
    for (std::size_t b = 0; b < 32; ++b) m += xh.at(b, j);
    m /= 32.0;
    for (std::size_t b = 0; b < 32; ++b) v += (xh.at(b, j) - m) * (xh.at(b, j) - m);
    v /= 32.0;
    EXPECT_LT(std::abs(m), 1e-6);
    EXPECT_NEAR(v, 1.0, 1e-5);
  }
}

TEST(BatchNorm, RunningStatsUpdate) {
  Tensor x(4, 1);
  x[0] = 1.0;
  x[1] = 2.0;
  x[2] = 3.0;
  x[3] = 6.0;  // mean 3, unbiased variance 14/3
  BatchNorm bn(BnLayerState::make(1));
  bn.forward(x, Mode::Train);
  EXPECT_DOUBLE_EQ(bn.state.running_mean[0], 0.1 * 3.0);
  EXPECT_DOUBLE_EQ(bn.state.running_var[0], 0.9 + 0.1 * 14.0 / 3.0);
}

TEST(BatchNorm, PsbnEqualsBnPlusShift) {
  std::mt19937_64 gen(6);
  Tensor x = random_tensor(16, 5, gen), dy = random_tensor(16, 5, gen);
  auto s = BnLayerState::make(5, 0.7);
  s.beta = {0.1, -0.2, 0.3, 0.0, 1.0};
  auto ps = s;
  ps.alpha = 0.1;
  BatchNorm a(s), b(ps);
  Tensor ya = a.forward(x, Mode::Train), yb = b.forward(x, Mode::Train);
  for (std::size_t i = 0; i < ya.size(); ++i) EXPECT_EQ(yb[i], ya[i] + 0.1);
  auto ga = a.backward(dy), gb = b.backward(dy);
  EXPECT_EQ(ga.grad_in, gb.grad_in);
  EXPECT_EQ(ga.grad_gamma, gb.grad_gamma);
  EXPECT_EQ(ga.grad_beta, gb.grad_beta);
  Tensor ea = a.forward(x, Mode::Eval), eb = b.forward(x, Mode::Eval);
  for (std::size_t i = 0; i < ea.size(); ++i) EXPECT_EQ(eb[i], ea[i] + 0.1);
}

TEST(BatchNorm, GradBetaIsColumnSum) {
  std::mt19937_64 gen(2);
  Tensor x = random_tensor(8, 3, gen), dy = random_tensor(8, 3, gen);
  BatchNorm bn(BnLayerState::make(3));
  bn.forward(x, Mode::Train);
  auto g = bn.backward(dy);
  for (std::size_t j = 0; j < 3; ++j) {
    double s = 0.0;
    for (std::size_t b = 0; b < 8; ++b) s += dy.at(b, j);
    EXPECT_NEAR(g.grad_beta[j], s, 1e-14);
  }
}

TEST(BatchNorm, ZeroUpstreamGivesZeroGrads) {
  std::mt19937_64 gen(2);
  Tensor x = random_tensor(8, 3, gen);
  BatchNorm bn(BnLayerState::make(3));
  bn.forward(x, Mode::Train);
  auto g = bn.backward(Tensor(8, 3, 0.0));
  for (double v : g.grad_in.storage()) EXPECT_EQ(v, 0.0);
  for (double v : g.grad_gamma) EXPECT_EQ(v, 0.0);
  for (double v : g.grad_beta) EXPECT_EQ(v, 0.0);
}

TEST(BatchNorm, GradInLinearInGamma) {
  std::mt19937_64 gen(9);
  Tensor x = random_tensor(8, 4, gen), dy = random_tensor(8, 4, gen);
  BatchNorm a(BnLayerState::make(4, 0.6)), b(BnLayerState::make(4, 1.2));
  a.forward(x, Mode::Train);
  b.forward(x, Mode::Train);
  auto ga = a.backward(dy), gb = b.backward(dy);
  for (std::size_t i = 0; i < ga.grad_in.size(); ++i) EXPECT_NEAR(gb.grad_in[i], 2.0 * ga.grad_in[i], 1e-14);
}

TEST(BatchNorm, Errors) {
  BatchNorm bn(BnLayerState::make(3));
  EXPECT_THROW(bn.backward(Tensor(4, 3, 1.0)), collapse_lab::UsageError);
  EXPECT_THROW(bn.forward(Tensor(1, 3, 1.0), Mode::Train), collapse_lab::DomainError);
  EXPECT_NO_THROW(bn.forward(Tensor(1, 3, 1.0), Mode::Eval));
  EXPECT_THROW(bn.forward(Tensor(4, 2, 1.0), Mode::Train), collapse_lab::StructuralError);
  // An eval forward clears the train cache.
  bn.forward(Tensor(4, 3, 1.0), Mode::Train);
  bn.forward(Tensor(4, 3, 1.0), Mode::Eval);
  EXPECT_THROW(bn.backward(Tensor(4, 3, 1.0)), collapse_lab::UsageError);
  auto bad = BnLayerState::make(3);
  bad.beta.pop_back();
  EXPECT_THROW(BatchNorm{bad}, collapse_lab::StructuralError);
  bad = BnLayerState::make(3);
  bad.running_var[0] = -1.0;
  EXPECT_THROW(BatchNorm{bad}, collapse_lab::StructuralError);
}

TEST(Dense, Errors) {
  Dense d(3, 2, true);
  EXPECT_THROW(d.backward(Tensor(1, 2, 1.0)), collapse_lab::UsageError);
  EXPECT_THROW(d.forward(Tensor(1, 4, 1.0)), collapse_lab::StructuralError);
}

TEST(Activation, KinkConvention) {
  Tensor x(1, 3);
  x[0] = -2.0;
  x[1] = 0.0;
  x[2] = 3.0;
  Activation relu(ActivationKind::ReLU), leaky(ActivationKind::LeakyReLU);
  Tensor y = relu.forward(x);
  EXPECT_EQ(y[0], 0.0);
  EXPECT_EQ(y[1], 0.0);
  EXPECT_EQ(y[2], 3.0);
  Tensor d = relu.backward(Tensor(1, 3, 1.0));
  EXPECT_EQ(d[1], 0.0);
  EXPECT_EQ(d[2], 1.0);
  Tensor yl = leaky.forward(x);
  EXPECT_DOUBLE_EQ(yl[0], -0.02);
  Tensor dl = leaky.backward(Tensor(1, 3, 1.0));
  EXPECT_EQ(dl[0], kLeakySlope);
  EXPECT_EQ(dl[2], 1.0);
}

TEST(Loss, KnownValueAndErrors) {
  Tensor logits(1, 2, 0.0);
  std::vector<int> y{1};
  auto r = softmax_cross_entropy(logits, y);
  EXPECT_NEAR(r.loss, std::log(2.0), 1e-15);
  std::vector<int> bad{2};
  EXPECT_THROW(softmax_cross_entropy(logits, bad), collapse_lab::StructuralError);
  std::vector<int> two{0, 1};
  EXPECT_THROW(softmax_cross_entropy(logits, two), collapse_lab::StructuralError);
}

TEST(Mlp, EvalOutputIsBatchSizeIndependent) {
  std::mt19937_64 gen(12);
  ModelSpec spec;
  spec.input_dim = 8;
  spec.classes = 3;
  spec.hidden = {16, 16};
  Mlp m(spec, gen);
  Tensor x = random_tensor(32, 8, gen);
  m.forward(x, Mode::Train);  // move running stats off their defaults
  Tensor full = m.forward(x, Mode::Eval);
  for (std::size_t b = 0; b < 32; ++b) {
    Tensor one(1, 8);
    std::copy_n(x.row(b).begin(), 8, one.row(0).begin());
    Tensor y = m.forward(one, Mode::Eval);
    for (std::size_t j = 0; j < 3; ++j) EXPECT_EQ(y.at(0, j), full.at(b, j));
  }
}

TEST(Mlp, StructureAndParams) {
  std::mt19937_64 gen(1);
  ModelSpec spec;
  spec.hidden = {10, 7};
  spec.gamma_init = 0.2;
  Mlp m(spec, gen);
  EXPECT_EQ(m.widths(), (std::vector<std::size_t>{32, 10, 7, 10}));
  EXPECT_FALSE(m.dense()[0].has_bias);
  for (double g : m.norms()[1].state.gamma) EXPECT_EQ(g, 0.2);
  std::vector<std::string> names;
  for (const auto& p : m.params()) names.push_back(p.name);
  EXPECT_EQ(names, (std::vector<std::string>{"dense0.weight", "bn0.gamma", "bn0.beta", "dense1.weight", "bn1.gamma",
                                             "bn1.beta", "head.weight", "head.bias"}));
  spec.norm = NormKind::None;
  Mlp plain(spec, gen);
  EXPECT_TRUE(plain.dense()[0].has_bias);
  EXPECT_FALSE(plain.has_norm());
}

TEST(Sgd, MomentumAndDecay) {
  std::vector<double> v{1.0}, g{0.5};
  std::vector<ParamRef> p{{"w", v, g}};
  Sgd opt(0.9, 0.1);
  opt.step(p, 0.1);  // buf = 0.5 + 0.1·1 = 0.6; v = 1 − 0.06
  EXPECT_DOUBLE_EQ(v[0], 0.94);
  opt.step(p, 0.1);  // buf = 0.54 + 0.5 + 0.094
  EXPECT_DOUBLE_EQ(v[0], 0.94 - 0.1 * (0.9 * 0.6 + 0.5 + 0.1 * 0.94));
  opt.reset();
  const double before = v[0];
  opt.step(p, 0.1);
  EXPECT_DOUBLE_EQ(v[0], before - 0.1 * (0.5 + 0.1 * before));
}

TEST(Sgd, ZeroLearningRateLeavesParams) {
  std::vector<double> v{1.0, -2.0}, g{3.0, 4.0};
  std::vector<ParamRef> p{{"w", v, g}};
  Sgd opt(0.9, 5e-4);
  for (int i = 0; i < 10; ++i) opt.step(p, 0.0);
  EXPECT_EQ(v, (std::vector<double>{1.0, -2.0}));
}

TEST(Schedule, CosineEndpoints) {
  EXPECT_DOUBLE_EQ(cosine_lr(0.1, 0.001, 0, 100), 0.1);
  EXPECT_DOUBLE_EQ(cosine_lr(0.1, 0.001, 100, 100), 0.001);
  EXPECT_NEAR(cosine_lr(0.1, 0.0, 50, 100), 0.05, 1e-15);
  double prev = 1.0;
  for (std::size_t t = 0; t <= 100; ++t) {
    const double lr = cosine_lr(0.5, 0.0, t, 100);
    EXPECT_LE(lr, prev);
    prev = lr;
  }
}

TEST(Tensor, ShapeChecks) {
  EXPECT_THROW(Tensor({2, 3}, std::vector<double>(5)), collapse_lab::StructuralError);
  EXPECT_THROW(Tensor(0, 3), collapse_lab::StructuralError);
  Tensor t(2, 3, 1.5);
  EXPECT_EQ(t.size(), 6u);
  EXPECT_EQ(t.cols(), 3u);
  EXPECT_TRUE(t.all_finite());
  t[4] = NAN;
  EXPECT_FALSE(t.all_finite());
}
