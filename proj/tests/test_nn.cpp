#include <gtest/gtest.h>

#include <cmath>

#include "uavaoi/nn.hpp"

using namespace uavaoi;
using namespace uavaoi::nn;

namespace {

Mlp small_net(Activation hidden, std::uint64_t seed) {
  Rng rng(seed);
  return Mlp({3, 5, 4, 2}, {hidden, hidden, Activation::identity}, rng);
}

// Loss = 0.5 * |out - target|^2 summed over the sample.
double half_sq(const Mlp& net, const std::vector<double>& x, const std::vector<double>& target) {
  const auto tape = forward(net, x);
  const auto out = tape.output();
  double s = 0.0;
  for (std::size_t j = 0; j < out.size(); ++j) s += 0.5 * (out[j] - target[j]) * (out[j] - target[j]);
  return s;
}

}  // namespace

TEST(Mlp, ZeroNetworkOutputsBias) {
  auto net = Mlp::zeros({2, 3, 1}, {Activation::tanh, Activation::identity});
  net.mutable_layers()[1].biases[0] = 0.25;
  const std::vector<double> x{1.0, -2.0};
  EXPECT_EQ(forward(net, x).output()[0], 0.25);
}

TEST(Mlp, HandComputedForward) {
  auto net = Mlp::zeros({2, 2, 1}, {Activation::relu, Activation::identity});
  auto& L = net.mutable_layers();
  L[0].weights = {1.0, 2.0, -1.0, 1.0};  // rows: unit 0, unit 1
  L[0].biases = {0.5, 0.0};
  L[1].weights = {3.0, -2.0};
  L[1].biases = {0.1};
  const std::vector<double> x{1.0, 1.0};
  // h = relu(3.5, 0) ; y = 10.5 + 0.1
  EXPECT_DOUBLE_EQ(forward(net, x).output()[0], 10.6);
}

TEST(Mlp, ShapesAndFlatten) {
  const auto net = small_net(Activation::tanh, 1);
  EXPECT_EQ(net.input_width(), 3);
  EXPECT_EQ(net.output_width(), 2);
  EXPECT_EQ(net.parameter_count(), 3u * 5 + 5 + 5 * 4 + 4 + 4 * 2 + 2);
  auto copy = Mlp::zeros(net.widths(), {Activation::tanh, Activation::tanh, Activation::identity});
  copy.assign(net.flatten());
  EXPECT_EQ(copy.flatten(), net.flatten());
  const std::vector<double> x{0.1, 0.2, 0.3};
  EXPECT_EQ(forward(copy, x).activations, forward(net, x).activations);
}

TEST(Mlp, RejectsWrongInputWidth) {
  const auto net = small_net(Activation::tanh, 2);
  const std::vector<double> x{1.0};
  EXPECT_THROW(forward(net, x), std::invalid_argument);
}

TEST(Backward, MatchesFiniteDifferences) {
  for (auto act : {Activation::tanh, Activation::relu}) {
    const auto net = small_net(act, 7);
    const std::vector<double> x{0.3, -0.7, 1.1}, target{0.5, -0.25};
    const auto tape = forward(net, x);
    std::vector<double> og(2);
    for (int j = 0; j < 2; ++j) og[j] = tape.output()[j] - target[j];
    const auto analytic = backward(net, tape, og).flatten();
    auto params = net.flatten();
    auto probe = net;
    const double h = 1e-6;
    for (std::size_t p = 0; p < params.size(); ++p) {
      auto plus = params, minus = params;
      plus[p] += h;
      minus[p] -= h;
      probe.assign(plus);
      const double fp = half_sq(probe, x, target);
      probe.assign(minus);
      const double fm = half_sq(probe, x, target);
      EXPECT_NEAR(analytic[p], (fp - fm) / (2 * h), 1e-6) << "parameter " << p;
    }
  }
}

TEST(Backward, StaleTapeRejected) {
  auto net = small_net(Activation::tanh, 3);
  const std::vector<double> x{0.0, 1.0, 2.0};
  const auto tape = forward(net, x);
  net.mutable_layers();
  const std::vector<double> og{1.0, 1.0};
  EXPECT_THROW(backward(net, tape, og), std::logic_error);
}

TEST(Backward, AccumulateSumsSamples) {
  const auto net = small_net(Activation::tanh, 4);
  const std::vector<double> a{1.0, 0.0, 0.0}, b{0.0, 1.0, -1.0}, og{1.0, -1.0};
  auto sum = backward(net, forward(net, a), og);
  sum.add(backward(net, forward(net, b), og));
  auto acc = Gradients::zeros_like(net);
  backward_accumulate(net, forward(net, a), og, acc);
  backward_accumulate(net, forward(net, b), og, acc);
  EXPECT_EQ(acc.flatten(), sum.flatten());
}

TEST(Adam, FirstStepMovesEachParameterByLearningRate) {
  auto net = Mlp::zeros({1, 1}, {Activation::identity});
  auto opt = AdamState::for_net(net, 0.01);
  auto g = Gradients::zeros_like(net);
  g.weights[0][0] = 5.0;
  g.biases[0][0] = -0.001;
  adam_step(net, g, opt);
  EXPECT_NEAR(net.layers()[0].weights[0], -0.01, 1e-9);
  EXPECT_NEAR(net.layers()[0].biases[0], 0.01, 1e-6);
  EXPECT_EQ(opt.step, 1);
}

TEST(Adam, MinimizesQuadratic) {
  auto net = Mlp::zeros({1, 1}, {Activation::identity});
  net.mutable_layers()[0].weights[0] = 3.0;
  auto opt = AdamState::for_net(net, 0.05);
  for (int i = 0; i < 2000; ++i) {
    auto g = Gradients::zeros_like(net);
    g.weights[0][0] = 2.0 * net.layers()[0].weights[0];
    adam_step(net, g, opt);
  }
  EXPECT_LT(std::fabs(net.layers()[0].weights[0]), 1e-2);
}

TEST(Adam, RejectsNonFiniteGradients) {
  auto net = small_net(Activation::tanh, 5);
  auto opt = AdamState::for_net(net, 1e-3);
  auto g = Gradients::zeros_like(net);
  g.biases[1][0] = std::nan("");
  const auto before = net.flatten();
  EXPECT_THROW(adam_step(net, g, opt), NumericError);
  EXPECT_EQ(net.flatten(), before);
}

TEST(Checkpoint, RoundTripRestoresNetworkAndOptimizer) {
  auto net = small_net(Activation::relu, 6);
  auto opt = AdamState::for_net(net, 2e-3);
  auto g = Gradients::zeros_like(net);
  g.weights[0][1] = 0.3;
  adam_step(net, g, opt);
  const auto j = checkpoint_json(net, opt);
  Mlp back;
  AdamState opt2;
  load_checkpoint(nlohmann::json::parse(j.dump()), back, opt2);
  EXPECT_EQ(back.flatten(), net.flatten());
  EXPECT_EQ(back.widths(), net.widths());
  EXPECT_EQ(opt2.step, opt.step);
  EXPECT_EQ(opt2.m, opt.m);
  EXPECT_EQ(opt2.v, opt.v);
  EXPECT_EQ(opt2.learning_rate, opt.learning_rate);
}

TEST(Activation, StringRoundTrip) {
  for (auto a : {Activation::tanh, Activation::relu, Activation::identity})
    EXPECT_EQ(activation_from_string(to_string(a)), a);
  EXPECT_THROW(activation_from_string("gelu"), std::invalid_argument);
}
