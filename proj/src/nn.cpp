#include "uavaoi/nn.hpp"

#include <cmath>

namespace uavaoi::nn {

namespace {

double activate(Activation a, double z) {
  switch (a) {
    case Activation::tanh: return std::tanh(z);
    case Activation::relu: return z > 0.0 ? z : 0.0;
    case Activation::identity: return z;
  }
  return z;
}

// Derivative expressed through the post-activation value.
double derivative_from_output(Activation a, double y) {
  switch (a) {
    case Activation::tanh: return 1.0 - y * y;
    case Activation::relu: return y > 0.0 ? 1.0 : 0.0;
    case Activation::identity: return 1.0;
  }
  return 1.0;
}

void check_shapes(const std::vector<int>& widths, const std::vector<Activation>& acts) {
  if (widths.size() < 2) throw std::invalid_argument("Mlp: need at least input and output widths");
  if (acts.size() != widths.size() - 1) throw std::invalid_argument("Mlp: one activation per layer");
  for (int w : widths)
    if (w < 1) throw std::invalid_argument("Mlp: widths must be positive");
}

}  // namespace

Mlp::Mlp(const std::vector<int>& widths, const std::vector<Activation>& acts, Rng& rng) {
  check_shapes(widths, acts);
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    Layer layer{widths[l], widths[l + 1], acts[l], {}, {}};
    const double limit = std::sqrt(6.0 / (layer.in + layer.out));
    std::uniform_real_distribution<double> init(-limit, limit);
    layer.weights.resize(static_cast<std::size_t>(layer.in) * layer.out);
    for (auto& w : layer.weights) w = init(rng);
    layer.biases.assign(layer.out, 0.0);
    layers_.push_back(std::move(layer));
  }
}

Mlp Mlp::zeros(const std::vector<int>& widths, const std::vector<Activation>& acts) {
  check_shapes(widths, acts);
  Mlp net;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    Layer layer{widths[l], widths[l + 1], acts[l], {}, {}};
    layer.weights.assign(static_cast<std::size_t>(layer.in) * layer.out, 0.0);
    layer.biases.assign(layer.out, 0.0);
    net.layers_.push_back(std::move(layer));
  }
  return net;
}

std::vector<int> Mlp::widths() const {
  std::vector<int> w;
  if (layers_.empty()) return w;
  w.push_back(layers_.front().in);
  for (const auto& l : layers_) w.push_back(l.out);
  return w;
}

std::size_t Mlp::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers_) n += l.weights.size() + l.biases.size();
  return n;
}

std::vector<double> Mlp::flatten() const {
  std::vector<double> p;
  p.reserve(parameter_count());
  for (const auto& l : layers_) {
    p.insert(p.end(), l.weights.begin(), l.weights.end());
    p.insert(p.end(), l.biases.begin(), l.biases.end());
  }
  return p;
}

void Mlp::assign(std::span<const double> params) {
  if (params.size() != parameter_count()) throw std::invalid_argument("Mlp::assign: parameter count mismatch");
  std::size_t k = 0;
  for (auto& l : layers_) {
    for (auto& w : l.weights) w = params[k++];
    for (auto& b : l.biases) b = params[k++];
  }
  ++version_;
}

bool Mlp::all_finite() const {
  for (const auto& l : layers_) {
    for (double w : l.weights)
      if (!std::isfinite(w)) return false;
    for (double b : l.biases)
      if (!std::isfinite(b)) return false;
  }
  return true;
}

Gradients Gradients::zeros_like(const Mlp& net) {
  Gradients g;
  for (const auto& l : net.layers()) {
    g.weights.emplace_back(l.weights.size(), 0.0);
    g.biases.emplace_back(l.biases.size(), 0.0);
  }
  return g;
}

void Gradients::add(const Gradients& other) {
  for (std::size_t l = 0; l < weights.size(); ++l) {
    for (std::size_t k = 0; k < weights[l].size(); ++k) weights[l][k] += other.weights[l][k];
    for (std::size_t k = 0; k < biases[l].size(); ++k) biases[l][k] += other.biases[l][k];
  }
}

void Gradients::scale(double factor) {
  for (auto& w : weights)
    for (auto& x : w) x *= factor;
  for (auto& b : biases)
    for (auto& x : b) x *= factor;
}

bool Gradients::all_finite() const {
  for (const auto& w : weights)
    for (double x : w)
      if (!std::isfinite(x)) return false;
  for (const auto& b : biases)
    for (double x : b)
      if (!std::isfinite(x)) return false;
  return true;
}

std::vector<double> Gradients::flatten() const {
  std::vector<double> p;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    p.insert(p.end(), weights[l].begin(), weights[l].end());
    p.insert(p.end(), biases[l].begin(), biases[l].end());
  }
  return p;
}

Tape forward(const Mlp& net, std::span<const double> input) {
  if (static_cast<int>(input.size()) != net.input_width())
    throw std::invalid_argument("forward: input has " + std::to_string(input.size()) + " entries, network expects " +
                                std::to_string(net.input_width()));
  Tape tape;
  tape.owner = &net;
  tape.version = net.version();
  tape.activations.reserve(net.layers().size() + 1);
  tape.activations.emplace_back(input.begin(), input.end());
  for (const auto& l : net.layers()) {
    const auto& x = tape.activations.back();
    std::vector<double> y(l.out);
    for (int o = 0; o < l.out; ++o) {
      const double* row = l.weights.data() + static_cast<std::size_t>(o) * l.in;
      double z = l.biases[o];
      for (int i = 0; i < l.in; ++i) z += row[i] * x[i];
      y[o] = activate(l.act, z);
    }
    tape.activations.push_back(std::move(y));
  }
  return tape;
}

void backward_accumulate(const Mlp& net, const Tape& tape, std::span<const double> output_grad, Gradients& into) {
  if (tape.owner != &net || tape.version != net.version())
    throw std::logic_error("backward: tape is stale or belongs to another network");
  if (static_cast<int>(output_grad.size()) != net.output_width())
    throw std::invalid_argument("backward: output gradient has wrong length");
  const auto& layers = net.layers();
  std::vector<double> delta(output_grad.begin(), output_grad.end());
  for (std::size_t li = layers.size(); li-- > 0;) {
    const auto& l = layers[li];
    const auto& y = tape.activations[li + 1];
    const auto& x = tape.activations[li];
    for (int o = 0; o < l.out; ++o) delta[o] *= derivative_from_output(l.act, y[o]);
    auto& gw = into.weights[li];
    auto& gb = into.biases[li];
    for (int o = 0; o < l.out; ++o) {
      const double d = delta[o];
      if (d == 0.0) continue;
      gb[o] += d;
      double* row = gw.data() + static_cast<std::size_t>(o) * l.in;
      for (int i = 0; i < l.in; ++i) row[i] += d * x[i];
    }
    if (li == 0) break;
    std::vector<double> prev(l.in, 0.0);
    for (int o = 0; o < l.out; ++o) {
      const double d = delta[o];
      if (d == 0.0) continue;
      const double* row = l.weights.data() + static_cast<std::size_t>(o) * l.in;
      for (int i = 0; i < l.in; ++i) prev[i] += row[i] * d;
    }
    delta = std::move(prev);
  }
}

Gradients backward(const Mlp& net, const Tape& tape, std::span<const double> output_grad) {
  Gradients g = Gradients::zeros_like(net);
  backward_accumulate(net, tape, output_grad, g);
  return g;
}

AdamState AdamState::for_net(const Mlp& net, double learning_rate) {
  AdamState s;
  s.learning_rate = learning_rate;
  s.m.assign(net.parameter_count(), 0.0);
  s.v.assign(net.parameter_count(), 0.0);
  return s;
}

void adam_step(Mlp& net, const Gradients& grads, AdamState& opt) {
  if (!grads.all_finite()) throw NumericError("adam_step: non-finite gradient");
  if (opt.m.size() != net.parameter_count() || opt.v.size() != net.parameter_count())
    throw std::invalid_argument("adam_step: optimizer state does not match network");
  ++opt.step;
  const double c1 = 1.0 - std::pow(opt.beta1, static_cast<double>(opt.step));
  const double c2 = 1.0 - std::pow(opt.beta2, static_cast<double>(opt.step));
  std::size_t k = 0;
  auto update = [&](double& p, double g) {
    opt.m[k] = opt.beta1 * opt.m[k] + (1.0 - opt.beta1) * g;
    opt.v[k] = opt.beta2 * opt.v[k] + (1.0 - opt.beta2) * g * g;
    const double mhat = opt.m[k] / c1;
    const double vhat = opt.v[k] / c2;
    p -= opt.learning_rate * mhat / (std::sqrt(vhat) + opt.epsilon);
    ++k;
  };
  auto& layers = net.mutable_layers();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    for (std::size_t j = 0; j < layers[l].weights.size(); ++j) update(layers[l].weights[j], grads.weights[l][j]);
    for (std::size_t j = 0; j < layers[l].biases.size(); ++j) update(layers[l].biases[j], grads.biases[l][j]);
  }
  if (!net.all_finite()) throw NumericError("adam_step: parameters became non-finite");
}

Gradients accumulate_gradients_reference(const Mlp& net, std::span<const std::vector<double>> inputs,
                                         const OutputGradFn& loss_grad) {
  Gradients total = Gradients::zeros_like(net);
  std::vector<double> g(net.output_width());
  for (std::size_t s = 0; s < inputs.size(); ++s) {
    const Tape tape = forward(net, inputs[s]);
    std::fill(g.begin(), g.end(), 0.0);
    loss_grad(s, tape.output(), g);
    backward_accumulate(net, tape, g, total);
  }
  return total;
}

Gradients accumulate_gradients(const Mlp& net, std::span<const std::vector<double>> inputs,
                               const OutputGradFn& loss_grad) {
  const std::size_t n = inputs.size();
  const std::size_t chunks = (n + kGradientChunk - 1) / kGradientChunk;
  std::vector<Gradients> partial(chunks);
  std::exception_ptr failure;

#pragma omp parallel for schedule(static)
  for (long c = 0; c < static_cast<long>(chunks); ++c) {
    try {
      Gradients local = Gradients::zeros_like(net);
      std::vector<double> g(net.output_width());
      const std::size_t end = std::min(n, (c + 1) * kGradientChunk);
      for (std::size_t s = c * kGradientChunk; s < end; ++s) {
        const Tape tape = forward(net, inputs[s]);
        std::fill(g.begin(), g.end(), 0.0);
        loss_grad(s, tape.output(), g);
        backward_accumulate(net, tape, g, local);
      }
      partial[c] = std::move(local);
    } catch (...) {
#pragma omp critical(gradient_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);

  Gradients total = Gradients::zeros_like(net);
  for (const auto& p : partial) total.add(p);
  return total;
}

std::string to_string(Activation a) {
  switch (a) {
    case Activation::tanh: return "tanh";
    case Activation::relu: return "relu";
    case Activation::identity: return "identity";
  }
  return "identity";
}

Activation activation_from_string(const std::string& s) {
  if (s == "tanh") return Activation::tanh;
  if (s == "relu") return Activation::relu;
  if (s == "identity") return Activation::identity;
  throw std::invalid_argument("unknown activation '" + s + "'");
}

nlohmann::json checkpoint_json(const Mlp& net, const AdamState& opt) {
  nlohmann::json acts = nlohmann::json::array();
  for (const auto& l : net.layers()) acts.push_back(to_string(l.act));
  return {{"widths", net.widths()},
          {"activations", acts},
          {"parameters", net.flatten()},
          {"optimizer",
           {{"learning_rate", opt.learning_rate},
            {"beta1", opt.beta1},
            {"beta2", opt.beta2},
            {"epsilon", opt.epsilon},
            {"step", opt.step},
            {"m", opt.m},
            {"v", opt.v}}}};
}

void load_checkpoint(const nlohmann::json& j, Mlp& net, AdamState& opt) {
  const auto widths = j.at("widths").get<std::vector<int>>();
  std::vector<Activation> acts;
  for (const auto& a : j.at("activations")) acts.push_back(activation_from_string(a.get<std::string>()));
  net = Mlp::zeros(widths, acts);
  net.assign(j.at("parameters").get<std::vector<double>>());
  const auto& o = j.at("optimizer");
  opt.learning_rate = o.at("learning_rate").get<double>();
  opt.beta1 = o.at("beta1").get<double>();
  opt.beta2 = o.at("beta2").get<double>();
  opt.epsilon = o.at("epsilon").get<double>();
  opt.step = o.at("step").get<std::int64_t>();
  opt.m = o.at("m").get<std::vector<double>>();
  opt.v = o.at("v").get<std::vector<double>>();
  if (opt.m.size() != net.parameter_count() || opt.v.size() != net.parameter_count())
    throw std::invalid_argument("checkpoint: optimizer moments do not match parameter count");
}

}  // namespace uavaoi::nn
