#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "uavaoi/env.hpp"

namespace uavaoi::nn {

enum class Activation { tanh, relu, identity };

struct Layer {
  int in = 0;
  int out = 0;
  Activation act = Activation::identity;
  std::vector<double> weights;  // out x in, row-major
  std::vector<double> biases;
};

class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Fully-connected feedforward network. `widths` lists input, hidden..., output;
/// `acts` holds one activation per layer (widths.size() - 1 entries).
class Mlp {
 public:
  Mlp() = default;
  // Glorot-uniform weights, zero biases.
  Mlp(const std::vector<int>& widths, const std::vector<Activation>& acts, Rng& rng);
  static Mlp zeros(const std::vector<int>& widths, const std::vector<Activation>& acts);

  int input_width() const { return layers_.empty() ? 0 : layers_.front().in; }
  int output_width() const { return layers_.empty() ? 0 : layers_.back().out; }
  std::vector<int> widths() const;
  const std::vector<Layer>& layers() const { return layers_; }

  // Mutable access invalidates every outstanding Tape.
  std::vector<Layer>& mutable_layers() {
    ++version_;
    return layers_;
  }

  std::size_t parameter_count() const;
  std::vector<double> flatten() const;
  void assign(std::span<const double> params);
  bool all_finite() const;
  std::uint64_t version() const { return version_; }

 private:
  std::vector<Layer> layers_;
  std::uint64_t version_ = 0;
};

/// Post-activation values of every layer; activations[0] is the input.
struct Tape {
  std::vector<std::vector<double>> activations;
  const Mlp* owner = nullptr;
  std::uint64_t version = 0;

  std::span<const double> output() const { return activations.back(); }
};

struct Gradients {
  std::vector<std::vector<double>> weights;
  std::vector<std::vector<double>> biases;

  static Gradients zeros_like(const Mlp& net);
  void add(const Gradients& other);
  void scale(double factor);
  bool all_finite() const;
  std::vector<double> flatten() const;
};

Tape forward(const Mlp& net, std::span<const double> input);

/// Gradient of the scalar loss whose derivative w.r.t. the network output is
/// `output_grad`. Throws std::logic_error if the tape is stale.
Gradients backward(const Mlp& net, const Tape& tape, std::span<const double> output_grad);
void backward_accumulate(const Mlp& net, const Tape& tape, std::span<const double> output_grad, Gradients& into);

struct AdamState {
  double learning_rate = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::int64_t step = 0;
  std::vector<double> m;
  std::vector<double> v;

  static AdamState for_net(const Mlp& net, double learning_rate);
};

/// Bias-corrected Adam update. Throws NumericError on non-finite gradients.
void adam_step(Mlp& net, const Gradients& grads, AdamState& opt);

/// Writes d(loss_sample)/d(output) for one sample into `grad`.
using OutputGradFn = std::function<void(std::size_t sample, std::span<const double> output, std::span<double> grad)>;

/// Sum of per-sample gradients. Samples are split into fixed chunks that are
/// processed in parallel and reduced in chunk order, so the result does not
/// depend on the thread count.
Gradients accumulate_gradients(const Mlp& net, std::span<const std::vector<double>> inputs, const OutputGradFn& loss_grad);

/// Serial per-sample accumulation.
Gradients accumulate_gradients_reference(const Mlp& net, std::span<const std::vector<double>> inputs,
                                         const OutputGradFn& loss_grad);

inline constexpr std::size_t kGradientChunk = 16;

std::string to_string(Activation a);
Activation activation_from_string(const std::string& s);

nlohmann::json checkpoint_json(const Mlp& net, const AdamState& opt);
void load_checkpoint(const nlohmann::json& j, Mlp& net, AdamState& opt);

}  // namespace uavaoi::nn
