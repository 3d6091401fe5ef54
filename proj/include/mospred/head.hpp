#pragma once

#include <cstdint>
#include <vector>

namespace mospred {

// The trainable regression head: Linear -> ReLU -> Dropout -> Linear with a
// single scalar output on the normalized [0,1] score scale (clamped at
// inference, unclamped during training).
struct HeadConfig {
  std::uint32_t input_dim = 0;
  std::uint32_t hidden_dim = 256;
  double dropout_rate = 0.3;  // in [0, 1)

  void validate() const;  // throws std::invalid_argument
};

struct HeadParams {
  std::vector<double> w1;  // hidden_dim x input_dim, row-major
  std::vector<double> b1;  // hidden_dim
  std::vector<double> w2;  // hidden_dim (single output row)
  double b2 = 0.0;
  std::uint64_t init_seed = 0;

  std::size_t count() const { return w1.size() + b1.size() + w2.size() + 1; }
};

// Trainable parameter count: H*D + H + H + 1.
std::size_t head_param_count(const HeadConfig& config);

// Variance-scaled uniform weights (zero biases), deterministic per seed.
HeadParams init_head(const HeadConfig& config, std::uint64_t seed);

// Eval mode: deterministic, dropout off, output clamped to [0, 1].
double forward_eval(const HeadConfig& config, const HeadParams& params,
                    const std::vector<double>& feature);

// Train mode: inverted-dropout masking keyed by (dropout_seed, sample_index),
// no clamp. Exposed so the gradient check can replay the exact masks.
double forward_train(const HeadConfig& config, const HeadParams& params,
                     const std::vector<double>& feature, std::uint64_t dropout_seed,
                     std::uint64_t sample_index);

struct HeadGradients {
  std::vector<double> w1;
  std::vector<double> b1;
  std::vector<double> w2;
  double b2 = 0.0;
  double loss = 0.0;  // batch-mean squared error
};

struct TrainSample {
  std::vector<double> feature;
  double target = 0.0;  // normalized scale
};

// Gradients of batch-mean squared error. Dropout masks are a pure function
// of (dropout_seed, position in batch), so a finite-difference oracle using
// forward_train with the same seed sees the identical network.
HeadGradients head_gradient(const HeadConfig& config, const HeadParams& params,
                            const std::vector<TrainSample>& batch, std::uint64_t dropout_seed);

}  // namespace mospred
