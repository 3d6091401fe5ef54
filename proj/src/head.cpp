#include "mospred/head.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "mospred/prng.hpp"

namespace mospred {

namespace {

void check_dim(const HeadConfig& config, const std::vector<double>& feature) {
  if (feature.size() != config.input_dim) {
    throw std::invalid_argument("feature dimension mismatch: expected " +
                                std::to_string(config.input_dim) + ", got " +
                                std::to_string(feature.size()));
  }
}

// Inverted-dropout mask for one hidden unit: 0 or 1/(1-p).
double dropout_scale(Rng& rng, double rate) {
  if (rate <= 0.0) return 1.0;
  return rng.uniform01() < rate ? 0.0 : 1.0 / (1.0 - rate);
}

Rng mask_rng(std::uint64_t dropout_seed, std::uint64_t sample_index) {
  return Rng(derive_seed(dropout_seed, sample_index));
}

}  // namespace

void HeadConfig::validate() const {
  if (input_dim < 1 || hidden_dim < 1) {
    throw std::invalid_argument("head dims must be >= 1");
  }
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) {
    throw std::invalid_argument("dropout rate must lie in [0, 1)");
  }
}

std::size_t head_param_count(const HeadConfig& config) {
  const std::size_t d = config.input_dim, h = config.hidden_dim;
  return h * d + h + h + 1;
}

HeadParams init_head(const HeadConfig& config, std::uint64_t seed) {
  config.validate();
  const std::uint32_t d = config.input_dim, h = config.hidden_dim;
  HeadParams p;
  p.init_seed = seed;
  p.w1.resize(static_cast<std::size_t>(h) * d);
  p.b1.assign(h, 0.0);
  p.w2.resize(h);
  p.b2 = 0.0;
  Rng rng(derive_seed(seed, 0x48454144));  // "HEAD"
  const double limit1 = std::sqrt(6.0 / (static_cast<double>(d) + h));
  for (double& w : p.w1) w = rng.uniform(-limit1, limit1);
  const double limit2 = std::sqrt(6.0 / (static_cast<double>(h) + 1.0));
  for (double& w : p.w2) w = rng.uniform(-limit2, limit2);
  return p;
}

double forward_eval(const HeadConfig& config, const HeadParams& params,
                    const std::vector<double>& feature) {
  check_dim(config, feature);
  const std::uint32_t d = config.input_dim, h = config.hidden_dim;
  double y = params.b2;
  for (std::uint32_t j = 0; j < h; ++j) {
    double pre = params.b1[j];
    const double* row = params.w1.data() + static_cast<std::size_t>(j) * d;
    for (std::uint32_t k = 0; k < d; ++k) pre += row[k] * feature[k];
    if (pre > 0.0) y += params.w2[j] * pre;
  }
  return std::fmin(1.0, std::fmax(0.0, y));
}

double forward_train(const HeadConfig& config, const HeadParams& params,
                     const std::vector<double>& feature, std::uint64_t dropout_seed,
                     std::uint64_t sample_index) {
  check_dim(config, feature);
  const std::uint32_t d = config.input_dim, h = config.hidden_dim;
  Rng rng = mask_rng(dropout_seed, sample_index);
  double y = params.b2;
  for (std::uint32_t j = 0; j < h; ++j) {
    double pre = params.b1[j];
    const double* row = params.w1.data() + static_cast<std::size_t>(j) * d;
    for (std::uint32_t k = 0; k < d; ++k) pre += row[k] * feature[k];
    const double mask = dropout_scale(rng, config.dropout_rate);
    if (pre > 0.0) y += params.w2[j] * pre * mask;
  }
  return y;
}

HeadGradients head_gradient(const HeadConfig& config, const HeadParams& params,
                            const std::vector<TrainSample>& batch, std::uint64_t dropout_seed) {
  config.validate();
  if (batch.empty()) throw std::invalid_argument("empty training batch");
  const std::uint32_t d = config.input_dim, h = config.hidden_dim;

  HeadGradients g;
  g.w1.assign(params.w1.size(), 0.0);
  g.b1.assign(params.b1.size(), 0.0);
  g.w2.assign(params.w2.size(), 0.0);

  const double inv_batch = 1.0 / static_cast<double>(batch.size());
  std::vector<double> pre(h), masked(h), mask(h);

  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto& sample = batch[i];
    check_dim(config, sample.feature);
    Rng rng = mask_rng(dropout_seed, i);

    double y = params.b2;
    for (std::uint32_t j = 0; j < h; ++j) {
      double p = params.b1[j];
      const double* row = params.w1.data() + static_cast<std::size_t>(j) * d;
      for (std::uint32_t k = 0; k < d; ++k) p += row[k] * sample.feature[k];
      pre[j] = p;
      mask[j] = dropout_scale(rng, config.dropout_rate);
      masked[j] = p > 0.0 ? p * mask[j] : 0.0;
      y += params.w2[j] * masked[j];
    }

    const double err = y - sample.target;
    g.loss += err * err * inv_batch;
    const double dy = 2.0 * err * inv_batch;
    g.b2 += dy;
    for (std::uint32_t j = 0; j < h; ++j) {
      g.w2[j] += dy * masked[j];
      if (pre[j] > 0.0 && mask[j] != 0.0) {
        const double dpre = dy * params.w2[j] * mask[j];
        g.b1[j] += dpre;
        double* grow = g.w1.data() + static_cast<std::size_t>(j) * d;
        for (std::uint32_t k = 0; k < d; ++k) grow[k] += dpre * sample.feature[k];
      }
    }
  }

  if (!std::isfinite(g.loss)) throw std::runtime_error("diverged: non-finite training loss");
  return g;
}

}  // namespace mospred
