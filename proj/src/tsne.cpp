#include "mospred/tsne.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "mospred/prng.hpp"
#include "mospred/util.hpp"

namespace mospred {

namespace {

std::vector<double> pairwise_sq_dists(const std::vector<std::vector<double>>& x) {
  const std::size_t n = x.size();
  std::vector<double> d(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < x[i].size(); ++k) {
        const double diff = x[i][k] - x[j][k];
        s += diff * diff;
      }
      d[i * n + j] = s;
      d[j * n + i] = s;
    }
  }
  return d;
}

// Fills row i of the conditional distribution for bandwidth beta and returns
// its Shannon entropy (nats).
double conditional_row(const std::vector<double>& d2, std::size_t n, std::size_t i,
                       double beta, std::vector<double>& p) {
  double sum = 0.0;
  double dot = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    if (j == i) {
      p[j] = 0.0;
      continue;
    }
    p[j] = std::exp(-d2[i * n + j] * beta);
    sum += p[j];
    dot += d2[i * n + j] * p[j];
  }
  if (sum <= std::numeric_limits<double>::min()) {
    // All neighbors are infinitely far at this bandwidth; fall back to uniform.
    const double u = 1.0 / static_cast<double>(n - 1);
    for (std::size_t j = 0; j < n; ++j) p[j] = j == i ? 0.0 : u;
    return std::log(static_cast<double>(n - 1));
  }
  for (std::size_t j = 0; j < n; ++j) p[j] /= sum;
  return std::log(sum) + beta * dot / sum;
}

// Symmetrized joint probabilities with per-point bandwidths matched to the
// target perplexity by binary search.
std::vector<double> joint_probabilities(const std::vector<double>& d2, std::size_t n,
                                        double perplexity) {
  const double target_entropy = std::log(perplexity);
  std::vector<double> cond(n * n, 0.0);
  std::vector<double> row(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double beta = 1.0;
    double lo = 0.0;
    double hi = std::numeric_limits<double>::infinity();
    double entropy = conditional_row(d2, n, i, beta, row);
    for (int iter = 0; iter < 64 && std::abs(entropy - target_entropy) > 1e-5; ++iter) {
      if (entropy > target_entropy) {
        lo = beta;
        beta = std::isinf(hi) ? beta * 2.0 : 0.5 * (beta + hi);
      } else {
        hi = beta;
        beta = 0.5 * (beta + lo);
      }
      entropy = conditional_row(d2, n, i, beta, row);
    }
    for (std::size_t j = 0; j < n; ++j) cond[i * n + j] = row[j];
  }

  std::vector<double> joint(n * n, 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      joint[i * n + j] = cond[i * n + j] + cond[j * n + i];
      total += joint[i * n + j];
    }
  }
  constexpr double kFloor = 1e-12;
  for (auto& v : joint) v = std::max(v / total, kFloor);
  for (std::size_t i = 0; i < n; ++i) joint[i * n + i] = 0.0;
  return joint;
}

}  // namespace

void TsneConfig::validate() const {
  if (!(perplexity > 0.0) || !std::isfinite(perplexity)) {
    throw UserError("perplexity must be positive");
  }
  if (iterations < 1) throw UserError("iterations must be >= 1");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw UserError("learning_rate must be positive");
  }
}

Projection2D tsne_projection(const std::vector<std::vector<double>>& features,
                             const std::vector<int>& colors,
                             const std::vector<std::string>& ids,
                             const std::string& extractor_id, const TsneConfig& config) {
  config.validate();
  const std::size_t n = features.size();
  if (colors.size() != n || ids.size() != n) {
    throw std::invalid_argument("features, colors, and ids must have equal length");
  }
  const std::size_t min_points =
      std::max<std::size_t>(10, static_cast<std::size_t>(3.0 * config.perplexity) + 1);
  if (n < min_points) {
    throw UserError("too few points for t-SNE: perplexity " +
                    format_fixed(config.perplexity, 1) + " needs at least " +
                    std::to_string(min_points) + " points, got " + std::to_string(n));
  }
  const std::size_t dim = features.front().size();
  for (const auto& f : features) {
    if (f.size() != dim) throw std::invalid_argument("ragged feature matrix");
  }

  const std::vector<double> p = joint_probabilities(pairwise_sq_dists(features), n,
                                                    config.perplexity);

  Rng rng(derive_seed(config.seed, 0x54534E45ull));  // layout init stream
  std::vector<double> pos(2 * n);
  for (auto& v : pos) v = rng.normal() * 1e-2;

  std::vector<double> vel(2 * n, 0.0);
  std::vector<double> gain(2 * n, 1.0);
  std::vector<double> grad(2 * n, 0.0);
  std::vector<double> q(n * n, 0.0);

  const std::size_t exaggerated_iters = std::min<std::size_t>(250, config.iterations / 2);
  for (std::size_t iter = 0; iter < config.iterations; ++iter) {
    const double exaggeration = iter < exaggerated_iters ? 12.0 : 1.0;
    const double momentum = iter < exaggerated_iters ? 0.5 : 0.8;

    // Student-t affinities in the map.
    double qsum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        const double dx = pos[2 * i] - pos[2 * j];
        const double dy = pos[2 * i + 1] - pos[2 * j + 1];
        const double w = 1.0 / (1.0 + dx * dx + dy * dy);
        q[i * n + j] = w;
        q[j * n + i] = w;
        qsum += 2.0 * w;
      }
      q[i * n + i] = 0.0;
    }

    std::fill(grad.begin(), grad.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (j == i) continue;
        const double w = q[i * n + j];
        const double coeff = 4.0 * (exaggeration * p[i * n + j] - w / qsum) * w;
        grad[2 * i] += coeff * (pos[2 * i] - pos[2 * j]);
        grad[2 * i + 1] += coeff * (pos[2 * i + 1] - pos[2 * j + 1]);
      }
    }

    double mean_x = 0.0;
    double mean_y = 0.0;
    for (std::size_t k = 0; k < 2 * n; ++k) {
      const bool same_sign = (grad[k] > 0.0) == (vel[k] > 0.0);
      gain[k] = same_sign ? std::max(0.01, gain[k] * 0.8) : gain[k] + 0.2;
      vel[k] = momentum * vel[k] - config.learning_rate * gain[k] * grad[k];
      pos[k] += vel[k];
      (k % 2 == 0 ? mean_x : mean_y) += pos[k];
    }
    mean_x /= static_cast<double>(n);
    mean_y /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
      pos[2 * i] -= mean_x;
      pos[2 * i + 1] -= mean_y;
    }
  }

  Projection2D proj;
  proj.x.resize(n);
  proj.y.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    proj.x[i] = pos[2 * i];
    proj.y[i] = pos[2 * i + 1];
    if (!std::isfinite(proj.x[i]) || !std::isfinite(proj.y[i])) {
      throw std::runtime_error("t-SNE diverged to non-finite coordinates");
    }
  }
  proj.color = colors;
  proj.ids = ids;
  proj.extractor_id = extractor_id;
  proj.config = config;
  return proj;
}

}  // namespace mospred
