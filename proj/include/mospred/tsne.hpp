#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace mospred {

struct TsneConfig {
  double perplexity = 30.0;
  std::size_t iterations = 1000;
  std::uint64_t seed = 0;
  double learning_rate = 200.0;

  void validate() const;  // throws UserError
};

// A 2-D map of pooled utterance embeddings, colored by rounded MOS.
struct Projection2D {
  std::vector<double> x;
  std::vector<double> y;
  std::vector<int> color;  // rounded MOS, 1..5, parallel to x/y
  std::vector<std::string> ids;
  std::string extractor_id;
  TsneConfig config;

  std::size_t size() const { return x.size(); }
};

// Exact t-SNE (Student-t neighbor embedding): per-point bandwidths found by
// binary search to match the perplexity, early exaggeration, then momentum
// gradient descent with adaptive gains. Deterministic for a fixed seed; the
// only randomness is the initial layout. Needs at least 3*perplexity + 1
// points (and never fewer than 10).
Projection2D tsne_projection(const std::vector<std::vector<double>>& features,
                             const std::vector<int>& colors,
                             const std::vector<std::string>& ids,
                             const std::string& extractor_id, const TsneConfig& config = {});

}  // namespace mospred
