#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "mospred/cache.hpp"
#include "mospred/core.hpp"
#include "mospred/extractor.hpp"

namespace mospred {

struct ExtractionFailure {
  std::string utterance_id;
  std::string message;
};

struct CoverageReport {
  std::size_t hits = 0;
  std::size_t misses = 0;  // extractions performed
  std::vector<ExtractionFailure> failures;

  std::size_t ok() const { return hits + misses; }
};

// Ensures every utterance has a cache entry for the extractor. Idempotent: a
// second run performs zero extractions. Per-utterance failures land in the
// report instead of aborting; the whole batch errors out only when more than
// 10% of utterances fail. `workers` > 1 splits the utterance list across
// threads, each with its own extractor instance.
CoverageReport extract_all(const ExtractorRegistry& registry, const std::string& extractor_id,
                           const DatasetManifest& manifest,
                           const std::filesystem::path& cache_dir, int workers = 1);

// Pooled-feature access backed by the embedding cache, extracting on miss
// when a backend is available. Training epochs only ever touch this layer,
// never the backbone.
class FeatureStore {
 public:
  FeatureStore(const ExtractorRegistry& registry, std::string extractor_id,
               std::filesystem::path cache_dir);

  EmbeddingMatrix embedding(const Utterance& utterance) const;
  std::vector<double> pooled(const Utterance& utterance) const;

  const std::string& extractor_id() const { return extractor_id_; }
  const ExtractorSpec& spec() const;

 private:
  const ExtractorRegistry* registry_;
  std::string extractor_id_;
  EmbeddingCache cache_;
  mutable std::unique_ptr<Extractor> extractor_;  // created on first miss
  mutable std::mutex mutex_;
};

}  // namespace mospred
