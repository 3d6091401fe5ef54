#include "mospred/features.hpp"

#include <algorithm>
#include <atomic>
#include <sstream>
#include <thread>

#include "mospred/ingest.hpp"
#include "mospred/util.hpp"

namespace mospred {

CoverageReport extract_all(const ExtractorRegistry& registry, const std::string& extractor_id,
                           const DatasetManifest& manifest,
                           const std::filesystem::path& cache_dir, int workers) {
  require_valid(manifest);
  registry.spec(extractor_id);  // unknown id fails fast
  EmbeddingCache cache(cache_dir);

  const std::size_t n = manifest.utterances.size();
  const int thread_count = std::max(1, std::min<int>(workers, static_cast<int>(n)));

  CoverageReport report;
  std::mutex report_mutex;
  std::atomic<std::size_t> next{0};

  auto worker = [&]() {
    std::unique_ptr<Extractor> extractor;  // one per worker, created on demand
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) break;
      const Utterance& u = manifest.utterances[i];
      try {
        const std::string hash = content_hash_hex(u.audio_path);
        if (cache.contains(extractor_id, hash)) {
          std::lock_guard<std::mutex> lock(report_mutex);
          ++report.hits;
          continue;
        }
        if (!extractor) extractor = registry.create(extractor_id);
        const auto waveform = load_audio(u);
        const EmbeddingMatrix embedding = run_extractor(*extractor, waveform);
        cache.put(extractor_id, hash, embedding);
        std::lock_guard<std::mutex> lock(report_mutex);
        ++report.misses;
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lock(report_mutex);
        report.failures.push_back({u.utterance_id, e.what()});
      }
    }
  };

  if (thread_count == 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    threads.reserve(static_cast<std::size_t>(thread_count));
    for (int t = 0; t < thread_count; ++t) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
  }

  if (report.failures.size() * 10 > n) {
    std::ostringstream msg;
    msg << "extraction failed for " << report.failures.size() << " of " << n
        << " utterances (aborting above 10%); first: " << report.failures.front().utterance_id
        << ": " << report.failures.front().message;
    throw UserError(msg.str());
  }
  return report;
}

FeatureStore::FeatureStore(const ExtractorRegistry& registry, std::string extractor_id,
                           std::filesystem::path cache_dir)
    : registry_(&registry), extractor_id_(std::move(extractor_id)), cache_(std::move(cache_dir)) {
  registry_->spec(extractor_id_);
}

const ExtractorSpec& FeatureStore::spec() const { return registry_->spec(extractor_id_); }

EmbeddingMatrix FeatureStore::embedding(const Utterance& utterance) const {
  const std::string hash = content_hash_hex(utterance.audio_path);
  if (auto cached = cache_.get(extractor_id_, hash)) return std::move(*cached);
  std::lock_guard<std::mutex> lock(mutex_);
  if (!extractor_) extractor_ = registry_->create(extractor_id_);
  const auto waveform = load_audio(utterance);
  EmbeddingMatrix out = run_extractor(*extractor_, waveform);
  cache_.put(extractor_id_, hash, out);
  return out;
}

std::vector<double> FeatureStore::pooled(const Utterance& utterance) const {
  return pool(embedding(utterance), Pooling::Mean).values;
}

}  // namespace mospred
