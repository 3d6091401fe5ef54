#pragma once

#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "mospred/core.hpp"

namespace mospred {

// Uniform interface over pretrained feature extractors. Implementations must
// be deterministic (inference mode) and reentrant for distinct inputs.
class Extractor {
 public:
  virtual ~Extractor() = default;
  virtual const ExtractorSpec& spec() const = 0;
  // waveform: mono float samples at 16 kHz
  virtual EmbeddingMatrix extract(const std::vector<float>& waveform) const = 0;
};

// Deterministic test double. Component 0 of the embedding is the waveform's
// root-mean-square amplitude (per frame when time-varying); the remaining
// components are a fixed pseudo-random function of (seed, content hash), so
// synthetic targets planted in RMS are learnable while the rest is inert.
class DummyExtractor : public Extractor {
 public:
  explicit DummyExtractor(std::uint64_t seed = 0, std::uint32_t dim = 64,
                          bool time_varying = false);
  const ExtractorSpec& spec() const override { return spec_; }
  EmbeddingMatrix extract(const std::vector<float>& waveform) const override;

 private:
  std::uint64_t seed_;
  ExtractorSpec spec_;
};

EmbeddingMatrix dummy_extract(std::uint64_t seed, const std::vector<float>& waveform,
                              std::uint32_t dim = 64, bool time_varying = false);

using ExtractorFactory = std::function<std::unique_ptr<Extractor>(const ExtractorSpec&)>;

// Registry of extractor specs plus optional backend factories. Ships with
// the 16 published model rows and the dummy; real backends are plugins
// resolved at runtime, so everything here works with only the dummy present.
class ExtractorRegistry {
 public:
  // Preloaded specs: 4 SV + 7 SSL + 5 SL rows plus "dummy". Only the dummy
  // has a backend attached.
  static ExtractorRegistry builtin();

  void add_spec(const ExtractorSpec& spec);  // throws UserError on duplicate id
  void register_backend(const std::string& extractor_id, ExtractorFactory factory);

  bool has(const std::string& extractor_id) const;
  const ExtractorSpec& spec(const std::string& extractor_id) const;
  const std::vector<ExtractorSpec>& specs() const { return specs_; }

  bool backend_available(const std::string& extractor_id) const;
  // Throws UserError "backend unavailable: <id>" when no factory is attached.
  std::unique_ptr<Extractor> create(const std::string& extractor_id) const;

 private:
  std::vector<ExtractorSpec> specs_;
  std::map<std::string, std::size_t> index_;
  std::map<std::string, ExtractorFactory> factories_;
};

// Registry manifest file (JSON): extractor_id, family, version_label,
// output_dim, time_varying, param_count per entry.
void write_registry_manifest(const std::filesystem::path& path, const ExtractorRegistry& registry);
ExtractorRegistry load_registry_manifest(const std::filesystem::path& path);

// Runs an extractor and enforces its contract: non-empty input, shape equal
// to (spec.output_dim, T) with T = 1 for fixed-size families, finite values.
EmbeddingMatrix run_extractor(const Extractor& extractor, const std::vector<float>& waveform);

enum class Pooling { Mean, Identity };

struct PooledFeature {
  std::vector<double> values;  // length D
  std::string extractor_id;
  Pooling pooling = Pooling::Mean;
};

// Mean: per-row arithmetic mean over frames. Identity: only legal at T = 1.
PooledFeature pool(const EmbeddingMatrix& embedding, Pooling mode);

}  // namespace mospred
