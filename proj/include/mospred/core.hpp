#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mospred/util.hpp"

namespace mospred {

inline constexpr int kMinScore = 1;
inline constexpr int kMaxScore = 5;
inline constexpr int kWorkingRateHz = 16000;

struct RatingRecord {
  std::string rater_id;
  int score = 0;  // integer in [1, 5]
};

struct Utterance {
  std::string utterance_id;
  std::filesystem::path audio_path;
  std::string system_id = "unknown";  // "natural" or the producing system
  int sample_rate_hz = kWorkingRateHz;
  std::vector<RatingRecord> ratings;
};

enum class Split { Train, Test, Validation };

const char* to_string(Split split);
std::optional<Split> split_from_string(const std::string& name);

// Aggregated opinion score: raw mean of ratings and its [0,1] rescaling.
struct MOSLabel {
  double raw = 0.0;         // in [1, 5]
  double normalized = 0.0;  // (raw - 1) / 4
};

MOSLabel make_mos_label(const std::vector<RatingRecord>& ratings);

inline double normalize_mos(double raw) { return (raw - 1.0) / 4.0; }
inline double denormalize_mos(double normalized) { return normalized * 4.0 + 1.0; }

// Half-up rounding of a raw label to the integer 1..5 color/stratum key.
int rounded_mos(double raw);

// An extractor output: D x T matrix of float32, row-major (row = feature
// dimension). T = 1 for fixed-size speaker embeddings.
struct EmbeddingMatrix {
  std::uint32_t dim = 0;
  std::uint32_t frames = 0;
  std::vector<float> values;  // dim * frames
  std::string extractor_id;

  float at(std::uint32_t d, std::uint32_t t) const { return values[d * frames + t]; }
  float& at(std::uint32_t d, std::uint32_t t) { return values[d * frames + t]; }
};

enum class Family { SV, SSL, SL, DUMMY };

const char* to_string(Family family);
std::optional<Family> family_from_string(const std::string& name);

struct ExtractorSpec {
  std::string extractor_id;
  Family family = Family::DUMMY;
  std::string version_label;
  std::uint32_t output_dim = 0;
  bool time_varying = false;
  std::uint64_t param_count = 0;
};

struct DatasetManifest {
  std::string dataset_id;
  std::vector<Utterance> utterances;
  // Ordered map so iteration order is deterministic. Empty until splits are
  // assigned; once non-empty it must cover every utterance exactly once.
  std::map<std::string, Split> split_assignment;

  const Utterance* find(const std::string& utterance_id) const;
  std::vector<const Utterance*> in_split(Split split) const;
};

enum class Level { Utterance, System };

const char* to_string(Level level);
std::optional<Level> level_from_string(const std::string& name);

struct MetricReport {
  std::string extractor_id;
  std::string dataset_id;
  Split split = Split::Validation;
  Level level = Level::Utterance;
  double lcc = 0.0;
  double srcc = 0.0;
  double ktau = 0.0;
  double mse = 0.0;
  std::size_t n = 0;
};

// One invariant breach found by validate_manifest. Violations are data, not
// exceptions: callers decide whether to refuse the manifest.
struct Violation {
  std::string utterance_id;
  std::string rule;
  std::string detail;
};

std::vector<Violation> validate_manifest(const DatasetManifest& manifest);

// Convenience: throws UserError listing the first few violations.
void require_valid(const DatasetManifest& manifest);

}  // namespace mospred
