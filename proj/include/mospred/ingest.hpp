#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "mospred/core.hpp"

namespace mospred {

// Canonical ratings format: UTF-8 CSV, LF line endings, header
//   utterance_id,audio_path,system_id,rater_id,score
// one row per individual rating. An empty system_id means "unknown".
inline constexpr const char* kRatingsHeader = "utterance_id,audio_path,system_id,rater_id,score";

// Groups per-rating rows into one Utterance per distinct utterance_id.
// Splits are left unassigned; audio files are not touched.
// Throws ParseError with a line number on malformed rows, and UserError on
// duplicate (utterance_id, rater_id) pairs or conflicting per-utterance
// metadata.
DatasetManifest load_ratings(const std::filesystem::path& path,
                             const std::string& dataset_id = "");

// Inverse of load_ratings: rows ordered by utterance then rater, so
// write/load round-trips are exact on well-formed manifests.
void write_ratings(const std::filesystem::path& path, const DatasetManifest& manifest);

struct SplitConfig {
  double train_fraction = 0.8;
  double test_fraction = 0.1;
  double validation_fraction = 0.1;
  std::uint64_t seed = 0;
  bool stratify_by_score = true;

  void validate() const;  // throws UserError on bad fractions
};

struct SplitResult {
  DatasetManifest manifest;  // with split_assignment populated
  std::vector<std::string> warnings;
};

// Deterministic partition given (set of utterance ids, seed); manifest row
// order does not matter. Test/validation sizes are floor(fraction * N) with
// the remainder going to train. With stratify_by_score, each rounded-MOS
// stratum is partitioned independently by the same rule.
// Throws UserError when N < 3.
SplitResult assign_splits(const DatasetManifest& manifest, const SplitConfig& config);

// Split file: CSV `utterance_id,split` with split in {train,test,validation}.
void write_split_file(const std::filesystem::path& path, const DatasetManifest& manifest);
void load_split_file(const std::filesystem::path& path, DatasetManifest& manifest);

// Decodes an utterance's audio and resamples it to target_rate (mono,
// amplitude in [-1, 1]). Errors carry the utterance_id.
std::vector<float> load_audio(const Utterance& utterance, int target_rate = kWorkingRateHz);

}  // namespace mospred
