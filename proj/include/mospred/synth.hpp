#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "mospred/core.hpp"

namespace mospred {

// How the hidden quality knob maps to rating targets. Linear is the default;
// Inverted reverses the score direction entirely and is used to build
// domain-shifted corpus pairs for transfer experiments.
enum class QualityProfile { Linear, Inverted };

struct SynthConfig {
  std::size_t count = 32;
  std::uint64_t seed = 0;
  int raters_per_utterance = 4;
  double rater_jitter = 0.25;     // uniform +/- jitter added before rounding
  QualityProfile profile = QualityProfile::Linear;
  int num_systems = 3;
  double duration_s = 0.5;
  std::string id_prefix = "synth";
};

struct SynthTruth {
  std::string utterance_id;
  double quality = 0.0;   // hidden knob in [0, 1]
  double snr_db = 0.0;    // tone-vs-noise ratio of the written waveform
  double mean_score = 0.0;
};

struct SynthCorpus {
  DatasetManifest manifest;        // splits unassigned
  std::vector<SynthTruth> truth;   // generator ground truth, one per utterance
  std::filesystem::path ratings_file;
  std::filesystem::path truth_file;
};

// Writes `count` short tone-plus-noise waveforms under out_dir/audio plus a
// canonical ratings.csv and a truth.csv sidecar. Byte-identical for a fixed
// config: tone amplitude rises with the hidden quality knob, so waveform RMS
// and SNR are monotone in quality, and rater scores follow the chosen
// profile with per-rater jitter.
SynthCorpus synth_corpus(const std::filesystem::path& out_dir, const SynthConfig& config);

}  // namespace mospred
