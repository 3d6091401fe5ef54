#include "mospred/synth.hpp"

#include <cmath>
#include <sstream>

#include "mospred/ingest.hpp"
#include "mospred/prng.hpp"
#include "mospred/util.hpp"
#include "mospred/wav.hpp"

namespace mospred {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kNoiseAmp = 0.02;
constexpr double kMinToneAmp = 0.12;
constexpr double kMaxToneAmp = 0.85;

double profile_target(QualityProfile profile, double quality) {
  switch (profile) {
    case QualityProfile::Linear: return quality;
    case QualityProfile::Inverted: return 1.0 - quality;
  }
  return quality;
}

}  // namespace

SynthCorpus synth_corpus(const std::filesystem::path& out_dir, const SynthConfig& config) {
  if (config.count < 1) throw UserError("synth corpus needs count >= 1");
  if (config.raters_per_utterance < 1) throw UserError("synth corpus needs at least one rater");

  std::filesystem::create_directories(out_dir / "audio");

  SynthCorpus corpus;
  corpus.manifest.dataset_id = out_dir.filename().string();
  corpus.ratings_file = out_dir / "ratings.csv";
  corpus.truth_file = out_dir / "truth.csv";

  const auto n_samples = static_cast<std::size_t>(config.duration_s * kWorkingRateHz);
  const int id_width = config.count > 9999 ? 6 : 4;

  for (std::size_t i = 0; i < config.count; ++i) {
    Rng rng(derive_seed(config.seed, i));

    const double quality = rng.uniform01();
    const double tone_amp = kMinToneAmp + (kMaxToneAmp - kMinToneAmp) * quality;
    const double freq = rng.uniform(200.0, 900.0);
    const double phase = rng.uniform(0.0, 2.0 * kPi);

    std::vector<float> wave(n_samples);
    for (std::size_t t = 0; t < n_samples; ++t) {
      const double s = tone_amp * std::sin(2.0 * kPi * freq * t / kWorkingRateHz + phase) +
                       kNoiseAmp * (2.0 * rng.uniform01() - 1.0);
      wave[t] = static_cast<float>(s);
    }

    std::ostringstream id;
    id << config.id_prefix << '-';
    std::string num = std::to_string(i);
    id << std::string(static_cast<std::size_t>(id_width) - std::min<std::size_t>(num.size(), id_width), '0')
       << num;

    Utterance u;
    u.utterance_id = id.str();
    u.audio_path = out_dir / "audio" / (u.utterance_id + ".wav");
    u.system_id = "sys-" + std::to_string(i % static_cast<std::size_t>(std::max(1, config.num_systems)));
    u.sample_rate_hz = kWorkingRateHz;
    write_wav(u.audio_path, wave, kWorkingRateHz);

    const double target = 1.0 + 4.0 * profile_target(config.profile, quality);
    double score_sum = 0.0;
    for (int r = 0; r < config.raters_per_utterance; ++r) {
      const double jitter = rng.uniform(-config.rater_jitter, config.rater_jitter);
      int score = static_cast<int>(std::floor(target + jitter + 0.5));
      score = std::max(kMinScore, std::min(kMaxScore, score));
      u.ratings.push_back({"rater-" + std::to_string(r), score});
      score_sum += score;
    }

    SynthTruth truth;
    truth.utterance_id = u.utterance_id;
    truth.quality = quality;
    // uniform noise of amplitude a has power a^2/3; the tone has power amp^2/2
    truth.snr_db = 10.0 * std::log10((tone_amp * tone_amp / 2.0) /
                                     (kNoiseAmp * kNoiseAmp / 3.0));
    truth.mean_score = score_sum / config.raters_per_utterance;
    corpus.truth.push_back(truth);

    corpus.manifest.utterances.push_back(std::move(u));
  }

  write_ratings(corpus.ratings_file, corpus.manifest);

  std::ostringstream truth_csv;
  truth_csv << "utterance_id,quality,snr_db,mean_score\n";
  for (const auto& t : corpus.truth) {
    truth_csv << t.utterance_id << ',' << format_fixed(t.quality, 6) << ','
              << format_fixed(t.snr_db, 4) << ',' << format_fixed(t.mean_score, 4) << "\n";
  }
  write_text_file(corpus.truth_file, truth_csv.str());
  return corpus;
}

}  // namespace mospred
