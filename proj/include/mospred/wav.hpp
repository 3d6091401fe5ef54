#pragma once

#include <filesystem>
#include <vector>

namespace mospred {

struct WavData {
  int sample_rate_hz = 0;
  std::vector<float> samples;  // mono, amplitude in [-1, 1]
};

// Reads a RIFF/WAVE file. 16-bit PCM is the baseline format; 32-bit float
// is also accepted. Multichannel audio is averaged down to mono.
// Throws UserError on missing/corrupt files and on zero-length audio.
WavData read_wav(const std::filesystem::path& path);

// Writes mono 16-bit PCM. Samples are clamped to [-1, 1] before quantizing.
void write_wav(const std::filesystem::path& path, const std::vector<float>& samples,
               int sample_rate_hz);

}  // namespace mospred
