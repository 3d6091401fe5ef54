#pragma once

#include <vector>

namespace mospred {

// Band-limited polyphase resampler (Kaiser-windowed sinc). Same-rate input is
// returned unchanged, bit for bit. Output length is the rounded rational
// rescaling of the input length, so duration is preserved within one sample
// period. Output amplitude is clamped to [-1, 1].
std::vector<float> resample(const std::vector<float>& input, int rate_in, int rate_out);

}  // namespace mospred
