#include "mospred/resample.hpp"

#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>

namespace mospred {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kKaiserBeta = 8.0;
constexpr double kRolloff = 0.945;
constexpr int kZeroCrossings = 16;

double bessel_i0(double x) {
  double sum = 1.0, term = 1.0;
  const double half_x = x / 2.0;
  for (int k = 1; k < 64; ++k) {
    term *= (half_x / k) * (half_x / k);
    sum += term;
    if (term < sum * 1e-14) break;
  }
  return sum;
}

double kaiser(double r) {  // r in [-1, 1]
  const double t = 1.0 - r * r;
  if (t <= 0.0) return 0.0;
  return bessel_i0(kKaiserBeta * std::sqrt(t)) / bessel_i0(kKaiserBeta);
}

double sinc(double v) {
  if (std::abs(v) < 1e-12) return 1.0;
  return std::sin(kPi * v) / (kPi * v);
}

// One polyphase branch: taps for a fixed fractional offset of the output
// sample relative to the input grid.
struct Phase {
  long rel_start = 0;           // first input index relative to the base sample
  std::vector<double> weights;  // normalized to unit sum
};

}  // namespace

std::vector<float> resample(const std::vector<float>& input, int rate_in, int rate_out) {
  if (rate_in <= 0 || rate_out <= 0) throw std::invalid_argument("resample: rates must be positive");
  if (rate_in == rate_out) return input;
  if (input.empty()) return {};

  const long g = std::gcd(rate_in, rate_out);
  const long up = rate_out / g;    // L
  const long down = rate_in / g;   // M

  // Cutoff in cycles per input sample; downsampling narrows it to the target
  // Nyquist, upsampling keeps the source band.
  const double cutoff = 0.5 * kRolloff * std::min(1.0, static_cast<double>(up) / down);
  const double half_width = static_cast<double>(kZeroCrossings) / (2.0 * cutoff);

  std::vector<Phase> phases(static_cast<std::size_t>(up));
  for (long p = 0; p < up; ++p) {
    const double frac = static_cast<double>(p) / up;
    const long first = static_cast<long>(std::ceil(frac - half_width));
    const long last = static_cast<long>(std::floor(frac + half_width));
    Phase& ph = phases[static_cast<std::size_t>(p)];
    ph.rel_start = first;
    ph.weights.resize(static_cast<std::size_t>(last - first + 1));
    double sum = 0.0;
    for (long j = first; j <= last; ++j) {
      const double u = frac - static_cast<double>(j);
      const double w = 2.0 * cutoff * sinc(2.0 * cutoff * u) * kaiser(u / half_width);
      ph.weights[static_cast<std::size_t>(j - first)] = w;
      sum += w;
    }
    for (double& w : ph.weights) w /= sum;
  }

  const long long n_in = static_cast<long long>(input.size());
  const long long n_out = (2 * n_in * up + down) / (2 * down);  // round(n_in * L / M)

  std::vector<float> output(static_cast<std::size_t>(n_out));
  for (long long n = 0; n < n_out; ++n) {
    const long long num = n * down;
    const long long base = num / up;
    const Phase& ph = phases[static_cast<std::size_t>(num % up)];
    double acc = 0.0;
    double wsum = 0.0;
    for (std::size_t k = 0; k < ph.weights.size(); ++k) {
      const long long j = base + ph.rel_start + static_cast<long long>(k);
      if (j < 0 || j >= n_in) continue;
      acc += ph.weights[k] * static_cast<double>(input[static_cast<std::size_t>(j)]);
      wsum += ph.weights[k];
    }
    // Renormalize where the window hangs off an end of the signal.
    double value = wsum > 1e-9 ? acc / wsum : 0.0;
    value = std::fmin(1.0, std::fmax(-1.0, value));
    output[static_cast<std::size_t>(n)] = static_cast<float>(value);
  }
  return output;
}

}  // namespace mospred
