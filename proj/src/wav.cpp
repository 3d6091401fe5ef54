#include "mospred/wav.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "mospred/util.hpp"

namespace mospred {

namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::uint32_t read_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint16_t read_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

void put_u32(std::string& out, std::uint32_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
  out.push_back(static_cast<char>((v >> 16) & 0xff));
  out.push_back(static_cast<char>((v >> 24) & 0xff));
}

void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
}

}  // namespace

WavData read_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UserError("cannot open audio file: " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  if (bytes.size() < 44 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    throw UserError("not a RIFF/WAVE file: " + path.string());
  }

  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  const unsigned char* data = nullptr;
  std::uint32_t data_len = 0;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const unsigned char* chunk = bytes.data() + pos;
    std::uint32_t chunk_len = read_u32(chunk + 4);
    const unsigned char* body = chunk + 8;
    if (pos + 8 + chunk_len > bytes.size()) {
      chunk_len = static_cast<std::uint32_t>(bytes.size() - pos - 8);  // truncated final chunk
    }
    if (std::memcmp(chunk, "fmt ", 4) == 0 && chunk_len >= 16) {
      format = read_u16(body);
      channels = read_u16(body + 2);
      rate = read_u32(body + 4);
      bits = read_u16(body + 14);
      if (format == kFormatExtensible && chunk_len >= 26) {
        format = read_u16(body + 24);  // first two bytes of the SubFormat GUID
      }
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      data = body;
      data_len = chunk_len;
    }
    pos += 8 + chunk_len + (chunk_len & 1);  // chunks are word-aligned
  }

  if (rate == 0 || channels == 0) throw UserError("missing fmt chunk: " + path.string());
  if (data == nullptr) throw UserError("missing data chunk: " + path.string());
  if (format != kFormatPcm && format != kFormatFloat) {
    throw UserError("unsupported wav format tag " + std::to_string(format) + ": " + path.string());
  }
  if (format == kFormatPcm && bits != 16) {
    throw UserError("unsupported PCM bit depth " + std::to_string(bits) + ": " + path.string());
  }
  if (format == kFormatFloat && bits != 32) {
    throw UserError("unsupported float bit depth " + std::to_string(bits) + ": " + path.string());
  }

  const std::size_t bytes_per_sample = bits / 8;
  const std::size_t frame_size = bytes_per_sample * channels;
  const std::size_t frames = data_len / frame_size;
  if (frames == 0) throw UserError("empty audio: " + path.string());

  WavData out;
  out.sample_rate_hz = static_cast<int>(rate);
  out.samples.resize(frames);
  const double ch_scale = 1.0 / static_cast<double>(channels);
  for (std::size_t f = 0; f < frames; ++f) {
    double acc = 0.0;
    for (std::size_t c = 0; c < channels; ++c) {
      const unsigned char* p = data + f * frame_size + c * bytes_per_sample;
      if (format == kFormatPcm) {
        std::int16_t s = static_cast<std::int16_t>(p[0] | (p[1] << 8));
        acc += static_cast<double>(s) / 32768.0;
      } else {
        float v;
        std::memcpy(&v, p, 4);
        acc += static_cast<double>(v);
      }
    }
    out.samples[f] = static_cast<float>(acc * ch_scale);
  }
  return out;
}

void write_wav(const std::filesystem::path& path, const std::vector<float>& samples,
               int sample_rate_hz) {
  if (sample_rate_hz <= 0) throw UserError("invalid sample rate for wav write");
  std::string body;
  body.reserve(44 + samples.size() * 2);
  const std::uint32_t data_len = static_cast<std::uint32_t>(samples.size() * 2);
  body += "RIFF";
  put_u32(body, 36 + data_len);
  body += "WAVE";
  body += "fmt ";
  put_u32(body, 16);
  put_u16(body, kFormatPcm);
  put_u16(body, 1);  // mono
  put_u32(body, static_cast<std::uint32_t>(sample_rate_hz));
  put_u32(body, static_cast<std::uint32_t>(sample_rate_hz) * 2);
  put_u16(body, 2);   // block align
  put_u16(body, 16);  // bits
  body += "data";
  put_u32(body, data_len);
  for (float s : samples) {
    double v = std::fmin(1.0, std::fmax(-1.0, static_cast<double>(s)));
    auto q = static_cast<std::int16_t>(std::lrint(v * 32767.0));
    put_u16(body, static_cast<std::uint16_t>(q));
  }
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw UserError("cannot write wav file: " + path.string());
  out.write(body.data(), static_cast<std::streamsize>(body.size()));
  if (!out) throw UserError("short write: " + path.string());
}

}  // namespace mospred
