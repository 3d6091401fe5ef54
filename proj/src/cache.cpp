#include "mospred/cache.hpp"

#include <atomic>
#include <bit>
#include <chrono>
#include <cstring>
#include <fstream>

#include "mospred/util.hpp"

namespace mospred {

namespace {

constexpr char kMagic[4] = {'M', 'O', 'S', 'E'};

void put_u32(std::string& out, std::uint32_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
  out.push_back(static_cast<char>((v >> 16) & 0xff));
  out.push_back(static_cast<char>((v >> 24) & 0xff));
}

std::uint32_t read_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::atomic<std::uint64_t> g_temp_counter{0};

}  // namespace

EmbeddingCache::EmbeddingCache(std::filesystem::path root) : root_(std::move(root)) {
  std::filesystem::create_directories(root_);
}

std::filesystem::path EmbeddingCache::entry_path(const std::string& extractor_id,
                                                 const std::string& content_hash) const {
  return root_ / extractor_id / (content_hash + ".mose");
}

bool EmbeddingCache::contains(const std::string& extractor_id,
                              const std::string& content_hash) const {
  return std::filesystem::exists(entry_path(extractor_id, content_hash));
}

std::optional<EmbeddingMatrix> EmbeddingCache::get(const std::string& extractor_id,
                                                   const std::string& content_hash) const {
  const auto path = entry_path(extractor_id, content_hash);
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  if (bytes.size() < 16 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw UserError("corrupt cache entry: " + path.string());
  }
  const std::uint32_t version = read_u32(bytes.data() + 4);
  if (version != kFormatVersion) {
    throw UserError("unsupported cache format version " + std::to_string(version) + ": " +
                    path.string());
  }
  EmbeddingMatrix out;
  out.extractor_id = extractor_id;
  out.dim = read_u32(bytes.data() + 8);
  out.frames = read_u32(bytes.data() + 12);
  const std::size_t count = static_cast<std::size_t>(out.dim) * out.frames;
  if (bytes.size() != 16 + count * 4) {
    throw UserError("corrupt cache entry (size mismatch): " + path.string());
  }
  out.values.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    out.values[i] = std::bit_cast<float>(read_u32(bytes.data() + 16 + i * 4));
  }
  return out;
}

void EmbeddingCache::put(const std::string& extractor_id, const std::string& content_hash,
                         const EmbeddingMatrix& embedding) const {
  if (embedding.values.size() != static_cast<std::size_t>(embedding.dim) * embedding.frames) {
    throw std::invalid_argument("embedding value count does not match D*T");
  }
  std::string blob;
  blob.reserve(16 + embedding.values.size() * 4);
  blob.append(kMagic, 4);
  put_u32(blob, kFormatVersion);
  put_u32(blob, embedding.dim);
  put_u32(blob, embedding.frames);
  for (float v : embedding.values) put_u32(blob, std::bit_cast<std::uint32_t>(v));

  const auto final_path = entry_path(extractor_id, content_hash);
  std::filesystem::create_directories(final_path.parent_path());
  const void* addr = &blob;  // stack address varies per thread/process
  std::uint64_t nonce = fnv1a64(&addr, sizeof(addr));
  nonce ^= static_cast<std::uint64_t>(
      std::chrono::steady_clock::now().time_since_epoch().count());
  const auto tmp_path =
      final_path.parent_path() /
      (content_hash + ".tmp" + std::to_string(g_temp_counter.fetch_add(1)) + "-" +
       to_hex(nonce));
  {
    std::ofstream out(tmp_path, std::ios::binary | std::ios::trunc);
    if (!out) throw UserError("cannot write cache entry: " + tmp_path.string());
    out.write(blob.data(), static_cast<std::streamsize>(blob.size()));
    if (!out) throw UserError("short cache write: " + tmp_path.string());
  }
  // Atomic on POSIX within one directory; concurrent writers race benignly.
  std::filesystem::rename(tmp_path, final_path);
}

}  // namespace mospred
