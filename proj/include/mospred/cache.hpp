#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "mospred/core.hpp"

namespace mospred {

// On-disk embedding cache. One file per (extractor, audio content) pair:
//   <root>/<extractor_id>/<content_hash>.mose
// Layout (all little-endian): magic "MOSE", u32 format version, u32 D,
// u32 T, then D*T IEEE-754 float32 values, row-major (row = feature dim).
// Writers stage to a temp file and rename into place, so a shared directory
// supports concurrent writers and readers never see partial entries.
class EmbeddingCache {
 public:
  static constexpr std::uint32_t kFormatVersion = 1;

  explicit EmbeddingCache(std::filesystem::path root);

  std::filesystem::path entry_path(const std::string& extractor_id,
                                   const std::string& content_hash) const;

  bool contains(const std::string& extractor_id, const std::string& content_hash) const;

  // nullopt on miss; a hit is bit-identical to what was stored.
  std::optional<EmbeddingMatrix> get(const std::string& extractor_id,
                                     const std::string& content_hash) const;

  void put(const std::string& extractor_id, const std::string& content_hash,
           const EmbeddingMatrix& embedding) const;

  const std::filesystem::path& root() const { return root_; }

 private:
  std::filesystem::path root_;
};

}  // namespace mospred
