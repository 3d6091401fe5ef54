#pragma once

#include <filesystem>

#include "mospred/train.hpp"

namespace mospred {

// Checkpoint file: "MOSC" magic, format version, a JSON header (config,
// seeds, lineage, best epoch, per-epoch history), then the parameter blocks
// w1, b1, w2, b2 as little-endian float32 in declaration order. No wall-clock
// data is stored, so equal training runs produce byte-identical files.
void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path);

Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace mospred
