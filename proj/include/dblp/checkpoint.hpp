#pragma once

// Versioned little-endian binary checkpoints.
//
// Layout: magic "DBLPCKPT", u32 version, u64 metadata length, metadata JSON
// (model config, vocabulary, label names, seed, training record), u64
// parameter count, then per parameter: u32 name length, name bytes, u8
// trainable, u32 rank, u64 extents, raw IEEE-754 doubles.

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "dblp/model.hpp"
#include "json.hpp"

namespace dblp {

inline constexpr std::uint32_t kCheckpointVersion = 1;
inline constexpr std::string_view kCheckpointMagic = "DBLPCKPT";

struct TrainingRecord {
  std::size_t best_epoch = 0;
  std::size_t epochs_run = 0;
  double train_seconds = 0.0;
  /// Training settings echoed for reproducibility; may be null.
  nlohmann::json train_config;

  bool operator==(const TrainingRecord&) const = default;
};

std::string serialize_checkpoint(const Model& model, const TrainingRecord& record);

struct LoadedCheckpoint {
  Model model;
  TrainingRecord record;
  std::uint64_t size_bytes = 0;
};

/// Throws FormatError on a bad magic, version mismatch, truncation,
/// trailing bytes or a vocabulary hash mismatch.
LoadedCheckpoint parse_checkpoint(std::string_view bytes);

/// Writes the checkpoint and returns its size in bytes.
std::uint64_t save_checkpoint(const Model& model, const TrainingRecord& record,
                              const std::filesystem::path& path);
LoadedCheckpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace dblp
