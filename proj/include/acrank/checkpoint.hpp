#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "acrank/feature_pipeline.hpp"
#include "acrank/neural_ranker.hpp"

namespace acrank {

struct TrainingMetadata {
  int epochs_run = 0;
  int best_epoch = 0;
  std::vector<double> train_loss;
  std::vector<double> validation_loss;
  std::uint64_t seed = 0;
  std::string weight_mode;
  std::size_t train_pairs = 0;
  std::size_t validation_pairs = 0;

  bool operator==(const TrainingMetadata&) const = default;
};

// Binary container, little-endian:
//   "ACRKCKPT" | u32 format version | u64 header bytes | JSON header | payload
// The header carries the network config, feature layout, training metadata
// and a tensor table (name, rows, cols, byte offset into the payload). The
// payload is every tensor as column-major float64.
struct Checkpoint {
  static constexpr std::uint32_t kFormatVersion = 1;

  NetworkConfig network;
  FeatureLayout layout;
  ModelParams params;
  TrainingMetadata training;
};

void save_checkpoint(const Checkpoint& ckpt, std::ostream& out);
Checkpoint load_checkpoint(std::istream& in);
void save_checkpoint_file(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint_file(const std::string& path);

// Human-readable JSON dump of everything in the checkpoint.
std::string export_checkpoint_text(const Checkpoint& ckpt);

// Throws LayoutError naming the first field that differs.
void require_layout(const FeatureLayout& expected, const FeatureLayout& actual);

}  // namespace acrank
