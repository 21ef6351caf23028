#pragma once

#include <string>

#include <json.hpp>

#include "sskd/ensemble.hpp"
#include "sskd/trainer.hpp"

namespace sskd {

/// Container layout (documented in docs/formats.md):
///   bytes 0..7   magic "SSKDCKPT"
///   bytes 8..11  uint32, little-endian: byte length of the JSON document
///   next         JSON metadata (format_version, config, per-member tensor
///                shapes, iteration/epoch, validation metrics at save time)
///   rest         raw float64 little-endian parameter blocks, member by
///                member, tensors in declaration order
/// Round-tripping reproduces every parameter bit-exactly. Member rng streams
/// are not stored; a loaded ensemble re-derives them from the config seed.
inline constexpr int kCheckpointVersion = 1;

struct CheckpointExtras {
    int iteration = 0;
    int epoch = 0;
    nlohmann::json val_metrics;  // optional; null when absent
};

void save_checkpoint(const EnsembleState& ensemble, const TrainConfig& cfg,
                     const std::string& path, const CheckpointExtras& extras = {});

struct LoadedCheckpoint {
    EnsembleState ensemble;
    TrainConfig config;
    nlohmann::json metadata;
};

LoadedCheckpoint load_checkpoint(const std::string& path);

}  // namespace sskd
