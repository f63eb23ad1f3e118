#pragma once

#include "camgen/backbone.hpp"
#include "camgen/config.hpp"

#include <filesystem>
#include <string>

namespace camgen {

// Layout of a checkpoint file:
//
//   camgen-checkpoint <version>
//   config <byte count>
//   <verbatim run configuration>
//   tensors <count>
//   <name> <rows> <cols> float32        one line per tensor, in views() order
//   data
//   <raw little-endian float32 buffers in manifest order>

inline constexpr int kCheckpointVersion = 1;

struct Checkpoint {
    RunConfig config;
    ModelParams<float> params;
};

void save_checkpoint(const std::filesystem::path& path, const RunConfig& config, const ModelParams<float>& params);

/// Throws DataError on a malformed file and VersionError when the format
/// version or the tensor manifest disagree with the stored configuration.
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Like load_checkpoint, and additionally requires the stored model shape to
/// equal `expected` (VersionError otherwise).
Checkpoint load_checkpoint(const std::filesystem::path& path, const ModelShape& expected);

} // namespace camgen
