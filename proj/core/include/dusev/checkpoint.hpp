#pragma once

#include <string>

#include "dusev/model.hpp"

namespace dusev {

inline constexpr const char* kCheckpointVersion = "dusev-ckpt-1";

// JSON checkpoint: {version, config, tensors:{name:{shape,data}}, bn_stats}.
// Tensor data is written as decimal 64-bit reals in row-major order with
// round-trip-exact formatting, so save -> load -> save reproduces the file
// byte for byte.
void save_checkpoint(const ModelParams& params, const std::string& path);

// Throws IoError (unreadable file), CheckpointParseError (truncated or
// structurally invalid), CheckpointVersionError (wrong version tag), or
// ShapeError (tensor shapes inconsistent with the stored config).
ModelParams load_checkpoint(const std::string& path);

}  // namespace dusev
