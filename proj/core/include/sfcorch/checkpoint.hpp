#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sfcorch/linalg.hpp"

namespace sfcorch {

/// One named tensor inside a checkpoint (row-major 64-bit floats).
struct CheckpointTensor {
    std::string name;
    std::vector<uint32_t> dims;
    Vec data;
};

/// Binary layout: magic "SFCK", u32 version (=1), u32 tensor count, then per
/// tensor: u32 name length + bytes, u32 ndims, u32 dims..., f64 values; the
/// file ends with a u64 FNV-1a checksum over everything before it.
void save_checkpoint(const std::string& path, const std::vector<CheckpointTensor>& tensors);

/// Throws std::runtime_error on bad magic, version, checksum or truncation.
std::vector<CheckpointTensor> load_checkpoint(const std::string& path);

}  // namespace sfcorch
