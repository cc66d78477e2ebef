#pragma once

// Binary checkpoint: "TKGCKPT\0", u32 version, u64 tensor count, then per
// tensor a length-prefixed name, u64 rank, u64 dims and f64 values. All
// integers and floats are little-endian.

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "tkg/tensor/tensor.hpp"

namespace tkg::tensor {

inline constexpr std::uint32_t kCheckpointVersion = 1;

using NamedTensors = std::vector<std::pair<std::string, Tensor>>;

std::string encode_checkpoint(const NamedTensors& tensors);
NamedTensors decode_checkpoint(const std::string& bytes);

/// Writes through a temporary file and renames it into place.
void save_checkpoint(const std::filesystem::path& path, const ParameterSet& params);
NamedTensors read_checkpoint(const std::filesystem::path& path);
/// Copies stored values into `params`. Names and shapes must match exactly.
void load_checkpoint(const std::filesystem::path& path, ParameterSet& params);
void assign_parameters(const NamedTensors& stored, ParameterSet& params);

}  // namespace tkg::tensor
