#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "artdream/artnet/model.hpp"

namespace artdream::artnet {

// Binary layout, little-endian:
//   "ARTN" | u32 version (1) | u32 tensor count |
//   per tensor: u32 rank | u32 extents[rank] | f32 payload[product(extents)]
// Tensors are stored conv weight/bias per block, then classifier weight/bias.
inline constexpr std::uint32_t kWeightsVersion = 1;

std::vector<std::uint8_t> serialize_weights(const Weights<float>& weights);
// Throws FormatError on bad magic, version, truncation, trailing bytes, or a
// shape table that does not describe a chained network.
Weights<float> deserialize_weights(std::span<const std::uint8_t> bytes);

void save_weights(const Weights<float>& weights, const std::filesystem::path& path);
Weights<float> load_weights(const std::filesystem::path& path);

}  // namespace artdream::artnet
