#pragma once

#include "rapid/rapid.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace rapid {

// Binary container shared by feature and weight files:
//
//   "RAPD" | u32 version | u32 header length | UTF-8 JSON header | payload
//
// All integers and payload values are little-endian. The header lists the
// records and their byte offsets into the payload.

inline constexpr std::uint32_t kContainerVersion = 1;

/// Features: per record, u32 anchors followed by f32 values (rows x k).
/// Only the normalized values are stored; loaded matrices have empty `raw`.
std::vector<std::byte> encode_features(std::span<const RapidMatrix> matrices);
std::vector<RapidMatrix> decode_features(std::span<const std::byte> bytes);

void save_features(std::span<const RapidMatrix> matrices, const std::filesystem::path& path);
std::vector<RapidMatrix> load_features(const std::filesystem::path& path);

/// Dense tensor with an explicit shape, row-major.
struct NamedTensor {
  std::vector<std::size_t> shape;
  std::vector<double> data;  // stored as f32 on disk
};
using TensorMap = std::map<std::string, NamedTensor>;

std::vector<std::byte> encode_tensors(const TensorMap& tensors);
TensorMap decode_tensors(std::span<const std::byte> bytes);

void save_tensors(const TensorMap& tensors, const std::filesystem::path& path);
TensorMap load_tensors(const std::filesystem::path& path);

}  // namespace rapid
