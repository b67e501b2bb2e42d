// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "dishft/ndgrad/tensor.hpp"

namespace dishft::ndgrad {

struct NamedTensor {
  std::string name;
  Tensor tensor;
};

// Flat little-endian layout:
//   "DFT1" | u32 count | count x { u32 name_len | name | u32 rank |
//   rank x u32 dim | prod(dims) x f64 }
std::vector<std::uint8_t> encode_checkpoint(std::span<const NamedTensor> tensors);
std::vector<NamedTensor> decode_checkpoint(std::span<const std::uint8_t> bytes);

void save_checkpoint(const std::filesystem::path& path, std::span<const NamedTensor> tensors);
std::vector<NamedTensor> load_checkpoint(const std::filesystem::path& path);

}  // namespace dishft::ndgrad
