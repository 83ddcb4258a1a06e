// Copyright 2026 The DisC-VC Authors
// SPDX-License-Identifier: Apache-2.0
//
// The single on-disk format used for checkpoints, feature-cache entries
// and statistics files:
//
//   magic    8 bytes  "DISCVC01"
//   config   u64 length + UTF-8 text
//   count    u64 number of tensors
//   tensors  per tensor: u64 name length, name bytes, u64 rank,
//            rank x u64 dims, product(dims) x f32 data
//
// All integers and floats are little-endian.

#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "disc/tensor.hpp"

namespace disc {

inline constexpr std::string_view kContainerMagic = "DISCVC01";

struct Container {
  std::string config;
  std::vector<std::pair<std::string, Tensor>> tensors;

  void put(std::string name, Tensor tensor);
  bool has(std::string_view name) const;
  /// Throws CheckpointError when absent.
  const Tensor& get(std::string_view name) const;
};

std::string encode_container(const Container& container);
Container decode_container(std::string_view bytes);

void save_container(const std::filesystem::path& path, const Container& container);
Container load_container(const std::filesystem::path& path);

}  // namespace disc
