// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "augment.hpp"
#include "model.hpp"
#include "stl.hpp"

namespace bgpad::checkpoint {

inline constexpr const char* kFormat = "bgpad-mgat";
inline constexpr int kVersion = 1;

/// Everything needed to score new windows: weights, the normalizer fitted
/// at training time, and the preprocessing that produced the channels.
struct Checkpoint {
  model::MGatParams params;
  augment::NormalizerStats normalizer;
  std::vector<std::string> channels;
  bool use_stl = true;
  stl::StlConfig stl;
  std::uint64_t seed = 0;

  /// FNV-1a over the canonical config block.
  std::string config_hash() const;
};

std::string to_json(const Checkpoint& ck);
Checkpoint from_json(const std::string& text);

void save(const Checkpoint& ck, const std::filesystem::path& path);
Checkpoint load(const std::filesystem::path& path);

}  // namespace bgpad::checkpoint
