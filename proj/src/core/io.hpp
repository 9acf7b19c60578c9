// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace bgpad::io {

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path);
std::string read_text(const std::filesystem::path& path);

/// Writes via a sibling temp file and rename, so readers never observe a
/// partially written artifact.
void write_atomic(const std::filesystem::path& path, std::string_view contents);

bool is_gzip(const std::vector<std::uint8_t>& bytes);
std::vector<std::uint8_t> gunzip(const std::vector<std::uint8_t>& bytes);

/// Shortest decimal form that parses back to the identical double.
std::string format_double(double v);
std::optional<double> parse_double(std::string_view s);
std::optional<std::int64_t> parse_int(std::string_view s);

std::vector<std::string_view> split(std::string_view s, char sep);
std::string_view trim(std::string_view s);

std::uint64_t fnv1a(std::string_view s);
std::string hex64(std::uint64_t v);

}  // namespace bgpad::io

namespace bgpad {

/// Mixes a base seed with stream identifiers so that every stochastic
/// consumer gets an independent, reproducible generator.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0);

/// Uniform double in [0, 1) from the top 53 bits of one draw; identical on
/// every standard library, unlike std::uniform_real_distribution.
inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace bgpad
