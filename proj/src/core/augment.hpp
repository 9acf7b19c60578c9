// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "features.hpp"
#include "matrix.hpp"
#include "stl.hpp"

namespace bgpad::augment {

/// Channel blocks of an augmented series, in column order.
inline constexpr std::array<std::string_view, 5> kBlockSuffixes = {".obs", ".res", ".seas", ".trend", ".w"};

/// Expands k columns to 5k: [observed, residual, seasonal, trend, weight],
/// each block in the input column order. Labels and timing are unchanged.
features::FeatureSeries augment_series(const features::FeatureSeries& series, const stl::StlConfig& cfg);

std::vector<std::string> augmented_columns(std::span<const std::string> base_columns);

/// Per-channel min/max fitted on training rows.
struct NormalizerStats {
  std::vector<double> min;
  std::vector<double> max;

  std::size_t channels() const { return min.size(); }
  /// Min-max scaling clipped to [0, 1]; constant channels map to 0.
  double apply(std::size_t channel, double v) const;
  void apply_inplace(Matrix& m) const;
  bool operator==(const NormalizerStats&) const = default;
};

NormalizerStats fit_normalizer(const Matrix& rows);
NormalizerStats fit_normalizer(const Matrix& rows, std::span<const std::size_t> row_subset);

struct WindowSample {
  Matrix values;  // m x channels
  int label = 0;
  std::size_t start = 0;
  int source = 0;  // dataset index when windows from several series are pooled
};

/// Label with the highest count; ties go to the larger label id.
int majority_label(std::span<const int> labels);

/// Stride-1 windows of length m without normalization.
std::vector<WindowSample> slice_raw(const Matrix& rows, std::span<const int> labels, std::size_t m);

struct WindowSet {
  std::vector<WindowSample> windows;
  NormalizerStats stats;
};

/// Stride-1 windows normalized with `stats`, or with stats fitted on all
/// rows when `stats` is empty.
WindowSet slice_windows(const Matrix& rows, std::span<const int> labels, std::size_t m,
                        const std::optional<NormalizerStats>& stats = std::nullopt);

void normalize_windows(std::vector<WindowSample>& windows, const NormalizerStats& stats);

/// Long-format window dump: `window,start,label,row,<channels...>`.
std::string format_windows_csv(std::span<const WindowSample> windows, std::span<const std::string> columns);

}  // namespace bgpad::augment
