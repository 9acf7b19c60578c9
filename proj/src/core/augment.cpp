// SPDX-License-Identifier: Apache-2.0
#include "augment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "error.hpp"
#include "io.hpp"

namespace bgpad::augment {

std::vector<std::string> augmented_columns(std::span<const std::string> base_columns) {
  std::vector<std::string> out;
  out.reserve(base_columns.size() * kBlockSuffixes.size());
  for (auto suffix : kBlockSuffixes)
    for (const auto& c : base_columns) out.push_back(c + std::string(suffix));
  return out;
}

features::FeatureSeries augment_series(const features::FeatureSeries& series, const stl::StlConfig& cfg) {
  series.validate();
  const std::size_t n = series.size();
  const std::size_t k = series.columns.size();
  features::FeatureSeries out;
  out.start = series.start;
  out.bin_width = series.bin_width;
  out.labels = series.labels;
  out.columns = augmented_columns(series.columns);
  out.values = Matrix(n, 5 * k);
  for (std::size_t c = 0; c < k; ++c) {
    stl::Decomposition d;
    try {
      d = stl::decompose(series.values.column(c), cfg);
    } catch (const InvalidArgument& e) {
      throw InvalidArgument("feature '" + series.columns[c] + "': " + e.what());
    }
    out.values.set_column(c, d.observed);
    out.values.set_column(k + c, d.residual);
    out.values.set_column(2 * k + c, d.seasonal);
    out.values.set_column(3 * k + c, d.trend);
    out.values.set_column(4 * k + c, d.weight);
  }
  return out;
}

// ---------------------------------------------------------------------------

double NormalizerStats::apply(std::size_t channel, double v) const {
  const double lo = min[channel], hi = max[channel];
  if (!(hi > lo)) return 0.0;
  return std::clamp((v - lo) / (hi - lo), 0.0, 1.0);
}

void NormalizerStats::apply_inplace(Matrix& m) const {
  if (m.cols() != channels()) throw ShapeError("normalizer channel count does not match data");
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c) m(r, c) = apply(c, m(r, c));
}

NormalizerStats fit_normalizer(const Matrix& rows) {
  std::vector<std::size_t> all(rows.rows());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  return fit_normalizer(rows, all);
}

NormalizerStats fit_normalizer(const Matrix& rows, std::span<const std::size_t> row_subset) {
  if (row_subset.empty()) throw InvalidArgument("normalizer needs at least one row");
  NormalizerStats s;
  s.min.assign(rows.cols(), std::numeric_limits<double>::infinity());
  s.max.assign(rows.cols(), -std::numeric_limits<double>::infinity());
  for (auto r : row_subset) {
    for (std::size_t c = 0; c < rows.cols(); ++c) {
      s.min[c] = std::min(s.min[c], rows(r, c));
      s.max[c] = std::max(s.max[c], rows(r, c));
    }
  }
  return s;
}

// ---------------------------------------------------------------------------

int majority_label(std::span<const int> labels) {
  std::map<int, std::size_t> counts;
  for (int l : labels) ++counts[l];
  int best = 0;
  std::size_t best_count = 0;
  for (auto [label, count] : counts) {
    if (count >= best_count) {  // ascending keys: ties resolve to the larger id
      best = label;
      best_count = count;
    }
  }
  return best;
}

std::vector<WindowSample> slice_raw(const Matrix& rows, std::span<const int> labels, std::size_t m) {
  if (m == 0) throw InvalidArgument("window length must be positive");
  if (labels.size() != rows.rows()) throw ShapeError("label count does not match row count");
  if (rows.rows() < m) throw InvalidArgument("series shorter than window length");
  const std::size_t count = rows.rows() - m + 1;
  std::vector<WindowSample> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    WindowSample w;
    w.start = i;
    w.values = Matrix(m, rows.cols());
    std::copy(rows.data().begin() + static_cast<std::ptrdiff_t>(i * rows.cols()),
              rows.data().begin() + static_cast<std::ptrdiff_t>((i + m) * rows.cols()), w.values.data().begin());
    w.label = majority_label(labels.subspan(i, m));
    out.push_back(std::move(w));
  }
  return out;
}

void normalize_windows(std::vector<WindowSample>& windows, const NormalizerStats& stats) {
  for (auto& w : windows) stats.apply_inplace(w.values);
}

WindowSet slice_windows(const Matrix& rows, std::span<const int> labels, std::size_t m,
                        const std::optional<NormalizerStats>& stats) {
  WindowSet set;
  set.windows = slice_raw(rows, labels, m);
  set.stats = stats ? *stats : fit_normalizer(rows);
  normalize_windows(set.windows, set.stats);
  return set;
}

std::string format_windows_csv(std::span<const WindowSample> windows, std::span<const std::string> columns) {
  std::string out = "window,start,label,row";
  for (const auto& c : columns) out += "," + c;
  out += '\n';
  for (std::size_t w = 0; w < windows.size(); ++w) {
    const auto& win = windows[w];
    for (std::size_t r = 0; r < win.values.rows(); ++r) {
      out += std::to_string(w) + ',' + std::to_string(win.start) + ',' + std::to_string(win.label) + ',' + std::to_string(r);
      for (double v : win.values.row(r)) {
        out += ',';
        out += io::format_double(v);
      }
      out += '\n';
    }
  }
  return out;
}

}  // namespace bgpad::augment
