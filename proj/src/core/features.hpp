// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <list>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "bgp_ingest.hpp"
#include "matrix.hpp"

namespace bgpad::features {

inline constexpr std::size_t kFeatureCount = 46;
inline constexpr std::int64_t kBinSeconds = 60;
inline constexpr std::size_t kEditBuckets = 11;  // distances 0..10

/// Column names of the 46 per-minute features, index 0 = feature 1.
const std::array<std::string_view, kFeatureCount>& feature_names();

/// 0-based column index of 1-based feature number `n`.
constexpr std::size_t col(std::size_t feature_number) { return feature_number - 1; }

/// A labeled, regularly binned multivariate series. Used for the 46-feature
/// extractor output and for the STL-augmented 5k-channel series alike.
struct FeatureSeries {
  std::int64_t start = 0;
  std::int64_t bin_width = kBinSeconds;
  std::vector<std::string> columns;
  Matrix values;            // rows = bins, cols = columns
  std::vector<int> labels;  // 0 normal, >=1 event id

  std::size_t size() const { return values.rows(); }
  void validate() const;
  bool operator==(const FeatureSeries&) const = default;
};

struct EventInterval {
  int event = 1;
  std::int64_t start = 0;
  std::int64_t end = 0;  // exclusive
};

struct EventLabelSpec {
  std::vector<EventInterval> intervals;

  void validate() const;
  int label_at(std::int64_t ts) const;
  static EventLabelSpec from_json(std::string_view json);
};

enum class FlapDefinition {
  duplicate,            // re-announcement identical to the stored route
  withdraw_reannounce,  // announcement of a prefix whose last action was a withdrawal
};

struct FeatureConfig {
  std::uint32_t rare_threshold = 5;
  FlapDefinition flap = FlapDefinition::duplicate;
  std::size_t prefix_cap = 0;  // 0 = unbounded; otherwise LRU eviction
};

enum class LastAction : std::uint8_t { none, announced, withdrawn };

struct PrefixState {
  LastAction last_action = LastAction::none;
  std::vector<std::uint32_t> last_path;
  ingest::Origin last_origin = ingest::Origin::absent;
};

std::size_t path_edit_distance(std::span<const std::uint32_t> a, std::span<const std::uint32_t> b);

/// Cumulative per-AS occurrence counts over announcement paths.
using AsHistory = std::unordered_map<std::uint32_t, std::uint64_t>;

struct RareCounts {
  std::uint64_t total = 0;
  std::uint64_t max_in_path = 0;
};

/// An AS is rare when its history count is strictly below `threshold`.
RareCounts rare_as_counts(std::span<const std::vector<std::uint32_t>> window_paths, const AsHistory& history,
                          std::uint32_t threshold);

/// Streaming extractor: per-prefix state and AS history persist across
/// push() calls, so feeding several files in order equals one pass.
class Extractor {
 public:
  explicit Extractor(FeatureConfig cfg = {}) : cfg_(cfg) {}

  /// Records must arrive in non-decreasing timestamp order.
  void push(const ingest::UpdateRecord& rec);

  /// Closes the open bin and returns every completed row since the first
  /// record, empty minutes included. Further pushes continue the series.
  FeatureSeries finish(const EventLabelSpec& labels);

  std::size_t tracked_prefixes() const { return states_.size(); }

 private:
  struct Bin {
    std::array<double, kFeatureCount> f{};
    std::vector<std::vector<std::uint32_t>> paths;  // one per announcement record
    double path_len_sum = 0;
    double edit_sum = 0;
    std::uint64_t edit_count = 0;
    std::vector<std::pair<std::vector<std::uint32_t>, std::vector<std::uint32_t>>> edit_pairs;
  };

  void close_bin();
  PrefixState& state_for(const ingest::Prefix& p);

  FeatureConfig cfg_;
  std::unordered_map<ingest::Prefix, std::pair<PrefixState, std::list<ingest::Prefix>::iterator>, ingest::PrefixHash>
      states_;
  std::list<ingest::Prefix> lru_;
  AsHistory history_;

  bool started_ = false;
  std::int64_t first_bin_ = 0;
  std::int64_t current_bin_ = 0;
  Bin bin_;
  std::vector<std::array<double, kFeatureCount>> rows_;
};

/// One row per minute from the first to the last record. Throws
/// InvalidArgument("no data in range") on an empty stream.
FeatureSeries bin_updates(std::span<const ingest::UpdateRecord> records, const EventLabelSpec& labels,
                          const FeatureConfig& cfg = {});

/// CSV layout: `timestamp,<columns...>,label`.
std::string format_series_csv(const FeatureSeries& s);
void write_series_csv(const FeatureSeries& s, const std::string& path);

/// Parses any series CSV; `expected` (when non-empty) must match the
/// column header exactly.
FeatureSeries parse_series_csv(std::string_view text, std::span<const std::string> expected = {});
FeatureSeries read_series_csv(const std::string& path, std::span<const std::string> expected = {});

/// Strict readers for the 46-feature layout.
void write_feature_csv(const FeatureSeries& s, const std::string& path);
FeatureSeries read_feature_csv(const std::string& path);

std::vector<std::string> feature_columns();

}  // namespace bgpad::features
