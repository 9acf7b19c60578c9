// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "augment.hpp"
#include "features.hpp"
#include "metrics.hpp"
#include "model.hpp"
#include "stl.hpp"
#include "training.hpp"

namespace bgpad::experiments {

/// Every knob between a raw feature series and an evaluation report.
struct PipelineConfig {
  bool use_stl = true;
  stl::StlConfig stl;
  std::size_t window = 25;
  model::ModelConfig model;  // window, channels and classes are filled in per run
  training::TrainConfig train;
  training::SplitConfig split;
  training::Task task = training::Task::binary;
  std::uint64_t seed = 0;  // copied into the split and training seeds

  /// Canonical JSON of every value, defaults included.
  std::string to_json() const;
  std::string config_hash() const;
};

struct Dataset {
  std::vector<augment::WindowSample> windows;  // normalized
  std::vector<std::string> channels;
  augment::NormalizerStats stats;  // fitted on the rows of training windows only
  training::Split split;
  std::size_t classes = 2;

  std::vector<augment::WindowSample> subset(std::span<const std::size_t> idx) const;
};

/// Augments each series separately (when STL is on), slices windows, splits
/// them, and normalizes everything with statistics of the training rows.
Dataset prepare(std::span<const features::FeatureSeries> series, const PipelineConfig& cfg);

struct RunResult {
  training::TrainResult trained;
  metrics::EvalReport report;
  Dataset data;
};

RunResult run_pipeline(std::span<const features::FeatureSeries> series, const PipelineConfig& cfg,
                       const training::EpochCallback& on_epoch = {});

// --- ablation ---------------------------------------------------------------

struct Arms {
  bool temporal_gat = true;
  bool feature_gat = true;
  bool stl = true;
  bool window = true;

  /// "temporal_gat+feature_gat+stl+window", or "none".
  std::string name() const;
  static Arms parse(std::string_view s);
  bool operator==(const Arms&) const = default;
};

/// The six module combinations of the ablation table, full model first.
std::vector<Arms> default_arms();

struct AblationRow {
  Arms arms;
  std::size_t channels = 0;
  std::size_t window = 0;
  metrics::Scores scores;
};

/// STL off feeds the k raw channels; window off uses m = 1.
PipelineConfig arm_config(const PipelineConfig& base, const Arms& arms);

std::vector<AblationRow> ablate(const features::FeatureSeries& series, std::span<const Arms> arms,
                                const PipelineConfig& cfg, std::size_t jobs = 1);
std::string format_ablation_csv(std::span<const AblationRow> rows);

// --- parameter sweep --------------------------------------------------------

struct SweepCell {
  std::size_t window = 0;
  std::size_t period = 0;
  metrics::Scores scores;
};

std::vector<std::size_t> default_sweep_windows();
std::vector<std::size_t> default_sweep_periods();

std::vector<SweepCell> sweep(const features::FeatureSeries& series, std::span<const std::size_t> windows,
                             std::span<const std::size_t> periods, const PipelineConfig& cfg, std::size_t jobs = 1);
std::string format_sweep_csv(std::span<const SweepCell> cells);

// --- multi-event protocols --------------------------------------------------

struct EventWindowSpec {
  std::size_t samples = 600;  // consecutive rows kept per event
  std::size_t before = 150;   // normal rows kept ahead of the first anomalous row
};

/// Cuts `spec.samples` consecutive rows around the first anomalous row.
features::FeatureSeries cut_event(const features::FeatureSeries& s, const std::string& name, const EventWindowSpec& spec);

/// One preset event in `spec.samples` rows with `spec.before` normal rows on
/// each side. All presets share the baseline profile drawn from `seed`.
features::FeatureSeries synthetic_event_set(const std::string& preset, std::uint64_t seed, const EventWindowSpec& spec = {});
/// synthetic_event_set for every preset, in preset order.
std::vector<features::FeatureSeries> synthetic_event_sets(std::uint64_t seed, const EventWindowSpec& spec = {});

struct MulticlassResult {
  RunResult run;
  metrics::EvalReport binary_view;  // anomaly classes merged
};

MulticlassResult multiclass_run(std::span<const features::FeatureSeries> events, std::span<const std::string> names,
                                const PipelineConfig& cfg, const EventWindowSpec& spec = {},
                                const training::EpochCallback& on_epoch = {});

struct HoldoutResult {
  std::string held_out;
  metrics::EvalReport unseen;  // every window of the held-out event
  metrics::EvalReport seen;    // test split of the five training events
  training::TrainResult trained;
};

HoldoutResult holdout_event_run(std::span<const features::FeatureSeries> events, std::span<const std::string> names,
                                std::size_t held_out, const PipelineConfig& cfg, const EventWindowSpec& spec = {},
                                const training::EpochCallback& on_epoch = {});

// --- attention export -------------------------------------------------------

struct AttentionAverages {
  Matrix feature;   // channels x channels (empty when the view is off)
  Matrix temporal;  // m x m (empty when the view is off)
};

AttentionAverages average_attention(const model::MGatParams& params, std::span<const augment::WindowSample> windows);

struct Edge {
  std::size_t src = 0;  // attending node (row)
  std::size_t dst = 0;  // attended node (column)
  double weight = 0.0;
};

/// Entries strictly above `threshold`.
std::vector<Edge> edges_above(const Matrix& alpha, double threshold);
std::string format_edges_csv(std::span<const Edge> edges, std::span<const std::string> names);

}  // namespace bgpad::experiments
