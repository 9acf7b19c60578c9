// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "features.hpp"

namespace bgpad::synth {

/// Multiplicative shifts applied to 1-based feature numbers during an event.
struct EventSignature {
  std::string name;
  int id = 1;  // label written for the event's rows
  std::vector<std::pair<std::size_t, double>> factors;
};

/// worm, blackout, leak, flap, origin, rare (ids 1..6).
const std::vector<EventSignature>& presets();
const EventSignature& preset(std::string_view name);

struct SynthConfig {
  std::size_t n = 2000;
  std::vector<std::string> events{"worm"};
  /// Fraction of the timeline covered by anomalies when spans are implicit;
  /// split evenly across events, each centred in its share of the series.
  double anomaly_fraction = 0.1;
  /// Explicit [start, end) row spans, one per event; overrides the fraction.
  std::vector<std::pair<std::size_t, std::size_t>> spans;
  /// Scales every signature: factor' = 1 + strength * (factor - 1).
  double strength = 1.0;
  std::size_t cycle = 35;  // bins per baseline period
  double noise = 0.05;     // relative standard deviation of the baseline
  std::int64_t start = 1043280000;
  std::uint64_t seed = 0;
  /// Seed of the per-feature baseline profile (level, amplitude, phase);
  /// defaults to `seed`. Series sharing it look like one vantage point.
  std::optional<std::uint64_t> baseline_seed;

  void validate() const;
};

features::FeatureSeries synth_events(const SynthConfig& cfg);

}  // namespace bgpad::synth
