// SPDX-License-Identifier: Apache-2.0
#include "synth.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "error.hpp"
#include "io.hpp"

namespace bgpad::synth {

const std::vector<EventSignature>& presets() {
  static const std::vector<EventSignature> all = {
      {"worm", 1, {{1, 10.0}, {4, 10.0}}},
      {"blackout", 2, {{2, 8.0}}},
      {"leak", 3, {{1, 10.0}, {4, 10.0}, {17, 3.0}, {18, 3.0}, {19, 3.0}, {20, 3.0}}},
      {"flap", 4, {{3, 6.0}, {6, 6.0}}},
      {"origin", 5, {{11, 5.0}, {12, 5.0}, {13, 5.0}, {14, 5.0}}},
      {"rare", 6, {{45, 6.0}, {46, 4.0}}},
  };
  return all;
}

const EventSignature& preset(std::string_view name) {
  for (const auto& p : presets())
    if (p.name == name) return p;
  throw InvalidArgument("unknown event preset '" + std::string(name) + "'");
}

void SynthConfig::validate() const {
  if (n == 0) throw InvalidArgument("synth: n must be positive");
  if (events.empty()) throw InvalidArgument("synth: at least one event is required");
  for (const auto& e : events) (void)preset(e);
  if (!(anomaly_fraction >= 0.0 && anomaly_fraction < 1.0)) throw InvalidArgument("synth: anomaly fraction must be in [0, 1)");
  if (!spans.empty() && spans.size() != events.size()) throw InvalidArgument("synth: need one span per event");
  for (const auto& [b, e] : spans)
    if (b >= e || e > n) throw InvalidArgument("synth: span [" + std::to_string(b) + ", " + std::to_string(e) + ") outside [0, " + std::to_string(n) + ")");
  if (cycle == 0) throw InvalidArgument("synth: cycle must be positive");
  if (!(noise >= 0.0) || !std::isfinite(strength)) throw InvalidArgument("synth: noise and strength must be finite");
}

features::FeatureSeries synth_events(const SynthConfig& cfg) {
  cfg.validate();
  const std::size_t n = cfg.n, k = features::kFeatureCount;
  std::mt19937_64 profile(derive_seed(cfg.baseline_seed.value_or(cfg.seed), 0xba5e));
  std::mt19937_64 rng(derive_seed(cfg.seed, 0x5e7));
  const auto normal = [&rng] {
    // Box-Muller on uniform01 so the stream is identical across platforms.
    const double u1 = 1.0 - uniform01(rng), u2 = uniform01(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  };

  std::vector<double> level(k), amplitude(k), phase(k);
  for (std::size_t f = 0; f < k; ++f) {
    level[f] = 20.0 + 80.0 * uniform01(profile);
    amplitude[f] = 0.2 * level[f] * uniform01(profile);
    phase[f] = 2.0 * std::numbers::pi * uniform01(profile);
  }

  features::FeatureSeries s;
  s.start = cfg.start;
  s.bin_width = features::kBinSeconds;
  s.columns = features::feature_columns();
  s.values = Matrix(n, k);
  s.labels.assign(n, 0);
  const double w = 2.0 * std::numbers::pi / static_cast<double>(cfg.cycle);
  for (std::size_t t = 0; t < n; ++t)
    for (std::size_t f = 0; f < k; ++f) {
      const double base = level[f] + amplitude[f] * std::sin(w * static_cast<double>(t) + phase[f]);
      s.values(t, f) = std::max(0.0, base * (1.0 + cfg.noise * normal()));
    }

  auto spans = cfg.spans;
  if (spans.empty()) {
    const std::size_t e = cfg.events.size();
    const std::size_t share = n / e;
    const auto len = static_cast<std::size_t>(std::llround(cfg.anomaly_fraction * static_cast<double>(share)));
    for (std::size_t i = 0; i < e; ++i) {
      const std::size_t begin = i * share + (share - len) / 2;
      spans.emplace_back(begin, begin + len);
    }
  }
  for (std::size_t i = 0; i < cfg.events.size(); ++i) {
    const auto& sig = preset(cfg.events[i]);
    for (std::size_t t = spans[i].first; t < spans[i].second; ++t) {
      s.labels[t] = sig.id;
      for (auto [feature, factor] : sig.factors) s.values(t, features::col(feature)) *= 1.0 + cfg.strength * (factor - 1.0);
    }
  }
  return s;
}

}  // namespace bgpad::synth
