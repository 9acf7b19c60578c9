// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace bgpad::metrics {

/// counts[truth * classes + predicted]. Class 0 is normal; in the binary
/// task class 1 is the positive (anomalous) class.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(std::size_t classes = 2);
  static ConfusionMatrix from(std::span<const int> truth, std::span<const int> predicted, std::size_t classes);

  void add(int truth, int predicted);
  std::size_t classes() const noexcept { return classes_; }
  std::size_t at(std::size_t truth, std::size_t predicted) const { return counts_[truth * classes_ + predicted]; }
  std::size_t total() const noexcept;

  std::size_t tp(std::size_t c) const;
  std::size_t fp(std::size_t c) const;
  std::size_t fn(std::size_t c) const;
  std::size_t tn(std::size_t c) const;

  /// Merges every class >= 1 into the positive class.
  ConfusionMatrix collapse() const;
  bool operator==(const ConfusionMatrix&) const = default;

 private:
  std::size_t classes_;
  std::vector<std::size_t> counts_;
};

struct Scores {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

/// accuracy = (TP+TN)/total; precision, recall, F1 are 0 when their
/// denominator is 0.
Scores binary_scores(std::size_t tp, std::size_t fp, std::size_t fn, std::size_t tn);
/// Binary: scores of class 1. More classes: accuracy = trace/total and
/// precision/recall/F1 averaged over the one-vs-rest scores of every class.
Scores scores(const ConfusionMatrix& cm);

struct EventBreakdown {
  int event = 0;
  std::size_t windows = 0;
  std::size_t flagged = 0;  // predicted as any anomaly class
  double detection_rate() const { return windows ? static_cast<double>(flagged) / static_cast<double>(windows) : 0.0; }
};

struct EvalReport {
  Scores scores;
  ConfusionMatrix confusion;
  std::vector<EventBreakdown> per_event;
  std::string config_hash;
  std::uint64_t seed = 0;

  std::string to_json() const;
  std::string to_csv() const;
  bool operator==(const EvalReport& o) const;
};

/// `raw_labels` carry event ids (0 = normal); per-event rows are emitted for
/// every nonzero id present.
EvalReport make_report(std::span<const int> truth, std::span<const int> predicted, std::span<const int> raw_labels,
                       std::size_t classes);

}  // namespace bgpad::metrics
