// SPDX-License-Identifier: Apache-2.0
#include "metrics.hpp"

#include <map>

#include <json.hpp>

#include "error.hpp"
#include "io.hpp"

namespace bgpad::metrics {

ConfusionMatrix::ConfusionMatrix(std::size_t classes) : classes_(classes), counts_(classes * classes, 0) {
  if (classes < 2) throw InvalidArgument("confusion matrix needs at least two classes");
}

ConfusionMatrix ConfusionMatrix::from(std::span<const int> truth, std::span<const int> predicted, std::size_t classes) {
  if (truth.size() != predicted.size()) throw ShapeError("truth and prediction lengths differ");
  ConfusionMatrix cm(classes);
  for (std::size_t i = 0; i < truth.size(); ++i) cm.add(truth[i], predicted[i]);
  return cm;
}

void ConfusionMatrix::add(int truth, int predicted) {
  if (truth < 0 || predicted < 0 || static_cast<std::size_t>(truth) >= classes_ ||
      static_cast<std::size_t>(predicted) >= classes_)
    throw InvalidArgument("class id out of range for a " + std::to_string(classes_) + "-class confusion matrix");
  ++counts_[static_cast<std::size_t>(truth) * classes_ + static_cast<std::size_t>(predicted)];
}

std::size_t ConfusionMatrix::total() const noexcept {
  std::size_t n = 0;
  for (auto c : counts_) n += c;
  return n;
}

std::size_t ConfusionMatrix::tp(std::size_t c) const { return at(c, c); }

std::size_t ConfusionMatrix::fp(std::size_t c) const {
  std::size_t n = 0;
  for (std::size_t t = 0; t < classes_; ++t)
    if (t != c) n += at(t, c);
  return n;
}

std::size_t ConfusionMatrix::fn(std::size_t c) const {
  std::size_t n = 0;
  for (std::size_t p = 0; p < classes_; ++p)
    if (p != c) n += at(c, p);
  return n;
}

std::size_t ConfusionMatrix::tn(std::size_t c) const { return total() - tp(c) - fp(c) - fn(c); }

ConfusionMatrix ConfusionMatrix::collapse() const {
  ConfusionMatrix out(2);
  for (std::size_t t = 0; t < classes_; ++t)
    for (std::size_t p = 0; p < classes_; ++p) out.counts_[(t > 0) * 2 + (p > 0)] += at(t, p);
  return out;
}

Scores binary_scores(std::size_t tp, std::size_t fp, std::size_t fn, std::size_t tn) {
  const auto d = [](std::size_t v) { return static_cast<double>(v); };
  Scores s;
  const std::size_t total = tp + fp + fn + tn;
  s.accuracy = total ? d(tp + tn) / d(total) : 0.0;
  s.precision = tp + fp ? d(tp) / d(tp + fp) : 0.0;
  s.recall = tp + fn ? d(tp) / d(tp + fn) : 0.0;
  s.f1 = s.precision + s.recall > 0.0 ? 2.0 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
  return s;
}

Scores scores(const ConfusionMatrix& cm) {
  if (cm.classes() == 2) return binary_scores(cm.tp(1), cm.fp(1), cm.fn(1), cm.tn(1));
  Scores s;
  std::size_t trace = 0;
  for (std::size_t c = 0; c < cm.classes(); ++c) {
    trace += cm.tp(c);
    const auto one = binary_scores(cm.tp(c), cm.fp(c), cm.fn(c), cm.tn(c));
    s.precision += one.precision;
    s.recall += one.recall;
    s.f1 += one.f1;
  }
  const double k = static_cast<double>(cm.classes());
  s.precision /= k;
  s.recall /= k;
  s.f1 /= k;
  s.accuracy = cm.total() ? static_cast<double>(trace) / static_cast<double>(cm.total()) : 0.0;
  return s;
}

EvalReport make_report(std::span<const int> truth, std::span<const int> predicted, std::span<const int> raw_labels,
                       std::size_t classes) {
  if (raw_labels.size() != truth.size()) throw ShapeError("raw label count differs from truth count");
  EvalReport r;
  r.confusion = ConfusionMatrix::from(truth, predicted, classes);
  r.scores = scores(r.confusion);
  std::map<int, EventBreakdown> events;
  for (std::size_t i = 0; i < raw_labels.size(); ++i) {
    if (raw_labels[i] == 0) continue;
    auto& e = events[raw_labels[i]];
    e.event = raw_labels[i];
    ++e.windows;
    if (predicted[i] != 0) ++e.flagged;
  }
  for (auto& [id, e] : events) r.per_event.push_back(e);
  return r;
}

bool EvalReport::operator==(const EvalReport& o) const {
  if (!(confusion == o.confusion) || config_hash != o.config_hash || seed != o.seed) return false;
  if (scores.accuracy != o.scores.accuracy || scores.precision != o.scores.precision || scores.recall != o.scores.recall ||
      scores.f1 != o.scores.f1)
    return false;
  if (per_event.size() != o.per_event.size()) return false;
  for (std::size_t i = 0; i < per_event.size(); ++i)
    if (per_event[i].event != o.per_event[i].event || per_event[i].windows != o.per_event[i].windows ||
        per_event[i].flagged != o.per_event[i].flagged)
      return false;
  return true;
}

std::string EvalReport::to_json() const {
  using nlohmann::ordered_json;
  ordered_json cm = ordered_json::array();
  for (std::size_t t = 0; t < confusion.classes(); ++t) {
    ordered_json row = ordered_json::array();
    for (std::size_t p = 0; p < confusion.classes(); ++p) row.push_back(confusion.at(t, p));
    cm.push_back(row);
  }
  ordered_json events = ordered_json::array();
  for (const auto& e : per_event)
    events.push_back({{"event", e.event}, {"windows", e.windows}, {"flagged", e.flagged}, {"detection_rate", e.detection_rate()}});
  ordered_json doc{{"accuracy", scores.accuracy},
                   {"precision", scores.precision},
                   {"recall", scores.recall},
                   {"f1", scores.f1},
                   {"classes", confusion.classes()},
                   {"averaging", confusion.classes() == 2 ? "binary" : "macro"},
                   {"samples", confusion.total()},
                   {"confusion", cm},
                   {"per_event", events},
                   {"config_hash", config_hash},
                   {"seed", seed}};
  if (confusion.classes() == 2)
    doc["counts"] = {{"tp", confusion.tp(1)}, {"fp", confusion.fp(1)}, {"fn", confusion.fn(1)}, {"tn", confusion.tn(1)}};
  return doc.dump(2) + "\n";
}

std::string EvalReport::to_csv() const {
  std::string out = "metric,value\n";
  out += "accuracy," + io::format_double(scores.accuracy) + "\n";
  out += "precision," + io::format_double(scores.precision) + "\n";
  out += "recall," + io::format_double(scores.recall) + "\n";
  out += "f1," + io::format_double(scores.f1) + "\n";
  for (std::size_t t = 0; t < confusion.classes(); ++t)
    for (std::size_t p = 0; p < confusion.classes(); ++p)
      out += "confusion_" + std::to_string(t) + "_" + std::to_string(p) + "," + std::to_string(confusion.at(t, p)) + "\n";
  return out;
}

}  // namespace bgpad::metrics
