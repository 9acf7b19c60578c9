// SPDX-License-Identifier: Apache-2.0
#include "features.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

#include "error.hpp"
#include "io.hpp"
#include "json.hpp"

namespace bgpad::features {

const std::array<std::string_view, kFeatureCount>& feature_names() {
  static const std::array<std::string_view, kFeatureCount> names = {
      "announcements",
      "withdrawals",
      "duplicate_announcements",
      "nlri_announcements",
      "nonduplicate_announcements",
      "flaps",
      "new_after_withdraw",
      "plain_new_announcements",
      "implicit_withdrawals_same_path",
      "implicit_withdrawals_diff_path",
      "igp_messages",
      "egp_messages",
      "incomplete_messages",
      "origin_changes",
      "longer_path_announcements",
      "shorter_path_announcements",
      "avg_path_length",
      "max_path_length",
      "avg_unique_path_length",
      "max_unique_path_length",
      "avg_edit_distance",
      "max_edit_distance",
      "edit_distance_eq_0",
      "edit_distance_eq_1",
      "edit_distance_eq_2",
      "edit_distance_eq_3",
      "edit_distance_eq_4",
      "edit_distance_eq_5",
      "edit_distance_eq_6",
      "edit_distance_eq_7",
      "edit_distance_eq_8",
      "edit_distance_eq_9",
      "edit_distance_eq_10",
      "unique_edit_distance_eq_0",
      "unique_edit_distance_eq_1",
      "unique_edit_distance_eq_2",
      "unique_edit_distance_eq_3",
      "unique_edit_distance_eq_4",
      "unique_edit_distance_eq_5",
      "unique_edit_distance_eq_6",
      "unique_edit_distance_eq_7",
      "unique_edit_distance_eq_8",
      "unique_edit_distance_eq_9",
      "unique_edit_distance_eq_10",
      "rare_ases",
      "max_rare_ases",
  };
  return names;
}

std::vector<std::string> feature_columns() {
  const auto& n = feature_names();
  return {n.begin(), n.end()};
}

void FeatureSeries::validate() const {
  if (values.cols() != columns.size()) throw ShapeError("series column count does not match header");
  if (values.rows() != labels.size()) throw ShapeError("series row count does not match label count");
  if (bin_width <= 0) throw InvalidArgument("series bin width must be positive");
}

// ---------------------------------------------------------------------------

void EventLabelSpec::validate() const {
  auto sorted = intervals;
  std::sort(sorted.begin(), sorted.end(), [](auto& a, auto& b) { return a.start < b.start; });
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    if (sorted[i].event < 1) throw InvalidArgument("event ids must be >= 1");
    if (!(sorted[i].start < sorted[i].end)) throw InvalidArgument("event interval requires start < end");
    if (i && sorted[i].start < sorted[i - 1].end) throw InvalidArgument("event intervals overlap");
  }
}

int EventLabelSpec::label_at(std::int64_t ts) const {
  for (const auto& iv : intervals)
    if (ts >= iv.start && ts < iv.end) return iv.event;
  return 0;
}

EventLabelSpec EventLabelSpec::from_json(std::string_view json) {
  EventLabelSpec spec;
  try {
    auto doc = nlohmann::json::parse(json);
    if (!doc.is_array()) throw InvalidArgument("label spec must be a JSON array");
    for (const auto& e : doc)
      spec.intervals.push_back({e.at("event").get<int>(), e.at("start").get<std::int64_t>(), e.at("end").get<std::int64_t>()});
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("label spec: ") + e.what());
  }
  spec.validate();
  return spec;
}

// ---------------------------------------------------------------------------

std::size_t path_edit_distance(std::span<const std::uint32_t> a, std::span<const std::uint32_t> b) {
  if (a.size() < b.size()) std::swap(a, b);
  std::vector<std::size_t> row(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) row[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t diag = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t up = row[j];
      row[j] = std::min({row[j] + 1, row[j - 1] + 1, diag + (a[i - 1] == b[j - 1] ? 0 : 1)});
      diag = up;
    }
  }
  return row[b.size()];
}

RareCounts rare_as_counts(std::span<const std::vector<std::uint32_t>> window_paths, const AsHistory& history,
                          std::uint32_t threshold) {
  RareCounts rc;
  for (const auto& path : window_paths) {
    std::uint64_t in_path = 0;
    for (auto as : path) {
      auto it = history.find(as);
      const std::uint64_t seen = it == history.end() ? 0 : it->second;
      if (seen < threshold) ++in_path;
    }
    rc.total += in_path;
    rc.max_in_path = std::max(rc.max_in_path, in_path);
  }
  return rc;
}

// ---------------------------------------------------------------------------

namespace {

std::int64_t floor_bin(std::int64_t ts) {
  std::int64_t q = ts / kBinSeconds;
  if (ts % kBinSeconds < 0) --q;
  return q * kBinSeconds;
}

}  // namespace

PrefixState& Extractor::state_for(const ingest::Prefix& p) {
  auto it = states_.find(p);
  if (it != states_.end()) {
    if (cfg_.prefix_cap) lru_.splice(lru_.begin(), lru_, it->second.second);
    return it->second.first;
  }
  std::list<ingest::Prefix>::iterator pos{};
  if (cfg_.prefix_cap) {
    lru_.push_front(p);
    pos = lru_.begin();
  }
  auto& slot = states_.emplace(p, std::make_pair(PrefixState{}, pos)).first->second.first;
  if (cfg_.prefix_cap && states_.size() > cfg_.prefix_cap) {
    states_.erase(lru_.back());
    lru_.pop_back();
  }
  return slot;
}

void Extractor::push(const ingest::UpdateRecord& rec) {
  const auto bin = floor_bin(rec.timestamp);
  if (!started_) {
    started_ = true;
    first_bin_ = current_bin_ = bin;
  }
  if (bin < current_bin_) throw InvalidArgument("records are not timestamp-sorted");
  while (current_bin_ < bin) {
    close_bin();
    current_bin_ += kBinSeconds;
  }
  auto& f = bin_.f;

  for (const auto& p : rec.withdrawn) {
    f[col(2)] += 1;
    auto& s = state_for(p);
    s.last_action = LastAction::withdrawn;
    s.last_path.clear();
    s.last_origin = ingest::Origin::absent;
  }
  if (rec.announced.empty()) return;

  f[col(4)] += 1;
  switch (rec.origin) {
    case ingest::Origin::igp: f[col(11)] += 1; break;
    case ingest::Origin::egp: f[col(12)] += 1; break;
    case ingest::Origin::incomplete: f[col(13)] += 1; break;
    case ingest::Origin::absent: break;
  }
  const auto len = static_cast<double>(rec.as_path.size());
  bin_.paths.push_back(rec.as_path);
  bin_.path_len_sum += len;
  f[col(18)] = std::max(f[col(18)], len);

  for (const auto& p : rec.announced) {
    f[col(1)] += 1;
    auto& s = state_for(p);
    switch (s.last_action) {
      case LastAction::none:
        f[col(8)] += 1;
        break;
      case LastAction::withdrawn:
        f[col(7)] += 1;
        if (cfg_.flap == FlapDefinition::withdraw_reannounce) f[col(6)] += 1;
        break;
      case LastAction::announced: {
        const bool same_path = s.last_path == rec.as_path;
        const bool same_origin = s.last_origin == rec.origin;
        if (same_path && same_origin) {
          f[col(3)] += 1;
          if (cfg_.flap == FlapDefinition::duplicate) f[col(6)] += 1;
        } else if (same_path) {
          f[col(9)] += 1;
        } else {
          f[col(10)] += 1;
        }
        if (!same_origin) f[col(14)] += 1;
        if (rec.as_path.size() > s.last_path.size()) f[col(15)] += 1;
        if (rec.as_path.size() < s.last_path.size()) f[col(16)] += 1;
        const auto d = path_edit_distance(s.last_path, rec.as_path);
        bin_.edit_sum += static_cast<double>(d);
        ++bin_.edit_count;
        f[col(22)] = std::max(f[col(22)], static_cast<double>(d));
        if (d < kEditBuckets) f[col(23) + d] += 1;
        bin_.edit_pairs.emplace_back(s.last_path, rec.as_path);
        break;
      }
    }
    s.last_action = LastAction::announced;
    s.last_path = rec.as_path;
    s.last_origin = rec.origin;
  }
}

namespace {

std::array<double, kFeatureCount> finalize_row(const std::array<double, kFeatureCount>& counts,
                                               const std::vector<std::vector<std::uint32_t>>& paths,
                                               double path_len_sum, double edit_sum, std::uint64_t edit_count,
                                               const std::vector<std::pair<std::vector<std::uint32_t>, std::vector<std::uint32_t>>>& pairs,
                                               const AsHistory& history, std::uint32_t rare_threshold) {
  auto f = counts;
  f[col(5)] = f[col(1)] - f[col(3)];
  if (!paths.empty()) f[col(17)] = path_len_sum / static_cast<double>(paths.size());

  std::set<std::vector<std::uint32_t>> unique(paths.begin(), paths.end());
  double usum = 0;
  for (const auto& p : unique) {
    usum += static_cast<double>(p.size());
    f[col(20)] = std::max(f[col(20)], static_cast<double>(p.size()));
  }
  if (!unique.empty()) f[col(19)] = usum / static_cast<double>(unique.size());

  if (edit_count) f[col(21)] = edit_sum / static_cast<double>(edit_count);
  std::set<std::pair<std::vector<std::uint32_t>, std::vector<std::uint32_t>>> upairs(pairs.begin(), pairs.end());
  for (const auto& [a, b] : upairs) {
    const auto d = path_edit_distance(a, b);
    if (d < kEditBuckets) f[col(34) + d] += 1;
  }

  const auto rc = rare_as_counts(paths, history, rare_threshold);
  f[col(45)] = static_cast<double>(rc.total);
  f[col(46)] = static_cast<double>(rc.max_in_path);
  return f;
}

}  // namespace

void Extractor::close_bin() {
  rows_.push_back(finalize_row(bin_.f, bin_.paths, bin_.path_len_sum, bin_.edit_sum, bin_.edit_count, bin_.edit_pairs,
                               history_, cfg_.rare_threshold));
  for (const auto& path : bin_.paths)
    for (auto as : path) ++history_[as];
  bin_ = Bin{};
}

FeatureSeries Extractor::finish(const EventLabelSpec& labels) {
  if (!started_) throw InvalidArgument("no data in range");
  FeatureSeries s;
  s.start = first_bin_;
  s.bin_width = kBinSeconds;
  s.columns = feature_columns();
  const std::size_t n = rows_.size() + 1;
  s.values = Matrix(n, kFeatureCount);
  for (std::size_t r = 0; r < rows_.size(); ++r) std::copy(rows_[r].begin(), rows_[r].end(), s.values.row(r).begin());
  const auto open = finalize_row(bin_.f, bin_.paths, bin_.path_len_sum, bin_.edit_sum, bin_.edit_count, bin_.edit_pairs,
                                 history_, cfg_.rare_threshold);
  std::copy(open.begin(), open.end(), s.values.row(n - 1).begin());
  s.labels.resize(n);
  for (std::size_t r = 0; r < n; ++r) s.labels[r] = labels.label_at(first_bin_ + static_cast<std::int64_t>(r) * kBinSeconds);
  return s;
}

FeatureSeries bin_updates(std::span<const ingest::UpdateRecord> records, const EventLabelSpec& labels,
                          const FeatureConfig& cfg) {
  if (records.empty()) throw InvalidArgument("no data in range");
  labels.validate();
  Extractor ex(cfg);
  for (const auto& r : records) ex.push(r);
  return ex.finish(labels);
}

// ---------------------------------------------------------------------------
// CSV

std::string format_series_csv(const FeatureSeries& s) {
  s.validate();
  std::string out = "timestamp";
  for (const auto& c : s.columns) {
    out += ',';
    out += c;
  }
  out += ",label\n";
  for (std::size_t r = 0; r < s.size(); ++r) {
    out += std::to_string(s.start + static_cast<std::int64_t>(r) * s.bin_width);
    for (double v : s.values.row(r)) {
      out += ',';
      out += io::format_double(v);
    }
    out += ',';
    out += std::to_string(s.labels[r]);
    out += '\n';
  }
  return out;
}

void write_series_csv(const FeatureSeries& s, const std::string& path) { io::write_atomic(path, format_series_csv(s)); }

FeatureSeries parse_series_csv(std::string_view text, std::span<const std::string> expected) {
  auto lines = io::split(text, '\n');
  while (!lines.empty() && io::trim(lines.back()).empty()) lines.pop_back();
  if (lines.empty()) throw ParseError("empty CSV", 1);
  auto header = io::split(io::trim(lines[0]), ',');
  if (header.size() < 2 || header.front() != "timestamp" || header.back() != "label")
    throw ParseError("CSV header must start with 'timestamp' and end with 'label'", 1);
  FeatureSeries s;
  for (std::size_t i = 1; i + 1 < header.size(); ++i) s.columns.emplace_back(header[i]);
  if (!expected.empty()) {
    for (std::size_t i = 0; i < expected.size(); ++i) {
      if (i >= s.columns.size()) throw ParseError("CSV header is missing column '" + expected[i] + "'", 1);
      if (s.columns[i] != expected[i])
        throw ParseError("CSV header column " + std::to_string(i + 2) + " is '" + s.columns[i] + "', expected '" + expected[i] + "'", 1);
    }
    if (s.columns.size() > expected.size())
      throw ParseError("CSV header has unexpected column '" + s.columns[expected.size()] + "'", 1);
  }
  const std::size_t k = s.columns.size();
  const std::size_t n = lines.size() - 1;
  s.values = Matrix(n, k);
  s.labels.resize(n);
  std::vector<std::int64_t> ts(n);
  for (std::size_t r = 0; r < n; ++r) {
    const std::size_t line_no = r + 2;
    auto cells = io::split(io::trim(lines[r + 1]), ',');
    if (cells.size() != k + 2)
      throw ParseError("CSV row " + std::to_string(line_no) + " has " + std::to_string(cells.size()) + " cells, expected " +
                           std::to_string(k + 2),
                       line_no);
    auto t = io::parse_int(cells[0]);
    if (!t) throw ParseError("CSV row " + std::to_string(line_no) + " column 'timestamp': not an integer", line_no);
    ts[r] = *t;
    for (std::size_t c = 0; c < k; ++c) {
      auto v = io::parse_double(cells[c + 1]);
      if (!v)
        throw ParseError("CSV row " + std::to_string(line_no) + " column '" + s.columns[c] + "': non-numeric cell '" +
                             std::string(cells[c + 1]) + "'",
                         line_no);
      s.values(r, c) = *v;
    }
    auto l = io::parse_int(cells[k + 1]);
    if (!l || *l < 0) throw ParseError("CSV row " + std::to_string(line_no) + " column 'label': bad label", line_no);
    s.labels[r] = static_cast<int>(*l);
  }
  if (n > 0) s.start = ts[0];
  if (n > 1) s.bin_width = ts[1] - ts[0];
  for (std::size_t r = 1; r < n; ++r)
    if (ts[r] - ts[r - 1] != s.bin_width || s.bin_width <= 0)
      throw ParseError("CSV row " + std::to_string(r + 2) + ": timestamps are not contiguous bins", r + 2);
  return s;
}

FeatureSeries read_series_csv(const std::string& path, std::span<const std::string> expected) {
  return parse_series_csv(io::read_text(path), expected);
}

void write_feature_csv(const FeatureSeries& s, const std::string& path) {
  if (s.columns != feature_columns()) throw ShapeError("feature series must carry the 46 feature columns");
  write_series_csv(s, path);
}

FeatureSeries read_feature_csv(const std::string& path) {
  const auto cols = feature_columns();
  return read_series_csv(path, cols);
}

}  // namespace bgpad::features
