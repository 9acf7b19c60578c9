// SPDX-License-Identifier: Apache-2.0
#include "experiments.hpp"

#include <algorithm>

#include <json.hpp>

#include "error.hpp"
#include "io.hpp"
#include "synth.hpp"

namespace bgpad::experiments {

using nlohmann::ordered_json;

std::string PipelineConfig::to_json() const {
  const auto s = stl.resolved();
  ordered_json j{
      {"seed", seed},
      {"task", task == training::Task::binary ? "binary" : "multiclass"},
      {"stl", {{"enabled", use_stl},
               {"period", s.period},
               {"seasonal_span", s.seasonal_span},
               {"trend_span", s.trend_span},
               {"lowpass_span", s.lowpass_span},
               {"inner_iterations", s.inner_iterations},
               {"outer_iterations", s.outer_iterations}}},
      {"window", window},
      {"model", {{"hidden", model.hidden},
                 {"fusion_weights", model.fusion_weights},
                 {"activation", model::to_string(model.activation)},
                 {"leaky_mode", model::to_string(model.leaky_mode)},
                 {"leaky_slope", model.leaky_slope},
                 {"feature_gat", model.feature_gat},
                 {"temporal_gat", model.temporal_gat}}},
      {"train", {{"lr", train.lr},
                 {"dropout", train.dropout},
                 {"max_epochs", train.max_epochs},
                 {"optimizer", train.optimizer == training::Optimizer::adam ? "adam" : "sgd"},
                 {"beta1", train.beta1},
                 {"beta2", train.beta2},
                 {"eps", train.eps},
                 {"batch_size", train.batch_size},
                 {"patience", train.patience},
                 {"class_weights", train.class_weights.empty() ? ordered_json("inverse_frequency") : ordered_json(train.class_weights)}}},
      {"split", {{"ratios", split.ratios}, {"stratified", split.stratified}, {"chronological", split.chronological}}},
  };
  return j.dump();
}

std::string PipelineConfig::config_hash() const { return io::hex64(io::fnv1a(to_json())); }

std::vector<augment::WindowSample> Dataset::subset(std::span<const std::size_t> idx) const {
  std::vector<augment::WindowSample> out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back(windows[i]);
  return out;
}

namespace {

features::FeatureSeries channels_of(const features::FeatureSeries& s, const PipelineConfig& cfg) {
  return cfg.use_stl ? augment::augment_series(s, cfg.stl) : s;
}

std::vector<augment::WindowSample> raw_windows(const features::FeatureSeries& s, const PipelineConfig& cfg, int source) {
  auto w = augment::slice_raw(s.values, s.labels, cfg.window);
  for (auto& x : w) x.source = source;
  return w;
}

metrics::Scores scores_of(const RunResult& r) { return r.report.scores; }

}  // namespace

Dataset prepare(std::span<const features::FeatureSeries> series, const PipelineConfig& cfg) {
  if (series.empty()) throw InvalidArgument("no input series");
  std::vector<features::FeatureSeries> expanded;
  for (const auto& s : series) {
    s.validate();
    expanded.push_back(channels_of(s, cfg));
    if (expanded.back().columns != expanded.front().columns) throw InvalidArgument("input series have different columns");
  }

  Dataset d;
  d.channels = expanded.front().columns;
  for (std::size_t i = 0; i < expanded.size(); ++i) {
    auto w = raw_windows(expanded[i], cfg, static_cast<int>(i));
    std::move(w.begin(), w.end(), std::back_inserter(d.windows));
  }
  if (cfg.task == training::Task::binary) {
    d.classes = 2;
  } else {
    int top = 1;
    for (const auto& w : d.windows) top = std::max(top, w.label);
    d.classes = static_cast<std::size_t>(top) + 1;
  }

  auto split_cfg = cfg.split;
  split_cfg.seed = cfg.seed;
  d.split = training::split_indices(training::class_ids(d.windows, cfg.task), split_cfg);

  // Fit the normalizer on rows that appear in at least one training window.
  std::vector<std::vector<bool>> used(expanded.size());
  for (std::size_t i = 0; i < expanded.size(); ++i) used[i].assign(expanded[i].size(), false);
  for (auto idx : d.split.train) {
    const auto& w = d.windows[idx];
    for (std::size_t r = 0; r < cfg.window; ++r) used[static_cast<std::size_t>(w.source)][w.start + r] = true;
  }
  std::size_t count = 0;
  for (const auto& u : used) count += static_cast<std::size_t>(std::count(u.begin(), u.end(), true));
  Matrix rows(count, d.channels.size());
  std::size_t out = 0;
  for (std::size_t i = 0; i < expanded.size(); ++i)
    for (std::size_t r = 0; r < used[i].size(); ++r)
      if (used[i][r]) {
        std::copy(expanded[i].values.row(r).begin(), expanded[i].values.row(r).end(), rows.row(out).begin());
        ++out;
      }
  d.stats = augment::fit_normalizer(rows);
  augment::normalize_windows(d.windows, d.stats);
  return d;
}

RunResult run_pipeline(std::span<const features::FeatureSeries> series, const PipelineConfig& cfg,
                       const training::EpochCallback& on_epoch) {
  RunResult r;
  r.data = prepare(series, cfg);
  auto mc = cfg.model;
  mc.window = cfg.window;
  mc.channels = r.data.channels.size();
  mc.classes = r.data.classes;
  auto tc = cfg.train;
  tc.seed = cfg.seed;
  const auto train_set = r.data.subset(r.data.split.train);
  const auto val_set = r.data.subset(r.data.split.val);
  const auto test_set = r.data.subset(r.data.split.test);
  r.trained = training::train(train_set, val_set, mc, tc, cfg.task, on_epoch);
  r.report = training::evaluate(r.trained.params, test_set, cfg.task, tc.jobs);
  r.report.config_hash = cfg.config_hash();
  r.report.seed = cfg.seed;
  return r;
}

// ---------------------------------------------------------------------------

std::string Arms::name() const {
  std::string out;
  const auto add = [&out](bool on, const char* n) {
    if (!on) return;
    if (!out.empty()) out += '+';
    out += n;
  };
  add(temporal_gat, "temporal_gat");
  add(feature_gat, "feature_gat");
  add(stl, "stl");
  add(window, "window");
  return out.empty() ? "none" : out;
}

Arms Arms::parse(std::string_view s) {
  Arms a{false, false, false, false};
  if (io::trim(s) == "none" || io::trim(s).empty()) return a;
  for (auto part : io::split(s, '+')) {
    part = io::trim(part);
    if (part == "temporal_gat") a.temporal_gat = true;
    else if (part == "feature_gat") a.feature_gat = true;
    else if (part == "stl") a.stl = true;
    else if (part == "window") a.window = true;
    else throw InvalidArgument("unknown ablation toggle '" + std::string(part) + "'");
  }
  return a;
}

std::vector<Arms> default_arms() {
  return {
      {true, true, true, true},    {false, true, true, true},   {true, false, true, true},
      {false, false, true, true},  {false, false, false, true}, {false, false, false, false},
  };
}

PipelineConfig arm_config(const PipelineConfig& base, const Arms& arms) {
  auto cfg = base;
  cfg.use_stl = arms.stl;
  cfg.window = arms.window ? base.window : 1;
  cfg.model.feature_gat = arms.feature_gat;
  cfg.model.temporal_gat = arms.temporal_gat;
  return cfg;
}

std::vector<AblationRow> ablate(const features::FeatureSeries& series, std::span<const Arms> arms,
                                const PipelineConfig& cfg, std::size_t jobs) {
  std::vector<AblationRow> rows(arms.size());
  training::parallel_for(arms.size(), jobs, [&](std::size_t i) {
    auto c = arm_config(cfg, arms[i]);
    if (jobs > 1) c.train.jobs = 1;
    const auto r = run_pipeline(std::span(&series, 1), c);
    rows[i] = {arms[i], r.data.channels.size(), c.window, scores_of(r)};
  });
  return rows;
}

std::string format_ablation_csv(std::span<const AblationRow> rows) {
  std::string out = "arms,temporal_gat,feature_gat,stl,window,channels,window_length,accuracy,precision,recall,f1\n";
  for (const auto& r : rows)
    out += r.arms.name() + "," + std::to_string(r.arms.temporal_gat) + "," + std::to_string(r.arms.feature_gat) + "," +
           std::to_string(r.arms.stl) + "," + std::to_string(r.arms.window) + "," + std::to_string(r.channels) + "," +
           std::to_string(r.window) + "," + io::format_double(r.scores.accuracy) + "," +
           io::format_double(r.scores.precision) + "," + io::format_double(r.scores.recall) + "," +
           io::format_double(r.scores.f1) + "\n";
  return out;
}

// ---------------------------------------------------------------------------

std::vector<std::size_t> default_sweep_windows() { return {1, 5, 10, 15, 20, 25, 30}; }
std::vector<std::size_t> default_sweep_periods() { return {15, 25, 35, 45, 55}; }

std::vector<SweepCell> sweep(const features::FeatureSeries& series, std::span<const std::size_t> windows,
                             std::span<const std::size_t> periods, const PipelineConfig& cfg, std::size_t jobs) {
  if (windows.empty() || periods.empty()) throw InvalidArgument("sweep grid is empty");
  const std::size_t max_period = *std::max_element(periods.begin(), periods.end());
  if (cfg.use_stl && series.size() < 2 * max_period)
    throw InvalidArgument("sweep: series of " + std::to_string(series.size()) + " rows is shorter than twice period " +
                          std::to_string(max_period));
  std::vector<SweepCell> cells;
  for (auto w : windows)
    for (auto p : periods) cells.push_back({w, p, {}});
  training::parallel_for(cells.size(), jobs, [&](std::size_t i) {
    auto c = cfg;
    c.window = cells[i].window;
    c.stl.period = cells[i].period;
    if (jobs > 1) c.train.jobs = 1;
    cells[i].scores = scores_of(run_pipeline(std::span(&series, 1), c));
  });
  return cells;
}

std::string format_sweep_csv(std::span<const SweepCell> cells) {
  std::string out = "window,period,accuracy,f1\n";
  for (const auto& c : cells)
    out += std::to_string(c.window) + "," + std::to_string(c.period) + "," + io::format_double(c.scores.accuracy) + "," +
           io::format_double(c.scores.f1) + "\n";
  return out;
}

// ---------------------------------------------------------------------------

features::FeatureSeries cut_event(const features::FeatureSeries& s, const std::string& name, const EventWindowSpec& spec) {
  s.validate();
  if (s.size() < spec.samples)
    throw InvalidArgument("event '" + name + "': only " + std::to_string(s.size()) + " samples, need " +
                          std::to_string(spec.samples));
  const auto first = std::find_if(s.labels.begin(), s.labels.end(), [](int l) { return l != 0; });
  if (first == s.labels.end()) throw InvalidArgument("event '" + name + "': no anomalous samples");
  const auto pos = static_cast<std::size_t>(first - s.labels.begin());
  std::size_t begin = pos >= spec.before ? pos - spec.before : 0;
  begin = std::min(begin, s.size() - spec.samples);
  features::FeatureSeries out;
  out.start = s.start + static_cast<std::int64_t>(begin) * s.bin_width;
  out.bin_width = s.bin_width;
  out.columns = s.columns;
  out.values = Matrix(spec.samples, s.columns.size());
  for (std::size_t r = 0; r < spec.samples; ++r)
    std::copy(s.values.row(begin + r).begin(), s.values.row(begin + r).end(), out.values.row(r).begin());
  out.labels.assign(s.labels.begin() + static_cast<std::ptrdiff_t>(begin),
                    s.labels.begin() + static_cast<std::ptrdiff_t>(begin + spec.samples));
  return out;
}

features::FeatureSeries synthetic_event_set(const std::string& preset, std::uint64_t seed, const EventWindowSpec& spec) {
  if (spec.samples <= 2 * spec.before) throw InvalidArgument("event window leaves no room for the anomaly");
  const auto& p = synth::preset(preset);
  synth::SynthConfig c;
  c.n = spec.samples;
  c.events = {p.name};
  c.spans = {{spec.before, spec.samples - spec.before}};
  c.seed = derive_seed(seed, static_cast<std::uint64_t>(p.id));
  c.baseline_seed = seed;
  return synth::synth_events(c);
}

std::vector<features::FeatureSeries> synthetic_event_sets(std::uint64_t seed, const EventWindowSpec& spec) {
  std::vector<features::FeatureSeries> out;
  for (const auto& p : synth::presets()) out.push_back(synthetic_event_set(p.name, seed, spec));
  return out;
}

namespace {

std::vector<features::FeatureSeries> cut_and_relabel(std::span<const features::FeatureSeries> events,
                                                     std::span<const std::string> names, const EventWindowSpec& spec) {
  if (names.size() != events.size()) throw InvalidArgument("need one name per event series");
  std::vector<features::FeatureSeries> out;
  for (std::size_t i = 0; i < events.size(); ++i) {
    auto s = cut_event(events[i], names[i], spec);
    for (auto& l : s.labels)
      if (l != 0) l = static_cast<int>(i) + 1;
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace

MulticlassResult multiclass_run(std::span<const features::FeatureSeries> events, std::span<const std::string> names,
                                const PipelineConfig& cfg, const EventWindowSpec& spec,
                                const training::EpochCallback& on_epoch) {
  const auto sets = cut_and_relabel(events, names, spec);
  auto c = cfg;
  c.task = training::Task::multiclass;
  MulticlassResult r;
  r.run = run_pipeline(sets, c, on_epoch);
  r.binary_view = r.run.report;
  r.binary_view.confusion = r.run.report.confusion.collapse();
  r.binary_view.scores = metrics::scores(r.binary_view.confusion);
  return r;
}

HoldoutResult holdout_event_run(std::span<const features::FeatureSeries> events, std::span<const std::string> names,
                                std::size_t held_out, const PipelineConfig& cfg, const EventWindowSpec& spec,
                                const training::EpochCallback& on_epoch) {
  if (held_out >= events.size()) throw InvalidArgument("held-out index out of range");
  if (events.size() < 2) throw InvalidArgument("holdout needs at least two events");
  const auto sets = cut_and_relabel(events, names, spec);
  std::vector<features::FeatureSeries> pool;
  for (std::size_t i = 0; i < sets.size(); ++i)
    if (i != held_out) pool.push_back(sets[i]);

  auto c = cfg;
  c.task = training::Task::binary;
  const auto run = run_pipeline(pool, c, on_epoch);

  auto unseen = raw_windows(channels_of(sets[held_out], c), c, static_cast<int>(held_out));
  augment::normalize_windows(unseen, run.data.stats);

  HoldoutResult r;
  r.held_out = names[held_out];
  r.seen = run.report;
  r.unseen = training::evaluate(run.trained.params, unseen, c.task, c.train.jobs);
  r.unseen.config_hash = r.seen.config_hash;
  r.unseen.seed = c.seed;
  r.trained = run.trained;
  return r;
}

// ---------------------------------------------------------------------------

AttentionAverages average_attention(const model::MGatParams& params, std::span<const augment::WindowSample> windows) {
  const auto& cfg = params.config;
  AttentionAverages avg;
  if (windows.empty()) throw InvalidArgument("no windows to average attention over");
  if (cfg.feature_gat) avg.feature = Matrix(cfg.channels, cfg.channels);
  if (cfg.temporal_gat) avg.temporal = Matrix(cfg.window, cfg.window);
  const auto accumulate = [](Matrix& dst, const tensor::Tensor& src) {
    auto& d = dst.data();
    for (std::size_t i = 0; i < d.size(); ++i) d[i] += src[i];
  };
  for (const auto& w : windows) {
    tensor::Tape tape;
    auto bp = model::bind(tape, params, nullptr);
    auto out = model::model_forward(tape, bp, cfg, w.values, model::Mode::eval, nullptr);
    if (cfg.feature_gat) accumulate(avg.feature, out.feature_attention.value());
    if (cfg.temporal_gat) accumulate(avg.temporal, out.temporal_attention.value());
  }
  const double inv = 1.0 / static_cast<double>(windows.size());
  for (auto* m : {&avg.feature, &avg.temporal})
    for (auto& v : m->data()) v *= inv;
  return avg;
}

std::vector<Edge> edges_above(const Matrix& alpha, double threshold) {
  std::vector<Edge> out;
  for (std::size_t r = 0; r < alpha.rows(); ++r)
    for (std::size_t c = 0; c < alpha.cols(); ++c)
      if (alpha(r, c) > threshold) out.push_back({r, c, alpha(r, c)});
  return out;
}

std::string format_edges_csv(std::span<const Edge> edges, std::span<const std::string> names) {
  std::string out = "src,dst,weight\n";
  for (const auto& e : edges) {
    if (e.src >= names.size() || e.dst >= names.size()) throw InvalidArgument("edge refers to an unnamed node");
    out += names[e.src] + "," + names[e.dst] + "," + io::format_double(e.weight) + "\n";
  }
  return out;
}

}  // namespace bgpad::experiments
