// SPDX-License-Identifier: Apache-2.0
#include "bgpad.h"

#include <cstdlib>
#include <cstring>
#include <memory>
#include <new>
#include <string>

#include "augment.hpp"
#include "bgp_ingest.hpp"
#include "checkpoint.hpp"
#include "error.hpp"
#include "experiments.hpp"
#include "features.hpp"
#include "io.hpp"
#include "synth.hpp"

using namespace bgpad;

struct bgpad_records {
  std::vector<ingest::UpdateRecord> records;
  ingest::IngestCounters counters;
};

struct bgpad_series {
  features::FeatureSeries series;
};

struct bgpad_config {
  experiments::PipelineConfig cfg;
  bgpad_epoch_callback progress = nullptr;
  void* progress_user = nullptr;
};

struct bgpad_model {
  checkpoint::Checkpoint ck;
  std::vector<training::EpochLog> log;
};

struct bgpad_report {
  metrics::EvalReport report;
};

namespace {

thread_local std::string last_error;

template <class F>
bgpad_status guarded(F&& f) {
  try {
    f();
    last_error.clear();
    return BGPAD_OK;
  } catch (const ParseError& e) {
    last_error = e.what();
    return BGPAD_ERR_PARSE;
  } catch (const IoError& e) {
    last_error = e.what();
    return BGPAD_ERR_IO;
  } catch (const ShapeError& e) {
    last_error = e.what();
    return BGPAD_ERR_SHAPE;
  } catch (const NumericError& e) {
    last_error = e.what();
    return BGPAD_ERR_NUMERIC;
  } catch (const InvalidArgument& e) {
    last_error = e.what();
    return BGPAD_ERR_INVALID_ARGUMENT;
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
    return BGPAD_ERR_INTERNAL;
  } catch (const std::exception& e) {
    last_error = e.what();
    return BGPAD_ERR_INTERNAL;
  }
}

void require(const void* p, const char* what) {
  if (!p) throw InvalidArgument(std::string(what) + " is NULL");
}

char* dup(const std::string& s) {
  auto* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

std::size_t parse_size(std::string_view key, std::string_view v) {
  auto n = io::parse_int(io::trim(v));
  if (!n || *n < 0) throw InvalidArgument("config '" + std::string(key) + "': expected a non-negative integer, got '" + std::string(v) + "'");
  return static_cast<std::size_t>(*n);
}

double parse_real(std::string_view key, std::string_view v) {
  auto d = io::parse_double(io::trim(v));
  if (!d) throw InvalidArgument("config '" + std::string(key) + "': expected a number, got '" + std::string(v) + "'");
  return *d;
}

bool parse_bool(std::string_view key, std::string_view v) {
  v = io::trim(v);
  if (v == "1" || v == "true" || v == "on" || v == "yes") return true;
  if (v == "0" || v == "false" || v == "off" || v == "no") return false;
  throw InvalidArgument("config '" + std::string(key) + "': expected a boolean, got '" + std::string(v) + "'");
}

std::vector<double> parse_reals(std::string_view key, std::string_view v) {
  std::vector<double> out;
  for (auto part : io::split(v, ',')) out.push_back(parse_real(key, part));
  return out;
}

std::vector<std::size_t> parse_sizes(std::string_view key, std::string_view v) {
  std::vector<std::size_t> out;
  for (auto part : io::split(v, ',')) out.push_back(parse_size(key, part));
  return out;
}

void set_key(experiments::PipelineConfig& c, std::string_view key, std::string_view v) {
  if (key == "seed") {
    auto n = io::parse_int(io::trim(v));
    if (!n) throw InvalidArgument("config 'seed': expected an integer");
    c.seed = static_cast<std::uint64_t>(*n);
  } else if (key == "stl") c.use_stl = parse_bool(key, v);
  else if (key == "period") c.stl.period = parse_size(key, v);
  else if (key == "seasonal_span") c.stl.seasonal_span = parse_size(key, v);
  else if (key == "trend_span") c.stl.trend_span = parse_size(key, v);
  else if (key == "lowpass_span") c.stl.lowpass_span = parse_size(key, v);
  else if (key == "inner") c.stl.inner_iterations = parse_size(key, v);
  else if (key == "outer") c.stl.outer_iterations = parse_size(key, v);
  else if (key == "window") c.window = parse_size(key, v);
  else if (key == "hidden") c.model.hidden = parse_size(key, v);
  else if (key == "activation") c.model.activation = model::parse_activation(io::trim(v));
  else if (key == "leaky_mode") c.model.leaky_mode = model::parse_leaky_mode(io::trim(v));
  else if (key == "leaky_slope") c.model.leaky_slope = parse_real(key, v);
  else if (key == "fusion") {
    auto w = parse_reals(key, v);
    if (w.size() != 3) throw InvalidArgument("config 'fusion': expected three weights");
    c.model.fusion_weights = {w[0], w[1], w[2]};
  } else if (key == "feature_gat") c.model.feature_gat = parse_bool(key, v);
  else if (key == "temporal_gat") c.model.temporal_gat = parse_bool(key, v);
  else if (key == "lr") c.train.lr = parse_real(key, v);
  else if (key == "dropout") c.train.dropout = parse_real(key, v);
  else if (key == "epochs") c.train.max_epochs = parse_size(key, v);
  else if (key == "optimizer") {
    v = io::trim(v);
    if (v == "adam") c.train.optimizer = training::Optimizer::adam;
    else if (v == "sgd") c.train.optimizer = training::Optimizer::sgd;
    else throw InvalidArgument("config 'optimizer': expected adam or sgd");
  } else if (key == "batch") c.train.batch_size = parse_size(key, v);
  else if (key == "patience") c.train.patience = parse_size(key, v);
  else if (key == "class_weights") c.train.class_weights = io::trim(v).empty() ? std::vector<double>{} : parse_reals(key, v);
  else if (key == "split") {
    auto r = parse_reals(key, v);
    if (r.size() != 3) throw InvalidArgument("config 'split': expected three ratios");
    c.split.ratios = {r[0], r[1], r[2]};
  } else if (key == "stratified") c.split.stratified = parse_bool(key, v);
  else if (key == "chronological") c.split.chronological = parse_bool(key, v);
  else if (key == "jobs") c.train.jobs = std::max<std::size_t>(1, parse_size(key, v));
  else throw InvalidArgument("unknown config key '" + std::string(key) + "'");
}

training::EpochCallback callback_of(const bgpad_config* c) {
  if (!c->progress) return {};
  return [cb = c->progress, user = c->progress_user](const training::EpochLog& e) {
    cb(e.epoch, e.train_loss, e.val_f1, user);
  };
}

std::vector<augment::WindowSample> model_windows(const checkpoint::Checkpoint& ck, const features::FeatureSeries& raw) {
  raw.validate();
  const auto expanded = ck.use_stl ? augment::augment_series(raw, ck.stl) : raw;
  if (!ck.channels.empty() && expanded.columns != ck.channels)
    throw ShapeError("series channels do not match the channels the model was trained on");
  auto windows = augment::slice_raw(expanded.values, expanded.labels, ck.params.config.window);
  augment::normalize_windows(windows, ck.normalizer);
  return windows;
}

training::Task task_of(const model::MGatParams& p) {
  return p.config.classes == 2 ? training::Task::binary : training::Task::multiclass;
}

std::vector<features::FeatureSeries> gather(const bgpad_series* const* events, std::size_t count) {
  require(events, "events");
  std::vector<features::FeatureSeries> out;
  for (std::size_t i = 0; i < count; ++i) {
    require(events[i], "event series");
    out.push_back(events[i]->series);
  }
  return out;
}

std::vector<std::string> gather_names(const char* const* names, std::size_t count) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < count; ++i) out.push_back(names && names[i] ? names[i] : "event" + std::to_string(i + 1));
  return out;
}

experiments::EventWindowSpec spec_of(std::size_t samples, std::size_t before) {
  experiments::EventWindowSpec s;
  if (samples) s.samples = samples;
  if (before) s.before = before;
  return s;
}

}  // namespace

extern "C" {

const char* bgpad_last_error(void) { return last_error.c_str(); }

const char* bgpad_status_name(bgpad_status s) {
  switch (s) {
    case BGPAD_OK: return "ok";
    case BGPAD_ERR_INVALID_ARGUMENT: return "invalid argument";
    case BGPAD_ERR_PARSE: return "parse error";
    case BGPAD_ERR_IO: return "i/o error";
    case BGPAD_ERR_SHAPE: return "shape error";
    case BGPAD_ERR_NUMERIC: return "numeric error";
    case BGPAD_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* bgpad_version(void) { return "1.0.0"; }

void bgpad_string_free(char* s) { std::free(s); }

bgpad_status bgpad_write_file(const char* path, const char* data, size_t size) {
  return guarded([&] {
    require(path, "path");
    if (size) require(data, "data");
    io::write_atomic(path, std::string_view(data ? data : "", size));
  });
}

// ---------------------------------------------------------------------------

bgpad_status bgpad_ingest(const char* const* paths, size_t path_count, const bgpad_ingest_options* options,
                          bgpad_records** out) {
  return guarded([&] {
    require(out, "out");
    *out = nullptr;
    if (path_count == 0) throw InvalidArgument("no input files");
    require(paths, "paths");
    ingest::IngestConfig cfg;
    if (options) {
      if (options->peer_as_count) {
        require(options->peer_as, "peer_as");
        cfg.peer_as.assign(options->peer_as, options->peer_as + options->peer_as_count);
      }
      cfg.start = options->start;
      if (options->end != 0) cfg.end = options->end;
      switch (options->family) {
        case 0: cfg.family = ingest::AddressFamily::any; break;
        case 4: cfg.family = ingest::AddressFamily::ipv4; break;
        case 6: cfg.family = ingest::AddressFamily::ipv6; break;
        default: throw InvalidArgument("family must be 0, 4 or 6");
      }
    }
    cfg.validate();
    auto r = std::make_unique<bgpad_records>();
    std::vector<std::vector<ingest::UpdateRecord>> streams;
    for (std::size_t i = 0; i < path_count; ++i) {
      require(paths[i], "path");
      auto res = ingest::load_file(paths[i], cfg);
      const auto& c = res.counters;
      r->counters.total += c.total;
      r->counters.emitted += c.emitted;
      r->counters.skipped_non_update += c.skipped_non_update;
      r->counters.skipped_unknown_type += c.skipped_unknown_type;
      r->counters.skipped_filtered += c.skipped_filtered;
      r->counters.dropped_malformed += c.dropped_malformed;
      streams.push_back(std::move(res.records));
    }
    r->records = ingest::merge_streams(streams);
    *out = r.release();
  });
}

void bgpad_records_free(bgpad_records* r) { delete r; }

size_t bgpad_records_count(const bgpad_records* r) { return r ? r->records.size() : 0; }

bgpad_status bgpad_records_counters(const bgpad_records* r, bgpad_ingest_counters* out) {
  return guarded([&] {
    require(r, "records");
    require(out, "out");
    const auto& c = r->counters;
    *out = {c.total, c.emitted, c.skipped_non_update, c.skipped_unknown_type, c.skipped_filtered, c.dropped_malformed};
  });
}

bgpad_status bgpad_records_write_text(const bgpad_records* r, const char* path) {
  return guarded([&] {
    require(r, "records");
    require(path, "path");
    io::write_atomic(path, ingest::format_text_log(r->records));
  });
}

// ---------------------------------------------------------------------------

bgpad_status bgpad_featurize(const bgpad_records* r, const char* labels_json, const bgpad_feature_options* options,
                             bgpad_series** out) {
  return guarded([&] {
    require(r, "records");
    require(out, "out");
    *out = nullptr;
    features::FeatureConfig cfg;
    if (options) {
      if (options->rare_threshold) cfg.rare_threshold = options->rare_threshold;
      if (options->flap_definition == 1) cfg.flap = features::FlapDefinition::withdraw_reannounce;
      else if (options->flap_definition != 0) throw InvalidArgument("flap_definition must be 0 or 1");
      cfg.prefix_cap = options->prefix_cap;
    }
    const auto labels = labels_json ? features::EventLabelSpec::from_json(labels_json) : features::EventLabelSpec{};
    *out = new bgpad_series{features::bin_updates(r->records, labels, cfg)};
  });
}

bgpad_status bgpad_series_read_csv(const char* path, bgpad_series** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = nullptr;
    *out = new bgpad_series{features::read_series_csv(path)};
  });
}

bgpad_status bgpad_series_write_csv(const bgpad_series* s, const char* path) {
  return guarded([&] {
    require(s, "series");
    require(path, "path");
    features::write_series_csv(s->series, path);
  });
}

void bgpad_series_free(bgpad_series* s) { delete s; }
size_t bgpad_series_rows(const bgpad_series* s) { return s ? s->series.size() : 0; }
size_t bgpad_series_cols(const bgpad_series* s) { return s ? s->series.columns.size() : 0; }

bgpad_status bgpad_series_value(const bgpad_series* s, size_t row, size_t col, double* out) {
  return guarded([&] {
    require(s, "series");
    require(out, "out");
    if (row >= s->series.size() || col >= s->series.columns.size()) throw InvalidArgument("cell index out of range");
    *out = s->series.values(row, col);
  });
}

bgpad_status bgpad_series_label(const bgpad_series* s, size_t row, int* out) {
  return guarded([&] {
    require(s, "series");
    require(out, "out");
    if (row >= s->series.size()) throw InvalidArgument("row index out of range");
    *out = s->series.labels[row];
  });
}

bgpad_status bgpad_series_column_name(const bgpad_series* s, size_t col, char** out) {
  return guarded([&] {
    require(s, "series");
    require(out, "out");
    if (col >= s->series.columns.size()) throw InvalidArgument("column index out of range");
    *out = dup(s->series.columns[col]);
  });
}

bgpad_status bgpad_synth(const char* events, size_t n, double anomaly_fraction, double strength, uint64_t seed,
                         bgpad_series** out) {
  return guarded([&] {
    require(events, "events");
    require(out, "out");
    *out = nullptr;
    synth::SynthConfig c;
    c.events.clear();
    for (auto e : io::split(events, ',')) c.events.emplace_back(io::trim(e));
    c.n = n;
    c.anomaly_fraction = anomaly_fraction;
    c.strength = strength;
    c.seed = seed;
    *out = new bgpad_series{synth::synth_events(c)};
  });
}

bgpad_status bgpad_synth_event_set(const char* preset, size_t samples, size_t before, uint64_t seed, bgpad_series** out) {
  return guarded([&] {
    require(preset, "preset");
    require(out, "out");
    *out = nullptr;
    *out = new bgpad_series{experiments::synthetic_event_set(preset, seed, spec_of(samples, before))};
  });
}

// ---------------------------------------------------------------------------

bgpad_status bgpad_config_new(bgpad_config** out) {
  return guarded([&] {
    require(out, "out");
    *out = new bgpad_config();
  });
}

void bgpad_config_free(bgpad_config* c) { delete c; }

bgpad_status bgpad_config_set(bgpad_config* c, const char* key, const char* value) {
  return guarded([&] {
    require(c, "config");
    require(key, "key");
    require(value, "value");
    set_key(c->cfg, key, value);
  });
}

bgpad_status bgpad_config_json(const bgpad_config* c, char** out) {
  return guarded([&] {
    require(c, "config");
    require(out, "out");
    *out = dup(c->cfg.to_json());
  });
}

bgpad_status bgpad_config_hash(const bgpad_config* c, char** out) {
  return guarded([&] {
    require(c, "config");
    require(out, "out");
    *out = dup(c->cfg.config_hash());
  });
}

void bgpad_config_set_progress(bgpad_config* c, bgpad_epoch_callback cb, void* user) {
  if (!c) return;
  c->progress = cb;
  c->progress_user = user;
}

// ---------------------------------------------------------------------------

bgpad_status bgpad_augment(const bgpad_series* s, const bgpad_config* c, bgpad_series** out) {
  return guarded([&] {
    require(s, "series");
    require(c, "config");
    require(out, "out");
    *out = nullptr;
    *out = new bgpad_series{augment::augment_series(s->series, c->cfg.stl)};
  });
}

bgpad_status bgpad_windows_csv(const bgpad_series* s, const bgpad_config* c, char** out) {
  return guarded([&] {
    require(s, "series");
    require(c, "config");
    require(out, "out");
    s->series.validate();
    const auto set = augment::slice_windows(s->series.values, s->series.labels, c->cfg.window);
    *out = dup(augment::format_windows_csv(set.windows, s->series.columns));
  });
}

bgpad_status bgpad_train(const bgpad_series* raw, const bgpad_config* c, bgpad_model** model, bgpad_report** report) {
  return guarded([&] {
    require(raw, "series");
    require(c, "config");
    require(model, "model");
    *model = nullptr;
    if (report) *report = nullptr;
    auto run = experiments::run_pipeline(std::span(&raw->series, 1), c->cfg, callback_of(c));
    auto m = std::make_unique<bgpad_model>();
    m->ck.params = std::move(run.trained.params);
    m->ck.normalizer = run.data.stats;
    m->ck.channels = run.data.channels;
    m->ck.use_stl = c->cfg.use_stl;
    m->ck.stl = c->cfg.stl;
    m->ck.seed = c->cfg.seed;
    m->log = std::move(run.trained.log);
    if (report) *report = new bgpad_report{std::move(run.report)};
    *model = m.release();
  });
}

bgpad_status bgpad_evaluate(const bgpad_model* m, const bgpad_series* raw, bgpad_report** out) {
  return guarded([&] {
    require(m, "model");
    require(raw, "series");
    require(out, "out");
    *out = nullptr;
    const auto windows = model_windows(m->ck, raw->series);
    auto report = training::evaluate(m->ck.params, windows, task_of(m->ck.params));
    report.config_hash = m->ck.config_hash();
    report.seed = m->ck.seed;
    *out = new bgpad_report{std::move(report)};
  });
}

bgpad_status bgpad_model_save(const bgpad_model* m, const char* path) {
  return guarded([&] {
    require(m, "model");
    require(path, "path");
    checkpoint::save(m->ck, path);
  });
}

bgpad_status bgpad_model_load(const char* path, bgpad_model** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = nullptr;
    *out = new bgpad_model{checkpoint::load(path), {}};
  });
}

void bgpad_model_free(bgpad_model* m) { delete m; }

bgpad_status bgpad_model_log_csv(const bgpad_model* m, char** out) {
  return guarded([&] {
    require(m, "model");
    require(out, "out");
    *out = dup(training::format_log_csv(m->log));
  });
}

bgpad_status bgpad_model_json(const bgpad_model* m, char** out) {
  return guarded([&] {
    require(m, "model");
    require(out, "out");
    *out = dup(checkpoint::to_json(m->ck));
  });
}

int bgpad_model_equal(const bgpad_model* a, const bgpad_model* b) {
  if (!a || !b) return 0;
  return a->ck.params == b->ck.params && a->ck.normalizer == b->ck.normalizer && a->ck.channels == b->ck.channels &&
         a->ck.config_hash() == b->ck.config_hash();
}

void bgpad_report_free(bgpad_report* r) { delete r; }

bgpad_status bgpad_report_json(const bgpad_report* r, char** out) {
  return guarded([&] {
    require(r, "report");
    require(out, "out");
    *out = dup(r->report.to_json());
  });
}

bgpad_status bgpad_report_csv(const bgpad_report* r, char** out) {
  return guarded([&] {
    require(r, "report");
    require(out, "out");
    *out = dup(r->report.to_csv());
  });
}

bgpad_status bgpad_report_metric(const bgpad_report* r, const char* name, double* out) {
  return guarded([&] {
    require(r, "report");
    require(name, "name");
    require(out, "out");
    const std::string_view n = name;
    const auto& s = r->report.scores;
    if (n == "accuracy") *out = s.accuracy;
    else if (n == "precision") *out = s.precision;
    else if (n == "recall") *out = s.recall;
    else if (n == "f1") *out = s.f1;
    else throw InvalidArgument("unknown metric '" + std::string(n) + "'");
  });
}

int bgpad_report_equal(const bgpad_report* a, const bgpad_report* b) {
  if (!a || !b) return 0;
  return a->report == b->report;
}

// ---------------------------------------------------------------------------

bgpad_status bgpad_ablate(const bgpad_series* raw, const bgpad_config* c, const char* arms, char** csv) {
  return guarded([&] {
    require(raw, "series");
    require(c, "config");
    require(csv, "csv");
    std::vector<experiments::Arms> list;
    if (arms) {
      for (auto part : io::split(arms, ';')) list.push_back(experiments::Arms::parse(part));
    } else {
      list = experiments::default_arms();
    }
    auto cfg = c->cfg;
    const std::size_t jobs = cfg.train.jobs;
    const auto rows = experiments::ablate(raw->series, list, cfg, jobs);
    *csv = dup(experiments::format_ablation_csv(rows));
  });
}

bgpad_status bgpad_sweep(const bgpad_series* raw, const bgpad_config* c, const char* windows, const char* periods,
                         char** csv) {
  return guarded([&] {
    require(raw, "series");
    require(c, "config");
    require(csv, "csv");
    const auto ws = windows ? parse_sizes("windows", windows) : experiments::default_sweep_windows();
    const auto ps = periods ? parse_sizes("periods", periods) : experiments::default_sweep_periods();
    const auto cells = experiments::sweep(raw->series, ws, ps, c->cfg, c->cfg.train.jobs);
    *csv = dup(experiments::format_sweep_csv(cells));
  });
}

bgpad_status bgpad_multiclass(const bgpad_series* const* events, const char* const* names, size_t count, size_t samples,
                              size_t before, const bgpad_config* c, bgpad_report** report, bgpad_report** binary_view) {
  return guarded([&] {
    require(c, "config");
    require(report, "report");
    *report = nullptr;
    if (binary_view) *binary_view = nullptr;
    const auto sets = gather(events, count);
    const auto labels = gather_names(names, count);
    auto r = experiments::multiclass_run(sets, labels, c->cfg, spec_of(samples, before), callback_of(c));
    if (binary_view) *binary_view = new bgpad_report{std::move(r.binary_view)};
    *report = new bgpad_report{std::move(r.run.report)};
  });
}

bgpad_status bgpad_holdout(const bgpad_series* const* events, const char* const* names, size_t count, size_t held_out,
                           size_t samples, size_t before, const bgpad_config* c, bgpad_report** unseen,
                           bgpad_report** seen) {
  return guarded([&] {
    require(c, "config");
    require(unseen, "unseen");
    *unseen = nullptr;
    if (seen) *seen = nullptr;
    const auto sets = gather(events, count);
    const auto labels = gather_names(names, count);
    auto r = experiments::holdout_event_run(sets, labels, held_out, c->cfg, spec_of(samples, before), callback_of(c));
    if (seen) *seen = new bgpad_report{std::move(r.seen)};
    *unseen = new bgpad_report{std::move(r.unseen)};
  });
}

bgpad_status bgpad_attention(const bgpad_model* m, const bgpad_series* raw, double feature_threshold,
                             double temporal_threshold, char** feature_csv, char** temporal_csv) {
  return guarded([&] {
    require(m, "model");
    require(raw, "series");
    require(feature_csv, "feature_csv");
    require(temporal_csv, "temporal_csv");
    *feature_csv = nullptr;
    *temporal_csv = nullptr;
    const auto windows = model_windows(m->ck, raw->series);
    const auto avg = experiments::average_attention(m->ck.params, windows);
    auto names = m->ck.channels;
    if (names.empty())
      for (std::size_t i = 0; i < m->ck.params.config.channels; ++i) names.push_back("c" + std::to_string(i));
    std::vector<std::string> steps;
    for (std::size_t i = 0; i < m->ck.params.config.window; ++i) steps.push_back("t" + std::to_string(i));
    const auto fcsv = experiments::format_edges_csv(experiments::edges_above(avg.feature, feature_threshold), names);
    const auto tcsv = experiments::format_edges_csv(experiments::edges_above(avg.temporal, temporal_threshold), steps);
    char* f = dup(fcsv);
    try {
      *temporal_csv = dup(tcsv);
    } catch (...) {
      std::free(f);
      throw;
    }
    *feature_csv = f;
  });
}

}  // extern "C"
