// SPDX-License-Identifier: Apache-2.0
// Command-line front end over the bgpad C API.

#include <bgpad.h>

#include <CLI11.hpp>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

namespace {

using nlohmann::ordered_json;

struct StageError {
  std::string stage;
  std::string message;
};

void check(bgpad_status s, const std::string& stage) {
  if (s != BGPAD_OK) throw StageError{stage, std::string(bgpad_status_name(s)) + ": " + bgpad_last_error()};
}

template <class T, void (*Free)(T*)>
struct Handle {
  T* p = nullptr;
  Handle() = default;
  Handle(const Handle&) = delete;
  Handle& operator=(const Handle&) = delete;
  Handle(Handle&& o) noexcept : p(o.p) { o.p = nullptr; }
  ~Handle() { Free(p); }
  T** out() { return &p; }
  T* get() const { return p; }
};

using Series = Handle<bgpad_series, bgpad_series_free>;
using Model = Handle<bgpad_model, bgpad_model_free>;
using Report = Handle<bgpad_report, bgpad_report_free>;
using Records = Handle<bgpad_records, bgpad_records_free>;
using Config = Handle<bgpad_config, bgpad_config_free>;

std::string take(char* s) {
  std::string out = s ? s : "";
  bgpad_string_free(s);
  return out;
}

void write_file(const std::string& path, const std::string& data, const std::string& stage) {
  check(bgpad_write_file(path.c_str(), data.data(), data.size()), stage);
}

std::string fnv1a_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return "";
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char buf[1 << 16];
  while (in.read(buf, sizeof buf) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ULL;
    }
  }
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(h));
  return hex;
}

// --- run manifest ---------------------------------------------------------

class Manifest {
 public:
  Manifest(const CLI::App* sub) : sub_(sub) {}

  void input(const std::string& path) { inputs_.push_back(path); }
  void output(const std::string& path) { outputs_.push_back(path); }
  void config(const bgpad_config* c) {
    char* s = nullptr;
    check(bgpad_config_json(c, &s), "manifest");
    config_ = ordered_json::parse(take(s));
    check(bgpad_config_hash(c, &s), "manifest");
    hash_ = take(s);
  }
  void note(const std::string& key, ordered_json value) { extra_[key] = std::move(value); }

  /// One `<artifact>.manifest.json` per output.
  void write() const {
    ordered_json options = ordered_json::object();
    for (const CLI::Option* o : sub_->get_options()) {
      if (o->get_lnames().empty() || o->get_lnames()[0] == "help") continue;
      const auto& name = o->get_lnames()[0];
      if (o->count() > 0) {
        const auto& r = o->results();
        options[name] = r.size() == 1 ? ordered_json(r[0]) : ordered_json(r);
      } else {
        options[name] = o->get_default_str();
      }
    }
    ordered_json ins = ordered_json::array();
    for (const auto& p : inputs_) ins.push_back({{"path", p}, {"fnv1a", fnv1a_file(p)}});
    ordered_json doc{{"tool", "bgpad"},
                     {"version", bgpad_version()},
                     {"subcommand", sub_->get_name()},
                     {"options", options},
                     {"inputs", ins},
                     {"outputs", outputs_}};
    if (!config_.is_null()) {
      doc["config"] = config_;
      doc["config_hash"] = hash_;
    }
    for (const auto& [k, v] : extra_.items()) doc[k] = v;
    const auto text = doc.dump(2) + "\n";
    for (const auto& out : outputs_) write_file(out + ".manifest.json", text, "manifest");
  }

 private:
  const CLI::App* sub_;
  std::vector<std::string> inputs_;
  std::vector<std::string> outputs_;
  ordered_json config_;
  std::string hash_;
  ordered_json extra_ = ordered_json::object();
};

// --- shared option groups -------------------------------------------------

/// Pipeline settings; only values given on the command line are forwarded,
/// everything else keeps the library default (echoed in the manifest).
struct ConfigOptions {
  std::map<std::string, std::string> values;
  std::uint64_t seed = 0;

  void add(CLI::App* sub, bool training) {
    sub->add_option("--seed", seed, "Seed for splitting, initialization and dropout")->capture_default_str();
    const auto opt = [&](const char* flag, const char* key, const char* help) {
      sub->add_option_function<std::string>(flag, [this, key](const std::string& v) { values[key] = v; }, help);
    };
    opt("--period", "period", "STL period (default 35)");
    opt("--stl", "stl", "STL augmentation on|off (default on)");
    opt("--seasonal-span", "seasonal_span", "STL seasonal smoother span (default 7)");
    opt("--trend-span", "trend_span", "STL trend span (default derived from the period)");
    opt("--lowpass-span", "lowpass_span", "STL low-pass span (default derived from the period)");
    opt("--inner", "inner", "STL inner iterations (default 2)");
    opt("--outer", "outer", "STL outer iterations (default 1)");
    opt(training ? "--window" : "--window,--size", "window", "Window length m (default 25)");
    if (!training) return;
    opt("--hidden", "hidden", "LSTM hidden size (default 64)");
    opt("--activation", "activation", "GAT output activation tanh|elu|relu (default tanh)");
    opt("--leaky-mode", "leaky_mode", "Attention LeakyReLU slope|clamp (default slope)");
    opt("--fusion", "fusion", "Fusion weights w0,w1,w2 (default 0.5,1,0.5)");
    opt("--feature-gat", "feature_gat", "Feature-view GAT on|off (default on)");
    opt("--temporal-gat", "temporal_gat", "Temporal-view GAT on|off (default on)");
    opt("--lr", "lr", "Learning rate (default 1e-4)");
    opt("--dropout", "dropout", "Dropout rate (default 0.2)");
    opt("--epochs", "epochs", "Maximum epochs (default 100)");
    opt("--optimizer", "optimizer", "adam|sgd (default adam)");
    opt("--batch", "batch", "Minibatch size (default 32)");
    opt("--patience", "patience", "Early-stop patience on validation F1, 0 disables (default 10)");
    opt("--class-weights", "class_weights", "Comma-separated class weights (default inverse frequency)");
    opt("--split", "split", "Train,val,test ratios (default 6,1,3)");
    opt("--stratified", "stratified", "Per-class split on|off (default on)");
    opt("--chronological", "chronological", "Contiguous split in time order on|off (default off)");
    opt("--jobs", "jobs", "Worker threads (default 1)");
  }

  Config build(bool verbose) const {
    Config c;
    check(bgpad_config_new(c.out()), "config");
    check(bgpad_config_set(c.get(), "seed", std::to_string(seed).c_str()), "config");
    for (const auto& [k, v] : values) check(bgpad_config_set(c.get(), k.c_str(), v.c_str()), "config");
    if (verbose)
      bgpad_config_set_progress(
          c.get(),
          [](size_t epoch, double loss, double f1, void*) {
            std::fprintf(stderr, "epoch %zu  train_loss %.6f  val_f1 %.4f\n", epoch, loss, f1);
          },
          nullptr);
    return c;
  }
};

Series read_series(const std::string& path, const std::string& stage) {
  Series s;
  check(bgpad_series_read_csv(path.c_str(), s.out()), stage);
  return s;
}

std::string report_json(const bgpad_report* r) {
  char* s = nullptr;
  check(bgpad_report_json(r, &s), "report");
  return take(s);
}

double metric(const bgpad_report* r, const char* name) {
  double v = 0.0;
  check(bgpad_report_metric(r, name, &v), "report");
  return v;
}

const std::vector<std::string> kPresets = {"worm", "blackout", "leak", "flap", "origin", "rare"};

/// Event series from files, or the six synthetic presets when none are given.
std::pair<std::vector<Series>, std::vector<std::string>> load_events(const std::vector<std::string>& files,
                                                                    std::vector<std::string> names, std::uint64_t seed,
                                                                    std::size_t samples, std::size_t before,
                                                                    Manifest& manifest, const std::string& stage) {
  std::vector<Series> series;
  if (files.empty()) {
    for (const auto& p : kPresets) {
      Series s;
      check(bgpad_synth_event_set(p.c_str(), samples, before, seed, s.out()), stage);
      series.push_back(std::move(s));
    }
    if (names.empty()) names = kPresets;
    manifest.note("events", "synthetic presets");
  } else {
    for (const auto& f : files) {
      series.push_back(read_series(f, stage));
      manifest.input(f);
    }
    if (names.empty())
      for (const auto& f : files) names.push_back(std::filesystem::path(f).stem().string());
  }
  if (names.size() != series.size()) throw StageError{stage, "need one --names entry per event series"};
  return {std::move(series), names};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"BGP anomaly detection toolkit: MRT ingest, feature extraction, STL augmentation, M-GAT training"};
  app.require_subcommand(1);
  app.fallthrough();
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "Print per-epoch progress to stderr");

  // ingest
  auto* ingest = app.add_subcommand("ingest", "Parse MRT or text update logs into a merged text log");
  std::vector<std::string> ingest_in;
  std::string ingest_out;
  std::vector<std::uint32_t> peer_as;
  std::int64_t t_start = 0, t_end = 0;
  int family = 0;
  ingest->add_option("--in,--from", ingest_in, "Input files (MRT, gzip MRT, or text logs)")->required()->check(CLI::ExistingFile);
  ingest->add_option("--out", ingest_out, "Output text log")->required();
  const auto add_filters = [&](CLI::App* sub) {
    sub->add_option("--peer-as", peer_as, "Keep only these peer ASes");
    sub->add_option("--start", t_start, "First timestamp kept (inclusive)");
    sub->add_option("--end", t_end, "Timestamp bound (exclusive, 0 = none)");
    sub->add_option("--family", family, "0 any, 4 IPv4, 6 IPv6")->check(CLI::IsMember({0, 4, 6}));
  };
  add_filters(ingest);

  // featurize
  auto* featurize = app.add_subcommand("featurize", "Extract the 46 per-minute features from update logs");
  std::vector<std::string> feat_in;
  std::string feat_out, labels_path;
  std::uint32_t rare_threshold = 5;
  std::string flap = "duplicate";
  std::size_t prefix_cap = 0;
  featurize->add_option("--in", feat_in, "Input files (MRT, gzip MRT, or text logs)")->required()->check(CLI::ExistingFile);
  featurize->add_option("--out", feat_out, "Output feature CSV")->required();
  featurize->add_option("--labels", labels_path, "Event label JSON [{event,start,end}]")->check(CLI::ExistingFile);
  featurize->add_option("--rare-threshold", rare_threshold, "History count below which an AS is rare")->capture_default_str();
  featurize->add_option("--flap", flap, "Flap definition")->check(CLI::IsMember({"duplicate", "withdraw_reannounce"}))->capture_default_str();
  featurize->add_option("--prefix-cap", prefix_cap, "LRU bound on tracked prefixes (0 = unbounded)")->capture_default_str();
  add_filters(featurize);

  // augment
  auto* augment = app.add_subcommand("augment", "STL-expand a feature series to 5k channels");
  std::string aug_in, aug_out;
  ConfigOptions aug_cfg;
  augment->add_option("--in", aug_in, "Feature CSV")->required()->check(CLI::ExistingFile);
  augment->add_option("--out", aug_out, "Augmented CSV")->required();
  aug_cfg.add(augment, false);

  // window
  auto* window = app.add_subcommand("window", "Slice a series into normalized stride-1 windows");
  std::string win_in, win_out;
  ConfigOptions win_cfg;
  window->add_option("--in", win_in, "Series CSV")->required()->check(CLI::ExistingFile);
  window->add_option("--out", win_out, "Window CSV")->required();
  win_cfg.add(window, false);

  // train
  auto* train = app.add_subcommand("train", "Train M-GAT on a feature series and report on its test split");
  std::string train_in, train_model, train_log, train_report;
  ConfigOptions train_cfg;
  train->add_option("--in", train_in, "Feature CSV")->required()->check(CLI::ExistingFile);
  train->add_option("--model", train_model, "Checkpoint output")->required();
  train->add_option("--log", train_log, "Training log CSV");
  train->add_option("--report", train_report, "Test-split EvalReport JSON");
  train_cfg.add(train, true);

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "Score every window of a series with a checkpoint");
  std::string eval_model, eval_in, eval_out, eval_csv;
  evaluate->add_option("--model", eval_model, "Checkpoint")->required()->check(CLI::ExistingFile);
  evaluate->add_option("--in", eval_in, "Feature CSV")->required()->check(CLI::ExistingFile);
  evaluate->add_option("--out", eval_out, "EvalReport JSON")->required();
  evaluate->add_option("--csv", eval_csv, "EvalReport CSV");

  // ablate
  auto* ablate = app.add_subcommand("ablate", "Train and evaluate module combinations");
  std::string abl_in, abl_out;
  std::vector<std::string> abl_arms;
  ConfigOptions abl_cfg;
  ablate->add_option("--in", abl_in, "Feature CSV")->required()->check(CLI::ExistingFile);
  ablate->add_option("--out", abl_out, "Result CSV")->required();
  ablate->add_option("--arms", abl_arms, "Toggle sets like temporal_gat+feature_gat+stl+window, or none (default: six rows)");
  abl_cfg.add(ablate, true);

  // sweep
  auto* sweep = app.add_subcommand("sweep", "Accuracy over a window-size x period grid");
  std::string sw_in, sw_out, sw_windows, sw_periods;
  ConfigOptions sw_cfg;
  sweep->add_option("--in", sw_in, "Feature CSV")->required()->check(CLI::ExistingFile);
  sweep->add_option("--out", sw_out, "Grid CSV")->required();
  sweep->add_option("--windows", sw_windows, "Comma-separated window sizes (default 1,5,10,15,20,25,30)");
  sweep->add_option("--periods", sw_periods, "Comma-separated STL periods (default 15,25,35,45,55)");
  sw_cfg.add(sweep, true);

  // multiclass
  auto* multiclass = app.add_subcommand("multiclass", "Normal + one class per event");
  std::vector<std::string> mc_events, mc_names;
  std::string mc_out, mc_binary;
  std::size_t mc_samples = 600, mc_before = 150;
  ConfigOptions mc_cfg;
  multiclass->add_option("--events", mc_events, "Labeled feature CSV per event (default: synthetic presets)")->check(CLI::ExistingFile);
  multiclass->add_option("--names", mc_names, "Event names, one per series");
  multiclass->add_option("--out", mc_out, "Macro EvalReport JSON")->required();
  multiclass->add_option("--binary-out", mc_binary, "EvalReport JSON with anomaly classes merged");
  multiclass->add_option("--samples", mc_samples, "Consecutive samples kept per event")->capture_default_str();
  multiclass->add_option("--before", mc_before, "Normal samples kept before each anomaly")->capture_default_str();
  mc_cfg.add(multiclass, true);

  // holdout
  auto* holdout = app.add_subcommand("holdout", "Train binary on all events but one, test on the unseen event");
  std::vector<std::string> ho_events, ho_names;
  std::string ho_out, ho_held = "all";
  std::size_t ho_samples = 600, ho_before = 150;
  ConfigOptions ho_cfg;
  holdout->add_option("--events", ho_events, "Labeled feature CSV per event (default: synthetic presets)")->check(CLI::ExistingFile);
  holdout->add_option("--names", ho_names, "Event names, one per series");
  holdout->add_option("--held-out", ho_held, "Event name or index to hold out, or all")->capture_default_str();
  holdout->add_option("--out", ho_out, "Per-fold result CSV")->required();
  holdout->add_option("--samples", ho_samples, "Consecutive samples kept per event")->capture_default_str();
  holdout->add_option("--before", ho_before, "Normal samples kept before each anomaly")->capture_default_str();
  ho_cfg.add(holdout, true);

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a labeled synthetic feature series");
  std::string syn_events = "worm", syn_out;
  std::size_t syn_n = 2000;
  double syn_fraction = 0.1, syn_strength = 1.0;
  std::uint64_t syn_seed = 0;
  synth->add_option("--events", syn_events, "Comma-separated presets: worm,blackout,leak,flap,origin,rare")->capture_default_str();
  synth->add_option("--n", syn_n, "Rows (minutes)")->capture_default_str();
  synth->add_option("--fraction", syn_fraction, "Anomalous share of the timeline")->capture_default_str();
  synth->add_option("--strength", syn_strength, "Signature scale (0 = no effect)")->capture_default_str();
  synth->add_option("--seed", syn_seed, "Generator seed")->capture_default_str();
  synth->add_option("--out", syn_out, "Feature CSV")->required();

  // attention
  auto* attention = app.add_subcommand("attention", "Export averaged attention graphs as edge lists");
  std::string att_model, att_in, att_feat, att_temp;
  double att_ft = 0.3, att_tt = 0.2;
  attention->add_option("--model", att_model, "Checkpoint")->required()->check(CLI::ExistingFile);
  attention->add_option("--in", att_in, "Feature CSV whose windows are averaged")->required()->check(CLI::ExistingFile);
  attention->add_option("--feature-out", att_feat, "Feature-view edge CSV")->required();
  attention->add_option("--temporal-out", att_temp, "Temporal-view edge CSV")->required();
  attention->add_option("--feature-threshold", att_ft, "Keep feature edges above this weight")->capture_default_str();
  attention->add_option("--temporal-threshold", att_tt, "Keep temporal edges above this weight")->capture_default_str();

  // pipeline
  auto* pipeline = app.add_subcommand("pipeline", "Augment, window, train, evaluate and export in one run");
  std::string pl_in, pl_dir = "pipeline_out";
  double pl_ft = 0.3, pl_tt = 0.2;
  ConfigOptions pl_cfg;
  pipeline->add_option("--in", pl_in, "Feature CSV")->required()->check(CLI::ExistingFile);
  pipeline->add_option("--out-dir", pl_dir, "Directory for every artifact")->capture_default_str();
  pipeline->add_option("--feature-threshold", pl_ft, "Feature-view edge threshold")->capture_default_str();
  pipeline->add_option("--temporal-threshold", pl_tt, "Temporal-view edge threshold")->capture_default_str();
  pl_cfg.add(pipeline, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    std::cerr << app.help();
    return 2;
  }

  try {
    const auto ingest_options = [&] {
      bgpad_ingest_options o{};
      o.peer_as = peer_as.empty() ? nullptr : peer_as.data();
      o.peer_as_count = peer_as.size();
      o.start = t_start;
      o.end = t_end;
      o.family = family;
      return o;
    };
    const auto load_records = [&](const std::vector<std::string>& files, const std::string& stage, Manifest& m) {
      std::vector<const char*> paths;
      for (const auto& f : files) {
        paths.push_back(f.c_str());
        m.input(f);
      }
      const auto o = ingest_options();
      Records r;
      check(bgpad_ingest(paths.data(), paths.size(), &o, r.out()), stage);
      bgpad_ingest_counters c{};
      check(bgpad_records_counters(r.get(), &c), stage);
      m.note("counters", {{"total", c.total},
                          {"emitted", c.emitted},
                          {"skipped_non_update", c.skipped_non_update},
                          {"skipped_unknown_type", c.skipped_unknown_type},
                          {"skipped_filtered", c.skipped_filtered},
                          {"dropped_malformed", c.dropped_malformed}});
      std::fprintf(stderr, "records: %llu total, %llu emitted, %llu skipped, %llu malformed\n",
                   static_cast<unsigned long long>(c.total), static_cast<unsigned long long>(c.emitted),
                   static_cast<unsigned long long>(c.skipped_non_update + c.skipped_unknown_type + c.skipped_filtered),
                   static_cast<unsigned long long>(c.dropped_malformed));
      return r;
    };

    if (*ingest) {
      Manifest m(ingest);
      auto r = load_records(ingest_in, "ingest", m);
      check(bgpad_records_write_text(r.get(), ingest_out.c_str()), "ingest");
      m.output(ingest_out);
      m.write();
    } else if (*featurize) {
      Manifest m(featurize);
      auto r = load_records(feat_in, "featurize", m);
      std::string labels;
      if (!labels_path.empty()) {
        std::ifstream in(labels_path);
        std::stringstream ss;
        ss << in.rdbuf();
        labels = ss.str();
        m.input(labels_path);
      }
      bgpad_feature_options fo{rare_threshold, flap == "duplicate" ? 0 : 1, prefix_cap};
      Series s;
      check(bgpad_featurize(r.get(), labels_path.empty() ? nullptr : labels.c_str(), &fo, s.out()), "featurize");
      check(bgpad_series_write_csv(s.get(), feat_out.c_str()), "featurize");
      m.output(feat_out);
      m.write();
    } else if (*augment) {
      Manifest m(augment);
      auto cfg = aug_cfg.build(false);
      auto s = read_series(aug_in, "augment");
      Series out;
      check(bgpad_augment(s.get(), cfg.get(), out.out()), "augment");
      check(bgpad_series_write_csv(out.get(), aug_out.c_str()), "augment");
      m.input(aug_in);
      m.config(cfg.get());
      m.output(aug_out);
      m.write();
    } else if (*window) {
      Manifest m(window);
      auto cfg = win_cfg.build(false);
      auto s = read_series(win_in, "window");
      char* csv = nullptr;
      check(bgpad_windows_csv(s.get(), cfg.get(), &csv), "window");
      write_file(win_out, take(csv), "window");
      m.input(win_in);
      m.config(cfg.get());
      m.output(win_out);
      m.write();
    } else if (*train) {
      Manifest m(train);
      auto cfg = train_cfg.build(verbose);
      auto s = read_series(train_in, "train");
      Model model;
      Report report;
      check(bgpad_train(s.get(), cfg.get(), model.out(), report.out()), "train");
      check(bgpad_model_save(model.get(), train_model.c_str()), "train");
      m.input(train_in);
      m.config(cfg.get());
      m.output(train_model);
      if (!train_log.empty()) {
        char* log = nullptr;
        check(bgpad_model_log_csv(model.get(), &log), "train");
        write_file(train_log, take(log), "train");
        m.output(train_log);
      }
      if (!train_report.empty()) {
        write_file(train_report, report_json(report.get()), "train");
        m.output(train_report);
      }
      m.write();
      std::printf("test f1 %.4f accuracy %.4f\n", metric(report.get(), "f1"), metric(report.get(), "accuracy"));
    } else if (*evaluate) {
      Manifest m(evaluate);
      Model model;
      check(bgpad_model_load(eval_model.c_str(), model.out()), "evaluate");
      auto s = read_series(eval_in, "evaluate");
      Report report;
      check(bgpad_evaluate(model.get(), s.get(), report.out()), "evaluate");
      write_file(eval_out, report_json(report.get()), "evaluate");
      m.input(eval_model);
      m.input(eval_in);
      m.output(eval_out);
      if (!eval_csv.empty()) {
        char* csv = nullptr;
        check(bgpad_report_csv(report.get(), &csv), "evaluate");
        write_file(eval_csv, take(csv), "evaluate");
        m.output(eval_csv);
      }
      m.write();
      std::printf("f1 %.4f accuracy %.4f\n", metric(report.get(), "f1"), metric(report.get(), "accuracy"));
    } else if (*ablate) {
      Manifest m(ablate);
      auto cfg = abl_cfg.build(verbose);
      auto s = read_series(abl_in, "ablate");
      std::string arms;
      for (const auto& a : abl_arms) arms += (arms.empty() ? "" : ";") + a;
      char* csv = nullptr;
      check(bgpad_ablate(s.get(), cfg.get(), abl_arms.empty() ? nullptr : arms.c_str(), &csv), "ablate");
      const auto text = take(csv);
      write_file(abl_out, text, "ablate");
      std::fputs(text.c_str(), stdout);
      m.input(abl_in);
      m.config(cfg.get());
      m.output(abl_out);
      m.write();
    } else if (*sweep) {
      Manifest m(sweep);
      auto cfg = sw_cfg.build(verbose);
      auto s = read_series(sw_in, "sweep");
      char* csv = nullptr;
      check(bgpad_sweep(s.get(), cfg.get(), sw_windows.empty() ? nullptr : sw_windows.c_str(),
                        sw_periods.empty() ? nullptr : sw_periods.c_str(), &csv),
            "sweep");
      const auto text = take(csv);
      write_file(sw_out, text, "sweep");
      std::fputs(text.c_str(), stdout);
      m.input(sw_in);
      m.config(cfg.get());
      m.output(sw_out);
      m.write();
    } else if (*multiclass) {
      Manifest m(multiclass);
      auto cfg = mc_cfg.build(verbose);
      auto [series, names] = load_events(mc_events, mc_names, mc_cfg.seed, mc_samples, mc_before, m, "multiclass");
      std::vector<const bgpad_series*> ptrs;
      std::vector<const char*> cnames;
      for (std::size_t i = 0; i < series.size(); ++i) {
        ptrs.push_back(series[i].get());
        cnames.push_back(names[i].c_str());
      }
      Report report, binary;
      check(bgpad_multiclass(ptrs.data(), cnames.data(), ptrs.size(), mc_samples, mc_before, cfg.get(), report.out(),
                             binary.out()),
            "multiclass");
      write_file(mc_out, report_json(report.get()), "multiclass");
      m.config(cfg.get());
      m.note("class_names", [&] {
        ordered_json n = ordered_json::array({"normal"});
        for (const auto& s : names) n.push_back(s);
        return n;
      }());
      m.output(mc_out);
      if (!mc_binary.empty()) {
        write_file(mc_binary, report_json(binary.get()), "multiclass");
        m.output(mc_binary);
      }
      m.write();
      std::printf("macro f1 %.4f accuracy %.4f\n", metric(report.get(), "f1"), metric(report.get(), "accuracy"));
    } else if (*holdout) {
      Manifest m(holdout);
      auto cfg = ho_cfg.build(verbose);
      auto [series, names] = load_events(ho_events, ho_names, ho_cfg.seed, ho_samples, ho_before, m, "holdout");
      std::vector<const bgpad_series*> ptrs;
      std::vector<const char*> cnames;
      for (std::size_t i = 0; i < series.size(); ++i) {
        ptrs.push_back(series[i].get());
        cnames.push_back(names[i].c_str());
      }
      std::vector<std::size_t> folds;
      if (ho_held == "all") {
        for (std::size_t i = 0; i < series.size(); ++i) folds.push_back(i);
      } else {
        for (std::size_t i = 0; i < names.size(); ++i)
          if (names[i] == ho_held || std::to_string(i) == ho_held) folds.push_back(i);
        if (folds.empty()) throw StageError{"holdout", "no event named '" + ho_held + "'"};
      }
      std::string csv = "held_out,unseen_accuracy,unseen_precision,unseen_recall,unseen_f1,seen_f1\n";
      for (auto fold : folds) {
        Report unseen, seen;
        check(bgpad_holdout(ptrs.data(), cnames.data(), ptrs.size(), fold, ho_samples, ho_before, cfg.get(), unseen.out(),
                            seen.out()),
              "holdout");
        char line[256];
        std::snprintf(line, sizeof line, "%s,%.17g,%.17g,%.17g,%.17g,%.17g\n", names[fold].c_str(),
                      metric(unseen.get(), "accuracy"), metric(unseen.get(), "precision"), metric(unseen.get(), "recall"),
                      metric(unseen.get(), "f1"), metric(seen.get(), "f1"));
        csv += line;
        std::fputs(line, stdout);
      }
      write_file(ho_out, csv, "holdout");
      m.config(cfg.get());
      m.output(ho_out);
      m.write();
    } else if (*synth) {
      Manifest m(synth);
      Series s;
      check(bgpad_synth(syn_events.c_str(), syn_n, syn_fraction, syn_strength, syn_seed, s.out()), "synth");
      check(bgpad_series_write_csv(s.get(), syn_out.c_str()), "synth");
      m.output(syn_out);
      m.write();
    } else if (*attention) {
      Manifest m(attention);
      Model model;
      check(bgpad_model_load(att_model.c_str(), model.out()), "attention");
      auto s = read_series(att_in, "attention");
      char *f = nullptr, *t = nullptr;
      check(bgpad_attention(model.get(), s.get(), att_ft, att_tt, &f, &t), "attention");
      write_file(att_feat, take(f), "attention");
      write_file(att_temp, take(t), "attention");
      m.input(att_model);
      m.input(att_in);
      m.output(att_feat);
      m.output(att_temp);
      m.write();
    } else if (*pipeline) {
      Manifest m(pipeline);
      auto cfg = pl_cfg.build(verbose);
      auto s = read_series(pl_in, "pipeline");
      std::error_code ec;
      std::filesystem::create_directories(pl_dir, ec);
      if (ec) throw StageError{"pipeline", "cannot create " + pl_dir + ": " + ec.message()};
      const auto path = [&](const char* name) { return (std::filesystem::path(pl_dir) / name).string(); };
      Model model;
      Report report;
      check(bgpad_train(s.get(), cfg.get(), model.out(), report.out()), "train");
      check(bgpad_model_save(model.get(), path("model.json").c_str()), "pipeline");
      char* log = nullptr;
      check(bgpad_model_log_csv(model.get(), &log), "pipeline");
      write_file(path("train_log.csv"), take(log), "pipeline");
      write_file(path("report.json"), report_json(report.get()), "pipeline");
      char* csv = nullptr;
      check(bgpad_report_csv(report.get(), &csv), "pipeline");
      write_file(path("report.csv"), take(csv), "pipeline");
      char *f = nullptr, *t = nullptr;
      check(bgpad_attention(model.get(), s.get(), pl_ft, pl_tt, &f, &t), "attention");
      write_file(path("attention_feature.csv"), take(f), "attention");
      write_file(path("attention_temporal.csv"), take(t), "attention");
      m.input(pl_in);
      m.config(cfg.get());
      for (auto* name : {"model.json", "train_log.csv", "report.json", "report.csv", "attention_feature.csv",
                         "attention_temporal.csv"})
        m.output(path(name));
      m.write();
      std::printf("test f1 %.4f accuracy %.4f precision %.4f recall %.4f\n", metric(report.get(), "f1"),
                  metric(report.get(), "accuracy"), metric(report.get(), "precision"), metric(report.get(), "recall"));
    }
  } catch (const StageError& e) {
    std::fprintf(stderr, "error: %s: %s\n", e.stage.c_str(), e.message.c_str());
    return 1;
  }
  return 0;
}
