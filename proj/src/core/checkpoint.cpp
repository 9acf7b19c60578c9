// SPDX-License-Identifier: Apache-2.0
#include "checkpoint.hpp"

#include <json.hpp>

#include "error.hpp"
#include "io.hpp"

namespace bgpad::checkpoint {

using nlohmann::json;

namespace {

json config_block(const Checkpoint& ck) {
  const auto& c = ck.params.config;
  return json{{"window", c.window},
              {"channels", c.channels},
              {"hidden", c.hidden},
              {"classes", c.classes},
              {"fusion_weights", c.fusion_weights},
              {"activation", model::to_string(c.activation)},
              {"leaky_mode", model::to_string(c.leaky_mode)},
              {"leaky_slope", c.leaky_slope},
              {"feature_gat", c.feature_gat},
              {"temporal_gat", c.temporal_gat},
              {"dropout", c.dropout},
              {"stl", {{"enabled", ck.use_stl},
                       {"period", ck.stl.period},
                       {"seasonal_span", ck.stl.seasonal_span},
                       {"trend_span", ck.stl.trend_span},
                       {"lowpass_span", ck.stl.lowpass_span},
                       {"inner_iterations", ck.stl.inner_iterations},
                       {"outer_iterations", ck.stl.outer_iterations}}}};
}

template <class T>
T field(const json& j, const char* key, const char* where) {
  auto it = j.find(key);
  if (it == j.end()) throw ParseError(std::string("checkpoint: missing '") + key + "' in " + where, 0);
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw ParseError(std::string("checkpoint: bad value for '") + key + "' in " + where, 0);
  }
}

}  // namespace

std::string Checkpoint::config_hash() const { return io::hex64(io::fnv1a(config_block(*this).dump())); }

std::string to_json(const Checkpoint& ck) {
  json params = json::array();
  for (const auto& [name, t] : ck.params.named())
    params.push_back(json{{"name", name}, {"shape", t->shape()}, {"data", std::vector<double>(t->data().begin(), t->data().end())}});
  json doc{{"format", kFormat},
           {"version", kVersion},
           {"config", config_block(ck)},
           {"config_hash", ck.config_hash()},
           {"seed", ck.seed},
           {"channels", ck.channels},
           {"normalizer", json{{"min", ck.normalizer.min}, {"max", ck.normalizer.max}}},
           {"params", params}};
  return doc.dump(1) + "\n";
}

namespace {

Checkpoint from_document(const json& doc) {
  if (!doc.is_object()) throw ParseError("checkpoint: top level is not an object", 0);
  if (field<std::string>(doc, "format", "header") != kFormat) throw ParseError("checkpoint: unknown format tag", 0);
  const int version = field<int>(doc, "version", "header");
  if (version != kVersion)
    throw ParseError("checkpoint: unsupported version " + std::to_string(version) + " (expected " +
                         std::to_string(kVersion) + ")",
                     0);

  const json& cfg = doc.at("config");
  model::ModelConfig mc;
  mc.window = field<std::size_t>(cfg, "window", "config");
  mc.channels = field<std::size_t>(cfg, "channels", "config");
  mc.hidden = field<std::size_t>(cfg, "hidden", "config");
  mc.classes = field<std::size_t>(cfg, "classes", "config");
  mc.fusion_weights = field<std::array<double, 3>>(cfg, "fusion_weights", "config");
  mc.activation = model::parse_activation(field<std::string>(cfg, "activation", "config"));
  mc.leaky_mode = model::parse_leaky_mode(field<std::string>(cfg, "leaky_mode", "config"));
  mc.leaky_slope = field<double>(cfg, "leaky_slope", "config");
  mc.feature_gat = field<bool>(cfg, "feature_gat", "config");
  mc.temporal_gat = field<bool>(cfg, "temporal_gat", "config");
  mc.dropout = field<double>(cfg, "dropout", "config");

  Checkpoint ck;
  ck.params = model::MGatParams::zeros(mc);
  const json& st = cfg.at("stl");
  ck.use_stl = field<bool>(st, "enabled", "stl");
  ck.stl.period = field<std::size_t>(st, "period", "stl");
  ck.stl.seasonal_span = field<std::size_t>(st, "seasonal_span", "stl");
  ck.stl.trend_span = field<std::size_t>(st, "trend_span", "stl");
  ck.stl.lowpass_span = field<std::size_t>(st, "lowpass_span", "stl");
  ck.stl.inner_iterations = field<std::size_t>(st, "inner_iterations", "stl");
  ck.stl.outer_iterations = field<std::size_t>(st, "outer_iterations", "stl");
  ck.seed = field<std::uint64_t>(doc, "seed", "header");
  ck.channels = field<std::vector<std::string>>(doc, "channels", "header");
  const json& norm = doc.at("normalizer");
  ck.normalizer.min = field<std::vector<double>>(norm, "min", "normalizer");
  ck.normalizer.max = field<std::vector<double>>(norm, "max", "normalizer");
  if (ck.normalizer.min.size() != ck.normalizer.max.size())
    throw ShapeError("checkpoint: normalizer min/max lengths differ");
  if (!ck.normalizer.min.empty() && ck.normalizer.min.size() != mc.channels)
    throw ShapeError("checkpoint: normalizer covers " + std::to_string(ck.normalizer.min.size()) + " channels, model has " +
                     std::to_string(mc.channels));
  if (!ck.channels.empty() && ck.channels.size() != mc.channels)
    throw ShapeError("checkpoint: channel name count does not match the model");

  const json& params = doc.at("params");
  auto slots = ck.params.named();
  if (!params.is_array() || params.size() != slots.size())
    throw ShapeError("checkpoint: expected " + std::to_string(slots.size()) + " parameter arrays");
  for (std::size_t i = 0; i < slots.size(); ++i) {
    const json& p = params[i];
    const auto name = field<std::string>(p, "name", "params");
    if (name != slots[i].first) throw ParseError("checkpoint: expected parameter '" + slots[i].first + "', found '" + name + "'", 0);
    const auto shape = field<tensor::Shape>(p, "shape", name.c_str());
    if (shape != slots[i].second->shape()) throw ShapeError("checkpoint: parameter '" + name + "' shape does not match declared dims");
    auto data = field<std::vector<double>>(p, "data", name.c_str());
    if (data.size() != slots[i].second->size()) throw ShapeError("checkpoint: parameter '" + name + "' has the wrong element count");
    *slots[i].second = tensor::Tensor(shape, std::move(data));
  }
  ck.params.check_shapes();
  if (doc.contains("config_hash") && doc["config_hash"] != ck.config_hash())
    throw ParseError("checkpoint: config hash does not match the config block", 0);
  return ck;
}

}  // namespace

Checkpoint from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("checkpoint: truncated or malformed JSON: ") + e.what(), e.byte);
  }
  try {
    return from_document(doc);
  } catch (const json::exception& e) {
    throw ParseError(std::string("checkpoint: ") + e.what(), 0);
  }
}

void save(const Checkpoint& ck, const std::filesystem::path& path) { io::write_atomic(path, to_json(ck)); }

Checkpoint load(const std::filesystem::path& path) { return from_json(io::read_text(path)); }

}  // namespace bgpad::checkpoint
