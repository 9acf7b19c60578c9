// SPDX-License-Identifier: Apache-2.0
#include "model.hpp"

#include <cmath>

#include "error.hpp"
#include "io.hpp"

namespace bgpad::model {

namespace tn = bgpad::tensor;

std::string to_string(Activation a) {
  switch (a) {
    case Activation::tanh: return "tanh";
    case Activation::elu: return "elu";
    case Activation::relu: return "relu";
  }
  return "tanh";
}

Activation parse_activation(std::string_view s) {
  if (s == "tanh") return Activation::tanh;
  if (s == "elu") return Activation::elu;
  if (s == "relu") return Activation::relu;
  throw InvalidArgument("unknown activation '" + std::string(s) + "'");
}

std::string to_string(LeakyMode m) { return m == LeakyMode::slope ? "slope" : "clamp"; }

LeakyMode parse_leaky_mode(std::string_view s) {
  if (s == "slope") return LeakyMode::slope;
  if (s == "clamp") return LeakyMode::clamp;
  throw InvalidArgument("unknown leaky mode '" + std::string(s) + "'");
}

void ModelConfig::validate() const {
  if (window == 0) throw InvalidArgument("window length must be positive");
  if (channels == 0) throw InvalidArgument("channel count must be positive");
  if (hidden == 0) throw InvalidArgument("hidden size must be positive");
  if (classes < 2) throw InvalidArgument("need at least two classes");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw InvalidArgument("dropout must be in [0, 1)");
  if (!std::isfinite(leaky_slope)) throw InvalidArgument("leaky slope must be finite");
  for (double w : fusion_weights)
    if (!std::isfinite(w)) throw InvalidArgument("fusion weights must be finite");
}

// ---------------------------------------------------------------------------

namespace {

void glorot(Tensor& t, std::size_t fan_in, std::size_t fan_out, std::mt19937_64& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (auto& v : t.data()) v = limit * (2.0 * uniform01(rng) - 1.0);
}

}  // namespace

MGatParams MGatParams::zeros(const ModelConfig& cfg) {
  cfg.validate();
  MGatParams p;
  p.config = cfg;
  const std::size_t m = cfg.window, c = cfg.channels, h = cfg.hidden, d = cfg.lstm_input();
  p.feature_gat = {Tensor({m, m}), Tensor({2 * m})};
  p.temporal_gat = {Tensor({c, c}), Tensor({2 * c})};
  for (std::size_t g = 0; g < 4; ++g) {
    p.lstm.W[g] = Tensor({h, d});
    p.lstm.U[g] = Tensor({h, h});
    p.lstm.b[g] = Tensor({h});
  }
  p.head_W = Tensor({cfg.classes, h});
  p.head_b = Tensor({cfg.classes});
  return p;
}

MGatParams MGatParams::init(const ModelConfig& cfg, std::uint64_t seed) {
  MGatParams p = zeros(cfg);
  std::mt19937_64 rng(seed);
  const std::size_t m = cfg.window, c = cfg.channels, h = cfg.hidden, d = cfg.lstm_input();
  glorot(p.feature_gat.W, m, m, rng);
  glorot(p.feature_gat.a, 2 * m, 1, rng);
  glorot(p.temporal_gat.W, c, c, rng);
  glorot(p.temporal_gat.a, 2 * c, 1, rng);
  for (std::size_t g = 0; g < 4; ++g) glorot(p.lstm.W[g], d, h, rng);
  for (std::size_t g = 0; g < 4; ++g) glorot(p.lstm.U[g], h, h, rng);
  for (auto& v : p.lstm.b[0].data()) v = 1.0;
  glorot(p.head_W, h, cfg.classes, rng);
  return p;
}

std::vector<std::pair<std::string, Tensor*>> MGatParams::named() {
  std::vector<std::pair<std::string, Tensor*>> out;
  out.emplace_back("feature_gat.W", &feature_gat.W);
  out.emplace_back("feature_gat.a", &feature_gat.a);
  out.emplace_back("temporal_gat.W", &temporal_gat.W);
  out.emplace_back("temporal_gat.a", &temporal_gat.a);
  for (std::size_t g = 0; g < 4; ++g) out.emplace_back(std::string("lstm.W_") + kGateNames[g], &lstm.W[g]);
  for (std::size_t g = 0; g < 4; ++g) out.emplace_back(std::string("lstm.U_") + kGateNames[g], &lstm.U[g]);
  for (std::size_t g = 0; g < 4; ++g) out.emplace_back(std::string("lstm.b_") + kGateNames[g], &lstm.b[g]);
  out.emplace_back("head.W", &head_W);
  out.emplace_back("head.b", &head_b);
  return out;
}

std::vector<std::pair<std::string, const Tensor*>> MGatParams::named() const {
  auto mut = const_cast<MGatParams*>(this)->named();
  std::vector<std::pair<std::string, const Tensor*>> out;
  out.reserve(mut.size());
  for (auto& [n, t] : mut) out.emplace_back(std::move(n), t);
  return out;
}

std::size_t MGatParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& [name, t] : named()) n += t->size();
  return n;
}

void MGatParams::check_shapes() const {
  const auto ref = zeros(config);
  const auto mine = named();
  const auto want = ref.named();
  for (std::size_t i = 0; i < mine.size(); ++i) {
    if (mine[i].second->shape() != want[i].second->shape())
      throw ShapeError("parameter '" + mine[i].first + "' has the wrong shape for the model config");
    for (double v : mine[i].second->data())
      if (!std::isfinite(v)) throw NumericError("parameter '" + mine[i].first + "' is not finite");
  }
}

bool MGatParams::operator==(const MGatParams& o) const {
  if (!(config == o.config)) return false;
  const auto a = named();
  const auto b = o.named();
  for (std::size_t i = 0; i < a.size(); ++i)
    if (!(*a[i].second == *b[i].second)) return false;
  return true;
}

Gradients Gradients::like(const MGatParams& p) {
  Gradients g;
  for (const auto& [name, t] : p.named()) g.buffers.emplace_back(t->size(), 0.0);
  return g;
}

void Gradients::zero() {
  for (auto& b : buffers) std::fill(b.begin(), b.end(), 0.0);
}

void Gradients::add(const Gradients& other, double scale) {
  if (other.buffers.size() != buffers.size()) throw ShapeError("gradient sets differ in layout");
  for (std::size_t i = 0; i < buffers.size(); ++i) {
    if (other.buffers[i].size() != buffers[i].size()) throw ShapeError("gradient sets differ in layout");
    for (std::size_t j = 0; j < buffers[i].size(); ++j) buffers[i][j] += scale * other.buffers[i][j];
  }
}

BoundParams bind(Tape& tape, const MGatParams& p, Gradients* grads) {
  const auto params = p.named();
  if (grads && grads->buffers.size() != params.size()) throw ShapeError("gradient buffers do not match parameters");
  std::vector<Var> vars;
  vars.reserve(params.size());
  for (std::size_t i = 0; i < params.size(); ++i)
    vars.push_back(grads ? tape.parameter(*params[i].second, grads->buffers[i]) : tape.reference(*params[i].second));
  BoundParams b;
  std::size_t i = 0;
  b.feat_W = vars[i++];
  b.feat_a = vars[i++];
  b.temp_W = vars[i++];
  b.temp_a = vars[i++];
  for (auto& v : b.lstm_W) v = vars[i++];
  for (auto& v : b.lstm_U) v = vars[i++];
  for (auto& v : b.lstm_b) v = vars[i++];
  b.head_W = vars[i++];
  b.head_b = vars[i++];
  return b;
}

// ---------------------------------------------------------------------------

GatOutput gat_forward(Var nodes, Var W, Var a, const ModelConfig& cfg) {
  if (nodes.shape().size() != 2) throw ShapeError("gat: node matrix must be rank 2");
  const std::size_t f = nodes.cols();
  if (W.shape() != tn::Shape{f, f})
    throw ShapeError("gat: W must be " + std::to_string(f) + "x" + std::to_string(f));
  if (a.value().size() != 2 * f) throw ShapeError("gat: attention vector must have length " + std::to_string(2 * f));
  Var wh = tn::matmul_bt(nodes, W);  // row i is W h_i
  Var a2 = tn::reshape(a, {2, f});
  Var s_src = tn::matmul_bt(wh, tn::slice_rows(a2, 0, 1));
  Var s_dst = tn::matmul_bt(wh, tn::slice_rows(a2, 1, 1));
  Var e = tn::pairwise_sum(s_src, s_dst);
  e = cfg.leaky_mode == LeakyMode::slope ? tn::leaky_relu(e, cfg.leaky_slope) : tn::clamp_negative(e, cfg.leaky_slope);
  Var alpha = tn::row_softmax(e);
  Var agg = tn::matmul(alpha, wh);
  Var out;
  switch (cfg.activation) {
    case Activation::tanh: out = tn::tanh(agg); break;
    case Activation::elu: out = tn::elu(agg); break;
    case Activation::relu: out = tn::relu(agg); break;
  }
  return {out, alpha};
}

std::pair<Tensor, Tensor> gat_eval(const Tensor& nodes, const GatLayerParams& p, const ModelConfig& cfg) {
  Tape t;
  auto r = gat_forward(t.reference(nodes), t.reference(p.W), t.reference(p.a), cfg);
  return {r.out.value(), r.alpha.value()};
}

GatOutput feature_view(Var window, Var W, Var a, const ModelConfig& cfg) {
  auto r = gat_forward(tn::transpose(window), W, a, cfg);
  return {tn::transpose(r.out), r.alpha};
}

GatOutput temporal_view(Var window, Var W, Var a, const ModelConfig& cfg) { return gat_forward(window, W, a, cfg); }

Var fuse(Var h_feat, Var x, Var h_time, const std::array<double, 3>& w) {
  if (h_feat.shape() != x.shape() || h_time.shape() != x.shape()) throw ShapeError("fuse: view shapes differ");
  std::array<Var, 3> parts{h_feat, x, h_time};
  for (std::size_t i = 0; i < 3; ++i)
    if (w[i] != 1.0) parts[i] = tn::scale(parts[i], w[i]);
  return tn::concat(parts, 1);
}

Var lstm_forward(Var seq, const BoundParams& p) {
  Tape& t = *seq.tape();
  const std::size_t m = seq.rows();
  const std::size_t h = p.lstm_U[0].rows();
  if (p.lstm_W[0].cols() != seq.cols())
    throw ShapeError("lstm: input width " + std::to_string(seq.cols()) + " does not match W width " +
                     std::to_string(p.lstm_W[0].cols()));
  std::array<Var, 4> proj, bias;
  for (std::size_t g = 0; g < 4; ++g) {
    proj[g] = tn::matmul_bt(seq, p.lstm_W[g]);  // m x H, row t is W x_t
    bias[g] = tn::reshape(p.lstm_b[g], {1, h});
  }
  Var hs = t.constant(Tensor({1, h}));
  Var cs = t.constant(Tensor({1, h}));
  for (std::size_t step = 0; step < m; ++step) {
    std::array<Var, 4> pre;
    for (std::size_t g = 0; g < 4; ++g)
      pre[g] = tn::add(tn::add(tn::slice_rows(proj[g], step, 1), tn::matmul_bt(hs, p.lstm_U[g])), bias[g]);
    Var f = tn::sigmoid(pre[0]);
    Var i = tn::sigmoid(pre[1]);
    Var o = tn::sigmoid(pre[2]);
    Var cand = tn::tanh(pre[3]);
    cs = tn::add(tn::mul(f, cs), tn::mul(i, cand));
    hs = tn::mul(o, tn::tanh(cs));
  }
  return hs;
}

ForwardOutput model_forward(Tape& tape, const BoundParams& bp, const ModelConfig& cfg, const Matrix& window, Mode mode,
                            std::mt19937_64* rng) {
  if (window.rows() != cfg.window)
    throw ShapeError("model input: window has " + std::to_string(window.rows()) + " rows, model expects " +
                     std::to_string(cfg.window));
  if (window.cols() != cfg.channels)
    throw ShapeError("model input: window has " + std::to_string(window.cols()) + " channels, model expects " +
                     std::to_string(cfg.channels));
  const std::size_t m = cfg.window, c = cfg.channels;
  Var x = tape.constant(Tensor({m, c}, std::vector<double>(window.data().begin(), window.data().end())));

  ForwardOutput out;
  Var h_feat, h_time;
  if (cfg.feature_gat) {
    auto r = feature_view(x, bp.feat_W, bp.feat_a, cfg);
    h_feat = r.out;
    out.feature_attention = r.alpha;
  } else {
    h_feat = tape.constant(Tensor({m, c}));
  }
  if (cfg.temporal_gat) {
    auto r = temporal_view(x, bp.temp_W, bp.temp_a, cfg);
    h_time = r.out;
    out.temporal_attention = r.alpha;
  } else {
    h_time = tape.constant(Tensor({m, c}));
  }
  Var fused = fuse(h_feat, x, h_time, cfg.fusion_weights);
  if (mode == Mode::train && cfg.dropout > 0.0) {
    if (!rng) throw InvalidArgument("model_forward: train mode with dropout needs an rng");
    fused = tn::mul(fused, tape.constant(tn::dropout_mask(fused.shape(), cfg.dropout, *rng)));
  }
  Var h = lstm_forward(fused, bp);
  out.logits = tn::add(tn::matmul_bt(h, bp.head_W), tn::reshape(bp.head_b, {1, cfg.classes}));
  return out;
}

std::vector<double> predict_logits(const MGatParams& p, const Matrix& window) {
  Tape t;
  auto bp = bind(t, p, nullptr);
  auto out = model_forward(t, bp, p.config, window, Mode::eval, nullptr);
  const auto& v = out.logits.value();
  return {v.data().begin(), v.data().end()};
}

std::size_t predict_class(const MGatParams& p, const Matrix& window) {
  const auto logits = predict_logits(p, window);
  std::size_t best = 0;
  for (std::size_t j = 1; j < logits.size(); ++j)
    if (logits[j] > logits[best]) best = j;
  return best;
}

Var weighted_ce_loss(Var logits, std::size_t y, std::span<const double> class_weights) {
  const std::size_t c = logits.value().size();
  if (class_weights.size() != c)
    throw ShapeError("loss: " + std::to_string(class_weights.size()) + " class weights for " + std::to_string(c) + " logits");
  if (y >= c) throw InvalidArgument("loss: class id " + std::to_string(y) + " out of range for " + std::to_string(c) + " classes");
  for (double w : class_weights)
    if (!(w > 0.0) || !std::isfinite(w)) throw InvalidArgument("loss: class weights must be positive and finite");
  return tn::weighted_cross_entropy(logits, y, class_weights[y]);
}

}  // namespace bgpad::model
