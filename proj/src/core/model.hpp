// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "matrix.hpp"
#include "tensor.hpp"

namespace bgpad::model {

using tensor::Tape;
using tensor::Tensor;
using tensor::Var;

/// Output nonlinearity of a GAT layer.
enum class Activation { tanh, elu, relu };
/// How the attention LeakyReLU treats negatives: scale by the slope, or
/// replace them with the constant (the literal reading, kept for ablation).
enum class LeakyMode { slope, clamp };

std::string to_string(Activation a);
Activation parse_activation(std::string_view s);
std::string to_string(LeakyMode m);
LeakyMode parse_leaky_mode(std::string_view s);

struct ModelConfig {
  std::size_t window = 25;     // m, rows per sample
  std::size_t channels = 230;  // 5k with STL, k without
  std::size_t hidden = 64;
  std::size_t classes = 2;
  std::array<double, 3> fusion_weights{0.5, 1.0, 0.5};  // feature view, input, temporal view
  Activation activation = Activation::tanh;
  LeakyMode leaky_mode = LeakyMode::slope;
  double leaky_slope = 0.2;
  bool feature_gat = true;
  bool temporal_gat = true;
  double dropout = 0.2;

  std::size_t lstm_input() const { return 3 * channels; }
  void validate() const;
  bool operator==(const ModelConfig&) const = default;
};

struct GatLayerParams {
  Tensor W;  // F x F
  Tensor a;  // 2F
};

struct LstmParams {
  // Gate order: forget, input, output, cell.
  std::array<Tensor, 4> W;  // H x D
  std::array<Tensor, 4> U;  // H x H
  std::array<Tensor, 4> b;  // H
};

inline constexpr std::array<const char*, 4> kGateNames = {"f", "i", "o", "c"};

struct MGatParams {
  ModelConfig config;
  GatLayerParams feature_gat;   // F = window
  GatLayerParams temporal_gat;  // F = channels
  LstmParams lstm;
  Tensor head_W;  // C x H
  Tensor head_b;  // C

  /// Glorot-uniform weights, zero biases except the forget gate (1.0).
  static MGatParams init(const ModelConfig& cfg, std::uint64_t seed);
  static MGatParams zeros(const ModelConfig& cfg);

  /// Every trainable array in a fixed order with stable names.
  std::vector<std::pair<std::string, Tensor*>> named();
  std::vector<std::pair<std::string, const Tensor*>> named() const;
  std::size_t parameter_count() const;
  void check_shapes() const;

  bool operator==(const MGatParams& o) const;
};

/// One gradient buffer per entry of MGatParams::named().
struct Gradients {
  std::vector<std::vector<double>> buffers;

  static Gradients like(const MGatParams& p);
  void zero();
  void add(const Gradients& other, double scale = 1.0);
};

/// The parameters of one forward pass, registered on a tape.
struct BoundParams {
  Var feat_W, feat_a, temp_W, temp_a;
  std::array<Var, 4> lstm_W, lstm_U, lstm_b;
  Var head_W, head_b;
};

/// Registers `p` on `tape`. With `grads` the parameters accumulate
/// gradients into those buffers; without, they are constants.
BoundParams bind(Tape& tape, const MGatParams& p, Gradients* grads);

struct GatOutput {
  Var out;    // N x F
  Var alpha;  // N x N, rows = attending node
};

/// Single-head GAT over the complete graph with self loops:
/// e_ij = LeakyReLU(a^T [W h_i || W h_j]), alpha = row softmax(e),
/// h'_i = act(sum_j alpha_ij W h_j).
GatOutput gat_forward(Var nodes, Var W, Var a, const ModelConfig& cfg);

/// Plain evaluation of gat_forward without a surrounding model.
std::pair<Tensor, Tensor> gat_eval(const Tensor& nodes, const GatLayerParams& p, const ModelConfig& cfg);

/// Nodes are the channels (each an m-vector). Returns m x channels.
GatOutput feature_view(Var window, Var W, Var a, const ModelConfig& cfg);
/// Nodes are the time steps (each a channel vector). Returns m x channels.
GatOutput temporal_view(Var window, Var W, Var a, const ModelConfig& cfg);

/// concat(w0 * h_feat, w1 * x, w2 * h_time) along channels.
Var fuse(Var h_feat, Var x, Var h_time, const std::array<double, 3>& w);

/// Runs the LSTM over the rows of `seq` from zero state; returns h_m (1 x H).
Var lstm_forward(Var seq, const BoundParams& p);

enum class Mode { train, eval };

struct ForwardOutput {
  Var logits;              // 1 x C
  Var feature_attention;   // channels x channels; invalid when the view is off
  Var temporal_attention;  // m x m; invalid when the view is off
};

ForwardOutput model_forward(Tape& tape, const BoundParams& bp, const ModelConfig& cfg, const Matrix& window, Mode mode,
                            std::mt19937_64* rng);

/// Eval-mode convenience: logits of one window.
std::vector<double> predict_logits(const MGatParams& p, const Matrix& window);
std::size_t predict_class(const MGatParams& p, const Matrix& window);

Var weighted_ce_loss(Var logits, std::size_t y, std::span<const double> class_weights);

}  // namespace bgpad::model
