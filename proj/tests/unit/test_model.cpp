// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "error.hpp"
#include "model.hpp"
#include "oracles.hpp"

using namespace bgpad;
using namespace bgpad::model;
namespace tn = bgpad::tensor;

namespace {

Tensor random(tn::Shape s, std::mt19937_64& rng, double lo = -1, double hi = 1) {
  Tensor t(std::move(s));
  std::uniform_real_distribution<double> u(lo, hi);
  for (auto& v : t.data()) v = u(rng);
  return t;
}

oracle::Grid grid(const Tensor& t) {
  oracle::Grid g(t.rows(), std::vector<double>(t.cols()));
  for (std::size_t r = 0; r < t.rows(); ++r)
    for (std::size_t c = 0; c < t.cols(); ++c) g[r][c] = t.at(r, c);
  return g;
}

ModelConfig toy(std::size_t m = 5, std::size_t channels = 10, std::size_t hidden = 3) {
  ModelConfig c;
  c.window = m;
  c.channels = channels;
  c.hidden = hidden;
  return c;
}

Matrix random_window(const ModelConfig& c, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Matrix w(c.window, c.channels);
  for (auto& v : w.data()) v = std::uniform_real_distribution<double>(0, 1)(rng);
  return w;
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

TEST_SUITE("model") {

TEST_CASE("GAT matches the scalar transcription") {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + trial % 4, f = 1 + (trial / 4) % 4;
    ModelConfig cfg;
    cfg.activation = static_cast<Activation>(trial % 3);
    const auto nodes = random({n, f}, rng, -2, 2);
    GatLayerParams p{random({f, f}, rng), random({2 * f}, rng)};
    const auto [out, alpha] = gat_eval(nodes, p, cfg);
    const auto ref = oracle::gat_scalar(grid(nodes), grid(p.W), {p.a.data().begin(), p.a.data().end()}, 0.2, cfg.activation);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) CHECK(std::abs(alpha.at(i, j) - ref.alpha[i][j]) <= 1e-12);
      for (std::size_t k = 0; k < f; ++k) CHECK(std::abs(out.at(i, k) - ref.out[i][k]) <= 1e-12);
    }
  }
}

TEST_CASE("GAT special cases") {
  std::mt19937_64 rng(1);
  ModelConfig cfg;
  GatLayerParams p{random({3, 3}, rng), random({6}, rng)};
  const auto single = gat_eval(Tensor({1, 3}, {0.1, 0.2, 0.3}), p, cfg);
  CHECK(single.second.at(0, 0) == 1.0);
  const auto same = gat_eval(Tensor({2, 3}, {0.1, 0.2, 0.3, 0.1, 0.2, 0.3}), p, cfg);
  for (double a : same.second.data()) CHECK(a == 0.5);
  CHECK_THROWS_AS(gat_eval(Tensor({2, 4}), p, cfg), ShapeError);
}

TEST_CASE("views preserve shape and are permutation-equivariant") {
  const auto cfg = toy();
  auto params = MGatParams::init(cfg, 9);
  const auto x = random_window(cfg, 4);
  const auto run = [&](const Matrix& w, bool feature) {
    tn::Tape t;
    auto bp = bind(t, params, nullptr);
    auto v = t.constant(Tensor({w.rows(), w.cols()}, w.data()));
    auto r = feature ? feature_view(v, bp.feat_W, bp.feat_a, cfg) : temporal_view(v, bp.temp_W, bp.temp_a, cfg);
    return r.out.value();
  };
  for (bool feature : {true, false}) {
    const auto base = run(x, feature);
    CHECK(base.shape() == tn::Shape{cfg.window, cfg.channels});
    std::vector<std::size_t> perm(feature ? cfg.channels : cfg.window);
    std::iota(perm.begin(), perm.end(), 0);
    std::mt19937_64 rng(5);
    std::shuffle(perm.begin(), perm.end(), rng);
    Matrix px(cfg.window, cfg.channels);
    for (std::size_t r = 0; r < cfg.window; ++r)
      for (std::size_t c = 0; c < cfg.channels; ++c)
        px(r, c) = feature ? x(r, perm[c]) : x(perm[r], c);
    const auto out = run(px, feature);
    for (std::size_t r = 0; r < cfg.window; ++r)
      for (std::size_t c = 0; c < cfg.channels; ++c) {
        const double expect = feature ? base.at(r, perm[c]) : base.at(perm[r], c);
        CHECK(std::abs(out.at(r, c) - expect) < 1e-12);
      }
  }
  // A zero window maps to act(0) = 0 under tanh.
  const auto zero = run(Matrix(cfg.window, cfg.channels), true);
  for (double v : zero.data()) CHECK(v == 0.0);
}

TEST_CASE("single-row window has unit temporal attention") {
  const auto cfg = toy(1, 4, 2);
  const auto p = MGatParams::init(cfg, 1);
  tn::Tape t;
  auto bp = bind(t, p, nullptr);
  auto out = model_forward(t, bp, cfg, random_window(cfg, 2), Mode::eval, nullptr);
  CHECK(out.temporal_attention.value()[0] == 1.0);
}

TEST_CASE("fuse") {
  tn::Tape t;
  auto a = t.constant(Tensor({1, 2}, {1, 2}));
  auto b = t.constant(Tensor({1, 2}, {3, 4}));
  auto c = t.constant(Tensor({1, 2}, {5, 6}));
  CHECK(fuse(a, b, c, {1, 1, 1}).value() == Tensor({1, 6}, {1, 2, 3, 4, 5, 6}));
  CHECK(fuse(a, b, c, {0.5, 1, 0.5}).value() == Tensor({1, 6}, {0.5, 1, 3, 4, 2.5, 3}));
  CHECK(fuse(a, b, c, {0, 1, 0}).value() == Tensor({1, 6}, {0, 0, 3, 4, 0, 0}));
}

TEST_CASE("LSTM") {
  SUBCASE("zero parameters give a zero state") {
    for (std::size_t m : {3, 6}) {
      const auto cfg = toy(m, 2, 4);
      const auto p = MGatParams::zeros(cfg);
      tn::Tape t;
      auto bp = bind(t, p, nullptr);
      Tensor seq({m, cfg.lstm_input()});
      for (auto& v : seq.data()) v = 0.7;
      for (double v : lstm_forward(t.constant(seq), bp).value().data()) CHECK(v == 0.0);
    }
  }
  SUBCASE("one step with scalar weights") {
    const auto cfg = toy(1, 1, 1);
    auto p = MGatParams::zeros(cfg);
    const double x[3] = {0.3, -0.5, 0.8};
    const double w[4][3] = {{0.1, 0.2, 0.3}, {-0.4, 0.5, 0.1}, {0.2, 0.2, -0.6}, {0.9, -0.3, 0.4}};
    const double b[4] = {0.05, -0.1, 0.2, 0.3};
    for (int g = 0; g < 4; ++g) {
      for (int d = 0; d < 3; ++d) p.lstm.W[g][d] = w[g][d];
      p.lstm.b[g][0] = b[g];
      p.lstm.U[g][0] = 0.7;  // irrelevant from zero state
    }
    tn::Tape t;
    auto bp = bind(t, p, nullptr);
    const double h = lstm_forward(t.constant(Tensor({1, 3}, {x[0], x[1], x[2]})), bp).value()[0];
    double z[4];
    for (int g = 0; g < 4; ++g) z[g] = w[g][0] * x[0] + w[g][1] * x[1] + w[g][2] * x[2] + b[g];
    const double i = sigmoid(z[1]), o = sigmoid(z[2]), c = i * std::tanh(z[3]);
    CHECK(std::abs(h - o * std::tanh(c)) < 1e-15);
  }
}

TEST_CASE("model forward") {
  auto cfg = toy();
  cfg.classes = 3;
  const auto p = MGatParams::init(cfg, 3);
  const auto w = random_window(cfg, 8);
  CHECK(predict_logits(p, w).size() == 3);
  CHECK(predict_logits(p, w) == predict_logits(p, w));
  Matrix wrong(cfg.window + 1, cfg.channels);
  CHECK_THROWS_WITH_AS(predict_logits(p, wrong), doctest::Contains("model input"), ShapeError);

  tn::Tape t;
  auto bp = bind(t, p, nullptr);
  auto out = model_forward(t, bp, cfg, w, Mode::eval, nullptr);
  for (auto* a : {&out.feature_attention, &out.temporal_attention}) {
    const auto& v = a->value();
    for (std::size_t r = 0; r < v.rows(); ++r) {
      double s = 0;
      for (std::size_t c = 0; c < v.cols(); ++c) s += v.at(r, c);
      CHECK(std::abs(s - 1.0) <= 1e-12);
    }
  }
  CHECK_THROWS_AS(model_forward(t, bp, cfg, w, Mode::train, nullptr), InvalidArgument);
}

TEST_CASE("disabled views leave their attention unset") {
  auto cfg = toy();
  cfg.feature_gat = false;
  const auto p = MGatParams::init(cfg, 3);
  tn::Tape t;
  auto bp = bind(t, p, nullptr);
  auto out = model_forward(t, bp, cfg, random_window(cfg, 1), Mode::eval, nullptr);
  CHECK_FALSE(out.feature_attention.valid());
  CHECK(out.temporal_attention.valid());
}

TEST_CASE("gradients of the full model match central differences") {
  const auto r = oracle::model_gradient_check(toy(), 17, 1e-5);
  CAPTURE(r.worst);
  CHECK(r.max_rel_error < 1e-4);
  CHECK(r.parameters == MGatParams::init(toy(), 17).parameter_count());
}

TEST_CASE("weighted cross-entropy") {
  tn::Tape t;
  auto z = t.constant(Tensor({1, 2}, {0, 0}));
  const std::vector<double> ones = {1, 1}, two = {2, 1};
  CHECK(weighted_ce_loss(z, 0, ones).value()[0] == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  CHECK(weighted_ce_loss(z, 0, two).value()[0] == doctest::Approx(2 * std::log(2.0)).epsilon(1e-15));
  auto l = t.constant(Tensor({1, 2}, {3, 1}));
  CHECK(weighted_ce_loss(l, 1, ones).value()[0] == doctest::Approx(-1 + std::log(std::exp(3.0) + std::exp(1.0))).epsilon(1e-15));
  CHECK(weighted_ce_loss(t.constant(Tensor({1, 2}, {800, -800})), 1, ones).value()[0] == doctest::Approx(1600));
  CHECK_THROWS_AS(weighted_ce_loss(z, 2, ones), InvalidArgument);
  const std::vector<double> bad = {0, 1};
  CHECK_THROWS_AS(weighted_ce_loss(z, 0, bad), InvalidArgument);
}

TEST_CASE("parameter layout") {
  const auto cfg = toy();
  const auto p = MGatParams::init(cfg, 1);
  const auto named = p.named();
  CHECK(named.front().first == "feature_gat.W");
  CHECK(named.back().first == "head.b");
  CHECK(named.size() == 18);
  // Forget-gate bias starts at 1, the others at 0.
  for (double v : p.lstm.b[0].data()) CHECK(v == 1.0);
  for (double v : p.lstm.b[1].data()) CHECK(v == 0.0);
  CHECK(MGatParams::init(cfg, 1) == p);
  CHECK_FALSE(MGatParams::init(cfg, 2) == p);
}

}
