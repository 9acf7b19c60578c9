// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>

#include "error.hpp"
#include "io.hpp"
#include "training.hpp"

using namespace bgpad;
using namespace bgpad::training;

namespace {

/// Windows of `channels` noise where anomalies scale channel 0 by 10, then
/// squashed into [0, 1] like normalized data.
std::vector<augment::WindowSample> separable(std::size_t n, std::size_t m, std::size_t channels, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.05, 0.1);
  std::vector<augment::WindowSample> out;
  for (std::size_t i = 0; i < n; ++i) {
    augment::WindowSample w;
    w.values = Matrix(m, channels);
    w.label = i % 4 == 0 ? 1 : 0;
    w.start = i;
    for (auto& v : w.values.data()) v = u(rng);
    if (w.label)
      for (std::size_t r = 0; r < m; ++r) w.values(r, 0) *= 10;
    out.push_back(std::move(w));
  }
  return out;
}

model::ModelConfig small_model() {
  model::ModelConfig c;
  c.window = 3;
  c.channels = 4;
  c.hidden = 4;
  return c;
}

}  // namespace

TEST_SUITE("split") {

TEST_CASE("single class 6:1:3") {
  const std::vector<int> cls(100, 0);
  SplitConfig cfg;
  const auto s = split_indices(cls, cfg);
  CHECK(s.train.size() == 60);
  CHECK(s.val.size() == 10);
  CHECK(s.test.size() == 30);
}

TEST_CASE("stratified per class") {
  std::vector<int> cls(100, 0);
  std::fill(cls.begin() + 50, cls.end(), 1);
  SplitConfig cfg;
  cfg.seed = 4;
  const auto s = split_indices(cls, cfg);
  const auto count = [&](const std::vector<std::size_t>& idx, int c) {
    return std::count_if(idx.begin(), idx.end(), [&](std::size_t i) { return cls[i] == c; });
  };
  for (int c : {0, 1}) {
    CHECK(count(s.train, c) == 30);
    CHECK(count(s.val, c) == 5);
    CHECK(count(s.test, c) == 15);
  }
  const auto again = split_indices(cls, cfg);
  CHECK(again.train == s.train);
  CHECK(again.test == s.test);
  std::set<std::size_t> all(s.train.begin(), s.train.end());
  all.insert(s.val.begin(), s.val.end());
  all.insert(s.test.begin(), s.test.end());
  CHECK(all.size() == 100);
}

TEST_CASE("remainder dealt train, val, test") {
  const std::vector<int> cls(13, 0);
  const auto s = split_indices(cls, {});
  // floor shares 7/1/3 leave two: one to train, one to val.
  CHECK(s.train.size() == 8);
  CHECK(s.val.size() == 2);
  CHECK(s.test.size() == 3);
}

TEST_CASE("chronological blocks") {
  const std::vector<int> cls(20, 0);
  SplitConfig cfg;
  cfg.chronological = true;
  cfg.stratified = false;
  const auto s = split_indices(cls, cfg);
  CHECK(s.train.front() == 0);
  CHECK(s.train.back() + 1 == s.val.front());
  CHECK(s.val.back() + 1 == s.test.front());
}

TEST_CASE("too few windows in a class") {
  std::vector<int> cls(30, 0);
  cls[0] = 1;
  CHECK_THROWS_AS(split_indices(cls, {}), InvalidArgument);
}

TEST_CASE("inverse frequency weights") {
  const std::vector<int> cls = {0, 0, 0, 1};
  const auto w = inverse_frequency_weights(cls, 3);
  CHECK(w[0] == doctest::Approx(4.0 / 9));
  CHECK(w[1] == doctest::Approx(4.0 / 3));
  CHECK(w[2] == 1.0);
}

}

TEST_SUITE("training") {

TEST_CASE("zero learning rate leaves parameters and loss unchanged") {
  const auto data = separable(24, 3, 4, 1);
  TrainConfig cfg;
  cfg.lr = 0.0;
  cfg.dropout = 0.0;
  cfg.max_epochs = 3;
  cfg.patience = 0;
  cfg.seed = 5;
  auto mc = small_model();
  mc.dropout = 0.0;
  const auto r = train(data, data, mc, cfg, Task::binary);
  CHECK(r.params == model::MGatParams::init(mc, derive_seed(5, 0x1417)));
  REQUIRE(r.log.size() == 3);
  // Shuffling reorders the loss sum, so equality holds up to rounding.
  CHECK(r.log[0].train_loss == doctest::Approx(r.log[1].train_loss).epsilon(1e-12));
  CHECK(r.log[1].train_loss == doctest::Approx(r.log[2].train_loss).epsilon(1e-12));
}

TEST_CASE("separable data reaches validation F1 of 1") {
  const auto data = separable(80, 3, 4, 2);
  const auto val = separable(40, 3, 4, 3);
  TrainConfig cfg;
  cfg.lr = 1e-2;
  cfg.max_epochs = 30;
  cfg.patience = 0;
  cfg.seed = 1;
  const auto r = train(data, val, small_model(), cfg, Task::binary);
  double best = 0;
  for (const auto& e : r.log) best = std::max(best, e.val_f1);
  CHECK(best == 1.0);
  CHECK(evaluate(r.params, val, Task::binary).scores.f1 == r.log[r.best_epoch - 1].val_f1);
}

TEST_CASE("same seed, same result, for any job count") {
  const auto data = separable(40, 3, 4, 4);
  TrainConfig cfg;
  cfg.lr = 1e-3;
  cfg.max_epochs = 2;
  cfg.seed = 9;
  cfg.batch_size = 8;
  const auto a = train(data, data, small_model(), cfg, Task::binary);
  const auto b = train(data, data, small_model(), cfg, Task::binary);
  cfg.jobs = 3;
  const auto c = train(data, data, small_model(), cfg, Task::binary);
  CHECK(a.params == b.params);
  CHECK(a.params == c.params);
  CHECK(format_log_csv(a.log) == format_log_csv(b.log));
  CHECK(format_log_csv(a.log) == format_log_csv(c.log));
}

TEST_CASE("early stopping restores the best epoch") {
  const auto data = separable(40, 3, 4, 6);
  TrainConfig cfg;
  cfg.lr = 1e-2;
  cfg.max_epochs = 40;
  cfg.patience = 2;
  const auto r = train(data, data, small_model(), cfg, Task::binary);
  CHECK(r.log.size() <= 40);
  double top = 0;
  for (const auto& e : r.log) top = std::max(top, e.val_f1);
  std::size_t first_top = 0, lowest = 0;
  for (const auto& e : r.log)
    if (e.val_f1 == top) {
      if (!first_top) first_top = e.epoch;
      if (!lowest || e.val_loss < r.log[lowest - 1].val_loss) lowest = e.epoch;
    }
  // Patience counts from the last F1 gain; ties on F1 go to the lower loss.
  CHECK(r.best_epoch == lowest);
  if (r.log.size() < 40) CHECK(r.log.size() == first_top + 2);
}

TEST_CASE("divergence names the epoch") {
  const auto data = separable(16, 3, 4, 7);
  TrainConfig cfg;
  cfg.lr = 1e300;
  cfg.optimizer = Optimizer::sgd;
  cfg.max_epochs = 5;
  CHECK_THROWS_WITH_AS(train(data, data, small_model(), cfg, Task::binary), doctest::Contains("diverged at epoch"),
                       NumericError);
}

TEST_CASE("config validation") {
  const auto data = separable(16, 3, 4, 7);
  TrainConfig cfg;
  cfg.max_epochs = 0;
  CHECK_THROWS_AS(train(data, data, small_model(), cfg, Task::binary), InvalidArgument);
  CHECK_THROWS_AS(train({}, data, small_model(), {}, Task::binary), InvalidArgument);
}

}
