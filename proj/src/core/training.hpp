// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "augment.hpp"
#include "metrics.hpp"
#include "model.hpp"

namespace bgpad::training {

/// How raw window labels (event ids) map to model classes.
enum class Task {
  binary,      // 0 normal, any event -> 1
  multiclass,  // event id is the class id
};

int class_of(int raw_label, Task task);
std::vector<int> class_ids(std::span<const augment::WindowSample> windows, Task task);

struct SplitConfig {
  std::array<double, 3> ratios{6.0, 1.0, 3.0};  // train, val, test
  bool stratified = true;
  bool chronological = false;  // contiguous blocks in window order instead of a shuffle
  std::uint64_t seed = 0;

  void validate() const;
};

struct Split {
  std::vector<std::size_t> train, val, test;  // indices into the window list
};

/// Per class (or over everything when not stratified): floor of each ratio
/// share, the remainder dealt train -> val -> test in turn.
Split split_indices(std::span<const int> classes, const SplitConfig& cfg);

enum class Optimizer { adam, sgd };

struct TrainConfig {
  double lr = 1e-4;
  double dropout = 0.2;
  std::size_t max_epochs = 100;
  Optimizer optimizer = Optimizer::adam;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::size_t batch_size = 32;
  std::size_t patience = 10;  // epochs without a val-F1 improvement; 0 disables
  std::uint64_t seed = 0;
  std::vector<double> class_weights;  // empty: inverse class frequency of the train set
  std::size_t jobs = 1;

  void validate() const;
};

struct EpochLog {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_f1 = 0.0;
  double val_accuracy = 0.0;
  double val_loss = 0.0;  // mean weighted cross-entropy on the validation split
};

struct TrainResult {
  model::MGatParams params;  // best-validation epoch
  std::vector<EpochLog> log;
  std::size_t best_epoch = 0;
  std::vector<double> class_weights;
};

/// N / (C * N_c) per class; classes absent from the set get weight 1.
std::vector<double> inverse_frequency_weights(std::span<const int> classes, std::size_t num_classes);

using EpochCallback = std::function<void(const EpochLog&)>;

TrainResult train(std::span<const augment::WindowSample> train_set, std::span<const augment::WindowSample> val_set,
                  const model::ModelConfig& model_cfg, const TrainConfig& cfg, Task task,
                  const EpochCallback& on_epoch = {});

std::vector<int> predict(const model::MGatParams& params, std::span<const augment::WindowSample> windows,
                         std::size_t jobs = 1);

metrics::EvalReport evaluate(const model::MGatParams& params, std::span<const augment::WindowSample> windows, Task task,
                             std::size_t jobs = 1);

std::string format_log_csv(std::span<const EpochLog> log);

/// Runs fn(i) for i in [0, n) on up to `jobs` threads.
void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& fn);

}  // namespace bgpad::training
