// SPDX-License-Identifier: Apache-2.0
#include "training.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <map>
#include <mutex>
#include <thread>

#include "error.hpp"
#include "io.hpp"

namespace bgpad::training {

int class_of(int raw_label, Task task) {
  if (raw_label < 0) throw InvalidArgument("negative label " + std::to_string(raw_label));
  return task == Task::binary ? (raw_label > 0 ? 1 : 0) : raw_label;
}

std::vector<int> class_ids(std::span<const augment::WindowSample> windows, Task task) {
  std::vector<int> out;
  out.reserve(windows.size());
  for (const auto& w : windows) out.push_back(class_of(w.label, task));
  return out;
}

void SplitConfig::validate() const {
  for (double r : ratios)
    if (!(r > 0.0) || !std::isfinite(r)) throw InvalidArgument("split ratios must be positive");
}

namespace {

void shuffle(std::vector<std::size_t>& v, std::mt19937_64& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(i));
    std::swap(v[i - 1], v[j]);
  }
}

void deal(const std::vector<std::size_t>& group, const std::array<double, 3>& ratios, Split& out) {
  const double total = ratios[0] + ratios[1] + ratios[2];
  const std::size_t n = group.size();
  std::array<std::size_t, 3> counts{};
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < 3; ++i) {
    counts[i] = static_cast<std::size_t>(std::floor(static_cast<double>(n) * ratios[i] / total + 1e-9));
    assigned += counts[i];
  }
  for (std::size_t i = 0; assigned < n; i = (i + 1) % 3, ++assigned) ++counts[i];
  std::size_t pos = 0;
  std::array<std::vector<std::size_t>*, 3> dst{&out.train, &out.val, &out.test};
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t c = 0; c < counts[i]; ++c) dst[i]->push_back(group[pos++]);
}

}  // namespace

Split split_indices(std::span<const int> classes, const SplitConfig& cfg) {
  cfg.validate();
  if (classes.empty()) throw InvalidArgument("cannot split an empty window set");
  Split out;
  if (cfg.chronological) {
    std::vector<std::size_t> all(classes.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    deal(all, cfg.ratios, out);
    return out;
  }
  std::map<int, std::vector<std::size_t>> groups;
  if (cfg.stratified) {
    for (std::size_t i = 0; i < classes.size(); ++i) groups[classes[i]].push_back(i);
    for (const auto& [c, g] : groups)
      if (g.size() < 10)
        throw InvalidArgument("class " + std::to_string(c) + " has only " + std::to_string(g.size()) +
                              " windows; a stratified split needs at least 10");
  } else {
    auto& g = groups[0];
    for (std::size_t i = 0; i < classes.size(); ++i) g.push_back(i);
  }
  for (auto& [c, g] : groups) {
    std::mt19937_64 rng(derive_seed(cfg.seed, 0x5b117, static_cast<std::uint64_t>(c)));
    shuffle(g, rng);
    deal(g, cfg.ratios, out);
  }
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.val.begin(), out.val.end());
  std::sort(out.test.begin(), out.test.end());
  return out;
}

// ---------------------------------------------------------------------------

void TrainConfig::validate() const {
  if (!(lr >= 0.0) || !std::isfinite(lr)) throw InvalidArgument("learning rate must be finite and non-negative");
  if (max_epochs == 0) throw InvalidArgument("max epochs must be at least 1");
  if (batch_size == 0) throw InvalidArgument("batch size must be positive");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw InvalidArgument("dropout must be in [0, 1)");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0) || !(eps > 0.0))
    throw InvalidArgument("invalid optimizer moments");
}

std::vector<double> inverse_frequency_weights(std::span<const int> classes, std::size_t num_classes) {
  std::vector<std::size_t> counts(num_classes, 0);
  for (int c : classes) {
    if (c < 0 || static_cast<std::size_t>(c) >= num_classes) throw InvalidArgument("class id out of range");
    ++counts[static_cast<std::size_t>(c)];
  }
  std::vector<double> w(num_classes, 1.0);
  const double n = static_cast<double>(classes.size());
  for (std::size_t c = 0; c < num_classes; ++c)
    if (counts[c]) w[c] = n / (static_cast<double>(num_classes) * static_cast<double>(counts[c]));
  return w;
}

void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& fn) {
  if (jobs <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  const std::size_t workers = std::min(jobs, n);
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t i; (i = next.fetch_add(1)) < n;) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
          next = n;
        }
      }
    });
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

namespace {

double sample_loss(const model::MGatParams& params, const augment::WindowSample& w, int y,
                   std::span<const double> class_weights, model::Gradients& grads, std::uint64_t dropout_seed) {
  tensor::Tape tape;
  auto bp = model::bind(tape, params, &grads);
  std::mt19937_64 rng(dropout_seed);
  auto out = model::model_forward(tape, bp, params.config, w.values, model::Mode::train, &rng);
  auto loss = model::weighted_ce_loss(out.logits, static_cast<std::size_t>(y), class_weights);
  const double value = loss.value()[0];
  tape.backward(loss);
  return value;
}

struct ValidationPass {
  std::vector<int> pred;
  double loss = 0.0;  // mean weighted cross-entropy
};

ValidationPass validation_pass(const model::MGatParams& params, std::span<const augment::WindowSample> windows,
                               std::span<const int> truth, std::span<const double> class_weights, std::size_t jobs) {
  ValidationPass out;
  out.pred.assign(windows.size(), 0);
  std::vector<double> losses(windows.size(), 0.0);
  parallel_for(windows.size(), jobs, [&](std::size_t i) {
    const auto logits = model::predict_logits(params, windows[i].values);
    std::size_t best = 0;
    for (std::size_t j = 1; j < logits.size(); ++j)
      if (logits[j] > logits[best]) best = j;
    out.pred[i] = static_cast<int>(best);
    const double mx = logits[best];
    double z = 0.0;
    for (double l : logits) z += std::exp(l - mx);
    const auto y = static_cast<std::size_t>(truth[i]);
    losses[i] = class_weights[y] * (mx + std::log(z) - logits[y]);
  });
  for (double l : losses) out.loss += l;
  if (!windows.empty()) out.loss /= static_cast<double>(windows.size());
  return out;
}

class StepRule {
 public:
  StepRule(const TrainConfig& cfg, const model::MGatParams& p)
      : cfg_(cfg), m_(model::Gradients::like(p)), v_(model::Gradients::like(p)) {}

  void step(model::MGatParams& p, const model::Gradients& g) {
    ++t_;
    auto slots = p.named();
    const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (std::size_t i = 0; i < slots.size(); ++i) {
      auto data = slots[i].second->data();
      const auto& gi = g.buffers[i];
      if (cfg_.optimizer == Optimizer::sgd) {
        for (std::size_t j = 0; j < data.size(); ++j) data[j] -= cfg_.lr * gi[j];
        continue;
      }
      auto& mi = m_.buffers[i];
      auto& vi = v_.buffers[i];
      for (std::size_t j = 0; j < data.size(); ++j) {
        mi[j] = cfg_.beta1 * mi[j] + (1.0 - cfg_.beta1) * gi[j];
        vi[j] = cfg_.beta2 * vi[j] + (1.0 - cfg_.beta2) * gi[j] * gi[j];
        data[j] -= cfg_.lr * (mi[j] / c1) / (std::sqrt(vi[j] / c2) + cfg_.eps);
      }
    }
  }

 private:
  const TrainConfig& cfg_;
  model::Gradients m_, v_;
  std::uint64_t t_ = 0;
};

}  // namespace

TrainResult train(std::span<const augment::WindowSample> train_set, std::span<const augment::WindowSample> val_set,
                  const model::ModelConfig& model_cfg, const TrainConfig& cfg, Task task, const EpochCallback& on_epoch) {
  cfg.validate();
  if (train_set.empty()) throw InvalidArgument("training set is empty");
  if (val_set.empty()) throw InvalidArgument("validation set is empty");
  model::ModelConfig mc = model_cfg;
  mc.dropout = cfg.dropout;
  mc.validate();

  const auto train_classes = class_ids(train_set, task);
  for (int c : train_classes)
    if (static_cast<std::size_t>(c) >= mc.classes)
      throw InvalidArgument("label " + std::to_string(c) + " does not fit a " + std::to_string(mc.classes) + "-class model");

  TrainResult result;
  result.class_weights = cfg.class_weights.empty() ? inverse_frequency_weights(train_classes, mc.classes) : cfg.class_weights;
  if (result.class_weights.size() != mc.classes) throw InvalidArgument("class weight count does not match class count");

  auto params = model::MGatParams::init(mc, derive_seed(cfg.seed, 0x1417));
  StepRule opt(cfg, params);
  auto total = model::Gradients::like(params);
  std::vector<model::Gradients> slots;
  if (cfg.jobs > 1) slots.assign(std::min(cfg.batch_size, train_set.size()), total);

  std::vector<std::size_t> order(train_set.size());
  double best_f1 = -1.0;
  double best_loss = std::numeric_limits<double>::infinity();
  std::size_t since_best = 0;
  result.params = params;

  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::mt19937_64 shuffle_rng(derive_seed(cfg.seed, 0x0bde5, epoch));
    shuffle(order, shuffle_rng);

    double loss_sum = 0.0;
    for (std::size_t begin = 0; begin < order.size(); begin += cfg.batch_size) {
      const std::size_t b = std::min(cfg.batch_size, order.size() - begin);
      std::vector<double> losses(b, 0.0);
      total.zero();
      const auto run = [&](std::size_t s, model::Gradients& sink) {
        const std::size_t idx = order[begin + s];
        losses[s] = sample_loss(params, train_set[idx], train_classes[idx], result.class_weights, sink,
                                derive_seed(cfg.seed, epoch, idx));
      };
      if (slots.empty()) {
        for (std::size_t s = 0; s < b; ++s) run(s, total);
      } else {
        parallel_for(b, cfg.jobs, [&](std::size_t s) {
          slots[s].zero();
          run(s, slots[s]);
        });
        // Summing in sample order keeps results independent of the thread count.
        for (std::size_t s = 0; s < b; ++s) total.add(slots[s]);
      }
      for (double l : losses) {
        if (!std::isfinite(l)) throw NumericError("training diverged at epoch " + std::to_string(epoch) + ": loss is not finite");
        loss_sum += l;
      }
      const double inv = 1.0 / static_cast<double>(b);
      for (auto& buf : total.buffers)
        for (auto& g : buf) g *= inv;
      opt.step(params, total);
    }

    const auto val_truth = class_ids(val_set, task);
    const auto val = validation_pass(params, val_set, val_truth, result.class_weights, cfg.jobs);
    const auto s = metrics::scores(metrics::ConfusionMatrix::from(val_truth, val.pred, mc.classes));
    EpochLog log{epoch, loss_sum / static_cast<double>(train_set.size()), s.f1, s.accuracy, val.loss};
    result.log.push_back(log);
    if (on_epoch) on_epoch(log);

    // A small validation split saturates F1 early; equal F1 then goes to
    // the lower validation loss. Patience still counts F1 gains only.
    const bool gained = log.val_f1 > best_f1;
    if (gained || (log.val_f1 == best_f1 && log.val_loss < best_loss)) {
      result.params = params;
      result.best_epoch = epoch;
      best_loss = log.val_loss;
    }
    if (gained) {
      best_f1 = log.val_f1;
      since_best = 0;
    } else if (cfg.patience && ++since_best >= cfg.patience) {
      break;
    }
  }
  return result;
}

std::vector<int> predict(const model::MGatParams& params, std::span<const augment::WindowSample> windows, std::size_t jobs) {
  std::vector<int> out(windows.size(), 0);
  parallel_for(windows.size(), jobs,
               [&](std::size_t i) { out[i] = static_cast<int>(model::predict_class(params, windows[i].values)); });
  return out;
}

metrics::EvalReport evaluate(const model::MGatParams& params, std::span<const augment::WindowSample> windows, Task task,
                             std::size_t jobs) {
  if (windows.empty()) throw InvalidArgument("evaluation set is empty");
  const auto pred = predict(params, windows, jobs);
  const auto truth = class_ids(windows, task);
  std::vector<int> raw;
  raw.reserve(windows.size());
  for (const auto& w : windows) raw.push_back(w.label);
  return metrics::make_report(truth, pred, raw, params.config.classes);
}

std::string format_log_csv(std::span<const EpochLog> log) {
  std::string out = "epoch,train_loss,val_f1,val_accuracy,val_loss\n";
  for (const auto& e : log)
    out += std::to_string(e.epoch) + "," + io::format_double(e.train_loss) + "," + io::format_double(e.val_f1) + "," +
           io::format_double(e.val_accuracy) + "," + io::format_double(e.val_loss) + "\n";
  return out;
}

}  // namespace bgpad::training
