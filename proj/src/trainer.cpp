#include "hedmod/trainer.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>

#include "hedmod/checkpoint.hpp"
#include "hedmod/error.hpp"
#include "hedmod/optim.hpp"
#include "hedmod/random.hpp"

namespace hedmod {

void TrainConfig::validate() const {
  auto fail = [](const std::string& msg) { throw Error(ErrorKind::kInvalidArgument, msg); };
  if (!(lr >= 0.0) || !std::isfinite(lr)) fail("lr must be a finite non-negative number");
  if (!(beta1 >= 0.0 && beta1 < 1.0)) fail("beta1 must lie in [0, 1)");
  if (!(beta2 >= 0.0 && beta2 < 1.0)) fail("beta2 must lie in [0, 1)");
  if (!(eps > 0.0)) fail("eps must be positive");
  if (batch_size == 0) fail("batch_size must be at least 1");
  if (validate_every == 0) fail("validate_every must be at least 1");
  if (std::isnan(grad_clip_norm)) fail("grad_clip_norm must be a number");
  if (!(dropout >= 0.0 && dropout < 1.0)) fail("dropout must lie in [0, 1)");
}

namespace {

std::vector<std::vector<int>> generated_templates(Model& model,
                                                  const std::vector<const EncodedExample*>& batch) {
  std::vector<std::vector<int>> out;
  for (const auto* ex : batch) {
    const Tokens t = model.generate_template(*ex, DecodeMode::greedy(), model.config().max_template_length);
    out.push_back(template_to_ids(t, model.vocabs().templ));
  }
  return out;
}

}  // namespace

double evaluate_loss(Model& model, const std::vector<EncodedExample>& data, std::size_t batch_size,
                     bool include_description) {
  if (data.empty()) throw Error(ErrorKind::kInvalidArgument, "evaluate_loss: empty data");
  if (batch_size == 0) throw Error(ErrorKind::kInvalidArgument, "batch_size must be at least 1");
  double total = 0.0;
  for (std::size_t start = 0; start < data.size(); start += batch_size) {
    std::vector<const EncodedExample*> batch;
    for (std::size_t i = start; i < std::min(data.size(), start + batch_size); ++i) batch.push_back(&data[i]);
    ad::Graph g;
    g.set_recording(false);
    const BatchLoss loss = model.joint_loss(g, batch, include_description);
    total += loss.l1 + loss.l2;
  }
  return total / static_cast<double>(data.size());
}

TrainResult train(Model& model, const std::vector<EncodedExample>& train_set,
                  const std::vector<EncodedExample>& valid_set, const TrainConfig& config,
                  const TrainOutputs& outputs, const EpochCallback& on_epoch) {
  config.validate();
  if (train_set.empty()) throw Error(ErrorKind::kInvalidArgument, "train: empty training set");
  ParameterStore& store = model.parameters();
  Adam adam(store, AdamConfig{config.lr, config.beta1, config.beta2, config.eps});
  Rng rng(config.seed);
  model.set_dropout(config.dropout, config.seed + 1);
  struct DropoutOff {
    Model& m;
    ~DropoutOff() { m.set_dropout(0.0, 0); }
  } dropout_off{model};

  std::ofstream log;
  if (!outputs.log_path.empty()) {
    log.open(outputs.log_path, std::ios::trunc);
    if (!log) throw Error(ErrorKind::kIo, "cannot write " + outputs.log_path);
    log << "epoch,train_loss,valid_loss,seconds\n" << std::setprecision(10);
  }

  TrainResult result;
  result.best_loss = std::numeric_limits<double>::infinity();
  Snapshot best = store.snapshot();
  std::size_t stale = 0;
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);

  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    const Snapshot epoch_start = store.snapshot();
    rng.shuffle(order);
    double epoch_loss = 0.0;
    try {
      for (std::size_t b = 0; b < order.size(); b += config.batch_size) {
        std::vector<const EncodedExample*> batch;
        for (std::size_t i = b; i < std::min(order.size(), b + config.batch_size); ++i) {
          batch.push_back(&train_set[order[i]]);
        }
        std::vector<std::vector<int>> templates;
        if (config.train_description && config.stage2_templates == TemplateSource::kGenerated) {
          templates = generated_templates(model, batch);
        }
        store.zero_grad();
        ad::Graph g;
        const BatchLoss loss = model.joint_loss(g, batch, config.train_description,
                                                templates.empty() ? nullptr : &templates);
        g.backward(loss.total);
        if (config.grad_clip_norm > 0.0) clip_grad_norm(store, config.grad_clip_norm);
        adam.step();
        const double value = loss.total.value()[0];
        result.step_losses.push_back(value);
        epoch_loss += value * static_cast<double>(batch.size());
      }
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::kNumeric) throw;
      store.restore(epoch_start);
      if (!outputs.checkpoint_path.empty()) save_checkpoint(outputs.checkpoint_path, store);
      throw Error(ErrorKind::kNumeric, "training diverged in epoch " + std::to_string(epoch) + " (" +
                                           e.what() + "); kept the parameters from the end of epoch " +
                                           std::to_string(epoch - 1));
    }

    EpochStats stats;
    stats.epoch = epoch;
    stats.train_loss = epoch_loss / static_cast<double>(train_set.size());
    stats.valid_loss = std::numeric_limits<double>::quiet_NaN();
    const bool validate_now = epoch % config.validate_every == 0 || epoch == config.max_epochs;
    if (validate_now && !valid_set.empty()) {
      stats.valid_loss = evaluate_loss(model, valid_set, config.batch_size, config.train_description);
    }
    stats.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    result.epochs.push_back(stats);
    if (log) {
      log << stats.epoch << ',' << stats.train_loss << ',';
      if (!std::isnan(stats.valid_loss)) log << stats.valid_loss;
      log << ',' << stats.seconds << '\n' << std::flush;
    }

    if (validate_now) {
      const double score = valid_set.empty() ? stats.train_loss : stats.valid_loss;
      if (score < result.best_loss) {
        result.best_loss = score;
        result.best_epoch = epoch;
        best = store.snapshot();
        stale = 0;
        if (!outputs.checkpoint_path.empty()) save_checkpoint(outputs.checkpoint_path, store);
      } else if (config.patience > 0 && ++stale >= config.patience) {
        result.early_stopped = true;
      }
    }
    if (on_epoch && !on_epoch(stats, model)) result.stopped_by_callback = true;
    if (result.early_stopped || result.stopped_by_callback) break;
  }
  if (result.best_epoch > 0 && !result.stopped_by_callback) store.restore(best);
  return result;
}

}  // namespace hedmod
