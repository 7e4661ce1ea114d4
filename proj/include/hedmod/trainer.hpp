#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "hedmod/model.hpp"

namespace hedmod {

enum class TemplateSource { kGold, kGenerated };

struct TrainConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::size_t batch_size = 16;
  std::size_t max_epochs = 50;
  std::uint64_t seed = 1;
  double grad_clip_norm = 5.0;  // <= 0 disables clipping
  std::size_t validate_every = 1;
  std::size_t patience = 5;  // validations without improvement; 0 disables early stopping
  double dropout = 0.0;  // embedding dropout during training
  bool train_description = true;
  TemplateSource stage2_templates = TemplateSource::kGold;

  /// Throws Error(kInvalidArgument) on an out-of-range field.
  void validate() const;
};

struct EpochStats {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double valid_loss = 0.0;  // NaN when not validated this epoch
  double seconds = 0.0;
};

struct TrainResult {
  std::vector<EpochStats> epochs;
  std::vector<double> step_losses;
  std::size_t best_epoch = 0;
  double best_loss = 0.0;  // validation loss, or training loss without a validation set
  bool early_stopped = false;
  bool stopped_by_callback = false;
};

/// Return false to stop after this epoch; the model then keeps its current
/// parameters instead of the best ones.
using EpochCallback = std::function<bool(const EpochStats&, Model&)>;

struct TrainOutputs {
  std::string checkpoint_path;  // best checkpoint; empty = keep in memory only
  std::string log_path;         // CSV epoch,train_loss,valid_loss,seconds
};

/// Mean per-example loss (L1 + L2, or L1 alone) without recording gradients.
double evaluate_loss(Model& model, const std::vector<EncodedExample>& data, std::size_t batch_size,
                     bool include_description = true);

/// Adam on the joint loss with seeded shuffling. The model ends holding the
/// best parameters. A non-finite loss or gradient restores the parameters of
/// the last completed epoch, writes them to the checkpoint path and throws
/// Error(kNumeric).
TrainResult train(Model& model, const std::vector<EncodedExample>& train_set,
                  const std::vector<EncodedExample>& valid_set, const TrainConfig& config,
                  const TrainOutputs& outputs = {}, const EpochCallback& on_epoch = {});

}  // namespace hedmod
