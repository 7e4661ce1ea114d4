#pragma once

#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "hedmod/corpus.hpp"
#include "hedmod/model.hpp"
#include "hedmod/run_config.hpp"
#include "hedmod/trainer.hpp"

namespace hedmod {

struct PrepareOptions {
  std::uint64_t seed = 1;
  std::size_t min_statements = 5;
  std::size_t value_vocab_size = 10000;
  std::size_t target_vocab_size = 10000;
  std::size_t max_position = kDefaultMaxPosition;
  std::set<std::string> target_exclude;  // kept out of the target vocab
};

struct PrepareSummary {
  std::size_t loaded = 0;
  std::size_t kept = 0;
  std::size_t train = 0;
  std::size_t valid = 0;
  std::size_t test = 0;
};

/// Filter, annotate gold templates, split 8:1:1 and build vocabularies from
/// the training split. Writes {train,valid,test}.jsonl and vocab/ into `out_dir`.
PrepareSummary prepare_dataset(const std::vector<Entity>& entities, const std::string& out_dir,
                               const PrepareOptions& options);

struct PreparedData {
  DatasetSplit split;
  VocabSet vocabs;
};
PreparedData load_prepared(const std::string& dir, std::size_t max_position);

/// Entities with an empty infobox are reported as Error(kData).
std::vector<EncodedExample> encode_all(const std::vector<Entity>& entities, const VocabSet& vocabs,
                                       std::size_t max_position);

/// Files written next to a trained model.
inline constexpr const char* kCheckpointFile = "model.ckpt";
inline constexpr const char* kConfigFile = "config.txt";
inline constexpr const char* kLogFile = "train_log.csv";
inline constexpr const char* kVocabDir = "vocab";

/// Trains on `data_dir` and writes checkpoint, log, vocab and resolved config into `out_dir`.
TrainResult run_training(const RunConfig& config, const std::string& data_dir, const std::string& out_dir,
                         const EpochCallback& on_epoch = {});

/// Rebuilds a model from a checkpoint plus the config and vocab beside it.
std::unique_ptr<Model> load_model(const std::string& checkpoint_path);

struct Prediction {
  std::string entity_id;
  Tokens templ;
  Tokens description;
};

/// Runs both stages for every entity; entities are processed in parallel.
std::vector<Prediction> predict(Model& model, const std::vector<Entity>& entities, DecodeMode mode,
                                const std::optional<Tokens>& template_override = std::nullopt);
/// JSONL with entity_id, template and hypothesis.
void write_predictions(const std::string& path, const std::vector<Prediction>& predictions);

}  // namespace hedmod
