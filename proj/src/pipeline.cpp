#include "hedmod/pipeline.hpp"

#include <exception>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "hedmod/annotator.hpp"
#include "hedmod/checkpoint.hpp"
#include "hedmod/error.hpp"
#include "hedmod/synth.hpp"

namespace hedmod {

namespace fs = std::filesystem;

PrepareSummary prepare_dataset(const std::vector<Entity>& entities, const std::string& out_dir,
                               const PrepareOptions& options) {
  if (options.min_statements == 0) throw Error(ErrorKind::kInvalidArgument, "min-statements must be at least 1");
  if (options.max_position == 0) throw Error(ErrorKind::kInvalidArgument, "max-position must be at least 1");
  PrepareSummary summary;
  summary.loaded = entities.size();
  std::vector<Entity> kept = filter_entities(entities, options.min_statements);
  summary.kept = kept.size();
  for (auto& e : kept) e.gold_template = annotate(e.description).template_tokens;
  DatasetSplit split = split_dataset(std::move(kept), options.seed);
  VocabSet vocabs = build_vocabs(split.train, options.value_vocab_size, options.target_vocab_size,
                                 Lexicon::english(), options.max_position);
  if (!options.target_exclude.empty()) vocabs.target = without_tokens(vocabs.target, options.target_exclude);

  fs::create_directories(out_dir);
  const fs::path base(out_dir);
  write_jsonl((base / "train.jsonl").string(), split.train);
  write_jsonl((base / "valid.jsonl").string(), split.valid);
  write_jsonl((base / "test.jsonl").string(), split.test);
  vocabs.save((base / kVocabDir).string());

  std::ofstream cfg(base / "prepare.txt", std::ios::trunc);
  if (!cfg) throw Error(ErrorKind::kIo, "cannot write " + (base / "prepare.txt").string());
  cfg << "seed = " << options.seed << "\nmin_statements = " << options.min_statements
      << "\nvalue_vocab_size = " << options.value_vocab_size << "\ntarget_vocab_size = " << options.target_vocab_size
      << "\nmax_position = " << options.max_position << "\ntarget_exclude = " << options.target_exclude.size()
      << "\n";

  summary.train = split.train.size();
  summary.valid = split.valid.size();
  summary.test = split.test.size();
  return summary;
}

PreparedData load_prepared(const std::string& dir, std::size_t max_position) {
  const fs::path base(dir);
  if (!fs::is_directory(base)) throw Error(ErrorKind::kIo, "no data directory " + dir);
  PreparedData d;
  d.split.train = load_jsonl((base / "train.jsonl").string());
  d.split.valid = load_jsonl((base / "valid.jsonl").string());
  d.split.test = load_jsonl((base / "test.jsonl").string());
  d.vocabs = VocabSet::load((base / kVocabDir).string(), max_position);
  return d;
}

std::vector<EncodedExample> encode_all(const std::vector<Entity>& entities, const VocabSet& vocabs,
                                       std::size_t max_position) {
  std::vector<EncodedExample> out;
  out.reserve(entities.size());
  for (const auto& e : entities) out.push_back(encode_example(e, vocabs, max_position));
  return out;
}

TrainResult run_training(const RunConfig& config, const std::string& data_dir, const std::string& out_dir,
                         const EpochCallback& on_epoch) {
  config.validate();
  const std::size_t max_position = config.model.max_position;
  PreparedData data = load_prepared(data_dir, max_position);
  if (data.split.train.empty()) throw Error(ErrorKind::kData, data_dir + ": empty training split");
  const auto train_set = encode_all(data.split.train, data.vocabs, max_position);
  const auto valid_set = encode_all(data.split.valid, data.vocabs, max_position);

  fs::create_directories(out_dir);
  const fs::path base(out_dir);
  RunConfig resolved = config;
  resolved.data_dir = data_dir;
  resolved.out_dir = out_dir;
  resolved.save((base / kConfigFile).string());
  data.vocabs.save((base / kVocabDir).string());

  Model model(data.vocabs, config.model);
  return train(model, train_set, valid_set, config.train,
               TrainOutputs{(base / kCheckpointFile).string(), (base / kLogFile).string()}, on_epoch);
}

std::unique_ptr<Model> load_model(const std::string& checkpoint_path) {
  const fs::path dir = fs::path(checkpoint_path).parent_path();
  const RunConfig config = RunConfig::load((dir / kConfigFile).string());
  VocabSet vocabs = VocabSet::load((dir / kVocabDir).string(), config.model.max_position);
  const Snapshot snapshot = load_checkpoint(checkpoint_path);
  auto model = std::make_unique<Model>(std::move(vocabs), config.model);
  model->parameters().restore(snapshot);
  return model;
}

std::vector<Prediction> predict(Model& model, const std::vector<Entity>& entities, DecodeMode mode,
                                const std::optional<Tokens>& template_override) {
  const auto examples = encode_all(entities, model.vocabs(), model.config().max_position);
  std::vector<Prediction> out(examples.size());
  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < examples.size(); ++i) {
    try {
      Generation gen = model.generate(examples[i], mode, template_override);
      out[i] = Prediction{examples[i].entity_id, std::move(gen.templ), std::move(gen.description)};
    } catch (...) {
#pragma omp critical
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

void write_predictions(const std::string& path, const std::vector<Prediction>& predictions) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path);
  for (const auto& p : predictions) {
    nlohmann::json obj;
    obj["entity_id"] = p.entity_id;
    obj["template"] = join(p.templ);
    obj["hypothesis"] = join(p.description);
    out << obj.dump() << '\n';
  }
  if (!out) throw Error(ErrorKind::kIo, "write failed for " + path);
}

}  // namespace hedmod
