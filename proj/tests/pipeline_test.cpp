#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <functional>
#include <fstream>
#include <sstream>

#include "fixtures.hpp"
#include "hedmod/checkpoint.hpp"
#include "hedmod/error.hpp"
#include "hedmod/pipeline.hpp"
#include "hedmod/run_config.hpp"

namespace hedmod {
namespace {

namespace fs = std::filesystem;

fs::path temp_dir(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("hedmod_pipeline_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorKind::kInvalidArgument;
}

TEST(RunConfig, DefaultsMatchTrainerAndModel) {
  RunConfig c;
  EXPECT_EQ(c.train.lr, 1e-3);
  EXPECT_EQ(c.train.batch_size, 16u);
  EXPECT_EQ(c.train.max_epochs, 50u);
  EXPECT_EQ(c.train.grad_clip_norm, 5.0);
  EXPECT_EQ(c.model.d_hidden, 256u);
  EXPECT_EQ(c.model.d_property, 128u);
  EXPECT_EQ(c.model.max_position, 16u);
  EXPECT_EQ(c.train.dropout, 0.0);
}

TEST(RunConfig, TextRoundTripIsExact) {
  RunConfig c;
  c.train.lr = 0.1 + 0.2;
  c.train.eps = 3e-9;
  c.train.seed = 18446744073709551615ull;
  c.train.stage2_templates = TemplateSource::kGenerated;
  c.train.train_description = false;
  c.model.d_hidden = 17;
  c.decode = "beam:4";
  c.data_dir = "some/dir";
  const RunConfig back = RunConfig::parse(c.to_text());
  EXPECT_EQ(back.to_text(), c.to_text());
  EXPECT_EQ(back.train.lr, c.train.lr);
  EXPECT_EQ(back.train.eps, 3e-9);
  EXPECT_EQ(back.train.seed, c.train.seed);
  EXPECT_EQ(back.train.stage2_templates, TemplateSource::kGenerated);
  EXPECT_FALSE(back.train.train_description);
}

TEST(RunConfig, EveryKeyIsWritten) {
  const std::string text = RunConfig{}.to_text();
  for (const auto& k : RunConfig::keys()) EXPECT_NE(text.find(k + " = "), std::string::npos) << k;
}

TEST(RunConfig, CommentsAndBlankLines) {
  const RunConfig c = RunConfig::parse("# run\n\n  lr = 0.5   # fast\nbatch_size=2\n");
  EXPECT_EQ(c.train.lr, 0.5);
  EXPECT_EQ(c.train.batch_size, 2u);
}

TEST(RunConfig, RejectsUnknownKeysWithLine) {
  try {
    RunConfig::parse("lr = 0.1\nlearning_rate = 0.1\n", "x.cfg");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kParse);
    EXPECT_NE(std::string(e.what()).find("x.cfg:2"), std::string::npos) << e.what();
    EXPECT_NE(std::string(e.what()).find("learning_rate"), std::string::npos);
  }
}

TEST(RunConfig, RejectsMalformedValues) {
  RunConfig c;
  EXPECT_EQ(kind_of([&] { c.set("batch_size", "-1"); }), ErrorKind::kParse);
  EXPECT_EQ(kind_of([&] { c.set("batch_size", "2x"); }), ErrorKind::kParse);
  EXPECT_EQ(kind_of([&] { c.set("lr", ""); }), ErrorKind::kParse);
  EXPECT_EQ(kind_of([&] { c.set("train_description", "yes"); }), ErrorKind::kParse);
  EXPECT_EQ(kind_of([&] { c.set("stage2_templates", "silver"); }), ErrorKind::kParse);
  EXPECT_EQ(kind_of([&] { c.set("decode", "beam"); }), ErrorKind::kParse);
  EXPECT_EQ(kind_of([&] { c.apply_override("lr"); }), ErrorKind::kParse);
}

TEST(RunConfig, OverridesWin) {
  RunConfig c = RunConfig::parse("lr = 0.5\n");
  c.apply_override("lr=0.25");
  EXPECT_EQ(c.train.lr, 0.25);
}

TEST(RunConfig, ValidateCatchesRanges) {
  RunConfig c;
  c.train.batch_size = 0;
  EXPECT_EQ(kind_of([&] { c.validate(); }), ErrorKind::kInvalidArgument);
  c = RunConfig{};
  c.model.d_hidden = 0;
  EXPECT_EQ(kind_of([&] { c.validate(); }), ErrorKind::kInvalidArgument);
  c = RunConfig{};
  c.min_statements = 0;
  EXPECT_EQ(kind_of([&] { c.validate(); }), ErrorKind::kInvalidArgument);
  RunConfig{}.validate();
}

std::vector<Entity> synthetic(std::size_t n) {
  SynthOptions o;
  o.entities = n;
  return make_synthetic_corpus(o).entities;
}

TEST(Prepare, SplitsAndWritesEverything) {
  auto ents = synthetic(100);
  ents[0].statements.resize(4);
  const fs::path dir = temp_dir("prep");
  PrepareOptions o;
  const PrepareSummary s = prepare_dataset(ents, dir.string(), o);
  EXPECT_EQ(s.loaded, 100u);
  EXPECT_EQ(s.kept, 99u);
  EXPECT_EQ(s.train + s.valid + s.test, 99u);
  EXPECT_EQ(s.train, 81u);
  EXPECT_EQ(s.test, 9u);
  for (const char* f : {"train.jsonl", "valid.jsonl", "test.jsonl", "prepare.txt", "vocab/target_vocab.txt"}) {
    EXPECT_TRUE(fs::exists(dir / f)) << f;
  }
  const PreparedData d = load_prepared(dir.string(), 16);
  EXPECT_EQ(d.split.train.size(), s.train);
  for (const auto& e : d.split.train) {
    EXPECT_EQ(e.gold_template, annotate(e.description).template_tokens);
    EXPECT_NE(e.entity_id, ents[0].entity_id);
  }
}

TEST(Prepare, RerunIsByteIdentical) {
  const auto ents = synthetic(40);
  const fs::path a = temp_dir("rerun_a"), b = temp_dir("rerun_b");
  prepare_dataset(ents, a.string(), {});
  prepare_dataset(ents, b.string(), {});
  for (const char* f : {"train.jsonl", "valid.jsonl", "test.jsonl", "vocab/value_vocab.txt",
                        "vocab/target_vocab.txt", "vocab/template_vocab.txt", "vocab/property_vocab.txt"}) {
    EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
  }
  PrepareOptions other;
  other.seed = 2;
  const fs::path c = temp_dir("rerun_c");
  prepare_dataset(ents, c.string(), other);
  EXPECT_NE(slurp(a / "train.jsonl"), slurp(c / "train.jsonl"));
}

TEST(Prepare, TargetExclusion) {
  const fs::path dir = temp_dir("exclude");
  PrepareOptions o;
  o.target_exclude = {"in"};
  prepare_dataset(synthetic(30), dir.string(), o);
  const Vocab v = Vocab::load((dir / "vocab/target_vocab.txt").string());
  EXPECT_EQ(v.find("in"), -1);
  EXPECT_GE(v.find(kUnk), 0);
}

TEST(Prepare, TooFewEntities) {
  EXPECT_THROW(prepare_dataset(synthetic(5), temp_dir("few").string(), {}), Error);
}

TEST(Pipeline, TrainLoadGenerate) {
  const fs::path data = temp_dir("tlg_data"), out = temp_dir("tlg_out");
  prepare_dataset(synthetic(30), data.string(), {});
  RunConfig c;
  c.model = testing::tiny_config();
  c.train.max_epochs = 2;
  c.train.lr = 0.01;
  const TrainResult r = run_training(c, data.string(), out.string());
  EXPECT_EQ(r.epochs.size(), 2u);
  for (const char* f : {kCheckpointFile, kConfigFile, kLogFile}) EXPECT_TRUE(fs::exists(out / f)) << f;

  const RunConfig saved = RunConfig::load((out / kConfigFile).string());
  EXPECT_EQ(saved.data_dir, data.string());
  EXPECT_EQ(saved.model.d_hidden, c.model.d_hidden);

  auto model = load_model((out / kCheckpointFile).string());
  const Snapshot ck = load_checkpoint((out / kCheckpointFile).string());
  for (const auto& [name, t] : ck) {
    const Tensor& v = model->parameters().get(name).value;
    EXPECT_TRUE(std::equal(t.data().begin(), t.data().end(), v.data().begin(), v.data().end())) << name;
  }

  const PreparedData d = load_prepared(data.string(), c.model.max_position);
  const auto preds = predict(*model, d.split.test, DecodeMode::greedy());
  ASSERT_EQ(preds.size(), d.split.test.size());
  const auto again = predict(*model, d.split.test, DecodeMode::greedy());
  for (std::size_t i = 0; i < preds.size(); ++i) {
    EXPECT_EQ(preds[i].entity_id, d.split.test[i].entity_id);
    EXPECT_FALSE(preds[i].templ.empty());
    EXPECT_EQ(preds[i].description, again[i].description);
  }
  const auto forced = predict(*model, d.split.test, DecodeMode::greedy(), Tokens{"$hed$", "in", "$mod$"});
  for (const auto& p : forced) EXPECT_EQ(p.templ, (Tokens{"$hed$", "in", "$mod$"}));

  const fs::path pred = out / "pred.jsonl";
  write_predictions(pred.string(), preds);
  std::ifstream in(pred);
  std::string line;
  std::getline(in, line);
  EXPECT_NE(line.find("\"template\""), std::string::npos);
  EXPECT_NE(line.find("\"hypothesis\""), std::string::npos);
}

TEST(Pipeline, CheckpointMismatchIsReported) {
  const fs::path data = temp_dir("mm_data"), out = temp_dir("mm_out");
  prepare_dataset(synthetic(20), data.string(), {});
  RunConfig c;
  c.model = testing::tiny_config();
  c.train.max_epochs = 1;
  run_training(c, data.string(), out.string());
  RunConfig wrong = RunConfig::load((out / kConfigFile).string());
  wrong.model.d_hidden += 1;
  wrong.save((out / kConfigFile).string());
  EXPECT_EQ(kind_of([&] { load_model((out / kCheckpointFile).string()); }), ErrorKind::kShapeMismatch);
}

}  // namespace
}  // namespace hedmod
