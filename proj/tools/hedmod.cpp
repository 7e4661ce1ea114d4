#include <CLI11.hpp>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <set>
#include <string>
#include <vector>

#include "hedmod/annotator.hpp"
#include "hedmod/corpus.hpp"
#include "hedmod/error.hpp"
#include "hedmod/metrics.hpp"
#include "hedmod/pipeline.hpp"
#include "hedmod/run_config.hpp"
#include "hedmod/synth.hpp"

using namespace hedmod;

namespace {

std::set<std::string> read_word_list(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot read " + path);
  std::set<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    for (const auto& w : tokenize(line)) out.insert(w);
  }
  return out;
}

struct PrepareArgs {
  std::string input, out_dir, exclude;
  PrepareOptions opt;
};

void cmd_prepare(const PrepareArgs& a) {
  PrepareOptions opt = a.opt;
  if (!a.exclude.empty()) opt.target_exclude = read_word_list(a.exclude);
  const auto s = prepare_dataset(load_jsonl(a.input), a.out_dir, opt);
  std::cerr << "prepare: " << s.loaded << " loaded, " << s.kept << " kept, split " << s.train << "/" << s.valid
            << "/" << s.test << "\n";
}

void cmd_annotate(const std::string& input, const std::string& output) {
  std::ifstream file;
  std::istream* in = &std::cin;
  if (input != "-") {
    file.open(input);
    if (!file) throw Error(ErrorKind::kIo, "cannot read " + input);
    in = &file;
  }
  std::ofstream ofile;
  std::ostream* out = &std::cout;
  if (output != "-") {
    ofile.open(output, std::ios::trunc);
    if (!ofile) throw Error(ErrorKind::kIo, "cannot write " + output);
    out = &ofile;
  }
  std::string line;
  while (std::getline(*in, line)) {
    const Tokens desc = tokenize(line);
    if (desc.empty()) continue;
    const Annotation a = annotate(desc);
    *out << join(desc) << '\t' << join(a.template_tokens) << '\t' << join(a.heads(), ",") << '\n';
  }
}

struct TrainArgs {
  std::string data_dir, config, out_dir;
  std::vector<std::string> overrides;
};

void cmd_train(const TrainArgs& a) {
  RunConfig cfg = a.config.empty() ? RunConfig{} : RunConfig::load(a.config);
  for (const auto& o : a.overrides) cfg.apply_override(o);
  const TrainResult r = run_training(cfg, a.data_dir, a.out_dir, [](const EpochStats& s, Model&) {
    std::cerr << "epoch " << s.epoch << " train_loss " << std::setprecision(6) << s.train_loss;
    if (!std::isnan(s.valid_loss)) std::cerr << " valid_loss " << s.valid_loss;
    std::cerr << " (" << std::setprecision(3) << s.seconds << "s)\n";
    return true;
  });
  std::cerr << "best epoch " << r.best_epoch << " loss " << std::setprecision(6) << r.best_loss
            << (r.early_stopped ? " (early stop)" : "") << "\n";
}

struct GenerateArgs {
  std::string checkpoint, input, out, mode, templ;
};

void cmd_generate(const GenerateArgs& a) {
  auto model = load_model(a.checkpoint);
  std::string mode = a.mode;
  if (mode.empty()) {
    const auto dir = std::filesystem::path(a.checkpoint).parent_path();
    mode = RunConfig::load((dir / kConfigFile).string()).decode;
  }
  std::optional<Tokens> override_template;
  if (!a.templ.empty()) {
    override_template = tokenize(a.templ);
    if (override_template->empty()) throw Error(ErrorKind::kInvalidArgument, "--template is empty");
  }
  const auto preds = predict(*model, load_jsonl(a.input), DecodeMode::parse(mode), override_template);
  write_predictions(a.out, preds);
}

void cmd_evaluate(const std::string& predictions, const std::string& references, const std::string& out) {
  const MetricReport report = evaluate_files(predictions, references);
  if (!out.empty()) {
    std::ofstream f(out, std::ios::trunc);
    if (!f) throw Error(ErrorKind::kIo, "cannot write " + out);
    f << report.to_json() << '\n';
  }
  std::cout << report.to_table();
}

struct SynthArgs {
  std::string out, oov_out;
  SynthOptions opt;
};

void cmd_synth(const SynthArgs& a) {
  const SynthCorpus c = make_synthetic_corpus(a.opt);
  write_jsonl(a.out, c.entities);
  if (!a.oov_out.empty()) {
    std::ofstream f(a.oov_out, std::ios::trunc);
    if (!f) throw Error(ErrorKind::kIo, "cannot write " + a.oov_out);
    for (const auto& w : c.oov_words) f << w << '\n';
  }
}

void cmd_stats(const std::string& input) {
  const auto entities = load_jsonl(input);
  std::size_t statements = 0, desc_tokens = 0;
  for (const auto& e : entities) {
    statements += e.statements.size();
    desc_tokens += e.description.size();
  }
  const double n = entities.empty() ? 1.0 : static_cast<double>(entities.size());
  std::cout << "entities " << entities.size() << "\n"
            << "avg_statements " << statements / n << "\n"
            << "avg_description_length " << desc_tokens / n << "\n"
            << "copy_ratio " << std::setprecision(6) << 100.0 * corpus_copy_ratio(entities) << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hedmod: two-stage head-modifier description generation"};
  app.require_subcommand(1);

  PrepareArgs prep;
  auto* p = app.add_subcommand("prepare", "filter, annotate, split and build vocabularies");
  p->add_option("--input", prep.input, "entity JSONL")->required();
  p->add_option("--out-dir", prep.out_dir)->required();
  p->add_option("--seed", prep.opt.seed)->capture_default_str();
  p->add_option("--min-statements", prep.opt.min_statements)->capture_default_str();
  p->add_option("--value-vocab", prep.opt.value_vocab_size)->capture_default_str();
  p->add_option("--target-vocab", prep.opt.target_vocab_size)->capture_default_str();
  p->add_option("--max-position", prep.opt.max_position)->capture_default_str();
  p->add_option("--target-exclude", prep.exclude, "words to keep out of the target vocab, one per line");

  std::string ann_in = "-", ann_out = "-";
  auto* an = app.add_subcommand("annotate", "descriptions (one per line) to TSV: description, template, heads");
  an->add_option("--input", ann_in)->capture_default_str();
  an->add_option("--out", ann_out)->capture_default_str();

  TrainArgs tr;
  auto* t = app.add_subcommand("train", "train both stages");
  t->add_option("--data-dir", tr.data_dir)->required();
  t->add_option("--config", tr.config, "key = value file");
  t->add_option("--out-dir", tr.out_dir)->required();
  t->add_option("--set", tr.overrides, "key=value override, repeatable");

  GenerateArgs gen;
  auto* g = app.add_subcommand("generate", "templates and descriptions for entities");
  g->add_option("--checkpoint", gen.checkpoint)->required();
  g->add_option("--input", gen.input, "entity JSONL")->required();
  g->add_option("--out", gen.out, "predictions JSONL")->required();
  g->add_option("--mode", gen.mode, "greedy or beam:k (default: config decode)");
  g->add_option("--template", gen.templ, "replace the stage-1 template, e.g. \"$hed$ in $mod$\"");

  std::string ev_pred, ev_ref, ev_out;
  auto* e = app.add_subcommand("evaluate", "BLEU, ROUGE-L, ModCopy, HedAcc");
  e->add_option("--predictions", ev_pred)->required();
  e->add_option("--references", ev_ref, "entity JSONL")->required();
  e->add_option("--out", ev_out, "JSON report");

  SynthArgs sy;
  auto* s = app.add_subcommand("synth", "write a synthetic entity corpus");
  s->add_option("--out", sy.out)->required();
  s->add_option("--entities", sy.opt.entities)->capture_default_str();
  s->add_option("--seed", sy.opt.seed)->capture_default_str();
  s->add_option("--oov-fraction", sy.opt.oov_fraction)->capture_default_str();
  s->add_option("--oov-out", sy.oov_out, "write the held-out modifier words");

  std::string st_in;
  auto* st = app.add_subcommand("stats", "corpus statistics");
  st->add_option("--input", st_in)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& ex) {
    return app.exit(ex);
  } catch (const CLI::ParseError& ex) {
    std::cerr << "hedmod: error: usage: " << ex.what() << "\n";
    return 2;
  }

  try {
    if (*p) cmd_prepare(prep);
    else if (*an) cmd_annotate(ann_in, ann_out);
    else if (*t) cmd_train(tr);
    else if (*g) cmd_generate(gen);
    else if (*e) cmd_evaluate(ev_pred, ev_ref, ev_out);
    else if (*s) cmd_synth(sy);
    else if (*st) cmd_stats(st_in);
  } catch (const Error& ex) {
    std::cerr << "hedmod: error: " << error_kind_name(ex.kind()) << ": " << ex.what() << "\n";
    return 1;
  } catch (const std::exception& ex) {
    std::cerr << "hedmod: error: internal: " << ex.what() << "\n";
    return 1;
  }
  return 0;
}
