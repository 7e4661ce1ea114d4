#include "hedmod/model.hpp"

#include <algorithm>
#include <cmath>

#include "hedmod/annotator.hpp"
#include "hedmod/error.hpp"

namespace hedmod {

using ad::Graph;
using ad::Var;

EncodedExample encode_example(const Entity& entity, const VocabSet& vocabs, std::size_t max_position) {
  EncodedExample ex;
  ex.entity_id = entity.entity_id;
  for (const SourceToken& tok : reconstruct_infobox(entity, max_position)) {
    ex.source_word.push_back(vocabs.value.id(tok.word));
    ex.source_property.push_back(vocabs.property.id(tok.property));
    ex.source_position.push_back(tok.position);
    ex.source_words.push_back(tok.word);
  }
  if (ex.source_words.empty()) {
    throw Error(ErrorKind::kData, "entity " + entity.entity_id + " has no infobox value tokens");
  }
  ex.description = entity.description;
  if (!entity.gold_template.empty()) {
    ex.template_ids = template_to_ids(entity.gold_template, vocabs.templ);
  } else if (!entity.description.empty()) {
    ex.template_ids = template_to_ids(annotate(entity.description).template_tokens, vocabs.templ);
  }
  return ex;
}

std::vector<int> template_to_ids(const Tokens& templ, const Vocab& template_vocab) {
  std::vector<int> ids;
  ids.reserve(templ.size());
  for (const auto& t : templ) ids.push_back(template_vocab.id(t));
  return ids;
}

SourceBatch make_source_batch(const std::vector<const EncodedExample*>& examples) {
  if (examples.empty()) throw Error(ErrorKind::kInvalidArgument, "empty batch");
  SourceBatch b;
  b.batch = examples.size();
  for (const auto* ex : examples) b.length = std::max(b.length, ex->source_word.size());
  b.word.assign(b.length, std::vector<int>(b.batch, 0));
  b.property = b.word;
  b.position = b.word;
  b.step_mask.assign(b.length, std::vector<std::uint8_t>(b.batch, 0));
  b.mask = ad::Mask(b.batch, b.length, 0);
  for (std::size_t r = 0; r < b.batch; ++r) {
    const EncodedExample& ex = *examples[r];
    if (ex.source_word.empty()) {
      throw Error(ErrorKind::kInvalidArgument, "example " + ex.entity_id + " has an empty source");
    }
    for (std::size_t t = 0; t < ex.source_word.size(); ++t) {
      b.word[t][r] = ex.source_word[t];
      b.property[t][r] = ex.source_property[t];
      b.position[t][r] = ex.source_position[t];
      b.step_mask[t][r] = 1;
      b.mask(r, t) = 1;
    }
    b.words.push_back(ex.source_words);
  }
  return b;
}

SequenceBatch make_sequence_batch(const std::vector<std::vector<int>>& sequences) {
  if (sequences.empty()) throw Error(ErrorKind::kInvalidArgument, "empty batch");
  SequenceBatch b;
  b.batch = sequences.size();
  for (const auto& s : sequences) {
    if (s.empty()) throw Error(ErrorKind::kInvalidArgument, "empty template");
    b.length = std::max(b.length, s.size());
  }
  b.ids.assign(b.length, std::vector<int>(b.batch, 0));
  b.step_mask.assign(b.length, std::vector<std::uint8_t>(b.batch, 0));
  b.mask = ad::Mask(b.batch, b.length, 0);
  for (std::size_t r = 0; r < b.batch; ++r) {
    for (std::size_t t = 0; t < sequences[r].size(); ++t) {
      b.ids[t][r] = sequences[r][t];
      b.step_mask[t][r] = 1;
      b.mask(r, t) = 1;
    }
  }
  return b;
}

Attention attend_general(Var memory, const ad::Mask& mask, Var query, Var weight) {
  Var projected = ad::linear(query, weight);
  Var weights = ad::masked_softmax(ad::row_dot(memory, projected), mask);
  return Attention{ad::weighted_sum(memory, weights), weights};
}

ExtendedVocab::ExtendedVocab(const Vocab& base, const Tokens& source_words) : base_(&base) {
  for (const auto& w : source_words) {
    const int id = base.find(w);
    if (id >= 0) {
      position_ids_.push_back(static_cast<std::size_t>(id));
      continue;
    }
    auto it = std::find(extra_.begin(), extra_.end(), w);
    if (it == extra_.end()) {
      extra_.push_back(w);
      it = extra_.end() - 1;
    }
    position_ids_.push_back(base.size() + static_cast<std::size_t>(it - extra_.begin()));
  }
}

const std::string& ExtendedVocab::token(std::size_t id) const {
  if (id < base_->size()) return base_->token(static_cast<int>(id));
  if (id - base_->size() >= extra_.size()) {
    throw Error(ErrorKind::kInvalidArgument, "extended vocab id " + std::to_string(id) + " out of range");
  }
  return extra_[id - base_->size()];
}

int ExtendedVocab::find(const std::string& word) const {
  const int id = base_->find(word);
  if (id >= 0) return id;
  auto it = std::find(extra_.begin(), extra_.end(), word);
  if (it == extra_.end()) return -1;
  return static_cast<int>(base_->size()) + static_cast<int>(it - extra_.begin());
}

OutputDistribution copy_gen_distribution(std::span<const double> gen_logits,
                                         std::span<const double> copy_scores, double switch_logit,
                                         const ExtendedVocab& vocab) {
  if (gen_logits.size() != vocab.base_size()) {
    throw Error(ErrorKind::kShapeMismatch,
                "copy_gen_distribution: " + std::to_string(gen_logits.size()) +
                    " generation logits for a vocabulary of " + std::to_string(vocab.base_size()));
  }
  if (copy_scores.size() != vocab.position_ids().size()) {
    throw Error(ErrorKind::kShapeMismatch,
                "copy_gen_distribution: " + std::to_string(copy_scores.size()) + " copy scores for " +
                    std::to_string(vocab.position_ids().size()) + " source positions");
  }
  OutputDistribution d;
  const std::size_t n = vocab.size();
  d.prob.assign(n, 0.0);
  d.generate.assign(n, 0.0);
  d.copy.assign(n, 0.0);
  d.p_generate = copy_scores.empty() ? 1.0
                 : switch_logit >= 0 ? 1.0 / (1.0 + std::exp(-switch_logit))
                                     : std::exp(switch_logit) / (1.0 + std::exp(switch_logit));

  const double gmax = *std::max_element(gen_logits.begin(), gen_logits.end());
  double gsum = 0.0;
  for (std::size_t v = 0; v < gen_logits.size(); ++v) {
    d.generate[v] = std::exp(gen_logits[v] - gmax);
    gsum += d.generate[v];
  }
  for (std::size_t v = 0; v < gen_logits.size(); ++v) d.generate[v] *= d.p_generate / gsum;

  if (!copy_scores.empty()) {
    const double cmax = *std::max_element(copy_scores.begin(), copy_scores.end());
    double csum = 0.0;
    for (double s : copy_scores) csum += std::exp(s - cmax);
    const double scale = (1.0 - d.p_generate) / csum;
    for (std::size_t i = 0; i < copy_scores.size(); ++i) {
      d.copy[vocab.position_ids()[i]] += scale * std::exp(copy_scores[i] - cmax);
    }
  }
  for (std::size_t v = 0; v < n; ++v) d.prob[v] = d.generate[v] + d.copy[v];
  return d;
}

DecodeMode DecodeMode::beam_search(std::size_t k) {
  if (k == 0) throw Error(ErrorKind::kInvalidArgument, "beam width must be positive");
  DecodeMode m;
  m.beam = k;
  return m;
}

DecodeMode DecodeMode::parse(const std::string& text) {
  if (text == "greedy") return greedy();
  if (text.rfind("beam:", 0) == 0) {
    const std::string k = text.substr(5);
    if (!k.empty() && k.size() < 6 && std::all_of(k.begin(), k.end(), ::isdigit)) {
      return beam_search(std::stoul(k));
    }
  }
  throw Error(ErrorKind::kInvalidArgument, "decode mode must be 'greedy' or 'beam:k', got '" + text + "'");
}

std::string DecodeMode::str() const { return beam == 0 ? "greedy" : "beam:" + std::to_string(beam); }

Model::Gru Model::add_gru(const std::string& name, std::size_t in) {
  const std::size_t h = config_.d_hidden;
  return Gru{&store_.add(name + ".W", {3 * h, in}), &store_.add(name + ".U", {3 * h, h}),
             &store_.add(name + ".b", {3 * h})};
}

Model::Dense Model::add_dense(const std::string& name, std::size_t out, std::size_t in) {
  return Dense{&store_.add(name + ".W", {out, in}), &store_.add(name + ".b", {out})};
}

Var Model::gru(Graph& g, const Gru& cell, Var x, Var h, const std::vector<std::uint8_t>* row_mask) {
  if (row_mask) return ad::gru_cell(x, h, g.param(*cell.w), g.param(*cell.u), g.param(*cell.b), *row_mask);
  return ad::gru_cell(x, h, g.param(*cell.w), g.param(*cell.u), g.param(*cell.b));
}

Var Model::dense(Graph& g, const Dense& layer, Var x) {
  return ad::linear(x, g.param(*layer.w), g.param(*layer.b));
}

void Model::set_dropout(double rate, std::uint64_t seed) {
  if (!(rate >= 0.0 && rate < 1.0)) throw Error(ErrorKind::kInvalidArgument, "dropout must lie in [0, 1)");
  dropout_ = rate;
  dropout_rng_ = Rng(seed);
}

Var Model::drop(Graph& g, Var x) {
  if (dropout_ == 0.0 || !g.recording()) return x;
  Tensor mask(x.shape());
  const double keep = 1.0 - dropout_;
  for (std::size_t i = 0; i < mask.size(); ++i) mask[i] = dropout_rng_.uniform() < keep ? 1.0 / keep : 0.0;
  return ad::mul(x, g.constant(std::move(mask)));
}

Model::Model(VocabSet vocabs, ModelConfig config) : vocabs_(std::move(vocabs)), config_(config) {
  const ModelConfig& c = config_;
  if (c.d_hidden == 0 || c.d_word == 0 || c.d_property == 0 || c.d_position == 0 || c.max_position == 0) {
    throw Error(ErrorKind::kInvalidArgument, "model dimensions must be positive");
  }
  for (const Vocab* v : {&vocabs_.value, &vocabs_.target, &vocabs_.templ}) {
    for (const char* t : {kPad, kUnk, kBos, kEos}) {
      if (v->find(t) < 0) throw Error(ErrorKind::kData, std::string("vocabulary lacks ") + t);
    }
  }
  if (vocabs_.property.size() == 0) throw Error(ErrorKind::kData, "empty property vocabulary");
  vocabs_.position_count = c.max_position;
  const std::size_t h = c.d_hidden;
  const std::size_t src_in = c.d_word + c.d_property + c.d_position;

  value_embedding_ = &store_.add("enc.value_embedding", {vocabs_.value.size(), c.d_word});
  property_embedding_ = &store_.add("enc.property_embedding", {vocabs_.property.size(), c.d_property});
  position_embedding_ = &store_.add("enc.position_embedding", {c.max_position, c.d_position});
  encoder_ = add_gru("enc.gru", src_in);

  s1_init_ = add_dense("s1.init", h, h);
  s1_embedding_ = &store_.add("s1.embedding", {vocabs_.templ.size(), c.d_word});
  s1_attention_ = &store_.add("s1.attention.W", {h, h});
  s1_gru_ = add_gru("s1.gru", c.d_word + h);
  s1_out_ = add_dense("s1.out", vocabs_.templ.size(), 2 * h);

  s2_template_embedding_ = &store_.add("s2.template_embedding", {vocabs_.templ.size(), c.d_word});
  s2_template_fwd_ = add_gru("s2.template_fwd", c.d_word);
  s2_template_bwd_ = add_gru("s2.template_bwd", c.d_word);
  s2_template_proj_ = add_dense("s2.template_proj", h, 2 * h);
  s2_init_ = add_dense("s2.init", h, h);
  s2_embedding_ = &store_.add("s2.embedding", {vocabs_.target.size(), c.d_word});
  s2_attention_x_ = &store_.add("s2.attention_x.W", {h, h});
  s2_attention_t_ = &store_.add("s2.attention_t.W", {h, h});
  s2_gate_x_ = add_dense("s2.gate_x", h, c.d_word + 2 * h);
  s2_gate_t_ = add_dense("s2.gate_t", h, c.d_word + 2 * h);
  s2_fuse_target_ = add_dense("s2.fuse_target", h, c.d_word + h);
  s2_fuse_x_ = add_dense("s2.fuse_x", h, h);
  s2_fuse_t_ = add_dense("s2.fuse_t", h, h);
  s2_gru_ = add_gru("s2.gru", c.d_word + h);
  s2_gen_ = add_dense("s2.gen", vocabs_.target.size(), 2 * h);
  s2_copy_ = add_dense("s2.copy", h, h);
  s2_switch_hidden_ = add_dense("s2.switch_hidden", h, 2 * h);
  s2_switch_out_ = add_dense("s2.switch_out", 1, h);

  store_.init_uniform(c.init_scale, c.seed);
}

EncoderOutput Model::encode_infobox(Graph& g, const SourceBatch& batch) {
  if (batch.length == 0) throw Error(ErrorKind::kInvalidArgument, "encode_infobox: empty source");
  for (const auto& ids : batch.position) {
    for (int p : ids) {
      if (p < 0 || static_cast<std::size_t>(p) >= config_.max_position) {
        throw Error(ErrorKind::kInvalidArgument, "position id " + std::to_string(p) + " out of range");
      }
    }
  }
  Var h = g.constant(Tensor({batch.batch, config_.d_hidden}));
  Var values = g.param(*value_embedding_);
  Var props = g.param(*property_embedding_);
  Var positions = g.param(*position_embedding_);
  std::vector<Var> states;
  states.reserve(batch.length);
  for (std::size_t t = 0; t < batch.length; ++t) {
    Var x = ad::concat({ad::embedding(values, batch.word[t]), ad::embedding(props, batch.property[t]),
                        ad::embedding(positions, batch.position[t])},
                       1);
    h = gru(g, encoder_, drop(g, x), h, &batch.step_mask[t]);
    states.push_back(h);
  }
  return EncoderOutput{ad::stack(states), h, batch.mask};
}

}  // namespace hedmod
