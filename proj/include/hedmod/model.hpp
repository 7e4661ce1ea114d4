#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hedmod/corpus.hpp"
#include "hedmod/graph.hpp"
#include "hedmod/ops.hpp"
#include "hedmod/parameters.hpp"
#include "hedmod/random.hpp"

namespace hedmod {

struct ModelConfig {
  std::size_t d_hidden = 256;
  std::size_t d_word = 256;
  std::size_t d_property = 128;
  std::size_t d_position = 128;
  std::size_t max_position = kDefaultMaxPosition;
  std::size_t max_template_length = 16;
  std::size_t max_description_length = 24;
  double init_scale = 0.08;
  std::uint64_t seed = 1;
};

/// An entity mapped onto vocabulary ids.
struct EncodedExample {
  std::string entity_id;
  std::vector<int> source_word;
  std::vector<int> source_property;
  std::vector<int> source_position;
  Tokens source_words;            // verbatim value words, one per source position
  std::vector<int> template_ids;  // gold template (template vocab), no bos/eos
  Tokens description;             // gold description; may be empty at inference
};

/// Throws Error(kData) when the infobox yields no tokens.
EncodedExample encode_example(const Entity& entity, const VocabSet& vocabs, std::size_t max_position);
std::vector<int> template_to_ids(const Tokens& templ, const Vocab& template_vocab);

/// Source sequences padded to a common length, stored step-major.
struct SourceBatch {
  std::size_t batch = 0;
  std::size_t length = 0;
  std::vector<std::vector<int>> word, property, position;  // [length][batch]
  std::vector<std::vector<std::uint8_t>> step_mask;        // [length][batch]
  ad::Mask mask;                                           // [batch x length]
  std::vector<Tokens> words;                               // per row, unpadded
};
SourceBatch make_source_batch(const std::vector<const EncodedExample*>& examples);

struct SequenceBatch {
  std::size_t batch = 0;
  std::size_t length = 0;
  std::vector<std::vector<int>> ids;                // [length][batch]
  std::vector<std::vector<std::uint8_t>> step_mask;  // [length][batch]
  ad::Mask mask;                                    // [batch x length]
};
/// Every sequence must be non-empty; padding uses id 0.
SequenceBatch make_sequence_batch(const std::vector<std::vector<int>>& sequences);

struct EncoderOutput {
  ad::Var memory;       // [B x L x d_h]
  ad::Var final_state;  // [B x d_h], state after each row's last real token
  ad::Mask mask;
};

struct Attention {
  ad::Var context;  // [B x d]
  ad::Var weights;  // [B x L]
};

/// eta_i = h_i^T W s, alpha = softmax over valid positions, c = sum alpha_i h_i.
Attention attend_general(ad::Var memory, const ad::Mask& mask, ad::Var query, ad::Var weight);

struct TemplateStep {
  ad::Var state;
  ad::Var logits;  // [B x |template vocab|]
  Attention attention;
};

struct Gates {
  ad::Var x;
  ad::Var t;
};

struct DescriptionMemory {
  EncoderOutput source;
  ad::Var copy_keys;  // tanh(H_x W_c + b), [B x L x d_h]
  ad::Var templ;      // [B x L_t x d_h]
  ad::Mask template_mask;
};

struct DescriptionStep {
  ad::Var state;
  ad::Var fused;
  ad::Var gen_logits;    // [B x |V|]
  ad::Var copy_scores;   // [B x L]
  ad::Var switch_logit;  // [B x 1], sigmoid gives p(generate)
  Gates gates;
  Attention source_attention;
  Attention template_attention;
};

/// Base vocabulary V plus the distinct source words of one example.
class ExtendedVocab {
 public:
  ExtendedVocab(const Vocab& base, const Tokens& source_words);

  std::size_t size() const { return base_->size() + extra_.size(); }
  std::size_t base_size() const { return base_->size(); }
  const std::string& token(std::size_t id) const;
  /// Id in V' or -1.
  int find(const std::string& word) const;
  /// V' id of the word at each source position.
  const std::vector<std::size_t>& position_ids() const { return position_ids_; }

 private:
  const Vocab* base_;
  Tokens extra_;
  std::vector<std::size_t> position_ids_;
};

/// Output distribution over V' split into its two paths.
struct OutputDistribution {
  std::vector<double> prob;      // over V'
  std::vector<double> generate;  // p(z=1) softmax(gen), over V'; zero beyond V
  std::vector<double> copy;      // p(z=0) copy softmax summed per word, over V'
  double p_generate = 0.0;
};

/// `copy_scores` covers the real source positions of the example.
OutputDistribution copy_gen_distribution(std::span<const double> gen_logits,
                                         std::span<const double> copy_scores, double switch_logit,
                                         const ExtendedVocab& vocab);

struct DecodeMode {
  std::size_t beam = 0;  // 0 = greedy

  static DecodeMode greedy() { return {}; }
  static DecodeMode beam_search(std::size_t k);
  /// "greedy" or "beam:k".
  static DecodeMode parse(const std::string& text);
  std::string str() const;
};

struct EmittedToken {
  std::string word;
  double prob = 0.0;
  double generate_prob = 0.0;
  double copy_prob = 0.0;
};

struct Generation {
  Tokens templ;
  Tokens description;
  std::vector<EmittedToken> trace;  // greedy only
};

struct BatchLoss {
  ad::Var total;  // (L1 + L2) / batch
  double l1 = 0.0;
  double l2 = 0.0;
};

class Model {
 public:
  Model(VocabSet vocabs, ModelConfig config);
  Model(const Model&) = delete;
  Model& operator=(const Model&) = delete;

  const VocabSet& vocabs() const { return vocabs_; }
  const ModelConfig& config() const { return config_; }
  ParameterStore& parameters() { return store_; }

  /// Inverted dropout on every embedding input while the graph records
  /// gradients. Rate 0 turns it off.
  void set_dropout(double rate, std::uint64_t seed);
  double dropout() const { return dropout_; }
  const ParameterStore& parameters() const { return store_; }

  EncoderOutput encode_infobox(ad::Graph& g, const SourceBatch& batch);

  ad::Var template_initial_state(ad::Graph& g, const EncoderOutput& enc);
  TemplateStep decode_template_step(ad::Graph& g, const EncoderOutput& enc, ad::Var s_prev,
                                    const std::vector<int>& prev_ids);

  ad::Var encode_template(ad::Graph& g, const SequenceBatch& templ);
  DescriptionMemory description_memory(ad::Graph& g, const EncoderOutput& enc,
                                       const SequenceBatch& templ);
  ad::Var description_initial_state(ad::Graph& g, const EncoderOutput& enc);
  Gates context_gates(ad::Graph& g, ad::Var emb, ad::Var s_prev, ad::Var cx, ad::Var ct);
  ad::Var fuse_contexts(ad::Graph& g, ad::Var emb, ad::Var s_prev, ad::Var cx, ad::Var ct,
                        const Gates& gates);
  DescriptionStep decode_description_step(ad::Graph& g, const DescriptionMemory& mem, ad::Var s_prev,
                                          const std::vector<int>& prev_ids);

  /// Teacher-forced loss of a batch. Stage 2 reads `stage2_templates` when
  /// given, else each example's gold template.
  BatchLoss joint_loss(ad::Graph& g, const std::vector<const EncodedExample*>& batch,
                       bool include_description = true,
                       const std::vector<std::vector<int>>* stage2_templates = nullptr);

  Tokens generate_template(const EncodedExample& ex, DecodeMode mode, std::size_t max_len);
  Generation decode_description(const EncodedExample& ex, const Tokens& templ, DecodeMode mode,
                                std::size_t max_len);
  /// Stage 1 then Stage 2; `template_override` replaces the Stage-1 output.
  Generation generate(const EncodedExample& ex, DecodeMode mode,
                      const std::optional<Tokens>& template_override = std::nullopt);

 private:
  struct Gru {
    Parameter* w;
    Parameter* u;
    Parameter* b;
  };
  struct Dense {
    Parameter* w;
    Parameter* b;
  };
  Gru add_gru(const std::string& name, std::size_t in);
  Dense add_dense(const std::string& name, std::size_t out, std::size_t in);
  ad::Var gru(ad::Graph& g, const Gru& cell, ad::Var x, ad::Var h,
              const std::vector<std::uint8_t>* row_mask = nullptr);
  ad::Var dense(ad::Graph& g, const Dense& layer, ad::Var x);
  ad::Var drop(ad::Graph& g, ad::Var x);

  VocabSet vocabs_;
  ModelConfig config_;
  ParameterStore store_;
  double dropout_ = 0.0;
  Rng dropout_rng_{0};

  Parameter* value_embedding_;
  Parameter* property_embedding_;
  Parameter* position_embedding_;
  Gru encoder_;

  Dense s1_init_;
  Parameter* s1_embedding_;
  Parameter* s1_attention_;
  Gru s1_gru_;
  Dense s1_out_;

  Parameter* s2_template_embedding_;
  Gru s2_template_fwd_;
  Gru s2_template_bwd_;
  Dense s2_template_proj_;
  Dense s2_init_;
  Parameter* s2_embedding_;
  Parameter* s2_attention_x_;
  Parameter* s2_attention_t_;
  Dense s2_gate_x_;
  Dense s2_gate_t_;
  Dense s2_fuse_target_;
  Dense s2_fuse_x_;
  Dense s2_fuse_t_;
  Gru s2_gru_;
  Dense s2_gen_;
  Dense s2_copy_;
  Dense s2_switch_hidden_;
  Dense s2_switch_out_;
};

/// Parameter names owned by Stage 2 alone start with this prefix.
inline constexpr const char* kStage2Prefix = "s2.";

}  // namespace hedmod
