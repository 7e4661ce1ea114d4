#include <cmath>

#include "hedmod/error.hpp"
#include "hedmod/model.hpp"

namespace hedmod {

using ad::Graph;
using ad::Var;

Var Model::template_initial_state(Graph& g, const EncoderOutput& enc) {
  return ad::tanh(dense(g, s1_init_, enc.final_state));
}

TemplateStep Model::decode_template_step(Graph& g, const EncoderOutput& enc, Var s_prev,
                                         const std::vector<int>& prev_ids) {
  for (int id : prev_ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= vocabs_.templ.size()) {
      throw Error(ErrorKind::kInvalidArgument, "unknown template token id " + std::to_string(id));
    }
  }
  Var emb = drop(g, ad::embedding(g.param(*s1_embedding_), prev_ids));
  Attention att = attend_general(enc.memory, enc.mask, s_prev, g.param(*s1_attention_));
  Var s = gru(g, s1_gru_, ad::concat({emb, att.context}, 1), s_prev);
  Var logits = dense(g, s1_out_, ad::concat({s, att.context}, 1));
  return TemplateStep{s, logits, att};
}

Var Model::encode_template(Graph& g, const SequenceBatch& templ) {
  if (templ.length == 0) throw Error(ErrorKind::kInvalidArgument, "encode_template: empty template");
  Var table = g.param(*s2_template_embedding_);
  std::vector<Var> emb;
  for (std::size_t t = 0; t < templ.length; ++t) emb.push_back(drop(g, ad::embedding(table, templ.ids[t])));
  const Tensor zeros({templ.batch, config_.d_hidden});
  std::vector<Var> fwd(templ.length), bwd(templ.length);
  Var h = g.constant(zeros);
  for (std::size_t t = 0; t < templ.length; ++t) {
    h = gru(g, s2_template_fwd_, emb[t], h, &templ.step_mask[t]);
    fwd[t] = h;
  }
  h = g.constant(zeros);
  for (std::size_t t = templ.length; t-- > 0;) {
    h = gru(g, s2_template_bwd_, emb[t], h, &templ.step_mask[t]);
    bwd[t] = h;
  }
  std::vector<Var> states;
  for (std::size_t t = 0; t < templ.length; ++t) {
    states.push_back(dense(g, s2_template_proj_, ad::concat({fwd[t], bwd[t]}, 1)));
  }
  return ad::stack(states);
}

DescriptionMemory Model::description_memory(Graph& g, const EncoderOutput& enc, const SequenceBatch& templ) {
  const Shape& ms = enc.memory.shape();
  const std::size_t b = ms[0], len = ms[1], d = ms[2];
  Var flat = ad::reshape(enc.memory, {b * len, d});
  Var keys = ad::reshape(ad::tanh(dense(g, s2_copy_, flat)), {b, len, d});
  return DescriptionMemory{enc, keys, encode_template(g, templ), templ.mask};
}

Var Model::description_initial_state(Graph& g, const EncoderOutput& enc) {
  return ad::tanh(dense(g, s2_init_, enc.final_state));
}

Gates Model::context_gates(Graph& g, Var emb, Var s_prev, Var cx, Var ct) {
  Var gx = ad::sigmoid(dense(g, s2_gate_x_, ad::concat({emb, s_prev, cx}, 1)));
  Var gt = ad::sigmoid(dense(g, s2_gate_t_, ad::concat({emb, s_prev, ct}, 1)));
  return Gates{gx, gt};
}

Var Model::fuse_contexts(Graph& g, Var emb, Var s_prev, Var cx, Var ct, const Gates& gates) {
  Var target = dense(g, s2_fuse_target_, ad::concat({emb, s_prev}, 1));
  Var source = dense(g, s2_fuse_x_, cx);
  Var templ = dense(g, s2_fuse_t_, ct);
  Var rest = ad::affine(ad::add(gates.x, gates.t), -1.0, 1.0);
  return ad::add(ad::add(ad::mul(rest, target), ad::mul(gates.x, source)), ad::mul(gates.t, templ));
}

DescriptionStep Model::decode_description_step(Graph& g, const DescriptionMemory& mem, Var s_prev,
                                               const std::vector<int>& prev_ids) {
  for (int id : prev_ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= vocabs_.target.size()) {
      throw Error(ErrorKind::kInvalidArgument, "unknown target token id " + std::to_string(id));
    }
  }
  DescriptionStep step;
  Var emb = drop(g, ad::embedding(g.param(*s2_embedding_), prev_ids));
  step.source_attention = attend_general(mem.source.memory, mem.source.mask, s_prev, g.param(*s2_attention_x_));
  step.template_attention = attend_general(mem.templ, mem.template_mask, s_prev, g.param(*s2_attention_t_));
  const Var cx = step.source_attention.context;
  const Var ct = step.template_attention.context;
  step.gates = context_gates(g, emb, s_prev, cx, ct);
  step.fused = fuse_contexts(g, emb, s_prev, cx, ct, step.gates);
  step.state = gru(g, s2_gru_, ad::concat({emb, step.fused}, 1), s_prev);
  Var joint = ad::concat({step.state, step.fused}, 1);
  step.gen_logits = dense(g, s2_gen_, joint);
  step.copy_scores = ad::row_dot(mem.copy_keys, step.state);
  step.switch_logit = dense(g, s2_switch_out_, ad::tanh(dense(g, s2_switch_hidden_, joint)));
  return step;
}

namespace {

Var add_all(const std::vector<Var>& terms) {
  Var total = terms.front();
  for (std::size_t i = 1; i < terms.size(); ++i) total = ad::add(total, terms[i]);
  return total;
}

}  // namespace

BatchLoss Model::joint_loss(Graph& g, const std::vector<const EncodedExample*>& batch,
                            bool include_description,
                            const std::vector<std::vector<int>>* stage2_templates) {
  const SourceBatch src = make_source_batch(batch);
  const std::size_t n = batch.size();
  EncoderOutput enc = encode_infobox(g, src);
  const int bos_t = vocabs_.templ.find(kBos), eos_t = vocabs_.templ.find(kEos);

  std::size_t t_len = 0;
  for (const auto* ex : batch) {
    if (ex->template_ids.empty()) {
      throw Error(ErrorKind::kData, "example " + ex->entity_id + " has no gold template");
    }
    t_len = std::max(t_len, ex->template_ids.size());
  }
  std::vector<Var> l1_terms;
  Var s = template_initial_state(g, enc);
  for (std::size_t j = 0; j <= t_len; ++j) {
    std::vector<int> prev(n), target(n, -1);
    for (std::size_t r = 0; r < n; ++r) {
      const auto& ids = batch[r]->template_ids;
      prev[r] = j == 0 ? bos_t : j - 1 < ids.size() ? ids[j - 1] : eos_t;
      if (j < ids.size()) target[r] = ids[j];
      else if (j == ids.size()) target[r] = eos_t;
    }
    TemplateStep step = decode_template_step(g, enc, s, prev);
    s = step.state;
    l1_terms.push_back(ad::cross_entropy(step.logits, target));
  }
  Var l1 = add_all(l1_terms);
  BatchLoss out;
  out.l1 = l1.value()[0];

  Var total = l1;
  if (include_description) {
    std::vector<std::vector<int>> templates;
    if (stage2_templates) {
      if (stage2_templates->size() != n) {
        throw Error(ErrorKind::kInvalidArgument, "stage-2 template count differs from batch size");
      }
      templates = *stage2_templates;
    } else {
      for (const auto* ex : batch) templates.push_back(ex->template_ids);
    }
    const DescriptionMemory mem = description_memory(g, enc, make_sequence_batch(templates));
    const Vocab& tv = vocabs_.target;
    const int bos = tv.find(kBos), eos = tv.find(kEos), unk = tv.find(kUnk);
    std::size_t y_len = 0;
    for (const auto* ex : batch) {
      if (ex->description.empty()) {
        throw Error(ErrorKind::kData, "example " + ex->entity_id + " has an empty description");
      }
      y_len = std::max(y_len, ex->description.size());
    }
    std::vector<Var> l2_terms;
    Var s2 = description_initial_state(g, enc);
    for (std::size_t j = 0; j <= y_len; ++j) {
      std::vector<int> prev(n);
      std::vector<ad::MixtureTarget> targets(n);
      for (std::size_t r = 0; r < n; ++r) {
        const Tokens& y = batch[r]->description;
        prev[r] = j == 0 ? bos : j - 1 < y.size() ? tv.id(y[j - 1]) : eos;
        ad::MixtureTarget& t = targets[r];
        if (j > y.size()) {
          t.active = false;
        } else if (j == y.size()) {
          t.gen_id = eos;
        } else {
          t.gen_id = tv.find(y[j]);
          const Tokens& words = src.words[r];
          for (std::size_t i = 0; i < words.size(); ++i) {
            if (words[i] == y[j]) t.copy_positions.push_back(i);
          }
          if (t.gen_id < 0 && t.copy_positions.empty()) t.gen_id = unk;
        }
      }
      DescriptionStep step = decode_description_step(g, mem, s2, prev);
      s2 = step.state;
      l2_terms.push_back(ad::mixture_nll(step.gen_logits, step.copy_scores, step.switch_logit,
                                         mem.source.mask, targets));
    }
    Var l2 = add_all(l2_terms);
    out.l2 = l2.value()[0];
    total = ad::add(l1, l2);
  }
  out.total = ad::scale(total, 1.0 / static_cast<double>(n));
  if (!std::isfinite(out.total.value()[0])) {
    throw Error(ErrorKind::kNumeric, "non-finite loss");
  }
  return out;
}

}  // namespace hedmod
