#pragma once

#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "hedmod/gradcheck.hpp"
#include "hedmod/random.hpp"

// Gradient checks of every layer and the normalization fuzz, shared by the
// unit tests and the acceptance run.

namespace hedmod::testing {

struct LayerCheck {
  std::string layer;
  double max_rel_error = 0.0;
  std::string worst;
  std::size_t checked = 0;
};

inline Tensor random_tensor(Shape shape, Rng& rng, double scale = 1.0) {
  Tensor t(std::move(shape));
  for (double& x : t.data()) x = rng.uniform(-scale, scale);
  return t;
}

inline ad::Var weighted_total(ad::Graph& g, ad::Var x, const Tensor& weights) {
  return ad::sum(ad::mul(x, g.constant(weights)));
}

inline std::vector<Parameter*> with_prefixes(Model& m, std::initializer_list<const char*> prefixes) {
  std::vector<Parameter*> out;
  for (const char* p : prefixes) {
    for (Parameter* q : m.parameters().with_prefix(p)) out.push_back(q);
  }
  return out;
}

inline void merge(LayerCheck& acc, const ad::GradCheckResult& r, int point) {
  acc.checked += r.checked;
  if (r.max_rel_error >= acc.max_rel_error) {
    acc.max_rel_error = r.max_rel_error;
    acc.worst = r.worst + " at point " + std::to_string(point);
  }
}

struct StepInputs {
  ParameterStore store;
  Parameter* e;
  Parameter* s;
  Parameter* cx;
  Parameter* ct;
  explicit StepInputs(std::uint64_t seed) {
    e = &store.add("e", {2, 4});
    s = &store.add("s", {2, 5});
    cx = &store.add("cx", {2, 5});
    ct = &store.add("ct", {2, 5});
    store.init_uniform(1.0, seed);
  }
};

inline LayerCheck check_encoder_gru(int points) {
  LayerCheck out{"GRU encoder"};
  auto s = tiny_setup();
  Model m(s.vocabs, tiny_config());
  const SourceBatch batch = make_source_batch({&s.examples[0], &s.examples.back()});
  for (int point = 0; point < points; ++point) {
    m.parameters().init_uniform(0.6, 100 + point);
    Rng rng(point);
    const Tensor w = random_tensor({2, 5}, rng);
    auto f = [&](ad::Graph& g) { return weighted_total(g, m.encode_infobox(g, batch).final_state, w); };
    ad::GradCheckOptions opt;
    opt.max_per_param = 12;
    opt.seed = point;
    merge(out, ad::grad_check(f, m.parameters().with_prefix("enc."), opt), point);
  }
  return out;
}

inline LayerCheck check_attention(int points) {
  LayerCheck out{"general attention"};
  for (int point = 0; point < points; ++point) {
    Rng rng(point);
    ParameterStore ps;
    Parameter& mem = ps.add("memory", {2, 3, 4});
    Parameter& q = ps.add("query", {2, 5});
    Parameter& w = ps.add("W", {4, 5});
    ps.init_uniform(1.0, 200 + point);
    ad::Mask mask(2, 3);
    mask(1, 2) = 0;
    const Tensor rc = random_tensor({2, 4}, rng), rw = random_tensor({2, 3}, rng);
    auto f = [&](ad::Graph& g) {
      const Attention a = attend_general(g.param(mem), mask, g.param(q), g.param(w));
      return ad::add(weighted_total(g, a.context, rc), weighted_total(g, a.weights, rw));
    };
    merge(out, ad::grad_check(f, ps.all()), point);
  }
  return out;
}

inline LayerCheck check_context_gates(int points) {
  LayerCheck out{"context gates"};
  auto s = tiny_setup();
  Model m(s.vocabs, tiny_config());
  for (int point = 0; point < points; ++point) {
    m.parameters().init_uniform(0.7, 300 + point);
    StepInputs in(400 + point);
    Rng rng(point);
    const Tensor r1 = random_tensor({2, 5}, rng), r2 = random_tensor({2, 5}, rng);
    auto f = [&](ad::Graph& g) {
      const Gates gates = m.context_gates(g, g.param(*in.e), g.param(*in.s), g.param(*in.cx), g.param(*in.ct));
      return ad::add(weighted_total(g, gates.x, r1), weighted_total(g, gates.t, r2));
    };
    auto params = with_prefixes(m, {"s2.gate_x", "s2.gate_t"});
    for (Parameter* p : in.store.all()) params.push_back(p);
    merge(out, ad::grad_check(f, params), point);
  }
  return out;
}

inline LayerCheck check_fusion(int points) {
  LayerCheck out{"context fusion"};
  auto s = tiny_setup();
  Model m(s.vocabs, tiny_config());
  for (int point = 0; point < points; ++point) {
    m.parameters().init_uniform(0.7, 500 + point);
    StepInputs in(600 + point);
    Rng rng(point);
    const Tensor r = random_tensor({2, 5}, rng);
    auto f = [&](ad::Graph& g) {
      ad::Var e = g.param(*in.e), st = g.param(*in.s), cx = g.param(*in.cx), ct = g.param(*in.ct);
      const Gates gates = m.context_gates(g, e, st, cx, ct);
      return weighted_total(g, m.fuse_contexts(g, e, st, cx, ct, gates), r);
    };
    auto params = with_prefixes(m, {"s2.gate_", "s2.fuse_"});
    for (Parameter* p : in.store.all()) params.push_back(p);
    merge(out, ad::grad_check(f, params), point);
  }
  return out;
}

inline LayerCheck check_copy_generate(int points) {
  LayerCheck out{"copy/generate output"};
  auto s = tiny_setup();
  Model m(s.vocabs, tiny_config());
  const EncodedExample& ex = s.examples.back();
  const Vocab& tv = s.vocabs.target;
  for (int point = 0; point < points; ++point) {
    m.parameters().init_uniform(0.6, 700 + point);
    // cycles through generate-only, copy-only and shared words
    const std::string word = ex.description[static_cast<std::size_t>(point) % ex.description.size()];
    ad::MixtureTarget target;
    target.gen_id = tv.find(word);
    for (std::size_t i = 0; i < ex.source_words.size(); ++i) {
      if (ex.source_words[i] == word) target.copy_positions.push_back(i);
    }
    if (target.gen_id < 0 && target.copy_positions.empty()) target.gen_id = tv.find(kUnk);
    auto f = [&](ad::Graph& g) {
      const EncoderOutput enc = m.encode_infobox(g, make_source_batch({&ex}));
      const DescriptionMemory mem = m.description_memory(g, enc, make_sequence_batch({ex.template_ids}));
      const DescriptionStep step =
          m.decode_description_step(g, mem, m.description_initial_state(g, enc), {tv.find(kBos)});
      return ad::mixture_nll(step.gen_logits, step.copy_scores, step.switch_logit, mem.source.mask, {target});
    };
    ad::GradCheckOptions opt;
    opt.max_per_param = 10;
    opt.seed = point;
    opt.epsilon = 1e-3;
    opt.fourth_order = true;
    merge(out, ad::grad_check(f, m.parameters().all(), opt), point);
  }
  return out;
}

inline LayerCheck check_joint_loss(int points) {
  LayerCheck out{"joint loss"};
  auto s = tiny_setup();
  Model m(s.vocabs, tiny_config());
  const std::vector<const EncodedExample*> batch = {&s.examples[2], &s.examples.back()};
  for (int point = 0; point < points; ++point) {
    m.parameters().init_uniform(0.5, 800 + point);
    auto f = [&](ad::Graph& g) { return m.joint_loss(g, batch).total; };
    ad::GradCheckOptions opt;
    opt.max_per_param = 8;
    opt.seed = point;
    opt.epsilon = 1e-3;
    opt.fourth_order = true;
    merge(out, ad::grad_check(f, m.parameters().all(), opt), point);
  }
  return out;
}

inline std::vector<LayerCheck> check_all_layers(int points) {
  return {check_encoder_gru(points), check_attention(points),    check_context_gates(points),
          check_fusion(points),      check_copy_generate(points), check_joint_loss(points)};
}

struct FuzzResult {
  double max_deviation = 0.0;  // largest |sum - 1| over every distribution
  std::size_t distributions = 0;
  bool gates_in_range = true;
  bool non_negative = true;
};

inline FuzzResult normalization_fuzz(int steps) {
  FuzzResult out;
  auto s = tiny_setup();
  Model m(s.vocabs, tiny_config());
  Rng rng(77);
  const Vocab& tv = s.vocabs.target;
  auto record = [&](const std::vector<double>& p) {
    double sum = 0.0;
    for (double x : p) {
      sum += x;
      if (x < 0.0) out.non_negative = false;
    }
    out.max_deviation = std::max(out.max_deviation, std::abs(sum - 1.0));
    ++out.distributions;
  };
  for (int step = 0; step < steps; ++step) {
    m.parameters().init_uniform(rng.uniform(0.05, 1.0), rng.next());
    const EncodedExample& ex = s.examples[rng.below(s.examples.size())];
    std::vector<int> templ(1 + rng.below(5));
    for (int& t : templ) t = static_cast<int>(rng.below(s.vocabs.templ.size()));
    ad::Graph g;
    g.set_recording(false);
    const EncoderOutput enc = m.encode_infobox(g, make_source_batch({&ex}));
    const DescriptionMemory mem = m.description_memory(g, enc, make_sequence_batch({templ}));
    ad::Var state = g.constant(random_tensor({1, 5}, rng));
    const DescriptionStep ds = m.decode_description_step(g, mem, state, {static_cast<int>(rng.below(tv.size()))});
    const TemplateStep ts =
        m.decode_template_step(g, enc, state, {static_cast<int>(rng.below(s.vocabs.templ.size()))});
    for (const ad::Var w : {ds.source_attention.weights, ds.template_attention.weights, ts.attention.weights}) {
      record(std::vector<double>(w.value().data().begin(), w.value().data().end()));
    }
    for (const ad::Var gate : {ds.gates.x, ds.gates.t}) {
      for (double x : gate.value().data()) out.gates_in_range &= x > 0.0 && x < 1.0;
    }
    const OutputDistribution d =
        copy_gen_distribution(ds.gen_logits.value().data(), ds.copy_scores.value().data(),
                              ds.switch_logit.value()[0], ExtendedVocab(tv, ex.source_words));
    record(d.prob);
  }
  return out;
}

}  // namespace hedmod::testing
