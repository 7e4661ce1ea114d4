#pragma once

#include "hedmod/annotator.hpp"
#include "hedmod/model.hpp"
#include "hedmod/synth.hpp"

namespace hedmod::testing {

inline Entity rue_cazotte() {
  Entity e;
  e.entity_id = "Q1";
  e.label = "rue cazotte";
  e.description = tokenize("street in paris , france");
  e.statements = {{"P31", "instance of", "street"},
                  {"P17", "country", "france"},
                  {"P131", "located in the administrative territorial entity", "paris"},
                  {"P138", "named after", "jacques cazotte"},
                  {"P373", "commons category", "rue cazotte"}};
  e.gold_template = annotate(e.description).template_tokens;
  return e;
}

inline ModelConfig tiny_config(std::uint64_t seed = 3, double init = 0.5) {
  ModelConfig c;
  c.d_hidden = 5;
  c.d_word = 4;
  c.d_property = 3;
  c.d_position = 3;
  c.max_position = 4;
  c.max_template_length = 8;
  c.max_description_length = 8;
  c.init_scale = init;
  c.seed = seed;
  return c;
}

struct TinySetup {
  std::vector<Entity> entities;
  VocabSet vocabs;
  std::vector<EncodedExample> examples;
};

/// A few synthetic entities; `paris` is dropped from the target vocab so it is copy-only.
inline TinySetup tiny_setup(std::size_t n = 6, std::size_t max_position = 4) {
  TinySetup s;
  SynthOptions opt;
  opt.entities = n;
  opt.seed = 11;
  s.entities = make_synthetic_corpus(opt).entities;
  s.entities.push_back(rue_cazotte());
  s.vocabs = build_vocabs(s.entities, 10000, 10000, Lexicon::english(), max_position);
  s.vocabs.target = without_tokens(s.vocabs.target, {"paris"});
  for (const auto& e : s.entities) s.examples.push_back(encode_example(e, s.vocabs, max_position));
  return s;
}

}  // namespace hedmod::testing
