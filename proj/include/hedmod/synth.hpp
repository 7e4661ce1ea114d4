#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "hedmod/corpus.hpp"

namespace hedmod {

/// The six description shapes produced by the synthetic corpus.
const std::vector<Tokens>& synthetic_families();

struct SynthOptions {
  std::size_t entities = 64;
  double oov_fraction = 0.2;  // share of distinct modifier words kept out of the target vocab
  std::uint64_t seed = 7;
};

struct SynthCorpus {
  std::vector<Entity> entities;     // gold_template filled
  std::vector<std::size_t> family;  // family index per entity
  std::set<std::string> oov_words;
};

/// Entities with 5-8 statements whose "instance of" value fixes the family;
/// every modifier and head is a value word of the infobox.
SynthCorpus make_synthetic_corpus(const SynthOptions& options);

/// Copy of `vocab` without `tokens`; ids of the kept tokens are compacted.
Vocab without_tokens(const Vocab& vocab, const std::set<std::string>& tokens);

}  // namespace hedmod
