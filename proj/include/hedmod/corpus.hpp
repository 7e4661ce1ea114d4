#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hedmod/lexicon.hpp"
#include "hedmod/text.hpp"
#include "hedmod/vocab.hpp"

namespace hedmod {

struct Statement {
  std::string property_id;
  std::string property_label;
  std::string value;  // lowercased, otherwise verbatim
};

struct Entity {
  std::string entity_id;
  std::string label;
  Tokens description;               // gold type description, tokenized
  std::vector<Statement> statements;
  Tokens gold_template;             // filled by dataset preparation; may be empty
};

/// One encoder input position of a reconstructed infobox.
struct SourceToken {
  std::string word;
  std::string property;  // label with spaces replaced by '_'
  int position = 0;
};

struct VocabSet {
  Vocab value;
  Vocab property;
  Vocab target;
  Vocab templ;
  std::size_t position_count = 16;

  void save(const std::string& dir) const;
  static VocabSet load(const std::string& dir, std::size_t position_count);
};

struct DatasetSplit {
  std::vector<Entity> train;
  std::vector<Entity> valid;
  std::vector<Entity> test;
};

inline constexpr std::size_t kDefaultMaxPosition = 16;

/// Parses one JSONL line. `lineno` is used in error messages.
Entity parse_entity(const std::string& line, std::size_t lineno);
std::string entity_to_json(const Entity& e);

std::vector<Entity> load_jsonl(const std::string& path);
void write_jsonl(const std::string& path, const std::vector<Entity>& entities);

/// Keeps entities with >= min_statements statements and a non-empty description.
std::vector<Entity> filter_entities(const std::vector<Entity>& entities, std::size_t min_statements);

std::string property_token(const std::string& label);

std::vector<SourceToken> reconstruct_infobox(const Entity& entity,
                                             std::size_t max_position = kDefaultMaxPosition);

/// Every value token of the infobox in statement order.
Tokens source_values(const Entity& entity);
/// Value tokens of "instance of" (P31) and "subclass of" (P279) statements.
Tokens kg_type_values(const Entity& entity);

/// Vocabulary sizes include the reserved tokens. Ties in frequency break
/// lexicographically.
VocabSet build_vocabs(const std::vector<Entity>& train, std::size_t value_vocab_size,
                      std::size_t target_vocab_size,
                      const Lexicon& lexicon = Lexicon::english(),
                      std::size_t max_position = kDefaultMaxPosition);

/// Seeded shuffle then 8:1:1 partition; needs at least 10 entities.
DatasetSplit split_dataset(std::vector<Entity> entities, std::uint64_t seed);

/// Share of non-function description tokens that are copied from the
/// infobox values under the prefix rule of is_copied.
double corpus_copy_ratio(const std::vector<Entity>& entities,
                         const Lexicon& lexicon = Lexicon::english());

}  // namespace hedmod
