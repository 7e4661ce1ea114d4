#include "hedmod/corpus.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "hedmod/error.hpp"
#include "hedmod/metrics.hpp"
#include "hedmod/random.hpp"

namespace hedmod {

using nlohmann::json;

namespace {

Tokens split_whitespace(const std::string& text) {
  std::istringstream in(text);
  Tokens out;
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

const json& require(const json& obj, const char* key, std::size_t lineno) {
  auto it = obj.find(key);
  if (it == obj.end()) {
    throw Error(ErrorKind::kParse,
                "line " + std::to_string(lineno) + ": missing key '" + key + "'");
  }
  return *it;
}

std::string require_string(const json& obj, const char* key, std::size_t lineno) {
  const json& v = require(obj, key, lineno);
  if (!v.is_string()) {
    throw Error(ErrorKind::kParse,
                "line " + std::to_string(lineno) + ": key '" + key + "' must be a string");
  }
  return v.get<std::string>();
}

// Most frequent first, ties lexicographic; truncated to `limit` entries.
std::vector<std::string> ranked(const std::map<std::string, std::size_t>& counts,
                                std::size_t limit) {
  std::vector<std::pair<std::string, std::size_t>> items(counts.begin(), counts.end());
  std::stable_sort(items.begin(), items.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> out;
  for (std::size_t i = 0; i < items.size() && i < limit; ++i) out.push_back(items[i].first);
  return out;
}

Vocab reserved_vocab() { return Vocab({kPad, kUnk, kBos, kEos}); }
constexpr std::size_t kReserved = 4;

}  // namespace

void VocabSet::save(const std::string& dir) const {
  std::filesystem::create_directories(dir);
  const std::filesystem::path base(dir);
  value.save((base / "value_vocab.txt").string());
  property.save((base / "property_vocab.txt").string());
  target.save((base / "target_vocab.txt").string());
  templ.save((base / "template_vocab.txt").string());
}

VocabSet VocabSet::load(const std::string& dir, std::size_t position_count) {
  const std::filesystem::path base(dir);
  VocabSet v;
  v.value = Vocab::load((base / "value_vocab.txt").string());
  v.property = Vocab::load((base / "property_vocab.txt").string());
  v.target = Vocab::load((base / "target_vocab.txt").string());
  v.templ = Vocab::load((base / "template_vocab.txt").string());
  v.position_count = position_count;
  return v;
}

Entity parse_entity(const std::string& line, std::size_t lineno) {
  json obj;
  try {
    obj = json::parse(line);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::kParse, "line " + std::to_string(lineno) + ": malformed JSON (" +
                                       e.what() + ")");
  }
  if (!obj.is_object()) {
    throw Error(ErrorKind::kParse, "line " + std::to_string(lineno) + ": expected a JSON object");
  }
  Entity e;
  e.entity_id = require_string(obj, "entity_id", lineno);
  e.label = to_lower(require_string(obj, "label", lineno));
  e.description = tokenize(require_string(obj, "description", lineno));
  const json& stmts = require(obj, "statements", lineno);
  if (!stmts.is_array()) {
    throw Error(ErrorKind::kParse,
                "line " + std::to_string(lineno) + ": key 'statements' must be an array");
  }
  for (const json& s : stmts) {
    if (!s.is_array() || s.size() != 3 || !s[0].is_string() || !s[1].is_string() ||
        !s[2].is_string()) {
      throw Error(ErrorKind::kParse,
                  "line " + std::to_string(lineno) +
                      ": each statement must be [property_id, property_label, value]");
    }
    e.statements.push_back(Statement{s[0].get<std::string>(), to_lower(s[1].get<std::string>()),
                                     to_lower(s[2].get<std::string>())});
  }
  if (auto it = obj.find("template"); it != obj.end() && it->is_string()) {
    e.gold_template = split_whitespace(it->get<std::string>());
  }
  return e;
}

std::string entity_to_json(const Entity& e) {
  json obj;
  obj["entity_id"] = e.entity_id;
  obj["label"] = e.label;
  obj["description"] = join(e.description);
  json stmts = json::array();
  for (const auto& s : e.statements) stmts.push_back({s.property_id, s.property_label, s.value});
  obj["statements"] = std::move(stmts);
  if (!e.gold_template.empty()) obj["template"] = join(e.gold_template);
  return obj.dump();
}

std::vector<Entity> load_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path);
  std::vector<Entity> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(parse_entity(line, lineno));
    } catch (const Error& e) {
      throw Error(e.kind(), path + ": " + e.what());
    }
  }
  return out;
}

void write_jsonl(const std::string& path, const std::vector<Entity>& entities) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path);
  for (const auto& e : entities) out << entity_to_json(e) << '\n';
}

std::vector<Entity> filter_entities(const std::vector<Entity>& entities, std::size_t min_statements) {
  if (min_statements < 1) {
    throw Error(ErrorKind::kInvalidArgument, "min_statements must be at least 1");
  }
  std::vector<Entity> out;
  for (const auto& e : entities) {
    if (e.statements.size() >= min_statements && !e.description.empty()) out.push_back(e);
  }
  return out;
}

std::string property_token(const std::string& label) {
  std::string out;
  for (const auto& part : split_whitespace(to_lower(label))) {
    if (!out.empty()) out += '_';
    out += part;
  }
  return out;
}

std::vector<SourceToken> reconstruct_infobox(const Entity& entity, std::size_t max_position) {
  if (max_position < 1) throw Error(ErrorKind::kInvalidArgument, "max_position must be positive");
  std::vector<SourceToken> out;
  for (const auto& s : entity.statements) {
    const std::string prop = property_token(s.property_label);
    const Tokens words = tokenize(s.value);
    for (std::size_t k = 0; k < words.size(); ++k) {
      out.push_back(SourceToken{words[k], prop, static_cast<int>(std::min(k, max_position - 1))});
    }
  }
  return out;
}

Tokens source_values(const Entity& entity) {
  Tokens out;
  for (const auto& s : entity.statements) {
    for (auto& w : tokenize(s.value)) out.push_back(std::move(w));
  }
  return out;
}

Tokens kg_type_values(const Entity& entity) {
  Tokens out;
  for (const auto& s : entity.statements) {
    if (s.property_id != "P31" && s.property_id != "P279") continue;
    for (auto& w : tokenize(s.value)) out.push_back(std::move(w));
  }
  return out;
}

VocabSet build_vocabs(const std::vector<Entity>& train, std::size_t value_vocab_size,
                      std::size_t target_vocab_size, const Lexicon& lexicon,
                      std::size_t max_position) {
  if (train.empty()) throw Error(ErrorKind::kInvalidArgument, "build_vocabs: empty training set");
  if (value_vocab_size < kReserved || target_vocab_size < kReserved) {
    throw Error(ErrorKind::kInvalidArgument,
                "vocabulary sizes must be at least " + std::to_string(kReserved) +
                    " (the reserved tokens)");
  }
  std::map<std::string, std::size_t> value_counts, target_counts, property_counts;
  for (const auto& e : train) {
    for (const auto& tok : reconstruct_infobox(e, max_position)) {
      ++value_counts[tok.word];
    }
    for (const auto& s : e.statements) ++property_counts[property_token(s.property_label)];
    for (const auto& w : e.description) ++target_counts[w];
  }
  VocabSet v;
  v.position_count = max_position;
  v.value = reserved_vocab();
  for (const auto& w : ranked(value_counts, value_vocab_size - kReserved)) v.value.add(w);
  v.target = reserved_vocab();
  for (const auto& w : ranked(target_counts, target_vocab_size - kReserved)) v.target.add(w);
  v.property = Vocab({kPad, kUnk});
  for (const auto& p : ranked(property_counts, property_counts.size())) v.property.add(p);
  v.templ = reserved_vocab();
  v.templ.add(kHead);
  v.templ.add(kModifier);
  for (const auto& w : lexicon.stopwords()) v.templ.add(w);
  for (const auto& p : Lexicon::punctuation()) v.templ.add(p);
  return v;
}

DatasetSplit split_dataset(std::vector<Entity> entities, std::uint64_t seed) {
  if (entities.size() < 10) {
    throw Error(ErrorKind::kInvalidArgument,
                "split_dataset needs at least 10 entities, got " + std::to_string(entities.size()));
  }
  Rng rng(seed);
  rng.shuffle(entities);
  const std::size_t n = entities.size();
  const std::size_t n_test = n / 10;
  const std::size_t n_valid = n / 10;
  const std::size_t n_train = n - n_valid - n_test;
  DatasetSplit split;
  auto first = std::make_move_iterator(entities.begin());
  split.train.assign(first, first + static_cast<std::ptrdiff_t>(n_train));
  split.valid.assign(first + static_cast<std::ptrdiff_t>(n_train),
                     first + static_cast<std::ptrdiff_t>(n_train + n_valid));
  split.test.assign(first + static_cast<std::ptrdiff_t>(n_train + n_valid),
                    std::make_move_iterator(entities.end()));
  return split;
}

double corpus_copy_ratio(const std::vector<Entity>& entities, const Lexicon& lexicon) {
  std::size_t copied = 0, total = 0;
  for (const auto& e : entities) {
    const Tokens values = source_values(e);
    for (const auto& w : e.description) {
      if (lexicon.is_function(w)) continue;
      ++total;
      copied += is_copied(w, values, kDefaultPrefixLength, lexicon);
    }
  }
  if (total == 0) {
    throw Error(ErrorKind::kData, "corpus_copy_ratio: no non-stopword description tokens");
  }
  return static_cast<double>(copied) / static_cast<double>(total);
}

}  // namespace hedmod
