#include "hedmod/synth.hpp"

#include <algorithm>
#include <cmath>

#include "hedmod/annotator.hpp"
#include "hedmod/error.hpp"
#include "hedmod/random.hpp"

namespace hedmod {

namespace {

const std::vector<std::string> kOnsets = {"b", "d", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z", "br", "gr", "st", "tr"};
const std::vector<std::string> kVowels = {"a", "e", "i", "o", "u", "ai", "ou"};
const std::vector<std::string> kCodas = {"", "n", "r", "s", "l", "th"};

std::string nonce_word(Rng& rng, std::size_t syllables) {
  std::string w;
  for (std::size_t i = 0; i < syllables; ++i) {
    w += kOnsets[rng.below(kOnsets.size())];
    w += kVowels[rng.below(kVowels.size())];
  }
  w += kCodas[rng.below(kCodas.size())];
  return w;
}

// Distinct nonce words that are not function words.
std::vector<std::string> word_pool(Rng& rng, std::size_t n, std::set<std::string>& used) {
  std::vector<std::string> out;
  const Lexicon& lex = Lexicon::english();
  while (out.size() < n) {
    std::string w = nonce_word(rng, 2 + rng.below(2));
    if (lex.is_function(w) || !used.insert(w).second) continue;
    out.push_back(w);
  }
  return out;
}

template <typename T>
const T& pick(Rng& rng, const std::vector<T>& items) {
  return items[rng.below(items.size())];
}

struct Pools {
  std::vector<std::string> cities, countries, regions, nationalities, years, first_names, last_names,
      fillers;
};

const std::vector<std::vector<std::string>> kHeads = {
    {"street", "square", "avenue", "bridge"},
    {"film", "album", "novel", "video_game"},
    {"singer", "producer", "actor", "painter", "writer", "politician"},
    {"district", "province", "municipality"},
    {"song", "painting", "poem"},
    {"lake", "mountain", "village", "river"},
};

const std::vector<std::pair<std::string, std::string>> kFillerProps = {
    {"P373", "commons category"}, {"P910", "topic's main category"}, {"P1448", "official name"},
    {"P138", "named after"},      {"P361", "part of"},               {"P1343", "described by source"},
    {"P856", "official website"}, {"P460", "said to be the same as"}};

}  // namespace

const std::vector<Tokens>& synthetic_families() {
  static const std::vector<Tokens> families = {
      {"$hed$", "in", "$mod$", ",", "$mod$"},
      {"$mod$", "$hed$"},
      {"$mod$", "$hed$", ",", "$hed$"},
      {"$hed$", "of", "$mod$"},
      {"$mod$", "$hed$", "by", "$mod$", "$mod$"},
      {"$hed$", "in", "$mod$"},
  };
  return families;
}

SynthCorpus make_synthetic_corpus(const SynthOptions& options) {
  if (options.entities == 0) throw Error(ErrorKind::kInvalidArgument, "synthetic corpus needs at least one entity");
  if (options.oov_fraction < 0.0 || options.oov_fraction > 1.0) {
    throw Error(ErrorKind::kInvalidArgument, "oov_fraction must lie in [0, 1]");
  }
  Rng rng(options.seed);
  std::set<std::string> used;
  for (const auto& hs : kHeads) used.insert(hs.begin(), hs.end());
  Pools p;
  p.cities = word_pool(rng, 24, used);
  p.countries = word_pool(rng, 12, used);
  p.regions = word_pool(rng, 12, used);
  p.nationalities = word_pool(rng, 10, used);
  for (auto& n : p.nationalities) n += "ian";
  p.first_names = word_pool(rng, 16, used);
  p.last_names = word_pool(rng, 16, used);
  p.fillers = word_pool(rng, 60, used);
  for (int y = 1950; y < 2020; y += 3) p.years.push_back(std::to_string(y));

  SynthCorpus out;
  const auto& families = synthetic_families();
  for (std::size_t n = 0; n < options.entities; ++n) {
    const std::size_t fam = n % families.size();
    Entity e;
    e.entity_id = "S" + std::to_string(n + 1);
    std::vector<Statement> core;
    Tokens heads, mods;
    const std::string head = pick(rng, kHeads[fam]);
    switch (fam) {
      case 0: {
        const std::string city = pick(rng, p.cities), country = pick(rng, p.countries);
        core = {{"P31", "instance of", head}, {"P131", "located in the administrative territorial entity", city},
                {"P17", "country", country}};
        heads = {head};
        mods = {city, country};
        break;
      }
      case 1: {
        const std::string year = pick(rng, p.years);
        core = {{"P31", "instance of", head}, {"P577", "publication date", year}};
        heads = {head};
        mods = {year};
        break;
      }
      case 2: {
        std::string second = pick(rng, kHeads[fam]);
        while (second == head) second = pick(rng, kHeads[fam]);
        const std::string nat = pick(rng, p.nationalities);
        core = {{"P31", "instance of", "human"}, {"P27", "country of citizenship", nat},
                {"P106", "occupation", head}, {"P106", "occupation", second}};
        heads = {head, second};
        mods = {nat};
        break;
      }
      case 3: {
        const std::string region = pick(rng, p.regions);
        core = {{"P31", "instance of", head}, {"P131", "located in the administrative territorial entity", region}};
        heads = {head};
        mods = {region};
        break;
      }
      case 4: {
        const std::string year = pick(rng, p.years), first = pick(rng, p.first_names),
                          last = pick(rng, p.last_names);
        core = {{"P31", "instance of", head}, {"P577", "publication date", year},
                {"P170", "creator", first + " " + last}};
        heads = {head};
        mods = {year, first, last};
        break;
      }
      default: {
        const std::string country = pick(rng, p.countries);
        core = {{"P31", "instance of", head}, {"P17", "country", country}};
        heads = {head};
        mods = {country};
        break;
      }
    }
    const std::size_t total = 5 + rng.below(4);
    std::vector<Statement> fillers;
    while (core.size() + fillers.size() < total) {
      const auto& prop = pick(rng, kFillerProps);
      std::string value = pick(rng, p.fillers);
      if (rng.below(3) == 0) value += " " + pick(rng, p.fillers);
      fillers.push_back({prop.first, prop.second, value});
    }
    // Core statements keep their relative order; fillers are interleaved.
    std::vector<bool> slot(core.size() + fillers.size(), false);
    for (std::size_t i = 0; i < core.size(); ++i) slot[i] = true;
    rng.shuffle(slot);
    std::size_t ci = 0, fi = 0;
    for (bool is_core : slot) e.statements.push_back(is_core ? core[ci++] : fillers[fi++]);

    e.gold_template = families[fam];
    e.description = apply_template(e.gold_template, heads, mods);
    e.label = mods.empty() ? head : mods.back() + " " + head;
    out.entities.push_back(std::move(e));
    out.family.push_back(fam);
  }

  std::set<std::string> modifier_set;
  for (const auto& e : out.entities) {
    for (const auto& m : default_annotator().annotate(e.description).modifiers()) modifier_set.insert(m);
  }
  std::vector<std::string> modifiers(modifier_set.begin(), modifier_set.end());
  rng.shuffle(modifiers);
  const auto n_oov = static_cast<std::size_t>(std::lround(options.oov_fraction * static_cast<double>(modifiers.size())));
  out.oov_words.insert(modifiers.begin(), modifiers.begin() + static_cast<std::ptrdiff_t>(n_oov));
  return out;
}

Vocab without_tokens(const Vocab& vocab, const std::set<std::string>& tokens) {
  Vocab out;
  for (const auto& t : vocab.tokens()) {
    if (!tokens.count(t)) out.add(t);
  }
  return out;
}

}  // namespace hedmod
