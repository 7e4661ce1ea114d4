#include "hedmod/lexicon.hpp"

#include <cctype>

namespace hedmod {

namespace {

const std::set<std::string>& english_prepositions() {
  static const std::set<std::string> words = {
      "about",   "above",  "across",     "after",   "against", "along",   "amid",
      "among",   "around", "as",         "at",      "before",  "behind",  "below",
      "beneath", "beside", "besides",    "between", "beyond",  "by",      "despite",
      "down",    "during", "except",     "for",     "from",    "in",      "inside",
      "into",    "near",   "of",         "off",     "on",      "onto",    "out",
      "outside", "over",   "per",        "since",   "through", "throughout", "till",
      "to",      "toward", "towards",    "under",   "underneath", "until", "up",
      "upon",    "via",    "with",       "within",  "without",
  };
  return words;
}

std::set<std::string> english_stopwords() {
  std::set<std::string> words = {
      // articles and determiners
      "a", "an", "the", "this", "that", "these", "those", "some", "any", "each", "every",
      "no", "all", "both", "either", "neither", "another", "such", "other", "own", "same",
      "few", "more", "most", "much", "many", "several",
      // conjunctions and relatives
      "and", "or", "but", "nor", "so", "yet", "if", "because", "although", "though",
      "while", "whereas", "whether", "than", "then", "when", "where", "which", "who",
      "whom", "whose", "what",
      // auxiliaries
      "is", "am", "are", "was", "were", "be", "been", "being", "has", "have", "had",
      "having", "do", "does", "did", "doing", "will", "would", "shall", "should", "can",
      "could", "may", "might", "must",
      // pronouns
      "i", "me", "my", "we", "us", "our", "you", "your", "he", "him", "his", "she", "her",
      "it", "its", "they", "them", "their", "itself", "himself", "herself", "themselves",
      // adverbs and particles
      "not", "only", "very", "also", "just", "too", "there", "here", "how", "why", "again",
      "once", "further", "s", "'s",
  };
  const auto& preps = english_prepositions();
  words.insert(preps.begin(), preps.end());
  return words;
}

}  // namespace

Lexicon::Lexicon(std::set<std::string> stopwords, std::set<std::string> prepositions,
                 std::set<std::string> coordinators)
    : stopwords_(std::move(stopwords)),
      prepositions_(std::move(prepositions)),
      coordinators_(std::move(coordinators)) {}

const Lexicon& Lexicon::english() {
  static const Lexicon lexicon(english_stopwords(), english_prepositions(),
                               {",", "and", "or", "&", "/", ";"});
  return lexicon;
}

const Lexicon& Lexicon::empty() {
  static const Lexicon lexicon({}, {}, {","});
  return lexicon;
}

bool Lexicon::is_punctuation(const std::string& w) {
  if (w.empty()) return false;
  for (unsigned char c : w) {
    if (!std::ispunct(c)) return false;
  }
  return true;
}

const std::set<std::string>& Lexicon::punctuation() {
  static const std::set<std::string> marks = {",", ".", "(", ")", "[", "]", "\"", ":",
                                              ";", "!", "?", "-", "&", "/", "'"};
  return marks;
}

}  // namespace hedmod
