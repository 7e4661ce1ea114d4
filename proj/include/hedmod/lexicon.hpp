#pragma once

#include <set>
#include <string>

namespace hedmod {

/// Function-word lexicon shared by the annotator, vocabularies and metrics.
class Lexicon {
 public:
  Lexicon(std::set<std::string> stopwords, std::set<std::string> prepositions,
          std::set<std::string> coordinators);

  /// Embedded English list: articles, determiners, prepositions, conjunctions,
  /// auxiliaries and pronouns.
  static const Lexicon& english();
  /// No stopwords; punctuation is still recognised.
  static const Lexicon& empty();

  bool is_stopword(const std::string& w) const { return stopwords_.count(w) > 0; }
  /// Non-empty token made only of ASCII punctuation.
  static bool is_punctuation(const std::string& w);
  bool is_function(const std::string& w) const { return is_stopword(w) || is_punctuation(w); }
  bool is_preposition(const std::string& w) const { return prepositions_.count(w) > 0; }
  bool is_coordinator(const std::string& w) const { return coordinators_.count(w) > 0; }

  const std::set<std::string>& stopwords() const { return stopwords_; }

  /// Punctuation tokens admitted to the template vocabulary.
  static const std::set<std::string>& punctuation();

 private:
  std::set<std::string> stopwords_;
  std::set<std::string> prepositions_;
  std::set<std::string> coordinators_;
};

}  // namespace hedmod
