#pragma once

#include <set>
#include <string>
#include <vector>

#include "hedmod/lexicon.hpp"
#include "hedmod/text.hpp"

namespace hedmod {

enum class Role { kHead, kModifier, kFunction };

struct Annotation {
  Tokens tokens;
  std::vector<Role> roles;
  Tokens template_tokens;

  Tokens heads() const;      // HEAD tokens in order
  Tokens modifiers() const;  // MODIFIER tokens in order
};

/// Identifies heads and modifiers of a type description.
class Annotator {
 public:
  virtual ~Annotator() = default;
  /// Throws Error(kInvalidArgument) on an empty description.
  virtual Annotation annotate(const Tokens& description) const = 0;
};

/// Deterministic rule for English noun compounds:
///  - stopwords, prepositions, conjunctions and punctuation are FUNCTION;
///  - before the first preposition, each coordinated run (split on ",", "and",
///    "or", ...) has its last content token as HEAD and the rest as MODIFIER;
///  - every content token from the first preposition on is MODIFIER;
///  - if nothing precedes the first preposition, the last token of the first
///    content run becomes the HEAD.
class RuleAnnotator final : public Annotator {
 public:
  explicit RuleAnnotator(const Lexicon& lexicon = Lexicon::english()) : lexicon_(&lexicon) {}
  Annotation annotate(const Tokens& description) const override;

 private:
  const Lexicon* lexicon_;
};

const Annotator& default_annotator();

Annotation annotate(const Tokens& description);
std::set<std::string> extract_heads(const Tokens& description);

/// Fills $hed$ and $mod$ slots in order; other tokens pass through.
/// Throws Error(kInvalidArgument) naming the first slot that cannot be filled.
Tokens apply_template(const Tokens& template_tokens, const Tokens& heads, const Tokens& modifiers);

}  // namespace hedmod
