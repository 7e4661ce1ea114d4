#include "hedmod/annotator.hpp"

#include "hedmod/error.hpp"
#include "hedmod/vocab.hpp"

namespace hedmod {

Tokens Annotation::heads() const {
  Tokens out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (roles[i] == Role::kHead) out.push_back(tokens[i]);
  }
  return out;
}

Tokens Annotation::modifiers() const {
  Tokens out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (roles[i] == Role::kModifier) out.push_back(tokens[i]);
  }
  return out;
}

Annotation RuleAnnotator::annotate(const Tokens& description) const {
  if (description.empty()) {
    throw Error(ErrorKind::kInvalidArgument, "annotate: empty description");
  }
  const std::size_t n = description.size();
  Annotation a;
  a.tokens = description;
  a.roles.assign(n, Role::kFunction);

  std::size_t first_prep = n;
  for (std::size_t i = 0; i < n; ++i) {
    if (lexicon_->is_preposition(description[i])) {
      first_prep = i;
      break;
    }
  }

  bool has_head = false;
  // Head region: coordinated runs before the first preposition.
  std::size_t last_content = n;
  auto close_run = [&] {
    if (last_content != n) {
      a.roles[last_content] = Role::kHead;
      has_head = true;
    }
    last_content = n;
  };
  for (std::size_t i = 0; i < first_prep; ++i) {
    const std::string& w = description[i];
    if (lexicon_->is_coordinator(w)) {
      close_run();
    } else if (!lexicon_->is_function(w)) {
      a.roles[i] = Role::kModifier;
      last_content = i;
    }
  }
  close_run();

  for (std::size_t i = first_prep; i < n; ++i) {
    if (!lexicon_->is_function(description[i])) a.roles[i] = Role::kModifier;
  }

  if (!has_head) {
    // Nothing before the first preposition: the first content run heads.
    std::size_t i = 0;
    while (i < n && a.roles[i] == Role::kFunction) ++i;
    while (i + 1 < n && a.roles[i + 1] != Role::kFunction) ++i;
    if (i < n && a.roles[i] != Role::kFunction) a.roles[i] = Role::kHead;
  }

  a.template_tokens.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    switch (a.roles[i]) {
      case Role::kHead: a.template_tokens.emplace_back(kHead); break;
      case Role::kModifier: a.template_tokens.emplace_back(kModifier); break;
      case Role::kFunction: a.template_tokens.push_back(description[i]); break;
    }
  }
  return a;
}

const Annotator& default_annotator() {
  static const RuleAnnotator annotator;
  return annotator;
}

Annotation annotate(const Tokens& description) { return default_annotator().annotate(description); }

std::set<std::string> extract_heads(const Tokens& description) {
  const Tokens heads = annotate(description).heads();
  return {heads.begin(), heads.end()};
}

Tokens apply_template(const Tokens& template_tokens, const Tokens& heads, const Tokens& modifiers) {
  Tokens out;
  out.reserve(template_tokens.size());
  std::size_t next_head = 0, next_mod = 0;
  for (std::size_t i = 0; i < template_tokens.size(); ++i) {
    const std::string& t = template_tokens[i];
    if (t == kHead) {
      if (next_head >= heads.size()) {
        throw Error(ErrorKind::kInvalidArgument,
                    "apply_template: no head left for $hed$ slot at index " + std::to_string(i));
      }
      out.push_back(heads[next_head++]);
    } else if (t == kModifier) {
      if (next_mod >= modifiers.size()) {
        throw Error(ErrorKind::kInvalidArgument,
                    "apply_template: no modifier left for $mod$ slot at index " + std::to_string(i));
      }
      out.push_back(modifiers[next_mod++]);
    } else {
      out.push_back(t);
    }
  }
  return out;
}

}  // namespace hedmod
