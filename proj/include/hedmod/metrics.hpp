#pragma once

#include <string>
#include <vector>

#include "hedmod/annotator.hpp"
#include "hedmod/lexicon.hpp"
#include "hedmod/text.hpp"

namespace hedmod {

inline constexpr std::size_t kDefaultPrefixLength = 4;
inline constexpr double kRougeBeta = 1.2;

struct EvalRecord {
  std::string entity_id;
  Tokens hypothesis;
  Tokens reference;
  Tokens source_values;   // every infobox value token
  Tokens kg_type_values;  // value tokens of P31 / P279
};

/// Corpus-level cumulative BLEU up to order n with uniform weights, clipped
/// n-gram precision and brevity penalty, on a 0-100 scale. A zero precision
/// is replaced by 1e-9.
double bleu(const std::vector<EvalRecord>& corpus, std::size_t n);

/// Mean per-record LCS F-measure (beta = 1.2), 0-100.
double rouge_l(const std::vector<EvalRecord>& corpus, double beta = kRougeBeta);

/// True iff `word` shares its first min(L, |word|) characters with the
/// prefix of some non-stopword source value word.
bool is_copied(const std::string& word, const Tokens& source_values,
               std::size_t prefix_length = kDefaultPrefixLength,
               const Lexicon& lexicon = Lexicon::english());

/// Corpus ratio of copied hypothesis modifiers over all hypothesis modifiers.
double mod_copy(const std::vector<EvalRecord>& corpus,
                const Annotator& annotator = default_annotator(),
                std::size_t prefix_length = kDefaultPrefixLength);

/// Corpus share of hypothesis heads found among reference heads or KG type values.
double hed_acc(const std::vector<EvalRecord>& corpus,
               const Annotator& annotator = default_annotator());

struct MetricReport {
  std::size_t records = 0;
  double bleu1 = 0.0;
  double bleu2 = 0.0;
  double rouge_l = 0.0;
  double mod_copy = 0.0;  // NaN when no hypothesis has a modifier
  double hed_acc = 0.0;

  std::string to_json() const;
  std::string to_table() const;
};

MetricReport evaluate(const std::vector<EvalRecord>& corpus);

/// Joins predictions {"entity_id", "hypothesis"} with reference entities by id.
std::vector<EvalRecord> load_eval_records(const std::string& predictions_path,
                                          const std::string& references_path);
MetricReport evaluate_files(const std::string& predictions_path,
                            const std::string& references_path);

}  // namespace hedmod
