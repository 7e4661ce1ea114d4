#include "hedmod/metrics.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "hedmod/corpus.hpp"
#include "hedmod/error.hpp"

namespace hedmod {

namespace {

using NgramCounts = std::map<std::vector<std::string>, std::size_t>;

NgramCounts ngrams(const Tokens& tokens, std::size_t n) {
  NgramCounts out;
  if (tokens.size() < n) return out;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    ++out[std::vector<std::string>(tokens.begin() + static_cast<std::ptrdiff_t>(i),
                                   tokens.begin() + static_cast<std::ptrdiff_t>(i + n))];
  }
  return out;
}

std::size_t lcs_length(const Tokens& a, const Tokens& b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

void require_records(const std::vector<EvalRecord>& corpus, const char* metric) {
  if (corpus.empty()) {
    throw Error(ErrorKind::kInvalidArgument, std::string(metric) + ": empty corpus");
  }
}

}  // namespace

double bleu(const std::vector<EvalRecord>& corpus, std::size_t n) {
  require_records(corpus, "bleu");
  if (n == 0) throw Error(ErrorKind::kInvalidArgument, "bleu: order must be positive");
  std::size_t hyp_len = 0, ref_len = 0;
  std::vector<std::size_t> matches(n, 0), totals(n, 0);
  for (const auto& r : corpus) {
    hyp_len += r.hypothesis.size();
    ref_len += r.reference.size();
    for (std::size_t k = 1; k <= n; ++k) {
      const NgramCounts hyp = ngrams(r.hypothesis, k);
      const NgramCounts ref = ngrams(r.reference, k);
      for (const auto& [gram, count] : hyp) {
        totals[k - 1] += count;
        auto it = ref.find(gram);
        if (it != ref.end()) matches[k - 1] += std::min(count, it->second);
      }
    }
  }
  if (hyp_len == 0) throw Error(ErrorKind::kInvalidArgument, "bleu: every hypothesis is empty");
  double log_precision = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    double p = totals[k] ? static_cast<double>(matches[k]) / static_cast<double>(totals[k]) : 0.0;
    if (matches[k] == 0) p = 1e-9;
    log_precision += std::log(p) / static_cast<double>(n);
  }
  const double c = static_cast<double>(hyp_len), rl = static_cast<double>(ref_len);
  const double brevity = hyp_len < ref_len ? std::exp(1.0 - rl / c) : 1.0;
  return 100.0 * brevity * std::exp(log_precision);
}

double rouge_l(const std::vector<EvalRecord>& corpus, double beta) {
  require_records(corpus, "rouge_l");
  double total = 0.0;
  for (const auto& r : corpus) {
    const std::size_t lcs = lcs_length(r.hypothesis, r.reference);
    if (lcs == 0) continue;
    const double p = static_cast<double>(lcs) / static_cast<double>(r.hypothesis.size());
    const double rec = static_cast<double>(lcs) / static_cast<double>(r.reference.size());
    const double b2 = beta * beta;
    total += (1.0 + b2) * p * rec / (rec + b2 * p);
  }
  return 100.0 * total / static_cast<double>(corpus.size());
}

bool is_copied(const std::string& word, const Tokens& source_values, std::size_t prefix_length,
               const Lexicon& lexicon) {
  if (word.empty()) throw Error(ErrorKind::kInvalidArgument, "is_copied: empty word");
  const std::size_t k = std::min(prefix_length, utf8_length(word));
  const std::string_view prefix = utf8_prefix(word, k);
  for (const auto& src : source_values) {
    if (lexicon.is_stopword(src)) continue;
    if (utf8_length(src) < k) continue;
    if (utf8_prefix(src, k) == prefix) return true;
  }
  return false;
}

double mod_copy(const std::vector<EvalRecord>& corpus, const Annotator& annotator,
                std::size_t prefix_length) {
  require_records(corpus, "mod_copy");
  std::size_t copied = 0, total = 0;
  for (const auto& r : corpus) {
    if (r.hypothesis.empty()) continue;
    for (const auto& m : annotator.annotate(r.hypothesis).modifiers()) {
      ++total;
      copied += is_copied(m, r.source_values, prefix_length);
    }
  }
  if (total == 0) {
    throw Error(ErrorKind::kData, "mod_copy: no hypothesis contains a modifier");
  }
  return static_cast<double>(copied) / static_cast<double>(total);
}

double hed_acc(const std::vector<EvalRecord>& corpus, const Annotator& annotator) {
  require_records(corpus, "hed_acc");
  std::size_t correct = 0, total = 0;
  for (const auto& r : corpus) {
    if (r.hypothesis.empty()) continue;
    const Tokens hyp_heads = annotator.annotate(r.hypothesis).heads();
    const std::set<std::string> heads(hyp_heads.begin(), hyp_heads.end());
    std::set<std::string> accepted(r.kg_type_values.begin(), r.kg_type_values.end());
    if (!r.reference.empty()) {
      for (auto& h : annotator.annotate(r.reference).heads()) accepted.insert(h);
    }
    for (const auto& h : heads) {
      ++total;
      correct += accepted.count(h);
    }
  }
  return total ? static_cast<double>(correct) / static_cast<double>(total) : 0.0;
}

MetricReport evaluate(const std::vector<EvalRecord>& corpus) {
  MetricReport report;
  report.records = corpus.size();
  report.bleu1 = bleu(corpus, 1);
  report.bleu2 = bleu(corpus, 2);
  report.rouge_l = rouge_l(corpus);
  try {
    report.mod_copy = mod_copy(corpus);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::kData) throw;
    report.mod_copy = std::numeric_limits<double>::quiet_NaN();
  }
  report.hed_acc = hed_acc(corpus);
  return report;
}

std::string MetricReport::to_json() const {
  nlohmann::json obj;
  obj["records"] = records;
  obj["bleu1"] = bleu1;
  obj["bleu2"] = bleu2;
  obj["rougeL"] = rouge_l;
  obj["mod_copy"] = std::isnan(mod_copy) ? nlohmann::json(nullptr) : nlohmann::json(mod_copy);
  obj["hed_acc"] = hed_acc;
  return obj.dump(2);
}

std::string MetricReport::to_table() const {
  std::ostringstream out;
  out << std::fixed << std::setprecision(2);
  out << "| B-1 | B-2 | RG-L | ModCopy | HedAcc |\n";
  out << "|-----|-----|------|---------|--------|\n";
  out << "| " << bleu1 << " | " << bleu2 << " | " << rouge_l << " | ";
  if (std::isnan(mod_copy)) {
    out << "n/a";
  } else {
    out << 100.0 * mod_copy;
  }
  out << " | " << 100.0 * hed_acc << " |\n";
  return out.str();
}

std::vector<EvalRecord> load_eval_records(const std::string& predictions_path,
                                          const std::string& references_path) {
  std::ifstream in(predictions_path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + predictions_path);
  std::unordered_map<std::string, Tokens> hypotheses;
  std::vector<std::string> order;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error&) {
      throw Error(ErrorKind::kParse, predictions_path + ": line " + std::to_string(lineno) +
                                         ": malformed JSON");
    }
    for (const char* key : {"entity_id", "hypothesis"}) {
      if (!obj.contains(key) || !obj[key].is_string()) {
        throw Error(ErrorKind::kParse, predictions_path + ": line " + std::to_string(lineno) +
                                           ": missing key '" + key + "'");
      }
    }
    const std::string id = obj["entity_id"].get<std::string>();
    if (!hypotheses.emplace(id, tokenize(obj["hypothesis"].get<std::string>())).second) {
      throw Error(ErrorKind::kData, predictions_path + ": duplicate entity_id " + id);
    }
    order.push_back(id);
  }
  if (hypotheses.empty()) throw Error(ErrorKind::kData, predictions_path + ": no predictions");

  const std::vector<Entity> refs = load_jsonl(references_path);
  std::vector<EvalRecord> records;
  std::vector<std::string> unmatched;
  std::unordered_map<std::string, bool> seen;
  for (const auto& e : refs) {
    auto it = hypotheses.find(e.entity_id);
    if (it == hypotheses.end()) {
      unmatched.push_back(e.entity_id);
      continue;
    }
    seen[e.entity_id] = true;
    records.push_back(EvalRecord{e.entity_id, it->second, e.description, source_values(e),
                                 kg_type_values(e)});
  }
  for (const auto& id : order) {
    if (!seen.count(id)) unmatched.push_back(id);
  }
  if (!unmatched.empty()) {
    std::string list;
    for (std::size_t i = 0; i < unmatched.size() && i < 20; ++i) list += (i ? ", " : "") + unmatched[i];
    if (unmatched.size() > 20) list += ", ...";
    throw Error(ErrorKind::kData, "predictions and references disagree on " +
                                      std::to_string(unmatched.size()) + " entity ids: " + list);
  }
  return records;
}

MetricReport evaluate_files(const std::string& predictions_path,
                            const std::string& references_path) {
  return evaluate(load_eval_records(predictions_path, references_path));
}

}  // namespace hedmod
