#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "hedmod/error.hpp"
#include "hedmod/model.hpp"

namespace hedmod {

using ad::Graph;
using ad::Var;

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Rows of a [B x d] or [B x L x d] node.
Var gather_rows(Var x, const std::vector<int>& rows) {
  const Shape s = x.shape();
  if (s.size() == 2) return ad::embedding(x, rows);
  Var flat = ad::reshape(x, {s[0], s[1] * s[2]});
  return ad::reshape(ad::embedding(flat, rows), {rows.size(), s[1], s[2]});
}

ad::Mask repeat_row(const ad::Mask& m, std::size_t n) {
  ad::Mask out(n, m.cols, 0);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < m.cols; ++c) out(r, c) = m(0, c);
  }
  return out;
}

struct Hypothesis {
  std::vector<int> tokens;
  double logp = 0.0;
  std::size_t row = 0;  // row of the decoder state that produced it
};

// Scores of every candidate id for each live row; -inf marks excluded ids.
using StepFn = std::function<std::vector<std::vector<double>>(const std::vector<int>& rows,
                                                              const std::vector<int>& prev)>;

// Length-normalized beam search. Returns the token ids without eos.
std::vector<int> beam_search(std::size_t k, std::size_t max_len, int bos, int eos, const StepFn& step) {
  std::vector<Hypothesis> live = {Hypothesis{{}, 0.0, 0}};
  std::vector<Hypothesis> finished;
  for (std::size_t j = 0; j < max_len && !live.empty(); ++j) {
    std::vector<int> rows, prev;
    for (const auto& h : live) {
      rows.push_back(static_cast<int>(h.row));
      prev.push_back(h.tokens.empty() ? bos : h.tokens.back());
    }
    const auto scores = step(rows, prev);
    struct Cand {
      double logp;
      std::size_t parent;
      int id;
    };
    std::vector<Cand> cands;
    for (std::size_t r = 0; r < live.size(); ++r) {
      for (std::size_t v = 0; v < scores[r].size(); ++v) {
        if (scores[r][v] == kNegInf) continue;
        cands.push_back({live[r].logp + scores[r][v], r, static_cast<int>(v)});
      }
    }
    const std::size_t keep = std::min(k, cands.size());
    std::partial_sort(cands.begin(), cands.begin() + static_cast<std::ptrdiff_t>(keep), cands.end(),
                      [](const Cand& a, const Cand& b) {
                        if (a.logp != b.logp) return a.logp > b.logp;
                        if (a.parent != b.parent) return a.parent < b.parent;
                        return a.id < b.id;
                      });
    std::vector<Hypothesis> next;
    for (std::size_t c = 0; c < keep; ++c) {
      Hypothesis h{live[cands[c].parent].tokens, cands[c].logp, cands[c].parent};
      h.tokens.push_back(cands[c].id);
      if (cands[c].id == eos) {
        finished.push_back(std::move(h));
      } else {
        next.push_back(std::move(h));
      }
    }
    live = std::move(next);
    if (finished.size() >= k) break;
  }
  const auto& pool = finished.empty() ? live : finished;
  if (pool.empty()) return {};
  const auto best = std::max_element(pool.begin(), pool.end(), [](const Hypothesis& a, const Hypothesis& b) {
    return a.logp / static_cast<double>(a.tokens.size()) < b.logp / static_cast<double>(b.tokens.size());
  });
  std::vector<int> out = best->tokens;
  if (!out.empty() && out.back() == eos) out.pop_back();
  return out;
}

std::vector<double> log_softmax_row(const double* logits, std::size_t n) {
  const double hi = *std::max_element(logits, logits + n);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) total += std::exp(logits[i] - hi);
  const double lse = hi + std::log(total);
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = logits[i] - lse;
  return out;
}

}  // namespace

Tokens Model::generate_template(const EncodedExample& ex, DecodeMode mode, std::size_t max_len) {
  if (max_len == 0) throw Error(ErrorKind::kInvalidArgument, "max_len must be at least 1");
  Graph g;
  g.set_recording(false);
  const EncoderOutput enc = encode_infobox(g, make_source_batch({&ex}));
  const Vocab& tv = vocabs_.templ;
  const int bos = tv.find(kBos), eos = tv.find(kEos);
  const std::vector<int> banned = {tv.find(kPad), bos, tv.find(kUnk)};
  const std::size_t width = mode.beam == 0 ? 1 : mode.beam;

  Var states = template_initial_state(g, enc);
  std::size_t step_index = 0;
  auto step = [&](const std::vector<int>& rows, const std::vector<int>& prev) {
    const std::size_t n = rows.size();
    EncoderOutput rep{gather_rows(enc.memory, std::vector<int>(n, 0)), Var{}, repeat_row(enc.mask, n)};
    TemplateStep ts = decode_template_step(g, rep, gather_rows(states, rows), prev);
    states = ts.state;
    const Tensor& logits = ts.logits.value();
    std::vector<std::vector<double>> scores;
    for (std::size_t r = 0; r < n; ++r) {
      auto row = log_softmax_row(logits.ptr() + r * logits.cols(), logits.cols());
      for (int b : banned) row[static_cast<std::size_t>(b)] = kNegInf;
      if (step_index == 0) row[static_cast<std::size_t>(eos)] = kNegInf;
      scores.push_back(std::move(row));
    }
    ++step_index;
    return scores;
  };

  std::vector<int> ids;
  if (mode.beam == 0) {
    int prev = bos;
    for (std::size_t j = 0; j < max_len; ++j) {
      const auto scores = step({0}, {prev});
      const auto& row = scores[0];
      prev = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
      if (prev == eos) break;
      ids.push_back(prev);
    }
  } else {
    ids = beam_search(width, max_len, bos, eos, step);
  }
  Tokens out;
  for (int id : ids) out.push_back(tv.token(id));
  return out;
}

Generation Model::decode_description(const EncodedExample& ex, const Tokens& templ, DecodeMode mode,
                                     std::size_t max_len) {
  if (max_len == 0) throw Error(ErrorKind::kInvalidArgument, "max_len must be at least 1");
  if (templ.empty()) throw Error(ErrorKind::kInvalidArgument, "decode_description: empty template");
  Graph g;
  g.set_recording(false);
  const EncoderOutput enc = encode_infobox(g, make_source_batch({&ex}));
  const DescriptionMemory mem =
      description_memory(g, enc, make_sequence_batch({template_to_ids(templ, vocabs_.templ)}));
  const Vocab& tv = vocabs_.target;
  const ExtendedVocab ext(tv, ex.source_words);
  const int bos = tv.find(kBos), eos = tv.find(kEos), unk = tv.find(kUnk);
  const std::vector<int> banned = {tv.find(kPad), bos};
  const std::size_t src_len = ex.source_words.size();

  Generation out;
  out.templ = templ;
  Var states = description_initial_state(g, enc);
  std::size_t step_index = 0;
  std::vector<OutputDistribution> last;
  auto step = [&](const std::vector<int>& rows, const std::vector<int>& prev_ext) {
    const std::size_t n = rows.size();
    std::vector<int> prev;
    for (int id : prev_ext) prev.push_back(static_cast<std::size_t>(id) < tv.size() ? id : unk);
    const std::vector<int> zeros(n, 0);
    DescriptionMemory rep{EncoderOutput{gather_rows(mem.source.memory, zeros), Var{},
                                        repeat_row(mem.source.mask, n)},
                          gather_rows(mem.copy_keys, zeros), gather_rows(mem.templ, zeros),
                          repeat_row(mem.template_mask, n)};
    DescriptionStep ds = decode_description_step(g, rep, gather_rows(states, rows), prev);
    states = ds.state;
    const Tensor& gen = ds.gen_logits.value();
    const Tensor& copy = ds.copy_scores.value();
    const Tensor& sw = ds.switch_logit.value();
    std::vector<std::vector<double>> scores;
    last.clear();
    for (std::size_t r = 0; r < n; ++r) {
      OutputDistribution d = copy_gen_distribution(
          std::span<const double>(gen.ptr() + r * gen.cols(), gen.cols()),
          std::span<const double>(copy.ptr() + r * copy.cols(), src_len), sw[r], ext);
      std::vector<double> row(d.prob.size());
      for (std::size_t v = 0; v < row.size(); ++v) row[v] = d.prob[v] > 0.0 ? std::log(d.prob[v]) : kNegInf;
      for (int b : banned) row[static_cast<std::size_t>(b)] = kNegInf;
      if (step_index == 0) row[static_cast<std::size_t>(eos)] = kNegInf;
      scores.push_back(std::move(row));
      last.push_back(std::move(d));
    }
    ++step_index;
    return scores;
  };

  std::vector<int> ids;
  if (mode.beam == 0) {
    int prev = bos;
    for (std::size_t j = 0; j < max_len; ++j) {
      const auto scores = step({0}, {prev});
      const auto& row = scores[0];
      prev = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
      if (prev == eos) break;
      ids.push_back(prev);
      const OutputDistribution& d = last[0];
      const auto v = static_cast<std::size_t>(prev);
      out.trace.push_back(EmittedToken{ext.token(v), d.prob[v], d.generate[v], d.copy[v]});
    }
  } else {
    ids = beam_search(mode.beam, max_len, bos, eos, step);
  }
  for (int id : ids) out.description.push_back(ext.token(static_cast<std::size_t>(id)));
  return out;
}

Generation Model::generate(const EncodedExample& ex, DecodeMode mode, const std::optional<Tokens>& template_override) {
  Tokens templ = template_override ? *template_override
                                   : generate_template(ex, mode, config_.max_template_length);
  return decode_description(ex, templ, mode, config_.max_description_length);
}

}  // namespace hedmod
