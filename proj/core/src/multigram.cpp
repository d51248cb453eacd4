#include "lexmdl/multigram.hpp"

#include <algorithm>
#include <cmath>

#include "lexmdl/threading.hpp"

namespace lexmdl {

namespace {

// Words matching each span, found by fingerprint probes against the surface
// index.  Yields (start, word) pairs for a fixed end position.
struct Matcher {
  const Lexicon& lex;
  int max_len;
  int max_len_exclusive;
  WordId exclude;

  Matcher(const Lexicon& l, int max_len_excl, WordId excl)
      : lex(l),
        max_len(max_len_excl < 0 ? l.max_surface_len()
                                 : std::min(l.max_surface_len(), max_len_excl - 1)),
        max_len_exclusive(max_len_excl),
        exclude(excl) {}

  // calls fn(k, word_id, code_len) for every word with surf = seq[k..end);
  // the span fingerprint is extended leftward one terminal at a time
  template <typename Fn>
  void for_matches_ending_at(std::span<const TermId> seq, int end, Fn&& fn) const {
    int lo = std::max(0, end - max_len);
    std::uint64_t h = 0, pw = 1;
    for (int k = end - 1; k >= lo; --k) {
      h += (static_cast<std::uint64_t>(seq[k]) + 1) * pw;
      pw *= kHashMul;
      WordId id = lex.find_surface_hashed(h, seq.subspan(k, end - k));
      if (id < 0 || id == exclude) continue;
      const Word& w = lex.word(id);
      if (w.code_len == kInfBits) continue;  // zero-count words do not match
      fn(k, id, w.code_len);
    }
  }
};

}  // namespace

Chart forward_backward(const Lexicon& lexicon, std::span<const TermId> seq,
                       int max_len_exclusive, WordId exclude) {
  if (seq.empty()) throw DataError("cannot parse an empty sequence");
  const int n = static_cast<int>(seq.size());
  Matcher match(lexicon, max_len_exclusive, exclude);

  Chart chart;
  chart.log_alpha.assign(n + 1, kNegInf);
  chart.log_beta.assign(n + 1, kNegInf);
  chart.log_alpha[0] = 0.0;
  for (int l = 1; l <= n; ++l) {
    double acc = kNegInf;
    match.for_matches_ending_at(seq, l, [&](int k, WordId, double bits) {
      if (chart.log_alpha[k] != kNegInf) acc = log2_add(acc, chart.log_alpha[k] - bits);
    });
    chart.log_alpha[l] = acc;
  }
  if (chart.log_alpha[n] == kNegInf) {
    // all terminals carry positive probability unless some count hit zero
    for (TermId t : seq)
      if (lexicon.word(t).code_len == kInfBits)
        throw DataError("sequence unparseable: terminal '" +
                        lexicon.alphabet().glyphs[t] + "' has count 0");
    throw DataError("sequence unparseable (zero total probability)");
  }

  chart.log_beta[n] = 0.0;
  for (int l = n; l >= 1; --l) {
    if (chart.log_beta[l] == kNegInf) continue;
    match.for_matches_ending_at(seq, l, [&](int k, WordId, double bits) {
      chart.log_beta[k] = log2_add(chart.log_beta[k], chart.log_beta[l] - bits);
    });
  }
  chart.log_total = chart.log_beta[0];

  for (int l = 1; l <= n; ++l) {
    match.for_matches_ending_at(seq, l, [&](int k, WordId id, double bits) {
      if (chart.log_alpha[k] == kNegInf || chart.log_beta[l] == kNegInf) return;
      double lp = chart.log_alpha[k] - bits + chart.log_beta[l] - chart.log_total;
      chart.spans.push_back({k, l, id, std::exp2(lp)});
    });
  }
  return chart;
}

SegNode expand_word(const Lexicon& lexicon, WordId id, int begin, int end) {
  SegNode node{id, begin, end, {}};
  const Word& w = lexicon.word(id);
  if (w.terminal() || w.variant) return node;
  if (static_cast<int>(w.surface.size()) != end - begin) return node;  // noisy span
  int at = begin;
  for (WordId m : w.rep) {
    int len = static_cast<int>(lexicon.word(m).surface.size());
    node.children.push_back(expand_word(lexicon, m, at, at + len));
    at += len;
  }
  return node;
}

Segmentation viterbi_parse(const Lexicon& lexicon, std::span<const TermId> seq,
                           int max_len_exclusive, WordId exclude) {
  if (seq.empty()) throw DataError("cannot parse an empty sequence");
  const int n = static_cast<int>(seq.size());
  Matcher match(lexicon, max_len_exclusive, exclude);

  std::vector<double> best(n + 1, kNegInf);
  std::vector<int> back_k(n + 1, -1);
  std::vector<WordId> back_w(n + 1, -1);
  best[0] = 0.0;
  for (int l = 1; l <= n; ++l) {
    match.for_matches_ending_at(seq, l, [&](int k, WordId id, double bits) {
      if (best[k] == kNegInf) return;
      double score = best[k] - bits;
      // ties: longer word first, then smaller id
      if (score > best[l] ||
          (score == best[l] && (k < back_k[l] || (k == back_k[l] && id < back_w[l])))) {
        best[l] = score;
        back_k[l] = k;
        back_w[l] = id;
      }
    });
  }
  if (best[n] == kNegInf) {
    for (TermId t : seq)
      if (lexicon.word(t).code_len == kInfBits)
        throw DataError("sequence unparseable: terminal '" +
                        lexicon.alphabet().glyphs[t] + "' has count 0");
    throw DataError("sequence unparseable (zero total probability)");
  }

  Segmentation seg;
  seg.log2_prob = best[n];
  std::vector<std::pair<int, WordId>> picks;
  for (int at = n; at > 0; at = back_k[at]) picks.push_back({back_k[at], back_w[at]});
  std::reverse(picks.begin(), picks.end());
  int at = 0;
  for (auto [k, id] : picks) {
    int len = static_cast<int>(lexicon.word(id).surface.size());
    (void)k;
    seg.words.push_back(expand_word(lexicon, id, at, at + len));
    at += len;
  }
  return seg;
}

std::vector<double> accumulate_counts(const Lexicon& lexicon,
                                      const std::vector<Utterance>& utterances,
                                      CountMode mode, int threads) {
  std::vector<double> counts(lexicon.id_limit(), 0.0);

  auto add_sequence = [&](std::vector<double>& acc, std::span<const TermId> seq,
                          int max_len_exclusive, WordId exclude) {
    if (mode == CountMode::kComplete) {
      Chart chart = forward_backward(lexicon, seq, max_len_exclusive, exclude);
      for (const ChartSpan& s : chart.spans) acc[s.word] += s.posterior;
    } else {
      Segmentation seg = viterbi_parse(lexicon, seq, max_len_exclusive, exclude);
      for (const SegNode& nd : seg.words) acc[nd.word] += 1.0;
    }
  };

  if (threads <= 1 || utterances.size() < 8) {
    for (const Utterance& u : utterances) add_sequence(counts, u.terminals, -1, -1);
  } else {
    std::vector<std::vector<double>> partial(threads, std::vector<double>(counts.size(), 0.0));
    parallel_chunks(utterances.size(), threads,
                    [&](std::size_t begin, std::size_t end, int t) {
                      for (std::size_t i = begin; i < end; ++i)
                        add_sequence(partial[t], utterances[i].terminals, -1, -1);
                    });
    for (const auto& p : partial)
      for (std::size_t i = 0; i < counts.size(); ++i) counts[i] += p[i];
  }

  add_dictionary_counts(lexicon, mode, counts);
  return counts;
}

void add_dictionary_counts(const Lexicon& lexicon, CountMode mode,
                           std::vector<double>& counts) {
  // dictionary mentions: one use per rep slot, weighted by the estimation
  // policy; variants always contribute exactly one mention of their member
  for (WordId id : lexicon.nonterminal_ids()) {
    const Word& w = lexicon.word(id);
    if (w.variant) {
      counts[w.rep[0]] += 1.0;
      continue;
    }
    int max_len = static_cast<int>(w.surface.size());
    if (mode == CountMode::kComplete) {
      Chart chart = forward_backward(lexicon, w.surface, max_len, id);
      for (const ChartSpan& s : chart.spans) counts[s.word] += s.posterior;
    } else {
      Segmentation seg = viterbi_parse(lexicon, w.surface, max_len, id);
      for (const SegNode& nd : seg.words) counts[nd.word] += 1.0;
    }
  }
}

double dictionary_log2_likelihood(const Lexicon& lexicon) {
  double bits = 0.0;
  for (WordId id : lexicon.nonterminal_ids()) {
    const Word& w = lexicon.word(id);
    if (w.variant)
      bits += -lexicon.word(w.rep[0]).code_len;
    else
      bits += forward_backward(lexicon, w.surface,
                               static_cast<int>(w.surface.size()), id)
                  .log_total;
  }
  return bits;
}

void rederive_reps(Lexicon& lexicon) {
  for (WordId id : lexicon.nonterminal_ids()) {
    Word& w = lexicon.word_mut(id);
    if (w.variant) continue;  // channel-level rep is kept until its member dies
    Segmentation seg = viterbi_parse(lexicon, w.surface,
                                     static_cast<int>(w.surface.size()), id);
    std::vector<WordId> rep;
    rep.reserve(seg.words.size());
    for (const SegNode& nd : seg.words) rep.push_back(nd.word);
    if (rep.size() >= 2) lexicon.set_rep(id, std::move(rep));
  }
}

EmTrace em_iterate(Lexicon& lexicon, const std::vector<Utterance>& utterances,
                   int iters, CountMode mode, int threads) {
  if (iters < 1) throw DataError("em_iterate needs iters >= 1");
  EmTrace trace;
  for (int it = 0; it < iters; ++it) {
    // one chart per utterance per iteration: counts and likelihood together
    std::vector<double> per_utt(utterances.size(), 0.0);
    int used = std::max(1, threads);
    std::vector<std::vector<double>> partial(used,
                                             std::vector<double>(lexicon.id_limit(), 0.0));
    parallel_chunks(utterances.size(), threads,
                    [&](std::size_t begin, std::size_t end, int t) {
                      for (std::size_t i = begin; i < end; ++i) {
                        if (mode == CountMode::kComplete) {
                          Chart chart = forward_backward(lexicon, utterances[i].terminals);
                          per_utt[i] = chart.log_total;
                          for (const ChartSpan& s : chart.spans)
                            partial[t][s.word] += s.posterior;
                        } else {
                          Segmentation seg =
                              viterbi_parse(lexicon, utterances[i].terminals);
                          per_utt[i] = seg.log2_prob;
                          for (const SegNode& nd : seg.words)
                            partial[t][nd.word] += 1.0;
                        }
                      }
                    });
    std::vector<double> counts(lexicon.id_limit(), 0.0);
    for (const auto& p : partial)
      for (std::size_t i = 0; i < counts.size(); ++i) counts[i] += p[i];
    add_dictionary_counts(lexicon, mode, counts);
    double input = 0.0;
    for (double v : per_utt) input += v;
    trace.input_log2.push_back(input);
    trace.combined_log2.push_back(input + dictionary_log2_likelihood(lexicon));
    lexicon.renormalize(counts);
    rederive_reps(lexicon);
  }
  return trace;
}

std::vector<double> viterbi_costs(const Lexicon& lexicon,
                                  const std::vector<Utterance>& utterances,
                                  int threads) {
  std::vector<double> costs(utterances.size(), 0.0);
  parallel_chunks(utterances.size(), threads,
                  [&](std::size_t begin, std::size_t end, int) {
                    for (std::size_t i = begin; i < end; ++i)
                      costs[i] =
                          -viterbi_parse(lexicon, utterances[i].terminals).log2_prob;
                  });
  return costs;
}

}  // namespace lexmdl
