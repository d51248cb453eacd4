#ifndef LEXMDL_MULTIGRAM_HPP
#define LEXMDL_MULTIGRAM_HPP

#include <vector>

#include "lexmdl/lexicon.hpp"

namespace lexmdl {

struct ChartSpan {
  int begin = 0;
  int end = 0;
  WordId word = -1;
  double posterior = 0.0;
};

// Per-utterance forward/backward values and span posteriors.  alpha[k] is
// the probability of the first k terminals, beta[k] of the suffix from k;
// both are stored as log2.  posterior(k -> l, w) = alpha_k p(w) beta_l / beta_0.
struct Chart {
  std::vector<double> log_alpha;  // size n+1, log_alpha[0] = 0
  std::vector<double> log_beta;   // size n+1, log_beta[n] = 0
  std::vector<ChartSpan> spans;
  double log_total = kNegInf;     // == log_alpha[n] == log_beta[0]
};

// Exact-surface matching: word w is hypothesized at (k, l) iff
// surf(w) = t_k..t_{l-1}.  max_len_exclusive < 0 means no length filter;
// otherwise only words with |surf| < max_len_exclusive match (used when
// parsing a word's own surface).  exclude skips one word id.
Chart forward_backward(const Lexicon& lexicon, std::span<const TermId> seq,
                       int max_len_exclusive = -1, WordId exclude = -1);

// Hierarchical segmentation: top-level nodes with children expanded through
// the stored representations down to terminals.
struct SegNode {
  WordId word = -1;
  int begin = 0;
  int end = 0;
  std::vector<SegNode> children;
};

struct Segmentation {
  std::vector<SegNode> words;  // fringe equals the utterance
  double log2_prob = kNegInf;
};

// Max-probability segmentation; ties broken toward the longer word, then the
// smaller id.
Segmentation viterbi_parse(const Lexicon& lexicon, std::span<const TermId> seq,
                           int max_len_exclusive = -1, WordId exclude = -1);

// Expands a chosen top-level word through its stored rep; exact spans only.
SegNode expand_word(const Lexicon& lexicon, WordId id, int begin, int end);

enum class CountMode { kComplete, kViterbi };

// Expected (or best-parse) usage counts over the input corpus plus every
// nonterminal's surface parsed with strictly shorter words.  Variant words
// contribute one dictionary mention of their member instead of a parse.
std::vector<double> accumulate_counts(const Lexicon& lexicon,
                                      const std::vector<Utterance>& utterances,
                                      CountMode mode, int threads = 1);

// Just the dictionary-representation usages (the second half of
// accumulate_counts); shared with the noisy estimation path.
void add_dictionary_counts(const Lexicon& lexicon, CountMode mode,
                           std::vector<double>& counts);

// log2 likelihood of the dictionary representations (nonterminal surfaces
// parsed with shorter words; variants contribute their member's index).
double dictionary_log2_likelihood(const Lexicon& lexicon);

struct EmTrace {
  // combined log2-likelihood (input + dictionary representations) before
  // each renormalization, and its input-only portion
  std::vector<double> combined_log2;
  std::vector<double> input_log2;
};

// Baum-Welch over the input and word representations: accumulate, normalize,
// re-derive representations; iterated `iters` times.
EmTrace em_iterate(Lexicon& lexicon, const std::vector<Utterance>& utterances,
                   int iters, CountMode mode = CountMode::kComplete,
                   int threads = 1);

// Viterbi re-derivation of every non-variant nonterminal's representation
// from strictly shorter words.
void rederive_reps(Lexicon& lexicon);

// -log2 viterbi probability per utterance (the encoding cost of the chosen
// segmentations).
std::vector<double> viterbi_costs(const Lexicon& lexicon,
                                  const std::vector<Utterance>& utterances,
                                  int threads = 1);

}  // namespace lexmdl

#endif  // LEXMDL_MULTIGRAM_HPP
