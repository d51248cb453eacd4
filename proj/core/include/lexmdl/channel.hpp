#ifndef LEXMDL_CHANNEL_HPP
#define LEXMDL_CHANNEL_HPP

#include <optional>
#include <string>
#include <vector>

#include "lexmdl/multigram.hpp"
#include "lexmdl/phonology.hpp"

namespace lexmdl {

// Three-state transducer mapping underlying phoneme sequences to surface
// phone sequences.  Action probabilities follow the state table with the
// overbars read as sequential complements (insert? -> map? -> delete? ->
// copy), the unique reading under which every state's outgoing mass is 1.

enum class TState { kStart, kInserted, kMapped };

struct TransducerState {
  TState tag = TState::kStart;
  int read_pos = 0;          // phonemes consumed
  PhoneId last_phone = kNoPhone;
};

struct StepOption {
  enum Action { kInsert, kMap, kDelete, kCopy };
  Action action;
  PhoneId emit = kNoPhone;   // kNoPhone for delete
  TransducerState next;
  double prob = 0.0;
};

// Full outgoing distribution of one state.  `underlying` is the whole
// phoneme sequence; `next_after_end` supplies the phoneme following it (the
// first phoneme of the next word, or kNoPhone at the utterance edge).
std::vector<StepOption> step_distribution(const PhoneModel& model,
                                          const TransducerState& state,
                                          std::span<const PhoneId> underlying,
                                          PhoneId next_after_end = kNoPhone);

// p(phi | pi): exact sum over all derivations.  `prev_phone` is the surface
// phone preceding the span and `next_after_end` the phoneme following pi.
double phi_given_pi(const PhoneModel& model, std::span<const PhoneId> pi,
                    std::span<const PhoneId> phi, PhoneId prev_phone = kNoPhone,
                    PhoneId next_after_end = kNoPhone);

struct Alignment {
  double log2_prob = kNegInf;        // best single derivation
  std::vector<std::string> actions;  // e.g. "copy d -> d"
};
Alignment best_alignment(const PhoneModel& model, std::span<const PhoneId> pi,
                         std::span<const PhoneId> phi);

// Samples a surface realization; returns nullopt if the output-length guard
// trips.  If boundaries is given (underlying word boundaries, 0..|pi|), the
// corresponding surface positions are written to boundaries_out: inserted
// phones belong to the following region.
std::optional<std::vector<PhoneId>> sample_phones(
    const PhoneModel& model, std::span<const PhoneId> pi, Rng& rng,
    int max_output = 100, const std::vector<int>* boundaries = nullptr,
    std::vector<int>* boundaries_out = nullptr);

// Noisy multigram chart: every word is hypothesized at every span, weighted
// p(w) p(phi_span | surf(w)), with the final copy of each word conditioned
// on the first phoneme of the following word (exactly, by keying chart cells
// on that phoneme).  Candidate words at each start position are expanded
// best-first by an upper-bound score and pruned relative to the best exact
// match found, scaled by prune_budget; prune_budget = 0 is exhaustive.
//
// In the returned Chart, log_alpha[k] is the mass of complete parses of the
// prefix phi_0..k and log_beta[k] the suffix mass from k, so the
// alpha/beta consistency holds at the sequence ends.
struct MatchLattice {
  Chart chart;
  std::size_t candidates_considered = 0;
  std::size_t candidates_pruned = 0;  // audit: skipped by the budget test
};

MatchLattice noisy_lattice(const Lexicon& lexicon, std::span<const TermId> phi,
                           const PhoneModel& model, double prune_budget);
Chart noisy_chart(const Lexicon& lexicon, std::span<const TermId> phi,
                  const PhoneModel& model, double prune_budget);

// Best noisy segmentation; observed_out (if given) receives each chosen
// word's observed phone span.
Segmentation noisy_viterbi(const Lexicon& lexicon, std::span<const TermId> phi,
                           const PhoneModel& model, double prune_budget,
                           std::vector<std::pair<WordId, std::vector<TermId>>>*
                               observed_out = nullptr);

std::vector<double> accumulate_counts_noisy(const Lexicon& lexicon,
                                            const std::vector<Utterance>& utterances,
                                            const PhoneModel& model,
                                            double prune_budget, CountMode mode,
                                            int threads = 1);

EmTrace em_iterate_noisy(Lexicon& lexicon, const std::vector<Utterance>& utterances,
                         const PhoneModel& model, double prune_budget, int iters,
                         CountMode mode = CountMode::kComplete, int threads = 1);

std::vector<double> noisy_viterbi_costs(const Lexicon& lexicon,
                                        const std::vector<Utterance>& utterances,
                                        const PhoneModel& model, double prune_budget,
                                        int threads = 1);

}  // namespace lexmdl

#endif  // LEXMDL_CHANNEL_HPP
