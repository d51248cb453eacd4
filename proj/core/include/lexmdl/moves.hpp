#ifndef LEXMDL_MOVES_HPP
#define LEXMDL_MOVES_HPP

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "lexmdl/channel.hpp"
#include "lexmdl/multigram.hpp"

namespace lexmdl {

// A proposed word: two or three adjacent parse words sharing a surface.
struct Candidate {
  std::vector<TermId> surface;
  std::vector<WordId> rep;
  double est_count = 0.0;  // co-occurrence count from the Viterbi parses
};

struct DeltaComponent {
  WordId word = -1;
  double count_before = 0.0;
  double count_after = 0.0;
  // second-order note: this component lost usage and may be worth deleting
  // after adoption (it is re-scored in the deletion stage)
  bool flagged_for_deletion = false;
};

// Approximate description-length change of a dictionary edit.
struct DeltaReport {
  double delta_bits = 0.0;
  double new_word_bits = 0.0;   // -c'(X) log2 p'(X) for additions
  double recovered_bits = 0.0;  // c(X) log2 p(X) for deletions
  double reindex_bits = 0.0;    // sum over existing words
  std::vector<DeltaComponent> components;
};

struct TrainOptions {
  int em_iters = 3;
  int max_outer = 15;
  double deletion_guard = 2.0;
  int merge_min_support = 3;
  double new_word_discount = 1.0;
  int candidate_cap = 10000;
  CountMode count_mode = CountMode::kComplete;
  int threads = 1;
  // recompute the true description length around every accepted move
  bool audit = false;
  // non-null enables noisy matching through the phoneme-to-phone channel
  const PhoneModel* channel = nullptr;
  double prune_budget = 1e-4;
};

// Expected usage of each word in parsing `surface` under the current model
// (forward-backward restricted to strictly shorter words).
std::map<WordId, double> expected_components(const Lexicon& lexicon,
                                             std::span<const TermId> surface,
                                             WordId exclude = -1);

// All adjacent pairs and triples from the given top-level parse token
// streams, deduplicated by surface, existing surfaces excluded, capped by
// descending co-occurrence count.
std::vector<Candidate> propose_candidates(const Lexicon& lexicon,
                                          const std::vector<std::vector<WordId>>& parses,
                                          int candidate_cap);

DeltaReport score_addition(const Lexicon& lexicon, const Candidate& cand,
                           double new_word_discount = 1.0);
DeltaReport score_deletion(const Lexicon& lexicon, WordId id);

// Creates a word for a systematically different observed realization of
// word_id, represented by word_id itself, if the description length favors
// it.  No-ops (nullopt) below the support threshold, for an unchanged
// surface, or for an already-present surface.
std::optional<WordId> merge_surface_variant(Lexicon& lexicon, WordId word_id,
                                            const std::vector<TermId>& observed_surface,
                                            int support_count,
                                            const TrainOptions& options);

struct MoveAudit {
  std::string kind;  // "add" / "delete" / "merge"
  std::string surface;
  double delta_est = 0.0;
  double dl_before = 0.0;
  double dl_after = 0.0;
};

struct OuterResult {
  int words_added = 0;
  int words_deleted = 0;
  int merges = 0;
  bool converged = false;
  DescriptionLength dl;  // after the iteration, Viterbi-based input bits
  std::vector<MoveAudit> audit;
};

// One outer iteration: EM, batched additions (largest predicted savings
// first), EM, then deletions re-scored after each removal with the
// representation-cost guard.
OuterResult apply_moves(Lexicon& lexicon, const std::vector<Utterance>& utterances,
                        const TrainOptions& options);

struct TraceRow {
  int iteration = 0;
  double input_bits = 0.0;
  double dictionary_bits = 0.0;
  double total_bits = 0.0;
  int words_added = 0;
  int words_deleted = 0;
  int lexicon_size = 0;
};

struct TrainResult {
  std::vector<TraceRow> trace;  // row 0 is the terminal-only baseline
  bool converged = false;
  std::vector<MoveAudit> audit;
};

TrainResult train(Lexicon& lexicon, const std::vector<Utterance>& utterances,
                  const TrainOptions& options);

// Viterbi input bits + dictionary bits under the current probabilities.
DescriptionLength true_description_length(const Lexicon& lexicon,
                                          const std::vector<Utterance>& utterances,
                                          const TrainOptions& options);

std::string trace_to_tsv(const std::vector<TraceRow>& rows);

}  // namespace lexmdl

#endif  // LEXMDL_MOVES_HPP
