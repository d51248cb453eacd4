#ifndef LEXMDL_LEXICON_HPP
#define LEXMDL_LEXICON_HPP

#include <string>
#include <unordered_map>
#include <vector>

#include "lexmdl/corpus.hpp"

namespace lexmdl {

// Dictionary entry.  Terminals have an empty rep and no representation cost.
// A word with |rep| == 1 is a surface variant created by the channel merge
// move: its surface is an observed phone string for the underlying member
// word and need not equal the member's surface.
struct Word {
  WordId id = -1;
  std::vector<TermId> surface;
  std::vector<WordId> rep;
  double count = 0.0;
  double code_len = kInfBits;  // -log2 p(w); +inf while count == 0
  bool variant = false;

  bool terminal() const { return rep.empty(); }
};

struct DescriptionLength {
  double input_bits = 0.0;
  double dictionary_bits = 0.0;
  double total_bits = 0.0;
};

// The hierarchical dictionary: terminals plus learned words, a probability
// distribution over all of them, and the surface lookup used by the charts.
class Lexicon {
 public:
  explicit Lexicon(Alphabet alphabet);

  const Alphabet& alphabet() const { return alphabet_; }
  int alphabet_size() const { return alphabet_.size(); }

  bool alive(WordId id) const {
    return id >= 0 && id < static_cast<int>(words_.size()) && alive_[id];
  }
  bool is_terminal(WordId id) const { return id < alphabet_size(); }
  const Word& word(WordId id) const;
  Word& word_mut(WordId id);

  std::vector<WordId> live_ids() const;
  std::vector<WordId> nonterminal_ids() const;
  int live_count() const { return live_count_; }

  double total_count() const { return total_count_; }
  int max_surface_len() const { return max_surface_len_; }

  WordId find_surface(std::span<const TermId> surface) const;
  // Same lookup with a caller-maintained fingerprint (the chart scan extends
  // it incrementally instead of rehashing every span).
  WordId find_surface_hashed(std::uint64_t hash, std::span<const TermId> surface) const;

  WordId add_word(std::vector<TermId> surface, std::vector<WordId> rep,
                  double count, bool variant = false);
  void remove_word(WordId id);  // terminals are permanent
  void set_rep(WordId id, std::vector<WordId> rep, bool variant = false);
  // Burns one id without creating a word, so deserialization can reproduce
  // id gaps left by deletions.
  void reserve_dead_slot();

  // p(w) = c(w)/C, code_len = -log2 p; zero-count words keep code_len = +inf.
  // counts is indexed by id (dead slots ignored).  Throws on negative or
  // all-zero counts.
  void renormalize(const std::vector<double>& counts);

  // Total index length of a word's representation; terminals cost 0 bits.
  double word_cost(WordId id) const;
  double dictionary_bits() const;

  // Modeled per-entry side information (lengths, rank bookkeeping); 0 by
  // default, configurable for experiments.
  double overhead_bits = 0.0;

  std::size_t id_limit() const { return words_.size(); }

  // Full invariant check: dense terminals, unique live surfaces, acyclic
  // reps, concatenative surfaces for non-variant words.
  void validate() const;

 private:
  void index_surface(WordId id);
  void unindex_surface(WordId id);

  Alphabet alphabet_;
  std::vector<Word> words_;
  std::vector<char> alive_;
  std::unordered_map<std::uint64_t, std::vector<WordId>> surface_index_;
  double total_count_ = 0.0;
  int live_count_ = 0;
  int max_surface_len_ = 0;
};

DescriptionLength description_length(const Lexicon& lexicon,
                                     std::span<const double> utterance_costs);

// Line-oriented lexicon file: `id TAB count TAB surface TAB rep-ids`,
// terminals first.  Loading re-validates all invariants.
void save_lexicon(const Lexicon& lexicon, const std::string& path);
std::string lexicon_to_string(const Lexicon& lexicon);
Lexicon load_lexicon(const std::string& path);
Lexicon lexicon_from_string(const std::string& text);

// Ranked table: rank, -log p, |rep|, count, bracketed rep.
std::string inspect_table(const Lexicon& lexicon, int max_rows = -1);

}  // namespace lexmdl

#endif  // LEXMDL_LEXICON_HPP
