#ifndef LEXMDL_CORPUS_HPP
#define LEXMDL_CORPUS_HPP

#include <optional>
#include <string>
#include <vector>

#include "lexmdl/common.hpp"

namespace lexmdl {

// Terminal alphabet: dense ids, unique printable glyphs.  In text mode a
// glyph is one character; in phoneme mode it is a phoneme mnemonic and ids
// coincide with Inventory phone ids.
struct Alphabet {
  std::vector<std::string> glyphs;
  bool phoneme_mode = false;

  int size() const { return static_cast<int>(glyphs.size()); }
  TermId find(const std::string& glyph) const;
  TermId intern(const std::string& glyph);  // adds if absent
};

struct Utterance {
  std::vector<TermId> terminals;
  int source_line = 0;
};

// Gold word regions: boundaries[0] = 0, boundaries.back() = utterance length.
struct TrueSegmentation {
  std::vector<int> boundaries;

  int regions() const { return static_cast<int>(boundaries.size()) - 1; }
  void validate(int utterance_len) const;
};

struct Corpus {
  Alphabet alphabet;
  std::vector<Utterance> utterances;
  // parallel to utterances; entries present only where gold marks were given
  std::vector<std::optional<TrueSegmentation>> gold;

  std::size_t terminal_count() const;
};

struct TextConfig {
  bool case_fold = true;
  bool sentence_split = true;
  // one utterance per input line instead of one document with \n as space
  bool line_mode = false;
  // fixed alphabet (characters); input outside it is an error
  std::optional<std::string> fixed_alphabet;
};

Corpus load_text(const std::string& path, const TextConfig& config);
Corpus load_text_string(const std::string& text, const TextConfig& config);

// One utterance per line, whitespace-separated phoneme mnemonics, optional
// '|' gold word boundaries.  The alphabet is the full built-in inventory.
Corpus load_phonemes(const std::string& path);
Corpus load_phonemes_string(const std::string& text);

Alphabet inventory_alphabet();

std::string render(const Alphabet& alphabet, std::span<const TermId> terminals);

// Gold segmentation side files for text corpora: one line per utterance with
// space-separated boundary offsets (0 ... length).
std::vector<TrueSegmentation> load_gold(const std::string& path,
                                        const std::vector<Utterance>& utterances);
void save_gold(const std::string& path, const Corpus& corpus);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& contents);

}  // namespace lexmdl

#endif  // LEXMDL_CORPUS_HPP
