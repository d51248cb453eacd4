#include "lexmdl/lexicon.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <iomanip>
#include <sstream>

namespace lexmdl {

Lexicon::Lexicon(Alphabet alphabet) : alphabet_(std::move(alphabet)) {
  if (alphabet_.size() == 0) throw DataError("lexicon needs a non-empty alphabet");
  for (TermId t = 0; t < alphabet_.size(); ++t) {
    Word w;
    w.id = t;
    w.surface = {t};
    w.count = 1.0;
    words_.push_back(std::move(w));
    alive_.push_back(1);
    index_surface(t);
  }
  live_count_ = alphabet_.size();
  max_surface_len_ = 1;
  std::vector<double> ones(words_.size(), 1.0);
  renormalize(ones);
}

const Word& Lexicon::word(WordId id) const {
  if (!alive(id)) throw DataError("unknown word id " + std::to_string(id));
  return words_[id];
}

Word& Lexicon::word_mut(WordId id) {
  if (!alive(id)) throw DataError("unknown word id " + std::to_string(id));
  return words_[id];
}

std::vector<WordId> Lexicon::live_ids() const {
  std::vector<WordId> out;
  out.reserve(live_count_);
  for (WordId id = 0; id < static_cast<WordId>(words_.size()); ++id)
    if (alive_[id]) out.push_back(id);
  return out;
}

std::vector<WordId> Lexicon::nonterminal_ids() const {
  std::vector<WordId> out;
  for (WordId id = alphabet_size(); id < static_cast<WordId>(words_.size()); ++id)
    if (alive_[id]) out.push_back(id);
  return out;
}

WordId Lexicon::find_surface(std::span<const TermId> surface) const {
  return find_surface_hashed(hash_ids(surface), surface);
}

WordId Lexicon::find_surface_hashed(std::uint64_t hash,
                                    std::span<const TermId> surface) const {
  auto it = surface_index_.find(hash);
  if (it == surface_index_.end()) return -1;
  for (WordId id : it->second) {
    const auto& s = words_[id].surface;
    if (s.size() == surface.size() && std::equal(s.begin(), s.end(), surface.begin()))
      return id;
  }
  return -1;
}

void Lexicon::index_surface(WordId id) {
  surface_index_[hash_ids(words_[id].surface)].push_back(id);
}

void Lexicon::unindex_surface(WordId id) {
  auto it = surface_index_.find(hash_ids(words_[id].surface));
  if (it == surface_index_.end()) return;
  auto& v = it->second;
  v.erase(std::remove(v.begin(), v.end(), id), v.end());
  if (v.empty()) surface_index_.erase(it);
}

WordId Lexicon::add_word(std::vector<TermId> surface, std::vector<WordId> rep,
                         double count, bool variant) {
  if (surface.empty()) throw DataError("word surface must be non-empty");
  if (rep.empty()) throw DataError("nonterminals need a representation");
  if (find_surface(surface) >= 0)
    throw DataError("surface already present: " + render(alphabet_, surface));
  if (variant != (rep.size() == 1))
    throw DataError("variant words have exactly one rep member");
  for (TermId t : surface)
    if (t < 0 || t >= alphabet_.size()) throw DataError("surface terminal out of range");

  Word w;
  w.id = static_cast<WordId>(words_.size());
  w.surface = std::move(surface);
  w.rep = std::move(rep);
  w.count = count;
  w.variant = variant;

  for (WordId m : w.rep) {
    if (!alive(m)) throw DataError("rep member " + std::to_string(m) + " unknown");
    if (!variant && words_[m].surface.size() >= w.surface.size())
      throw DataError("rep members must have strictly shorter surfaces");
    if (variant && m >= w.id) throw DataError("variant member must predate the variant");
  }
  if (!variant) {
    std::vector<TermId> concat;
    for (WordId m : w.rep)
      concat.insert(concat.end(), words_[m].surface.begin(), words_[m].surface.end());
    if (concat != w.surface)
      throw DataError("rep surfaces do not concatenate to the word surface");
  }

  max_surface_len_ = std::max(max_surface_len_, static_cast<int>(w.surface.size()));
  words_.push_back(std::move(w));
  alive_.push_back(1);
  ++live_count_;
  index_surface(words_.back().id);
  total_count_ += count;
  return words_.back().id;
}

void Lexicon::remove_word(WordId id) {
  if (!alive(id)) throw DataError("unknown word id " + std::to_string(id));
  if (is_terminal(id)) throw DataError("terminals are permanent");
  for (WordId other : nonterminal_ids())
    if (other != id)
      for (WordId m : words_[other].rep)
        if (m == id)
          throw DataError("word " + std::to_string(id) + " is still referenced by " +
                          std::to_string(other));
  unindex_surface(id);
  total_count_ -= words_[id].count;
  alive_[id] = 0;
  --live_count_;
  if (static_cast<int>(words_[id].surface.size()) == max_surface_len_) {
    max_surface_len_ = 1;
    for (WordId w : live_ids())
      max_surface_len_ = std::max(max_surface_len_, static_cast<int>(words_[w].surface.size()));
  }
}

void Lexicon::reserve_dead_slot() {
  Word w;
  w.id = static_cast<WordId>(words_.size());
  words_.push_back(std::move(w));
  alive_.push_back(0);
}

void Lexicon::set_rep(WordId id, std::vector<WordId> rep, bool variant) {
  Word& w = word_mut(id);
  if (is_terminal(id)) throw DataError("terminals have no representation");
  if (rep.empty()) throw DataError("nonterminals need a representation");
  if (variant != (rep.size() == 1))
    throw DataError("variant words have exactly one rep member");
  for (WordId m : rep) {
    if (!alive(m)) throw DataError("rep member " + std::to_string(m) + " unknown");
    if (!variant && words_[m].surface.size() >= w.surface.size())
      throw DataError("rep members must have strictly shorter surfaces");
    if (variant && m >= id) throw DataError("variant member must predate the variant");
  }
  if (!variant) {
    std::vector<TermId> concat;
    for (WordId m : rep)
      concat.insert(concat.end(), words_[m].surface.begin(), words_[m].surface.end());
    if (concat != w.surface)
      throw DataError("rep surfaces do not concatenate to the word surface");
  }
  w.rep = std::move(rep);
  w.variant = variant;
}

void Lexicon::renormalize(const std::vector<double>& counts) {
  if (counts.size() != words_.size())
    throw DataError("counts vector does not match the lexicon");
  double total = 0.0;
  for (WordId id = 0; id < static_cast<WordId>(words_.size()); ++id) {
    if (!alive_[id]) continue;
    if (!(counts[id] >= 0.0)) throw DataError("negative count for word " + std::to_string(id));
    total += counts[id];
  }
  if (total <= 0.0) throw DataError("renormalize: all counts are zero");
  for (WordId id = 0; id < static_cast<WordId>(words_.size()); ++id) {
    if (!alive_[id]) continue;
    words_[id].count = counts[id];
    words_[id].code_len = counts[id] > 0.0 ? std::log2(total) - std::log2(counts[id]) : kInfBits;
  }
  total_count_ = total;
}

double Lexicon::word_cost(WordId id) const {
  const Word& w = word(id);
  double bits = 0.0;
  for (WordId m : w.rep) bits += word(m).code_len;
  return bits;
}

double Lexicon::dictionary_bits() const {
  double bits = 0.0;
  for (WordId id : nonterminal_ids()) bits += word_cost(id) + overhead_bits;
  return bits;
}

void Lexicon::validate() const {
  if (static_cast<int>(words_.size()) < alphabet_.size())
    throw DataError("lexicon lost terminals");
  for (TermId t = 0; t < alphabet_.size(); ++t) {
    if (!alive_[t]) throw DataError("terminal deleted: " + alphabet_.glyphs[t]);
    if (!words_[t].terminal() || words_[t].surface != std::vector<TermId>{t})
      throw DataError("terminal " + std::to_string(t) + " malformed");
  }
  double total = 0.0;
  for (WordId id : live_ids()) {
    const Word& w = words_[id];
    if (w.id != id) throw DataError("word id mismatch");
    total += w.count;
    if (find_surface(w.surface) != id)
      throw DataError("duplicate or unindexed surface: " + render(alphabet_, w.surface));
    if (w.terminal()) continue;
    if (w.variant) {
      if (w.rep.size() != 1 || w.rep[0] >= id || !alive(w.rep[0]))
        throw DataError("bad variant rep");
      continue;
    }
    if (w.rep.size() < 2) throw DataError("non-variant rep must have >= 2 members");
    std::vector<TermId> concat;
    for (WordId m : w.rep) {
      if (!alive(m)) throw DataError("dangling rep id " + std::to_string(m));
      if (words_[m].surface.size() >= w.surface.size())
        throw DataError("rep member not strictly shorter");
      concat.insert(concat.end(), words_[m].surface.begin(), words_[m].surface.end());
    }
    if (concat != w.surface)
      throw DataError("rep surfaces do not concatenate to the word surface");
  }
  if (std::abs(total - total_count_) > 1e-6 * std::max(1.0, total))
    throw DataError("total count out of sync");
  // acyclicity over the rep graph (covers variant chains)
  std::vector<int> mark(words_.size(), 0);
  std::function<void(WordId)> visit = [&](WordId id) {
    if (mark[id] == 2) return;
    if (mark[id] == 1) throw DataError("representation graph has a cycle");
    mark[id] = 1;
    for (WordId m : words_[id].rep) visit(m);
    mark[id] = 2;
  };
  for (WordId id : live_ids()) visit(id);
}

DescriptionLength description_length(const Lexicon& lexicon,
                                     std::span<const double> utterance_costs) {
  DescriptionLength dl;
  for (double bits : utterance_costs) dl.input_bits += bits;
  dl.dictionary_bits = lexicon.dictionary_bits();
  dl.total_bits = dl.input_bits + dl.dictionary_bits;
  return dl;
}

std::string lexicon_to_string(const Lexicon& lexicon) {
  std::ostringstream out;
  out << "#lexmdl-lexicon mode=" << (lexicon.alphabet().phoneme_mode ? "phoneme" : "text")
      << "\n";
  out << std::setprecision(17);
  for (WordId id : lexicon.live_ids()) {
    const Word& w = lexicon.word(id);
    out << id << '\t' << w.count << '\t' << render(lexicon.alphabet(), w.surface) << '\t';
    for (std::size_t i = 0; i < w.rep.size(); ++i) {
      if (i) out << ' ';
      out << w.rep[i];
    }
    out << '\n';
  }
  return out.str();
}

void save_lexicon(const Lexicon& lexicon, const std::string& path) {
  write_file(path, lexicon_to_string(lexicon));
}

Lexicon lexicon_from_string(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line.rfind("#lexmdl-lexicon", 0) != 0)
    throw DataError("not a lexicon file (missing header)");
  bool phoneme_mode = line.find("mode=phoneme") != std::string::npos;

  struct Row {
    WordId id;
    double count;
    std::string surface;
    std::vector<WordId> rep;
  };
  std::vector<Row> rows;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> fields;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= line.size(); ++i) {
      if (i == line.size() || line[i] == '\t') {
        fields.push_back(line.substr(start, i - start));
        start = i + 1;
      }
    }
    if (fields.size() != 4)
      throw DataError("lexicon line " + std::to_string(lineno) + ": expected 4 tab-separated fields");
    Row row;
    try {
      row.id = std::stoi(fields[0]);
      row.count = std::stod(fields[1]);
    } catch (const std::exception&) {
      throw DataError("lexicon line " + std::to_string(lineno) + ": bad number");
    }
    row.surface = fields[2];
    std::istringstream rs(fields[3]);
    WordId m;
    while (rs >> m) row.rep.push_back(m);
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw DataError("lexicon file has no words");

  // terminals first, ids dense from 0
  Alphabet alphabet;
  alphabet.phoneme_mode = phoneme_mode;
  std::size_t nterm = 0;
  while (nterm < rows.size() && rows[nterm].rep.empty()) ++nterm;
  if (nterm == 0) throw DataError("lexicon file must list terminals first");
  for (std::size_t t = 0; t < nterm; ++t) {
    if (rows[t].id != static_cast<WordId>(t))
      throw DataError("terminal ids must be dense from 0");
    if (alphabet.find(rows[t].surface) >= 0)
      throw DataError("duplicate terminal glyph: " + rows[t].surface);
    alphabet.intern(rows[t].surface);
  }

  Lexicon lexicon(alphabet);
  // id remapping is not supported: file ids are authoritative, and adds are
  // append-only, so nonterminals must arrive in increasing id order with any
  // gaps (deleted words) skipped.
  std::vector<double> counts(nterm, 0.0);
  for (std::size_t t = 0; t < nterm; ++t) counts[rows[t].id] = rows[t].count;

  std::unordered_map<WordId, std::size_t> row_of;
  for (std::size_t i = nterm; i < rows.size(); ++i) row_of[rows[i].id] = i;

  // tokenize a surface back to terminal ids
  auto parse_surface = [&](const std::string& s, int lineno_hint) {
    std::vector<TermId> ids;
    if (phoneme_mode) {
      std::istringstream ss(s);
      std::string tok;
      while (ss >> tok) {
        TermId t = alphabet.find(tok);
        if (t < 0)
          throw DataError("lexicon: unknown glyph '" + tok + "' near line " +
                          std::to_string(lineno_hint));
        ids.push_back(t);
      }
    } else {
      for (char c : s) {
        TermId t = alphabet.find(std::string(1, c));
        if (t < 0)
          throw DataError(std::string("lexicon: unknown glyph '") + c + "' near line " +
                          std::to_string(lineno_hint));
        ids.push_back(t);
      }
    }
    return ids;
  };

  for (std::size_t i = nterm; i < rows.size(); ++i) {
    const Row& row = rows[i];
    if (row.id < static_cast<WordId>(lexicon.id_limit()))
      throw DataError("nonterminal ids must increase; got " + std::to_string(row.id));
    // burn gap ids left by deletions so file ids round-trip exactly
    while (static_cast<WordId>(lexicon.id_limit()) < row.id) lexicon.reserve_dead_slot();
    std::vector<TermId> surface = parse_surface(row.surface, 0);
    for (WordId m : row.rep)
      if (!lexicon.alive(m)) throw DataError("dangling rep id " + std::to_string(m));
    bool variant = row.rep.size() == 1;
    lexicon.add_word(std::move(surface), row.rep, row.count, variant);
    counts.resize(lexicon.id_limit(), 0.0);
    counts[row.id] = row.count;
  }
  counts.resize(lexicon.id_limit(), 0.0);
  lexicon.renormalize(counts);
  lexicon.validate();
  return lexicon;
}

Lexicon load_lexicon(const std::string& path) {
  try {
    return lexicon_from_string(read_file(path));
  } catch (const DataError& e) {
    throw DataError(path + ": " + e.what());
  }
}

std::string inspect_table(const Lexicon& lexicon, int max_rows) {
  std::vector<WordId> ids = lexicon.live_ids();
  std::stable_sort(ids.begin(), ids.end(), [&](WordId a, WordId b) {
    return lexicon.word(a).count > lexicon.word(b).count;
  });
  std::ostringstream out;
  out << "rank\t-log p\t|rep|\tcount\trep\n";
  out << std::fixed;
  int rank = 0;
  for (WordId id : ids) {
    if (max_rows >= 0 && rank >= max_rows) break;
    const Word& w = lexicon.word(id);
    out << rank++ << '\t' << std::setprecision(3) << w.code_len << '\t';
    if (!w.terminal()) out << std::setprecision(3) << lexicon.word_cost(id);
    out << '\t' << std::setprecision(2) << w.count << '\t';
    if (w.terminal()) {
      out << lexicon.alphabet().glyphs[w.surface[0]];
    } else {
      out << '[';
      for (std::size_t i = 0; i < w.rep.size(); ++i) {
        const Word& m = lexicon.word(w.rep[i]);
        if (lexicon.alphabet().phoneme_mode && i > 0) out << ' ';
        if (m.terminal())
          out << render(lexicon.alphabet(), m.surface);
        else
          out << '[' << render(lexicon.alphabet(), m.surface) << ']';
      }
      out << ']';
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace lexmdl
