#include "lexmdl/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <sstream>

#include "lexmdl/phonology.hpp"

namespace lexmdl {

TermId Alphabet::find(const std::string& glyph) const {
  for (std::size_t i = 0; i < glyphs.size(); ++i)
    if (glyphs[i] == glyph) return static_cast<TermId>(i);
  return -1;
}

TermId Alphabet::intern(const std::string& glyph) {
  TermId id = find(glyph);
  if (id >= 0) return id;
  glyphs.push_back(glyph);
  return static_cast<TermId>(glyphs.size() - 1);
}

void TrueSegmentation::validate(int utterance_len) const {
  if (boundaries.size() < 2 || boundaries.front() != 0 ||
      boundaries.back() != utterance_len)
    throw DataError("gold segmentation does not tile the utterance");
  for (std::size_t i = 1; i < boundaries.size(); ++i)
    if (boundaries[i] <= boundaries[i - 1])
      throw DataError("gold segmentation boundaries must be strictly increasing");
}

std::size_t Corpus::terminal_count() const {
  std::size_t n = 0;
  for (const auto& u : utterances) n += u.terminals.size();
  return n;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write file: " + path);
  out << contents;
}

Corpus load_text_string(const std::string& text, const TextConfig& config) {
  Corpus corpus;
  corpus.alphabet.phoneme_mode = false;
  std::map<char, TermId> ids;
  if (config.fixed_alphabet) {
    for (char c : *config.fixed_alphabet) {
      char g = config.case_fold ? static_cast<char>(std::tolower(static_cast<unsigned char>(c))) : c;
      if (!ids.count(g)) ids[g] = corpus.alphabet.intern(std::string(1, g));
    }
  }

  std::vector<TermId> current;
  int line = 1;
  bool any_nonspace = false;
  auto flush = [&] {
    if (!current.empty() && any_nonspace) {
      corpus.utterances.push_back({std::move(current), line});
      corpus.gold.emplace_back();
    }
    current.clear();
    any_nonspace = false;
  };

  for (char raw : text) {
    if (raw == '\n') {
      ++line;
      if (config.line_mode) {
        flush();
        continue;
      }
      raw = ' ';
    }
    if (raw == '\t' || raw == '\r') raw = ' ';
    char c = config.case_fold ? static_cast<char>(std::tolower(static_cast<unsigned char>(raw))) : raw;
    TermId id;
    if (config.fixed_alphabet) {
      auto it = ids.find(c);
      if (it == ids.end())
        throw DataError(std::string("character '") + c + "' at line " +
                        std::to_string(line) + " is outside the configured alphabet");
      id = it->second;
    } else {
      auto it = ids.find(c);
      id = it == ids.end() ? (ids[c] = corpus.alphabet.intern(std::string(1, c))) : it->second;
    }
    current.push_back(id);
    if (c != ' ') any_nonspace = true;
    // the delimiter stays as the final character of its sentence
    if (config.sentence_split && (c == '.' || c == '?' || c == '!')) flush();
  }
  flush();
  return corpus;
}

Corpus load_text(const std::string& path, const TextConfig& config) {
  return load_text_string(read_file(path), config);
}

Alphabet inventory_alphabet() {
  Alphabet a;
  a.phoneme_mode = true;
  for (const auto& sym : Inventory::instance().symbols()) a.glyphs.push_back(sym.name);
  return a;
}

Corpus load_phonemes_string(const std::string& text) {
  const Inventory& inv = Inventory::instance();
  Corpus corpus;
  corpus.alphabet = inventory_alphabet();

  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ls(line);
    std::string tok;
    std::vector<TermId> terms;
    std::vector<int> boundaries{0};
    bool any_marker = false;
    while (ls >> tok) {
      if (tok == "|") {
        any_marker = true;
        if (!terms.empty() && boundaries.back() != static_cast<int>(terms.size()))
          boundaries.push_back(static_cast<int>(terms.size()));
        continue;
      }
      PhoneId p = inv.find(tok);
      if (p < 0)
        throw DataError("unknown phoneme '" + tok + "' at line " + std::to_string(lineno));
      terms.push_back(static_cast<TermId>(p));
    }
    if (terms.empty()) continue;  // empty lines are dropped
    corpus.utterances.push_back({std::move(terms), lineno});
    if (any_marker) {
      int n = static_cast<int>(corpus.utterances.back().terminals.size());
      if (boundaries.back() != n) boundaries.push_back(n);
      TrueSegmentation seg{std::move(boundaries)};
      seg.validate(n);
      corpus.gold.emplace_back(std::move(seg));
    } else {
      corpus.gold.emplace_back();
    }
  }
  return corpus;
}

Corpus load_phonemes(const std::string& path) {
  return load_phonemes_string(read_file(path));
}

std::string render(const Alphabet& alphabet, std::span<const TermId> terminals) {
  std::string out;
  for (std::size_t i = 0; i < terminals.size(); ++i) {
    if (alphabet.phoneme_mode && i > 0) out += ' ';
    out += alphabet.glyphs[terminals[i]];
  }
  return out;
}

std::vector<TrueSegmentation> load_gold(const std::string& path,
                                        const std::vector<Utterance>& utterances) {
  std::istringstream in(read_file(path));
  std::vector<TrueSegmentation> gold;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    TrueSegmentation seg;
    int b;
    while (ls >> b) seg.boundaries.push_back(b);
    gold.push_back(std::move(seg));
  }
  if (gold.size() != utterances.size())
    throw DataError("gold file has " + std::to_string(gold.size()) +
                    " segmentations for " + std::to_string(utterances.size()) +
                    " utterances");
  for (std::size_t i = 0; i < gold.size(); ++i)
    gold[i].validate(static_cast<int>(utterances[i].terminals.size()));
  return gold;
}

void save_gold(const std::string& path, const Corpus& corpus) {
  std::ostringstream out;
  for (std::size_t i = 0; i < corpus.utterances.size(); ++i) {
    if (!corpus.gold[i])
      throw DataError("utterance " + std::to_string(i) + " has no gold segmentation");
    const auto& b = corpus.gold[i]->boundaries;
    for (std::size_t j = 0; j < b.size(); ++j) {
      if (j) out << ' ';
      out << b[j];
    }
    out << '\n';
  }
  write_file(path, out.str());
}

}  // namespace lexmdl
