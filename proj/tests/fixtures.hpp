#ifndef LEXMDL_TESTS_FIXTURES_HPP
#define LEXMDL_TESTS_FIXTURES_HPP

#include <map>
#include <string>
#include <vector>

#include "lexmdl/lexicon.hpp"

namespace lexmdl::testing {

// Small text-mode lexicon builder: words named by surface strings, reps by
// lists of previously added surfaces (terminals included automatically).
class LexBuilder {
 public:
  explicit LexBuilder(const std::string& alphabet) : lex_(make_alphabet(alphabet)) {
    for (TermId t = 0; t < lex_.alphabet_size(); ++t) {
      by_surface_[lex_.alphabet().glyphs[t]] = t;
      counts_[t] = 1.0;  // overridable via terminal_count
    }
  }

  LexBuilder& word(const std::string& surface, const std::vector<std::string>& rep,
                   double count) {
    std::vector<TermId> ids;
    for (char c : surface) ids.push_back(term(std::string(1, c)));
    std::vector<WordId> rep_ids;
    for (const std::string& r : rep) rep_ids.push_back(by_surface_.at(r));
    WordId id = lex_.add_word(ids, rep_ids, count, rep.size() == 1);
    by_surface_[surface] = id;
    counts_[id] = count;
    return *this;
  }

  LexBuilder& terminal_count(const std::string& glyph, double count) {
    counts_[term(glyph)] = count;
    return *this;
  }

  Lexicon build() {
    std::vector<double> counts(lex_.id_limit(), 0.0);
    for (const auto& [id, c] : counts_) counts[id] = c;
    lex_.renormalize(counts);
    return lex_;
  }

  WordId id(const std::string& surface) const { return by_surface_.at(surface); }

  static std::vector<TermId> ids_of(const Lexicon& lex, const std::string& text) {
    std::vector<TermId> out;
    for (char c : text) {
      TermId t = lex.alphabet().find(std::string(1, c));
      if (t < 0) throw DataError("fixture: unknown glyph");
      out.push_back(t);
    }
    return out;
  }

 private:
  static Alphabet make_alphabet(const std::string& glyphs) {
    Alphabet a;
    for (char c : glyphs) a.intern(std::string(1, c));
    return a;
  }
  TermId term(const std::string& glyph) const { return by_surface_.at(glyph); }

  Lexicon lex_;
  std::map<std::string, WordId> by_surface_;
  std::map<WordId, double> counts_;
};

// The worked "thecatinthehat" description: six nonterminals, counts out of
// 17, and the fixed input representation thecat+i+n+thehat.
struct CatHatFixture {
  Lexicon lexicon;
  std::vector<TermId> input;            // thecatinthehat
  std::vector<std::string> rep_order;   // the at cat hat thecat thehat
};

inline CatHatFixture cathat() {
  LexBuilder b("thecain");
  b.terminal_count("t", 2).terminal_count("h", 2).terminal_count("e", 1);
  b.terminal_count("c", 1).terminal_count("a", 1).terminal_count("i", 1);
  b.terminal_count("n", 1);
  b.word("the", {"t", "h", "e"}, 2);
  b.word("at", {"a", "t"}, 2);
  b.word("cat", {"c", "at"}, 1);
  b.word("hat", {"h", "at"}, 1);
  b.word("thecat", {"the", "cat"}, 1);
  b.word("thehat", {"the", "hat"}, 1);
  CatHatFixture f{b.build(), {}, {"the", "at", "cat", "hat", "thecat", "thehat"}};
  f.input = LexBuilder::ids_of(f.lexicon, "thecatinthehat");
  return f;
}

inline std::vector<Utterance> as_utterances(const std::vector<std::vector<TermId>>& seqs) {
  std::vector<Utterance> out;
  for (std::size_t i = 0; i < seqs.size(); ++i)
    out.push_back({seqs[i], static_cast<int>(i + 1)});
  return out;
}

}  // namespace lexmdl::testing

#endif  // LEXMDL_TESTS_FIXTURES_HPP
