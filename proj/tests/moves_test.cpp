#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "fixtures.hpp"
#include "lexmdl/moves.hpp"
#include "lexmdl/synth.hpp"
#include "oracles.hpp"

using namespace lexmdl;
using namespace lexmdl::testing;

namespace {

std::vector<Utterance> repeat_text(const Lexicon& lex, const std::string& text,
                                   int n) {
  std::vector<std::vector<TermId>> seqs(n, LexBuilder::ids_of(lex, text));
  return as_utterances(seqs);
}

std::string surface_str(const Lexicon& lex, WordId id) {
  return render(lex.alphabet(), lex.word(id).surface);
}

bool has_surface(const Lexicon& lex, const std::string& s) {
  return lex.find_surface(LexBuilder::ids_of(lex, s)) >= 0;
}

}  // namespace

TEST_CASE("candidates are adjacent pairs and triples with counts") {
  LexBuilder b("thecat");
  b.word("the", {"t", "h", "e"}, 5).word("cat", {"c", "a", "t"}, 5);
  Lexicon lex = b.build();
  WordId the = b.id("the"), cat = b.id("cat");

  std::vector<std::vector<WordId>> parses(50, {the, cat});
  auto cands = propose_candidates(lex, parses, -1);
  REQUIRE(cands.size() == 1);
  CHECK(render(lex.alphabet(), cands[0].surface) == "thecat");
  CHECK(cands[0].est_count == 50.0);
  CHECK(cands[0].rep == std::vector<WordId>{the, cat});

  // no repeated pair: each candidate counted once
  std::vector<std::vector<WordId>> once{{the, cat, the}, {cat, the, cat}};
  auto singles = propose_candidates(lex, once, -1);
  for (const Candidate& c : singles)
    if (render(lex.alphabet(), c.surface) == "catthecat") CHECK(c.est_count == 1.0);

  // existing surfaces are filtered out
  Lexicon lex2 = LexBuilder("thecat")
                     .word("the", {"t", "h", "e"}, 5)
                     .word("cat", {"c", "a", "t"}, 5)
                     .word("thecat", {"the", "cat"}, 1)
                     .build();
  auto cands2 = propose_candidates(lex2, parses, -1);
  CHECK(cands2.empty());
}

TEST_CASE("the candidate cap keeps the most frequent surfaces") {
  LexBuilder b("ab");
  Lexicon lex = b.build();
  std::vector<std::vector<WordId>> parses;
  for (int i = 0; i < 10; ++i) parses.push_back({0, 1});        // ab x10
  for (int i = 0; i < 3; ++i) parses.push_back({1, 0});         // ba x3
  auto capped = propose_candidates(lex, parses, 1);
  REQUIRE(capped.size() == 1);
  CHECK(render(lex.alphabet(), capped[0].surface) == "ab");
}

TEST_CASE("a heavily repeated pair is worth adding") {
  LexBuilder b("ab");
  Lexicon lex = b.build();
  auto utts = repeat_text(lex, "ab", 1000);
  em_iterate(lex, utts, 2);

  Candidate cand{LexBuilder::ids_of(lex, "ab"), {0, 1}, 1000.0};
  DeltaReport rep = score_addition(lex, cand);
  CHECK(rep.delta_bits < 0.0);

  // exact description length confirms the prediction
  TrainOptions opt;
  double before = true_description_length(lex, utts, opt).total_bits;
  std::map<WordId, double> usage = expected_components(lex, cand.surface);
  Lexicon with = lex;
  WordId id = with.add_word(cand.surface, cand.rep, cand.est_count);
  std::vector<double> counts(with.id_limit(), 0.0);
  for (WordId w : with.live_ids()) counts[w] = with.word(w).count;
  for (const auto& [w, u] : usage)
    counts[w] = std::max(0.0, counts[w] - cand.est_count * u);
  counts[0] += 1;
  counts[1] += 1;  // the new word's representation slots
  counts[id] = cand.est_count;
  with.renormalize(counts);
  em_iterate(with, utts, 2);
  double after = true_description_length(with, utts, opt).total_bits;
  CHECK(after < before);
}

TEST_CASE("a single-use candidate with a long representation is not worth adding") {
  Rng rng(11);
  Lexicon lex = random_lexicon(rng, 6, 6);
  std::vector<WordId> rep = {0, 1, 2};
  Candidate cand{{0, 1, 2}, rep, 1.0};
  if (lex.find_surface(cand.surface) < 0) {
    DeltaReport rep_score = score_addition(lex, cand);
    CHECK(rep_score.delta_bits > 0.0);
  }
}

TEST_CASE("chance-level pairs are not added on average") {
  // iid unigram corpora: pair counts match independence, so the description
  // length should not support new words
  int accepted_total = 0;
  for (int seed = 0; seed < 20; ++seed) {
    Rng rng(100 + seed);
    LexBuilder b("abcdef");
    Lexicon lex = b.build();
    std::vector<std::vector<TermId>> seqs;
    for (int u = 0; u < 200; ++u) {
      std::vector<TermId> seq;
      int len = 4 + static_cast<int>(rng.uniform_index(8));
      for (int i = 0; i < len; ++i)
        seq.push_back(static_cast<TermId>(rng.uniform_index(6)));
      seqs.push_back(seq);
    }
    auto utts = as_utterances(seqs);
    em_iterate(lex, utts, 2);
    std::vector<std::vector<WordId>> parses;
    for (const auto& u : utts) {
      Segmentation seg = viterbi_parse(lex, u.terminals);
      std::vector<WordId> toks;
      for (const SegNode& nd : seg.words) toks.push_back(nd.word);
      parses.push_back(toks);
    }
    for (const Candidate& c : propose_candidates(lex, parses, -1))
      if (score_addition(lex, c).delta_bits < 0.0) ++accepted_total;
  }
  CHECK(accepted_total <= 2);  // on average no spurious pair passes
}

TEST_CASE("deletion scoring") {
  LexBuilder b("ab");
  b.terminal_count("a", 10).terminal_count("b", 10);
  b.word("ab", {"a", "b"}, 0);  // never used, but its entry costs bits
  Lexicon lex = b.build();
  WordId ab = b.id("ab");
  DeltaReport rep = score_deletion(lex, ab);
  CHECK(rep.delta_bits < 0.0);

  CHECK_THROWS_WITH_AS(score_deletion(lex, 0), doctest::Contains("permanent"),
                       DataError);
}

TEST_CASE("a word carrying most of the corpus is kept") {
  LexBuilder b("ab");
  Lexicon lex = b.build();
  auto utts = repeat_text(lex, "ab", 1000);
  em_iterate(lex, utts, 2);
  Candidate cand{LexBuilder::ids_of(lex, "ab"), {0, 1}, 1000.0};
  std::map<WordId, double> usage = expected_components(lex, cand.surface);
  WordId id = lex.add_word(cand.surface, cand.rep, 1000.0);
  std::vector<double> counts(lex.id_limit(), 0.0);
  for (WordId w : lex.live_ids()) counts[w] = lex.word(w).count;
  counts[id] = 1000.0;
  lex.renormalize(counts);
  em_iterate(lex, utts, 3);

  DeltaReport rep = score_deletion(lex, id);
  CHECK(rep.delta_bits > 0.0);

  TrainOptions opt;
  double with_word = true_description_length(lex, utts, opt).total_bits;
  Lexicon without = LexBuilder("ab").build();
  em_iterate(without, utts, 2);
  double without_word = true_description_length(without, utts, opt).total_bits;
  CHECK(with_word < without_word);
}

TEST_CASE("training discovers the vocabulary of a two-word corpus") {
  Lexicon lex = LexBuilder("thecat ").build();  // glyphs dedup to t,h,e,c,a,space
  std::vector<std::vector<TermId>> seqs;
  for (int i = 0; i < 100; ++i) {
    seqs.push_back(LexBuilder::ids_of(lex, "thecat thehat"));
  }
  auto utts = as_utterances(seqs);

  // within three outer iterations the real vocabulary must appear; with every
  // utterance identical it later collapses into one memorized word, so check
  // after each iteration
  TrainOptions opt;
  bool seen = false;
  em_iterate(lex, utts, 1);  // maximum-likelihood unigram baseline
  double terminal_only = true_description_length(lex, utts, opt).total_bits;
  double final_dl = terminal_only;
  for (int outer = 1; outer <= 3; ++outer) {
    OuterResult r = apply_moves(lex, utts, opt);
    final_dl = r.dl.total_bits;
    seen = seen || (has_surface(lex, "the") &&
                    (has_surface(lex, "cat") || has_surface(lex, "hat")));
  }
  lex.validate();
  CHECK(seen);
  // strictly below the terminal-only description length
  CHECK(final_dl < terminal_only);
}

TEST_CASE("a stationary lexicon is returned unchanged") {
  LexBuilder b("ab");
  Lexicon lex = b.build();
  auto utts = repeat_text(lex, "ab", 400);
  TrainOptions opt;
  TrainResult r1 = train(lex, utts, opt);
  CHECK(r1.converged);
  std::string before = lexicon_to_string(lex);
  OuterResult r2 = apply_moves(lex, utts, opt);
  CHECK(r2.converged);
  CHECK(r2.words_added == 0);
  CHECK(r2.words_deleted == 0);
  CHECK(lexicon_to_string(lex) == before);
}

TEST_CASE("no word is added and deleted in the same pass") {
  for (int seed = 0; seed < 50; ++seed) {
    Rng rng(7000 + seed);
    Lexicon truth = random_lexicon(rng, 4, 4);
    Corpus corpus = generate(truth, 60, LengthDistribution::geometric(4), 7000 + seed);
    Lexicon lex{corpus.alphabet};
    TrainOptions opt;
    opt.audit = true;
    OuterResult r = apply_moves(lex, corpus.utterances, opt);
    std::set<std::string> added, deleted;
    for (const MoveAudit& a : r.audit) {
      if (a.kind == "add") added.insert(a.surface);
      if (a.kind == "delete") deleted.insert(a.surface);
    }
    std::vector<std::string> both;
    std::set_intersection(added.begin(), added.end(), deleted.begin(), deleted.end(),
                          std::back_inserter(both));
    CHECK(both.empty());
  }
}

TEST_CASE("the exact-DL audit confirms most accepted moves") {
  int helped = 0, total = 0;
  for (int seed = 0; seed < 10; ++seed) {
    Rng rng(9000 + seed);
    Lexicon truth = random_lexicon(rng, 5, 5);
    Corpus corpus = generate(truth, 80, LengthDistribution::geometric(5), 9000 + seed);
    Lexicon lex{corpus.alphabet};
    TrainOptions opt;
    opt.audit = true;
    opt.max_outer = 3;
    TrainResult r = train(lex, corpus.utterances, opt);
    for (const MoveAudit& a : r.audit) {
      ++total;
      if (a.dl_after < a.dl_before + 1e-9) ++helped;
    }
  }
  REQUIRE(total > 0);  // the audit is logged
  CHECK(static_cast<double>(helped) / total >= 0.9);
}

TEST_CASE("training is deterministic") {
  Rng gen(5);
  Lexicon truth = random_lexicon(gen, 5, 6);
  Corpus corpus = generate(truth, 120, LengthDistribution::geometric(5), 5);
  TrainOptions opt;
  opt.max_outer = 4;

  Lexicon lex1{corpus.alphabet};
  train(lex1, corpus.utterances, opt);
  Lexicon lex2{corpus.alphabet};
  train(lex2, corpus.utterances, opt);
  CHECK(lexicon_to_string(lex1) == lexicon_to_string(lex2));
  lex1.validate();
}

TEST_CASE("deletions cascade through dependent representations") {
  LexBuilder b("ab");
  b.terminal_count("a", 10).terminal_count("b", 10);
  b.word("ab", {"a", "b"}, 4);
  b.word("abab", {"ab", "ab"}, 2);
  Lexicon lex = b.build();
  WordId ab = b.id("ab"), abab = b.id("abab");
  std::vector<WordId> deleted;
  // deleting ab must first re-derive abab's representation
  // (exercised through apply_moves's helper by scoring, then applying)
  DeltaReport rep = score_deletion(lex, ab);
  (void)rep;
  // direct removal without re-derivation is refused
  CHECK_THROWS_WITH_AS(lex.remove_word(ab), doctest::Contains("referenced"),
                       DataError);
  CHECK(lex.alive(abab));
}

TEST_CASE("surface variants merge through the channel") {
  PhoneModel model(Inventory::instance(), ChannelParams{});
  const Inventory& inv = Inventory::instance();
  auto ids = [&](const char* s) {
    std::vector<TermId> out;
    std::istringstream ss(s);
    std::string tok;
    while (ss >> tok) out.push_back(inv.find(tok));
    return out;
  };

  // counts as they would look when the ng-realizations are still being paid
  // for phone by phone: the observed terminals carry the usage
  Lexicon lex(inventory_alphabet());
  std::vector<double> counts(lex.id_limit(), 0.0);
  counts[inv.find("d")] = 32;
  counts[inv.find("uw")] = 32;
  counts[inv.find("ih")] = 32;
  counts[inv.find("n")] = 10;
  counts[inv.find("ng")] = 30;
  WordId duin = lex.add_word(ids("d u ih n"),
                             {inv.find("d"), inv.find("uw"), inv.find("ih"),
                              inv.find("n")},
                             10.0);
  counts.resize(lex.id_limit(), 0.0);
  counts[duin] = 10.0;
  lex.renormalize(counts);

  TrainOptions opt;
  opt.channel = &model;

  SUBCASE("dominant variant is adopted") {
    auto added = merge_surface_variant(lex, duin, ids("d u ih ng"), 30, opt);
    REQUIRE(added.has_value());
    const Word& w = lex.word(*added);
    CHECK(w.variant);
    CHECK(w.rep == std::vector<WordId>{duin});
    CHECK(render(lex.alphabet(), w.surface) == "d uw ih ng");
    lex.validate();
  }
  SUBCASE("support below the threshold is a no-op") {
    CHECK(!merge_surface_variant(lex, duin, ids("d u ih ng"), 2, opt).has_value());
  }
  SUBCASE("an unchanged surface is a no-op") {
    CHECK(!merge_surface_variant(lex, duin, ids("d u ih n"), 30, opt).has_value());
  }
}
