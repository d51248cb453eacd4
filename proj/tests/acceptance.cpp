// Acceptance suite: runs every acceptance criterion at its stated tolerance
// and prints one PASS/FAIL line per criterion.  Exits nonzero if any gating
// criterion fails.

#include <chrono>
#include <cstdlib>
#include <functional>
#include <iomanip>
#include <iostream>
#include <set>
#include <sstream>

#include "fixtures.hpp"
#include "lexmdl/channel.hpp"
#include "lexmdl/config.hpp"
#include "lexmdl/eval.hpp"
#include "lexmdl/moves.hpp"
#include "lexmdl/synth.hpp"
#include "lexmdl/threading.hpp"
#include "oracles.hpp"

using namespace lexmdl;
using namespace lexmdl::testing;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void check(bool ok, const std::string& what) {
    pass = pass && ok;
    detail << "    " << (ok ? "ok  " : "FAIL") << ' ' << what << '\n';
  }
  void note(const std::string& what) { detail << "    note " << what << '\n'; }
};

std::string fmt(double v) {
  std::ostringstream ss;
  ss << std::fixed << std::setprecision(4) << v;
  return ss.str();
}

// ---- hidden-lexicon builders shared by criteria 4 and 8 ----

Lexicon hidden_lexicon(const Alphabet& alphabet, int sub_alphabet, int n_words,
                       std::uint64_t seed) {
  Lexicon lex{alphabet};
  Rng rng(seed);
  std::vector<double> counts(lex.id_limit(), 0.0);
  int added = 0;
  while (added < n_words) {
    int len = 2 + static_cast<int>(rng.uniform_index(4));  // 2..5 symbols
    std::vector<TermId> surface;
    std::vector<WordId> rep;
    for (int i = 0; i < len; ++i) {
      TermId t = static_cast<TermId>(rng.uniform_index(sub_alphabet));
      surface.push_back(t);
      rep.push_back(t);
    }
    if (lex.find_surface(surface) >= 0) continue;
    WordId id = lex.add_word(surface, rep, 0.0);
    counts.resize(lex.id_limit(), 0.0);
    counts[id] = 1.0 / (1.0 + added);  // mildly skewed usage
    ++added;
  }
  lex.renormalize(counts);
  return lex;
}

std::set<std::string> true_surfaces(const Lexicon& truth) {
  std::set<std::string> out;
  for (WordId id : truth.nonterminal_ids())
    out.insert(render(truth.alphabet(), truth.word(id).surface));
  return out;
}

int surfaces_recovered(const Lexicon& trained, const std::set<std::string>& truth) {
  std::set<std::string> have;
  for (WordId id : trained.nonterminal_ids()) {
    const Word& w = trained.word(id);
    have.insert(render(trained.alphabet(), w.surface));
    if (w.variant)  // a variant also vouches for its underlying member
      have.insert(render(trained.alphabet(), trained.word(w.rep[0]).surface));
  }
  int n = 0;
  for (const std::string& s : truth)
    if (have.count(s)) ++n;
  return n;
}

// ---- criteria ----

Outcome criterion1() {
  Outcome o;
  CatHatFixture f = cathat();
  auto cost = [&](const char* s) {
    return f.lexicon.word_cost(f.lexicon.find_surface(LexBuilder::ids_of(f.lexicon, s)));
  };
  double input = 4 * std::log2(17.0);
  DescriptionLength dl = description_length(f.lexicon, std::vector<double>{input});

  auto near = [](double got, double want, double tol) {
    return std::abs(got - want) <= tol;
  };
  o.check(near(dl.input_bits, 16.36, 0.02),
          "input portion 16.36 +- 0.02 (got " + fmt(dl.input_bits) + ")");
  o.check(near(cost("the"), 10.27, 0.02),
          "|rep(the)| 10.27 +- 0.02 (got " + fmt(cost("the")) + ")");
  o.check(near(cost("cat"), 7.18, 0.02),
          "|rep(cat)| 7.18 +- 0.02 (got " + fmt(cost("cat")) + ")");
  o.check(near(cost("hat"), 6.18, 0.02),
          "|rep(hat)| 6.18 +- 0.02 (got " + fmt(cost("hat")) + ")");
  o.check(near(cost("thecat"), 7.18, 0.02),
          "|rep(thecat)| 7.18 +- 0.02 (got " + fmt(cost("thecat")) + ")");
  o.check(near(cost("thehat"), 7.18, 0.02),
          "|rep(thehat)| 7.18 +- 0.02 (got " + fmt(cost("thehat")) + ")");
  o.check(near(cost("at"), 6.18, 0.02),
          "|rep(at)| 6.18 +- 0.02 (got " + fmt(cost("at")) + ")");
  o.check(near(dl.total_bits, 60.53, 0.02),
          "total 60.53 +- 0.02 (got " + fmt(dl.total_bits) + ")");
  if (!o.pass)
    o.note(
        "the reference table's at row and its 60.53 sum are not consistent "
        "with -log2(c/17) index lengths; ideal-code arithmetic gives "
        "|rep(at)| 7.17 and total 61.49 (see tests and notes)");
  return o;
}

Outcome criterion2() {
  Outcome o;
  Rng rng(220);
  int instances = 0;
  double worst = 0.0;
  while (instances < 200) {
    int alpha = 2 + static_cast<int>(rng.uniform_index(2));
    Lexicon lex = random_lexicon(rng, alpha, 8 - alpha);  // <= 8 words total
    auto utts = random_utterances(rng, lex, 1, 3);
    auto seq = utts[0].terminals;
    if (seq.size() > 10) seq.resize(10);
    EnumeratedChart oracle = enumerate_segmentations(lex, seq);
    if (oracle.total <= 0.0) continue;
    ++instances;
    Chart chart = forward_backward(lex, seq);
    double total = std::exp2(chart.log_total);
    worst = std::max(worst, std::abs(total - oracle.total) /
                                std::max({total, oracle.total, 1e-300}));
    for (const ChartSpan& s : chart.spans) {
      double want = oracle.span_mass[{s.begin, s.end, s.word}] / oracle.total;
      worst = std::max(worst, std::abs(s.posterior - want) /
                                  std::max({s.posterior, want, 1e-300}));
    }
  }
  o.check(worst <= 1e-10, "200 random instances within 1e-10 relative (worst " +
                              fmt(worst * 1e12) + "e-12)");
  return o;
}

Outcome criterion3() {
  Outcome o;
  Rng rng(333);
  double worst_drop = 0.0;
  for (int seed = 0; seed < 50; ++seed) {
    Lexicon lex = random_lexicon(rng, 2 + rng.uniform_index(3), 5);
    auto utts = random_utterances(rng, lex, 4, 4);
    EmTrace trace = em_iterate(lex, utts, 5);
    for (std::size_t i = 1; i < trace.combined_log2.size(); ++i)
      worst_drop = std::max(
          worst_drop, trace.combined_log2[i - 1] - trace.combined_log2[i]);
  }
  o.check(worst_drop <= 1e-9, "log-likelihood never drops more than 1e-9 (worst " +
                                  fmt(worst_drop * 1e12) + "e-12)");
  return o;
}

Outcome criterion4() {
  Outcome o;
  Alphabet alphabet;
  for (int i = 0; i < 10; ++i) alphabet.intern(std::string(1, static_cast<char>('a' + i)));
  Lexicon truth = hidden_lexicon(alphabet, 10, 20, 4001);
  Corpus corpus = generate(truth, 2000, LengthDistribution::geometric(6), 4002);

  Lexicon lex{corpus.alphabet};
  TrainOptions opt;
  opt.max_outer = 15;
  opt.threads = default_threads();
  TrainResult result = train(lex, corpus.utterances, opt);
  lex.validate();

  int recovered = surfaces_recovered(lex, true_surfaces(truth));
  o.check(recovered >= 18, "true words recovered as surfaces >= 18/20 (got " +
                               std::to_string(recovered) + ")");

  std::vector<Segmentation> parses;
  std::vector<TrueSegmentation> gold;
  for (std::size_t i = 0; i < corpus.utterances.size(); ++i) {
    parses.push_back(viterbi_parse(lex, corpus.utterances[i].terminals));
    gold.push_back(*corpus.gold[i]);
  }
  SegmentationReport seg = segmentation_report(parses, gold);
  o.check(seg.recall >= 0.90, "token recall >= 0.90 (got " + fmt(seg.recall) + ")");
  o.check(seg.crossing <= 0.05, "crossing rate <= 0.05 (got " + fmt(seg.crossing) + ")");

  double baseline = result.trace.front().total_bits;
  double final_dl = result.trace.back().total_bits;
  o.check(final_dl <= 0.8 * baseline,
          "final DL at least 20% below terminal-only (" + fmt(final_dl) + " vs " +
              fmt(baseline) + ")");
  return o;
}

Outcome criterion5() {
  Outcome o;
  auto dl_for = [&](int n) {
    Alphabet a;
    a.intern("a");
    Lexicon lex{a};
    std::vector<TermId> seq(n, 0);
    std::vector<Utterance> utts{{seq, 1}};
    TrainOptions opt;
    opt.max_outer = 15;
    TrainResult r = train(lex, utts, opt);
    return r.trace.back().total_bits;
  };
  double d256 = dl_for(256), d1024 = dl_for(1024), d4096 = dl_for(4096);
  o.check(d4096 - d1024 <= d1024 - d256 + 1e-9,
          "DL growth slows: " + fmt(d4096 - d1024) + " <= " + fmt(d1024 - d256));
  o.check(d4096 / 4096.0 < 0.2,
          "bits/char at n=4096 below 0.2 (got " + fmt(d4096 / 4096.0) + ")");
  return o;
}

Outcome criterion6() {
  Outcome o;
  PhoneModel model(Inventory::instance(), ChannelParams{});
  const int n = Inventory::instance().size();
  double worst = 0.0;
  for (PhoneId q = -1; q < n; ++q) {
    for (PhoneId u = 0; u < n; ++u) {
      for (PhoneId nn = -1; nn < n; ++nn) {
        std::vector<PhoneId> underlying =
            nn == kNoPhone ? std::vector<PhoneId>{u} : std::vector<PhoneId>{u, nn};
        for (TState tag : {TState::kStart, TState::kInserted, TState::kMapped}) {
          TransducerState st{tag, 0, q};
          double total = 0.0;
          for (const StepOption& opt : step_distribution(model, st, underlying))
            total += opt.prob;
          worst = std::max(worst, std::abs(total - 1.0));
        }
      }
    }
  }
  o.check(worst <= 1e-12, "all transducer states emit unit mass (worst dev " +
                              fmt(worst * 1e15) + "e-15)");

  double worst_feat = 0.0;
  const Inventory& inv = Inventory::instance();
  for (int f = 0; f < kFeatureCount; ++f) {
    int count = inv.value_count(f);
    for (int qv = -1; qv < count; ++qv)
      for (int uv = -1; uv < count; ++uv)
        for (int nv = -1; nv < count; ++nv) {
          double tm = 0.0, tc = 0.0, ti = 0.0;
          for (int sv = 0; sv < count; ++sv) {
            tm += model.feature_map(f, sv, qv, uv);
            tc += model.feature_copy(f, sv, qv, uv, nv);
            ti += model.feature_insert(f, sv);
          }
          worst_feat = std::max({worst_feat, std::abs(tm - 1.0),
                                 std::abs(tc - 1.0), std::abs(ti - 1.0)});
        }
  }
  o.check(worst_feat <= 1e-12, "all per-feature distributions sum to 1 (worst dev " +
                                   fmt(worst_feat * 1e15) + "e-15)");
  return o;
}

Outcome criterion7() {
  Outcome o;
  PhoneModel model(Inventory::instance(), ChannelParams{});
  const Inventory& inv = Inventory::instance();
  std::vector<PhoneId> mini = {inv.find("d"),  inv.find("t"),  inv.find("s"),
                               inv.find("ae"), inv.find("iy"), inv.find("n")};
  std::vector<std::vector<PhoneId>> pis;
  for (PhoneId a : mini) {
    pis.push_back({a});
    for (PhoneId b : mini) pis.push_back({a, b});
  }
  std::vector<std::vector<PhoneId>> phis = {{}};
  for (PhoneId a : mini) {
    phis.push_back({a});
    for (PhoneId b : mini) {
      phis.push_back({a, b});
      for (PhoneId c : mini) phis.push_back({a, b, c});
    }
  }
  double worst = 0.0;
  for (const auto& pi : pis)
    for (const auto& phi : phis) {
      double dp = phi_given_pi(model, pi, phi);
      double brute = enumerate_channel(model, pi, phi);
      worst = std::max(worst, std::abs(dp - brute));
    }
  o.check(worst <= 1e-12, std::to_string(pis.size() * phis.size()) +
                              " derivation sums match enumeration (worst dev " +
                              fmt(worst * 1e15) + "e-15)");
  return o;
}

Outcome criterion8() {
  Outcome o;
  Lexicon truth = hidden_lexicon(inventory_alphabet(), 10, 20, 8001);
  Corpus clean = generate(truth, 2000, LengthDistribution::geometric(6), 8002);
  PhoneModel model(Inventory::instance(), ChannelParams{});
  Corpus noisy = corrupt(clean, model, 8003);

  Lexicon lex{noisy.alphabet};
  TrainOptions opt;
  opt.max_outer = 15;
  opt.threads = default_threads();
  opt.channel = &model;
  TrainResult result = train(lex, noisy.utterances, opt);
  lex.validate();

  int recovered = surfaces_recovered(lex, true_surfaces(truth));
  o.check(recovered >= 12, "true words recovered >= 12/20 (got " +
                               std::to_string(recovered) + ")");
  o.note("lexicon size " + std::to_string(lex.live_count()) + ", converged " +
         (result.converged ? "yes" : "no"));
  return o;
}

Outcome criterion9() {
  Outcome o;
  const char* brown = std::getenv("LEXMDL_BROWN");
  if (!brown) {
    o.note(
        "stretch run skipped: set LEXMDL_BROWN to a Brown-corpus text file to "
        "run 15 iterations and compare against 2.12 bits/char (advisory)");
    return o;
  }
  TextConfig cfg;
  Corpus corpus = load_text(brown, cfg);
  Lexicon lex{corpus.alphabet};
  TrainOptions opt;
  opt.max_outer = 15;
  opt.threads = default_threads();
  TrainResult result = train(lex, corpus.utterances, opt);
  double bpc = result.trace.back().total_bits / corpus.terminal_count();
  o.note("bits/char after 15 iterations: " + fmt(bpc) + " (target 2.12 +- 15%)");
  o.check(std::abs(bpc - 2.12) <= 0.15 * 2.12, "within 15% of 2.12 bits/char");
  return o;
}

}  // namespace

int main() {
  struct Entry {
    int id;
    const char* name;
    std::function<Outcome()> run;
    bool gating;
    double budget_s;
  };
  std::vector<Entry> entries = {
      {1, "reference description of thecatinthehat", criterion1, true, 1},
      {2, "chart equals segmentation enumeration", criterion2, true, 10},
      {3, "EM likelihood monotonicity", criterion3, true, 30},
      {4, "synthetic lexicon recovery", criterion4, true, 120},
      {5, "identical-character scaling", criterion5, true, 60},
      {6, "channel normalization", criterion6, true, 30},
      {7, "channel derivation-sum oracle", criterion7, true, 60},
      {8, "noisy-channel lexicon recovery", criterion8, true, 600},
      {9, "corpus-scale stretch runs", criterion9, false, 0},
  };

  int failures = 0;
  for (const Entry& e : entries) {
    auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = e.run();
    } catch (const std::exception& ex) {
      o.pass = false;
      o.detail << "    exception: " << ex.what() << '\n';
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                      .count();
    if (e.budget_s > 0 && secs > e.budget_s) {
      o.pass = false;
      o.detail << "    FAIL runtime " << fmt(secs) << "s exceeds " << e.budget_s
               << "s\n";
    }
    bool counts = e.gating && !o.pass;
    if (counts) ++failures;
    std::cout << (o.pass ? "[PASS] " : (e.gating ? "[FAIL] " : "[WARN] "))
              << "criterion " << e.id << ": " << e.name << " (" << fmt(secs)
              << " s)\n"
              << o.detail.str();
  }
  std::cout << (failures == 0 ? "all gating criteria passed\n"
                              : std::to_string(failures) + " gating criteria failed\n");
  return failures == 0 ? 0 : 1;
}
