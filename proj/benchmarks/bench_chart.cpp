#include <benchmark/benchmark.h>

#include "lexmdl/multigram.hpp"
#include "lexmdl/synth.hpp"

using namespace lexmdl;

namespace {

Lexicon bench_lexicon(int words) {
  Alphabet a;
  for (int i = 0; i < 10; ++i) a.intern(std::string(1, static_cast<char>('a' + i)));
  Lexicon lex(a);
  Rng rng(17);
  std::vector<double> counts(lex.id_limit(), 1.0);
  int added = 0;
  while (added < words) {
    int len = 2 + static_cast<int>(rng.uniform_index(4));
    std::vector<TermId> surface;
    std::vector<WordId> rep;
    for (int i = 0; i < len; ++i) {
      TermId t = static_cast<TermId>(rng.uniform_index(10));
      surface.push_back(t);
      rep.push_back(t);
    }
    if (lex.find_surface(surface) >= 0) continue;
    WordId id = lex.add_word(surface, rep, 0.0);
    counts.resize(lex.id_limit(), 0.0);
    counts[id] = 1.0 + static_cast<double>(rng.uniform_index(50));
    ++added;
  }
  lex.renormalize(counts);
  return lex;
}

void BM_ForwardBackward(benchmark::State& state) {
  Lexicon lex = bench_lexicon(static_cast<int>(state.range(0)));
  Corpus corpus = generate(lex, 64, LengthDistribution::geometric(6), 3);
  std::size_t chars = corpus.terminal_count();
  for (auto _ : state) {
    double total = 0.0;
    for (const Utterance& u : corpus.utterances)
      total += forward_backward(lex, u.terminals).log_total;
    benchmark::DoNotOptimize(total);
  }
  state.SetItemsProcessed(state.iterations() * chars);
}

void BM_ViterbiParse(benchmark::State& state) {
  Lexicon lex = bench_lexicon(static_cast<int>(state.range(0)));
  Corpus corpus = generate(lex, 64, LengthDistribution::geometric(6), 3);
  std::size_t chars = corpus.terminal_count();
  for (auto _ : state) {
    double total = 0.0;
    for (const Utterance& u : corpus.utterances)
      total += viterbi_parse(lex, u.terminals).log2_prob;
    benchmark::DoNotOptimize(total);
  }
  state.SetItemsProcessed(state.iterations() * chars);
}

}  // namespace

BENCHMARK(BM_ForwardBackward)->Arg(20)->Arg(100)->Arg(400);
BENCHMARK(BM_ViterbiParse)->Arg(20)->Arg(100)->Arg(400);
