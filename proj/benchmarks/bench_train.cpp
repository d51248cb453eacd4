#include <benchmark/benchmark.h>

#include "lexmdl/moves.hpp"
#include "lexmdl/synth.hpp"

using namespace lexmdl;

namespace {

void BM_TrainOuterIteration(benchmark::State& state) {
  Alphabet a;
  for (int i = 0; i < 10; ++i) a.intern(std::string(1, static_cast<char>('a' + i)));
  Lexicon truth(a);
  Rng rng(23);
  std::vector<double> counts(truth.id_limit(), 0.0);
  for (int added = 0; added < 20;) {
    int len = 2 + static_cast<int>(rng.uniform_index(4));
    std::vector<TermId> surface;
    std::vector<WordId> rep;
    for (int i = 0; i < len; ++i) {
      TermId t = static_cast<TermId>(rng.uniform_index(10));
      surface.push_back(t);
      rep.push_back(t);
    }
    if (truth.find_surface(surface) >= 0) continue;
    WordId id = truth.add_word(surface, rep, 0.0);
    counts.resize(truth.id_limit(), 0.0);
    counts[id] = 1.0;
    ++added;
  }
  truth.renormalize(counts);
  Corpus corpus = generate(truth, static_cast<int>(state.range(0)),
                           LengthDistribution::geometric(6), 5);

  for (auto _ : state) {
    Lexicon lex(corpus.alphabet);
    TrainOptions opt;
    opt.max_outer = 1;
    opt.threads = 1;
    TrainResult r = train(lex, corpus.utterances, opt);
    benchmark::DoNotOptimize(r.trace.back().total_bits);
  }
  state.SetItemsProcessed(state.iterations() * corpus.terminal_count());
}

}  // namespace

BENCHMARK(BM_TrainOuterIteration)->Unit(benchmark::kMillisecond)->Arg(200)->Arg(500);
