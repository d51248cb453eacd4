#include <benchmark/benchmark.h>

#include "lexmdl/channel.hpp"
#include "lexmdl/synth.hpp"

using namespace lexmdl;

namespace {

const PhoneModel& model() {
  static PhoneModel m(Inventory::instance(), ChannelParams{});
  return m;
}

std::vector<PhoneId> random_phones(Rng& rng, int len) {
  std::vector<PhoneId> out;
  for (int i = 0; i < len; ++i)
    out.push_back(static_cast<PhoneId>(rng.uniform_index(Inventory::instance().size())));
  return out;
}

void BM_PhiGivenPi(benchmark::State& state) {
  Rng rng(7);
  std::vector<std::pair<std::vector<PhoneId>, std::vector<PhoneId>>> pairs;
  for (int i = 0; i < 64; ++i)
    pairs.push_back({random_phones(rng, static_cast<int>(state.range(0))),
                     random_phones(rng, static_cast<int>(state.range(0)))});
  for (auto _ : state) {
    double total = 0.0;
    for (const auto& [pi, phi] : pairs) total += phi_given_pi(model(), pi, phi);
    benchmark::DoNotOptimize(total);
  }
  state.SetItemsProcessed(state.iterations() * pairs.size());
}

void BM_NoisyChart(benchmark::State& state) {
  Lexicon lex(inventory_alphabet());
  Rng rng(11);
  std::vector<double> counts(lex.id_limit(), 1.0);
  for (int added = 0; added < 20;) {
    int len = 2 + static_cast<int>(rng.uniform_index(3));
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
    counts[id] = 20.0;
    ++added;
  }
  lex.renormalize(counts);

  std::vector<TermId> phi;
  for (int i = 0; i < static_cast<int>(state.range(0)); ++i)
    phi.push_back(static_cast<TermId>(rng.uniform_index(10)));
  for (auto _ : state) {
    Chart chart = noisy_chart(lex, phi, model(), 1e-4);
    benchmark::DoNotOptimize(chart.log_total);
  }
}

}  // namespace

BENCHMARK(BM_PhiGivenPi)->Arg(4)->Arg(8)->Arg(16);
BENCHMARK(BM_NoisyChart)->Arg(8)->Arg(16)->Arg(24);
