#include "lexmdl/synth.hpp"

#include "lexmdl/channel.hpp"

namespace lexmdl {

Corpus generate(const Lexicon& true_lexicon, int utterance_count,
                LengthDistribution length, std::uint64_t seed) {
  if (length.mean < 1.0) throw DataError("words per utterance must be >= 1");
  std::vector<WordId> ids;
  std::vector<double> weights;
  for (WordId id : true_lexicon.live_ids()) {
    const Word& w = true_lexicon.word(id);
    if (w.count > 0.0) {
      ids.push_back(id);
      weights.push_back(w.count);
    }
  }
  if (ids.empty()) throw DataError("true lexicon has no positive-probability words");

  Rng rng(seed);
  Corpus corpus;
  corpus.alphabet = true_lexicon.alphabet();
  for (int i = 0; i < utterance_count; ++i) {
    int k = length.kind == LengthDistribution::kFixed
                ? static_cast<int>(length.mean)
                : rng.geometric_at_least_one(length.mean);
    Utterance utt;
    utt.source_line = i + 1;
    TrueSegmentation gold;
    gold.boundaries.push_back(0);
    for (int j = 0; j < k; ++j) {
      WordId w = ids[rng.categorical(weights)];
      const auto& s = true_lexicon.word(w).surface;
      utt.terminals.insert(utt.terminals.end(), s.begin(), s.end());
      gold.boundaries.push_back(static_cast<int>(utt.terminals.size()));
    }
    corpus.utterances.push_back(std::move(utt));
    corpus.gold.emplace_back(std::move(gold));
  }
  return corpus;
}

Corpus corrupt(const Corpus& corpus, const PhoneModel& model, std::uint64_t seed) {
  if (!corpus.alphabet.phoneme_mode)
    throw DataError("corrupt requires a phoneme-mode corpus");
  model.params().validate();

  Rng rng(seed);
  Corpus out;
  out.alphabet = inventory_alphabet();
  for (std::size_t i = 0; i < corpus.utterances.size(); ++i) {
    const Utterance& utt = corpus.utterances[i];
    std::vector<PhoneId> pi(utt.terminals.begin(), utt.terminals.end());
    const std::vector<int>* bounds =
        corpus.gold[i] ? &corpus.gold[i]->boundaries : nullptr;
    std::vector<int> mapped;
    std::optional<std::vector<PhoneId>> phones;
    // resample on a tripped length guard or a fully deleted utterance
    for (int attempt = 0; attempt < 64; ++attempt) {
      phones = sample_phones(model, pi, rng, 100, bounds, bounds ? &mapped : nullptr);
      if (phones && !phones->empty()) break;
      phones.reset();
    }
    if (!phones)
      throw DataError("corrupt: sampler kept tripping the output-length guard");
    Utterance realized;
    realized.source_line = utt.source_line;
    realized.terminals.assign(phones->begin(), phones->end());
    out.utterances.push_back(std::move(realized));
    if (bounds) {
      TrueSegmentation seg{mapped};
      seg.validate(static_cast<int>(phones->size()));
      out.gold.emplace_back(std::move(seg));
    } else {
      out.gold.emplace_back();
    }
  }
  return out;
}

}  // namespace lexmdl
