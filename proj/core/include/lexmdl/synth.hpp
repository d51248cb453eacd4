#ifndef LEXMDL_SYNTH_HPP
#define LEXMDL_SYNTH_HPP

#include "lexmdl/lexicon.hpp"
#include "lexmdl/phonology.hpp"

namespace lexmdl {

struct LengthDistribution {
  enum Kind { kGeometric, kFixed };
  Kind kind = kGeometric;
  double mean = 6.0;  // geometric mean, or the exact count when fixed

  static LengthDistribution geometric(double mean) { return {kGeometric, mean}; }
  static LengthDistribution fixed(int words) {
    return {kFixed, static_cast<double>(words)};
  }
};

// Samples utterances as iid word sequences from the lexicon distribution
// (word emission is context-independent).  Gold regions mark the sampled
// words.
Corpus generate(const Lexicon& true_lexicon, int utterance_count,
                LengthDistribution length, std::uint64_t seed);

// Passes each utterance through the transducer sampler.  Gold boundaries are
// remapped to the realized phone positions (inserted phones belong to the
// following region; regions realized empty are collapsed).
Corpus corrupt(const Corpus& corpus, const PhoneModel& model, std::uint64_t seed);

}  // namespace lexmdl

#endif  // LEXMDL_SYNTH_HPP
