#ifndef LEXMDL_EVAL_HPP
#define LEXMDL_EVAL_HPP

#include "lexmdl/multigram.hpp"

namespace lexmdl {

struct CompressionReport {
  std::size_t characters = 0;
  double total_bits = 0.0;
  double input_bits = 0.0;
  double dictionary_bits = 0.0;
  double bits_per_char = 0.0;
  double entropy_rate_bits_per_char = 0.0;  // input bits only
  double parameter_fraction = 0.0;          // dictionary share of the total
};

struct SegmentationReport {
  double recall = 0.0;    // gold regions exactly spanned at some level
  double crossing = 0.0;  // gold regions crossed by some word span
  int region_count = 0;
};

// Viterbi-encodes the corpus under the (frozen) lexicon.  The same routine
// serves training text and held-out text; nothing here updates counts.
CompressionReport compression_report(const Lexicon& lexicon, const Corpus& corpus,
                                     int threads = 1);

// A word span (a,b) crosses gold region (x,y) iff a<x<b<y or x<a<y<b.
SegmentationReport segmentation_report(
    const std::vector<Segmentation>& parses,
    const std::vector<TrueSegmentation>& gold);

std::string compression_report_tsv(const CompressionReport& r);
std::string segmentation_report_tsv(const SegmentationReport& r);

}  // namespace lexmdl

#endif  // LEXMDL_EVAL_HPP
