#include "lexmdl/eval.hpp"

#include <sstream>

namespace lexmdl {

CompressionReport compression_report(const Lexicon& lexicon, const Corpus& corpus,
                                     int threads) {
  CompressionReport r;
  r.characters = corpus.terminal_count();
  if (r.characters == 0) throw DataError("empty corpus");
  std::vector<double> costs = viterbi_costs(lexicon, corpus.utterances, threads);
  DescriptionLength dl = description_length(lexicon, costs);
  r.input_bits = dl.input_bits;
  r.dictionary_bits = dl.dictionary_bits;
  r.total_bits = dl.total_bits;
  r.bits_per_char = dl.total_bits / static_cast<double>(r.characters);
  r.entropy_rate_bits_per_char = dl.input_bits / static_cast<double>(r.characters);
  r.parameter_fraction = dl.total_bits > 0.0 ? dl.dictionary_bits / dl.total_bits : 0.0;
  return r;
}

namespace {

void collect_spans(const SegNode& node, std::vector<std::pair<int, int>>& out) {
  out.push_back({node.begin, node.end});
  for (const SegNode& c : node.children) collect_spans(c, out);
}

}  // namespace

SegmentationReport segmentation_report(const std::vector<Segmentation>& parses,
                                       const std::vector<TrueSegmentation>& gold) {
  if (parses.size() != gold.size())
    throw DataError("parse/gold utterance count mismatch");
  SegmentationReport r;
  int recalled = 0, crossed = 0;
  for (std::size_t i = 0; i < parses.size(); ++i) {
    std::vector<std::pair<int, int>> spans;
    for (const SegNode& w : parses[i].words) collect_spans(w, spans);
    int parse_len = parses[i].words.empty() ? 0 : parses[i].words.back().end;
    if (gold[i].boundaries.back() != parse_len)
      throw DataError("parse fringe does not match the gold sequence length");
    const auto& b = gold[i].boundaries;
    for (std::size_t g = 0; g + 1 < b.size(); ++g) {
      int x = b[g], y = b[g + 1];
      ++r.region_count;
      bool exact = false, cross = false;
      for (auto [a, e] : spans) {
        if (a == x && e == y) exact = true;
        if ((a < x && x < e && e < y) || (x < a && a < y && y < e)) cross = true;
      }
      if (exact) ++recalled;
      if (cross) ++crossed;
    }
  }
  if (r.region_count > 0) {
    r.recall = static_cast<double>(recalled) / r.region_count;
    r.crossing = static_cast<double>(crossed) / r.region_count;
  }
  return r;
}

std::string compression_report_tsv(const CompressionReport& r) {
  std::ostringstream out;
  out.precision(6);
  out << std::fixed;
  out << "characters\ttotal_bits\tinput_bits\tdictionary_bits\tbits_per_char\t"
         "entropy_rate_bits_per_char\tparameter_fraction\n";
  out << r.characters << '\t' << r.total_bits << '\t' << r.input_bits << '\t'
      << r.dictionary_bits << '\t' << r.bits_per_char << '\t'
      << r.entropy_rate_bits_per_char << '\t' << r.parameter_fraction << '\n';
  return out.str();
}

std::string segmentation_report_tsv(const SegmentationReport& r) {
  std::ostringstream out;
  out.precision(6);
  out << std::fixed;
  out << "recall\tcrossing\tregion_count\n";
  out << r.recall << '\t' << r.crossing << '\t' << r.region_count << '\n';
  return out.str();
}

}  // namespace lexmdl
