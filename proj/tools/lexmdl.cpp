// lexmdl: learn a hierarchical lexicon from unsegmented text or phoneme
// sequences by minimizing combined description length; segment, evaluate,
// inspect, synthesize, and score the phoneme-to-phone channel.

#include <cmath>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "lexmdl/channel.hpp"
#include "lexmdl/config.hpp"
#include "lexmdl/eval.hpp"
#include "lexmdl/synth.hpp"
#include "lexmdl/threading.hpp"

using namespace lexmdl;

namespace {

struct CommonArgs {
  std::string config_path;
  int threads = default_threads();
  std::uint64_t seed = 1;
};

Settings make_settings(const CommonArgs& common) {
  Settings s;
  if (!common.config_path.empty()) s.load_file(common.config_path);
  return s;
}

Corpus load_corpus(const std::string& path, const std::string& mode,
                   const TextConfig& text_config) {
  if (mode == "phoneme") return load_phonemes(path);
  return load_text(path, text_config);
}

// Characters of an --alphabet file, newlines excluded.
std::string read_alphabet_file(const std::string& path) {
  std::string raw = read_file(path);
  std::string out;
  for (char c : raw)
    if (c != '\n' && c != '\r') out += c;
  if (out.empty()) throw DataError("alphabet file is empty: " + path);
  return out;
}

// Rebuilds the loader config that reproduces a lexicon's terminal ids.
TextConfig text_config_for(const Lexicon& lexicon) {
  TextConfig cfg;
  std::string alphabet;
  for (const auto& g : lexicon.alphabet().glyphs) alphabet += g;
  cfg.fixed_alphabet = alphabet;
  return cfg;
}

std::string bracketed(const Lexicon& lexicon, const SegNode& node) {
  const Word& w = lexicon.word(node.word);
  if (w.terminal()) return lexicon.alphabet().glyphs[node.word];
  std::string out = "[";
  if (node.children.empty()) {
    out += render(lexicon.alphabet(), w.surface);
  } else {
    for (std::size_t i = 0; i < node.children.size(); ++i) {
      if (lexicon.alphabet().phoneme_mode && i > 0) out += ' ';
      out += bracketed(lexicon, node.children[i]);
    }
  }
  out += ']';
  return out;
}

std::vector<PhoneId> parse_phoneme_string(const std::string& text) {
  const Inventory& inv = Inventory::instance();
  std::istringstream ss(text);
  std::string tok;
  std::vector<PhoneId> out;
  while (ss >> tok) {
    PhoneId p = inv.find(tok);
    if (p < 0) throw DataError("unknown phoneme '" + tok + "'");
    out.push_back(p);
  }
  if (out.empty()) throw DataError("empty phoneme string");
  return out;
}

int cmd_train(const std::string& corpus_path, const std::string& mode,
              const TextConfig& text_config, bool use_channel,
              std::optional<int> iters, const std::string& out_path,
              const std::string& log_path, bool audit, const CommonArgs& common) {
  Settings settings = make_settings(common);
  if (iters) settings.max_outer = *iters;

  Corpus corpus = load_corpus(corpus_path, mode, text_config);
  if (corpus.utterances.empty()) throw DataError("corpus has no utterances");
  Lexicon lexicon(corpus.alphabet);
  lexicon.overhead_bits = settings.overhead_bits;

  std::optional<PhoneModel> model;
  if (use_channel) {
    if (mode != "phoneme") throw DataError("--channel requires --mode phoneme");
    model.emplace(Inventory::instance(), settings.channel);
  }
  TrainOptions opt = settings.train_options(use_channel, model ? &*model : nullptr,
                                            common.threads, audit);
  TrainResult result = train(lexicon, corpus.utterances, opt);

  if (!out_path.empty()) save_lexicon(lexicon, out_path);
  if (!log_path.empty()) write_file(log_path, trace_to_tsv(result.trace));
  for (const MoveAudit& a : result.audit)
    std::cerr << "audit\t" << a.kind << '\t' << a.surface << '\t' << a.delta_est
              << '\t' << a.dl_before << '\t' << a.dl_after << '\n';
  const TraceRow& last = result.trace.back();
  std::cout << "iterations\t" << last.iteration << '\n'
            << "converged\t" << (result.converged ? "yes" : "no") << '\n'
            << "lexicon_size\t" << last.lexicon_size << '\n'
            << "total_bits\t" << last.total_bits << '\n';
  return 0;
}

Corpus load_for_lexicon(const Lexicon& lexicon, const std::string& corpus_path,
                        const TextConfig& flags) {
  if (lexicon.alphabet().phoneme_mode) return load_phonemes(corpus_path);
  TextConfig cfg = text_config_for(lexicon);
  cfg.case_fold = flags.case_fold;
  cfg.sentence_split = flags.sentence_split;
  cfg.line_mode = flags.line_mode;
  return load_text(corpus_path, cfg);
}

int cmd_segment(const std::string& lexicon_path, const std::string& corpus_path,
                bool deep, const TextConfig& flags, const CommonArgs& common) {
  (void)common;
  Lexicon lexicon = load_lexicon(lexicon_path);
  Corpus corpus = load_for_lexicon(lexicon, corpus_path, flags);
  for (const Utterance& utt : corpus.utterances) {
    Segmentation seg = viterbi_parse(lexicon, utt.terminals);
    std::string line = "|";
    for (const SegNode& nd : seg.words) {
      line += render(lexicon.alphabet(),
                     std::span<const TermId>(utt.terminals.data() + nd.begin,
                                             nd.end - nd.begin));
      line += '|';
    }
    std::cout << line << '\n';
    if (deep) {
      std::string brackets;
      for (const SegNode& nd : seg.words) brackets += bracketed(lexicon, nd);
      std::cout << brackets << '\n';
    }
  }
  return 0;
}

int cmd_eval(const std::string& lexicon_path, const std::string& corpus_path,
             const std::string& gold_path, bool held_out, const TextConfig& flags,
             const CommonArgs& common) {
  (void)held_out;  // evaluation never updates the lexicon
  Lexicon lexicon = load_lexicon(lexicon_path);
  Corpus corpus = load_for_lexicon(lexicon, corpus_path, flags);
  CompressionReport comp = compression_report(lexicon, corpus, common.threads);

  std::vector<TrueSegmentation> gold;
  if (!gold_path.empty()) {
    gold = load_gold(gold_path, corpus.utterances);
  } else {
    for (const auto& g : corpus.gold)
      if (g) gold.push_back(*g);
    if (gold.size() != corpus.utterances.size()) gold.clear();
  }

  if (gold.empty()) {
    std::cout << compression_report_tsv(comp);
    return 0;
  }
  std::vector<Segmentation> parses;
  parses.reserve(corpus.utterances.size());
  for (const Utterance& utt : corpus.utterances)
    parses.push_back(viterbi_parse(lexicon, utt.terminals));
  SegmentationReport seg = segmentation_report(parses, gold);
  std::ostringstream out;
  out.precision(6);
  out << std::fixed;
  out << "characters\ttotal_bits\tinput_bits\tdictionary_bits\tbits_per_char\t"
         "entropy_rate_bits_per_char\tparameter_fraction\trecall\tcrossing\t"
         "region_count\n";
  out << comp.characters << '\t' << comp.total_bits << '\t' << comp.input_bits
      << '\t' << comp.dictionary_bits << '\t' << comp.bits_per_char << '\t'
      << comp.entropy_rate_bits_per_char << '\t' << comp.parameter_fraction
      << '\t' << seg.recall << '\t' << seg.crossing << '\t' << seg.region_count
      << '\n';
  std::cout << out.str();
  return 0;
}

int cmd_synth(const std::string& lexicon_path, int n, double mean_words,
              bool do_corrupt, const std::string& out_path,
              const std::string& gold_out, const CommonArgs& common) {
  Settings settings = make_settings(common);
  Lexicon lexicon = load_lexicon(lexicon_path);
  Corpus corpus =
      generate(lexicon, n, LengthDistribution::geometric(mean_words), common.seed);
  if (do_corrupt) {
    PhoneModel model(Inventory::instance(), settings.channel);
    corpus = corrupt(corpus, model, common.seed + 1);
  }
  std::ostringstream out;
  if (corpus.alphabet.phoneme_mode) {
    for (std::size_t i = 0; i < corpus.utterances.size(); ++i) {
      const auto& terms = corpus.utterances[i].terminals;
      const auto& gold = corpus.gold[i];
      for (std::size_t t = 0; t < terms.size(); ++t) {
        if (t > 0) out << ' ';
        if (gold)
          for (std::size_t b = 1; b + 1 < gold->boundaries.size(); ++b)
            if (gold->boundaries[b] == static_cast<int>(t)) out << "| ";
        out << corpus.alphabet.glyphs[terms[t]];
      }
      out << '\n';
    }
  } else {
    for (const Utterance& utt : corpus.utterances)
      out << render(corpus.alphabet, utt.terminals) << '\n';
  }
  if (out_path.empty())
    std::cout << out.str();
  else
    write_file(out_path, out.str());
  if (!gold_out.empty()) save_gold(gold_out, corpus);
  return 0;
}

int cmd_channel_score(const std::string& pi_str, const std::string& phi_str,
                      const CommonArgs& common) {
  Settings settings = make_settings(common);
  PhoneModel model(Inventory::instance(), settings.channel);
  std::vector<PhoneId> pi = parse_phoneme_string(pi_str);
  std::vector<PhoneId> phi =
      phi_str.empty() ? std::vector<PhoneId>{} : parse_phoneme_string(phi_str);
  double p = phi_given_pi(model, pi, phi);
  std::cout << "log2_prob\t" << (p > 0 ? std::log2(p) : kNegInf) << '\n';
  Alignment align = best_alignment(model, pi, phi);
  std::cout << "best_alignment_log2\t" << align.log2_prob << '\n';
  for (const std::string& a : align.actions) std::cout << a << '\n';
  return 0;
}

int cmd_phones_dump() {
  const Inventory& inv = Inventory::instance();
  std::cout << "symbol\texample\tfeatures\n";
  for (PhoneId p = 0; p < inv.size(); ++p)
    std::cout << inv.symbol(p).name << '\t' << inv.symbol(p).example << '\t'
              << inv.describe(p) << '\n';
  std::cout << "\nfeature\tvalues\tmu\talpha\n";
  for (const FeatureDef& f : inv.features()) {
    std::cout << f.name << '\t';
    for (std::size_t i = 0; i < f.values.size(); ++i) {
      if (i) std::cout << ',';
      std::cout << f.values[i];
    }
    std::cout << '\t' << f.mu << '\t' << f.alpha << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hierarchical MDL lexicon learning"};
  app.require_subcommand(1);

  CommonArgs common;
  app.add_option("--config", common.config_path, "config file (key=value lines)");
  app.add_option("--threads", common.threads, "worker threads");
  app.add_option("--seed", common.seed, "random seed");

  // train
  auto* train_cmd = app.add_subcommand("train", "learn a lexicon from a corpus");
  std::string corpus_path, mode = "text", out_path, log_path, alphabet_path;
  std::optional<int> iters;
  bool no_case_fold = false, no_sentence_split = false, lines = false;
  bool use_channel = false, audit = false;
  train_cmd->add_option("corpus", corpus_path, "input corpus")->required();
  train_cmd->add_option("--iters", iters, "outer iterations");
  train_cmd->add_option("--mode", mode, "text or phoneme")
      ->check(CLI::IsMember({"text", "phoneme"}));
  train_cmd->add_option("--out", out_path, "lexicon output file");
  train_cmd->add_option("--log", log_path, "description-length trace (TSV)");
  train_cmd->add_option("--alphabet", alphabet_path, "fixed text alphabet file");
  train_cmd->add_flag("--no-case-fold", no_case_fold, "keep letter case");
  train_cmd->add_flag("--no-sentence-split", no_sentence_split,
                      "do not split at . ? !");
  train_cmd->add_flag("--lines", lines, "one utterance per input line");
  train_cmd->add_flag("--channel", use_channel,
                      "noisy phoneme-to-phone matching (phoneme mode)");
  train_cmd->add_flag("--audit", audit, "log true DL around every accepted move");

  // segment
  auto* segment_cmd = app.add_subcommand("segment", "print segmentations");
  std::string seg_lexicon, seg_corpus;
  bool deep = false, seg_lines = false;
  segment_cmd->add_option("lexicon", seg_lexicon, "lexicon file")->required();
  segment_cmd->add_option("corpus", seg_corpus, "corpus file")->required();
  segment_cmd->add_flag("--deep", deep, "also print full bracketings");
  segment_cmd->add_flag("--lines", seg_lines, "one utterance per input line");

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "compression and segmentation report");
  std::string eval_lexicon, eval_corpus, gold_path;
  bool held_out = false, eval_lines = false;
  eval_cmd->add_option("lexicon", eval_lexicon, "lexicon file")->required();
  eval_cmd->add_option("corpus", eval_corpus, "corpus file")->required();
  eval_cmd->add_option("--gold", gold_path, "gold segmentation file");
  eval_cmd->add_flag("--held-out", held_out, "corpus is held-out data");
  eval_cmd->add_flag("--lines", eval_lines, "one utterance per input line");

  // inspect
  auto* inspect_cmd = app.add_subcommand("inspect", "ranked dictionary table");
  std::string inspect_lexicon;
  int rows = -1;
  inspect_cmd->add_option("lexicon", inspect_lexicon, "lexicon file")->required();
  inspect_cmd->add_option("--rows", rows, "limit printed rows");

  // synth
  auto* synth_cmd = app.add_subcommand("synth", "sample a corpus from a lexicon");
  std::string synth_lexicon, synth_out, synth_gold_out;
  int synth_n = 1000;
  double mean_words = 6.0;
  bool do_corrupt = false;
  synth_cmd->add_option("--lexicon", synth_lexicon, "true lexicon file")->required();
  synth_cmd->add_option("--n", synth_n, "utterance count");
  synth_cmd->add_option("--mean-words", mean_words, "mean words per utterance");
  synth_cmd->add_flag("--corrupt", do_corrupt, "pass through the channel sampler");
  synth_cmd->add_option("--out", synth_out, "corpus output (default stdout)");
  synth_cmd->add_option("--gold-out", synth_gold_out, "gold boundary file (text mode)");

  // channel-score
  auto* score_cmd = app.add_subcommand("channel-score",
                                       "score a phone string against a phoneme string");
  std::string pi_str, phi_str;
  score_cmd->add_option("--pi", pi_str, "underlying phonemes")->required();
  score_cmd->add_option("--phi", phi_str, "observed phones")->required();

  // phones
  auto* phones_cmd = app.add_subcommand("phones", "inventory utilities");
  bool dump = false;
  phones_cmd->add_flag("--dump", dump, "print the feature chart");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return 1;
  }

  try {
    if (*train_cmd) {
      TextConfig text_config;
      text_config.case_fold = !no_case_fold;
      text_config.sentence_split = !no_sentence_split;
      text_config.line_mode = lines;
      if (!alphabet_path.empty())
        text_config.fixed_alphabet = read_alphabet_file(alphabet_path);
      return cmd_train(corpus_path, mode, text_config, use_channel, iters, out_path,
                       log_path, audit, common);
    }
    if (*segment_cmd) {
      TextConfig flags;
      flags.line_mode = seg_lines;
      return cmd_segment(seg_lexicon, seg_corpus, deep, flags, common);
    }
    if (*eval_cmd) {
      TextConfig flags;
      flags.line_mode = eval_lines;
      return cmd_eval(eval_lexicon, eval_corpus, gold_path, held_out, flags, common);
    }
    if (*inspect_cmd) {
      std::cout << inspect_table(load_lexicon(inspect_lexicon), rows);
      return 0;
    }
    if (*synth_cmd)
      return cmd_synth(synth_lexicon, synth_n, mean_words, do_corrupt, synth_out,
                       synth_gold_out, common);
    if (*score_cmd) return cmd_channel_score(pi_str, phi_str, common);
    if (*phones_cmd) {
      if (!dump) {
        std::cerr << "phones: nothing to do (try --dump)\n";
        return 1;
      }
      return cmd_phones_dump();
    }
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}
