#include "lexmdl/moves.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "lexmdl/threading.hpp"

namespace lexmdl {

namespace {

// Terminals are permanent and must stay matchable; the Appendix-style count
// redistribution may transiently drive one to zero, so clamp to a floor and
// let the next estimation pass restore the true value.
constexpr double kTerminalCountFloor = 1e-6;

double clamp_count(const Lexicon& lex, WordId id, double value) {
  if (lex.is_terminal(id)) return std::max(value, kTerminalCountFloor);
  return std::max(value, 0.0);
}

double count_of(const Lexicon& lex, WordId id) { return lex.word(id).count; }

std::vector<double> current_counts(const Lexicon& lex) {
  std::vector<double> counts(lex.id_limit(), 0.0);
  for (WordId id : lex.live_ids()) counts[id] = lex.word(id).count;
  return counts;
}

EmTrace run_em(Lexicon& lex, const std::vector<Utterance>& utts,
               const TrainOptions& opt) {
  if (opt.channel)
    return em_iterate_noisy(lex, utts, *opt.channel, opt.prune_budget,
                            opt.em_iters, opt.count_mode, opt.threads);
  return em_iterate(lex, utts, opt.em_iters, opt.count_mode, opt.threads);
}

}  // namespace

std::map<WordId, double> expected_components(const Lexicon& lexicon,
                                             std::span<const TermId> surface,
                                             WordId exclude) {
  std::map<WordId, double> usage;
  Chart chart = forward_backward(lexicon, surface,
                                 static_cast<int>(surface.size()), exclude);
  for (const ChartSpan& s : chart.spans) usage[s.word] += s.posterior;
  return usage;
}

std::vector<Candidate> propose_candidates(const Lexicon& lexicon,
                                          const std::vector<std::vector<WordId>>& parses,
                                          int candidate_cap) {
  struct Entry {
    double total = 0.0;
    std::map<std::vector<WordId>, double> reps;
  };
  std::map<std::vector<TermId>, Entry> by_surface;

  auto consider = [&](std::span<const WordId> rep) {
    std::vector<TermId> surface;
    for (WordId id : rep) {
      const auto& s = lexicon.word(id).surface;
      surface.insert(surface.end(), s.begin(), s.end());
    }
    if (lexicon.find_surface(surface) >= 0) return;  // already a word
    Entry& e = by_surface[std::move(surface)];
    e.total += 1.0;
    e.reps[std::vector<WordId>(rep.begin(), rep.end())] += 1.0;
  };

  for (const auto& toks : parses) {
    for (std::size_t i = 0; i + 1 < toks.size(); ++i) {
      consider(std::span<const WordId>(&toks[i], 2));
      if (i + 2 < toks.size()) consider(std::span<const WordId>(&toks[i], 3));
    }
  }

  std::vector<Candidate> cands;
  cands.reserve(by_surface.size());
  for (auto& [surface, entry] : by_surface) {
    // keep the most frequent decomposition; ties go to the smaller rep
    const std::vector<WordId>* best = nullptr;
    double best_count = -1.0;
    for (const auto& [rep, cnt] : entry.reps) {
      if (cnt > best_count) {
        best_count = cnt;
        best = &rep;
      }
    }
    cands.push_back({surface, *best, entry.total});
  }
  std::stable_sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) {
    if (a.est_count != b.est_count) return a.est_count > b.est_count;
    return a.surface < b.surface;
  });
  if (candidate_cap >= 0 && static_cast<int>(cands.size()) > candidate_cap)
    cands.resize(candidate_cap);
  return cands;
}

DeltaReport score_addition(const Lexicon& lexicon, const Candidate& cand,
                           double new_word_discount) {
  DeltaReport report;
  const double C = lexicon.total_count();
  const double cX = cand.est_count * new_word_discount;
  if (cX <= 0.0) {
    report.delta_bits = kInfBits;
    return report;
  }

  std::map<WordId, double> usage;
  try {
    usage = expected_components(lexicon, cand.surface);
  } catch (const DataError&) {
    report.delta_bits = kInfBits;  // surface not parseable under the current model
    return report;
  }
  std::map<WordId, double> rep_usage;
  for (WordId m : cand.rep) rep_usage[m] += 1.0;

  double sum_usage = 0.0;
  for (const auto& [w, c] : usage) sum_usage += c;
  double sum_rep = 0.0;
  for (const auto& [w, c] : rep_usage) sum_rep += c;

  const double Cp = C + sum_rep + cX * (1.0 - sum_usage);
  if (Cp <= 0.0) {
    report.delta_bits = kInfBits;
    return report;
  }

  report.new_word_bits = -cX * (std::log2(cX) - std::log2(Cp));

  std::set<WordId> affected;
  for (const auto& [w, c] : usage) affected.insert(w);
  for (const auto& [w, c] : rep_usage) affected.insert(w);

  double affected_count = 0.0;
  double reindex = 0.0;
  for (WordId w : affected) {
    double c = count_of(lexicon, w);
    double u = usage.count(w) ? usage.at(w) : 0.0;
    double r = rep_usage.count(w) ? rep_usage.at(w) : 0.0;
    double c2 = std::max(0.0, c + r - cX * u);
    affected_count += c;
    if (c2 > 0.0) reindex += -c2 * (std::log2(c2) - std::log2(Cp));
    if (c > 0.0) reindex += c * (std::log2(c) - std::log2(C));
    report.components.push_back({w, c, c2, c2 < c});
  }
  reindex += (C - affected_count) * (std::log2(Cp) - std::log2(C));
  report.reindex_bits = reindex;
  report.delta_bits = report.new_word_bits + reindex + lexicon.overhead_bits;
  return report;
}

DeltaReport score_deletion(const Lexicon& lexicon, WordId id) {
  if (lexicon.is_terminal(id)) throw DataError("terminals are permanent");
  const Word& word = lexicon.word(id);
  DeltaReport report;
  const double C = lexicon.total_count();
  const double cX = word.count;

  std::map<WordId, double> usage;
  try {
    usage = expected_components(lexicon, word.surface, id);
  } catch (const DataError&) {
    report.delta_bits = kInfBits;
    return report;
  }
  double sum_usage = 0.0;
  for (const auto& [w, c] : usage) sum_usage += c;

  const double Cp = C - cX + sum_usage * (cX - 1.0);
  if (Cp <= 0.0) {
    report.delta_bits = kInfBits;
    return report;
  }

  // recovering X's index costs (and its dictionary entry, via the usage terms)
  report.recovered_bits = cX > 0.0 ? cX * (std::log2(cX) - std::log2(C)) : 0.0;

  double affected_count = 0.0;
  double reindex = 0.0;
  for (const auto& [w, u] : usage) {
    double c = count_of(lexicon, w);
    double c2 = std::max(0.0, c + u * (cX - 1.0));
    affected_count += c;
    if (c2 > 0.0) reindex += -c2 * (std::log2(c2) - std::log2(Cp));
    if (c > 0.0) reindex += c * (std::log2(c) - std::log2(C));
    report.components.push_back({w, c, c2, false});
  }
  reindex += (C - affected_count - cX) * (std::log2(Cp) - std::log2(C));
  report.reindex_bits = reindex;
  report.delta_bits = report.recovered_bits + reindex - lexicon.overhead_bits;
  return report;
}

namespace {

void apply_addition(Lexicon& lex, const Candidate& cand, double cX,
                    const std::map<WordId, double>& usage) {
  std::vector<double> counts = current_counts(lex);
  std::map<WordId, double> rep_usage;
  for (WordId m : cand.rep) rep_usage[m] += 1.0;
  for (const auto& [w, u] : usage)
    counts[w] = clamp_count(lex, w, counts[w] - cX * u);
  for (const auto& [w, r] : rep_usage) counts[w] += r;
  WordId id = lex.add_word(cand.surface, cand.rep, cX, cand.rep.size() == 1);
  counts.resize(lex.id_limit(), 0.0);
  counts[id] = cX;
  lex.renormalize(counts);
}

// Deletes id, redistributing its counts onto its expected components and
// re-deriving the representations that referenced it.  Variants of a deleted
// word whose surface cannot be re-derived are deleted along with it.
void apply_deletion(Lexicon& lex, WordId id, std::vector<WordId>& deleted) {
  const Word& word = lex.word(id);
  double cX = word.count;
  std::map<WordId, double> usage;
  try {
    usage = expected_components(lex, word.surface, id);
  } catch (const DataError&) {
    usage.clear();  // nothing to redistribute onto
  }

  std::vector<double> counts = current_counts(lex);
  for (const auto& [w, u] : usage)
    counts[w] = clamp_count(lex, w, counts[w] + u * (cX - 1.0));
  counts[id] = 0.0;

  // re-derive representations that mention id before it disappears
  std::vector<WordId> cascade;
  for (WordId other : lex.nonterminal_ids()) {
    if (other == id) continue;
    const Word& w = lex.word(other);
    if (std::find(w.rep.begin(), w.rep.end(), id) == w.rep.end()) continue;
    bool ok = false;
    if (w.surface.size() >= 2) {
      try {
        Segmentation seg = viterbi_parse(lex, w.surface,
                                         static_cast<int>(w.surface.size()), id);
        std::vector<WordId> rep;
        for (const SegNode& nd : seg.words) rep.push_back(nd.word);
        if (rep.size() >= 2) {
          lex.set_rep(other, std::move(rep));
          ok = true;
        }
      } catch (const DataError&) {
      }
    }
    if (!ok) cascade.push_back(other);
  }

  lex.renormalize(counts);
  for (WordId victim : cascade) apply_deletion(lex, victim, deleted);
  lex.remove_word(id);
  deleted.push_back(id);
  // renormalize again only if the cascade changed counts under us
  std::vector<double> final_counts = current_counts(lex);
  lex.renormalize(final_counts);
}

std::vector<std::vector<WordId>> viterbi_streams(
    const Lexicon& lex, const std::vector<Utterance>& utts, const TrainOptions& opt,
    std::map<WordId, std::map<std::vector<TermId>, int>>* observed) {
  std::vector<std::vector<WordId>> streams(utts.size());
  std::vector<std::vector<std::pair<WordId, std::vector<TermId>>>> spans_per_utt(
      observed ? utts.size() : 0);
  parallel_chunks(utts.size(), opt.threads,
                  [&](std::size_t begin, std::size_t end, int) {
                    for (std::size_t i = begin; i < end; ++i) {
                      Segmentation seg;
                      if (opt.channel) {
                        seg = noisy_viterbi(lex, utts[i].terminals, *opt.channel,
                                            opt.prune_budget,
                                            observed ? &spans_per_utt[i] : nullptr);
                      } else {
                        seg = viterbi_parse(lex, utts[i].terminals);
                      }
                      for (const SegNode& nd : seg.words)
                        streams[i].push_back(nd.word);
                    }
                  });
  if (observed)
    for (const auto& spans : spans_per_utt)
      for (const auto& [w, phones] : spans) (*observed)[w][phones] += 1;
  // dictionary representations contribute their Viterbi analyses as well
  for (WordId id : lex.nonterminal_ids()) {
    const Word& w = lex.word(id);
    if (w.variant) continue;
    Segmentation seg =
        viterbi_parse(lex, w.surface, static_cast<int>(w.surface.size()), id);
    std::vector<WordId> toks;
    for (const SegNode& nd : seg.words) toks.push_back(nd.word);
    streams.push_back(std::move(toks));
  }
  return streams;
}

}  // namespace

std::optional<WordId> merge_surface_variant(Lexicon& lexicon, WordId word_id,
                                            const std::vector<TermId>& observed_surface,
                                            int support_count,
                                            const TrainOptions& options) {
  if (support_count < options.merge_min_support) return std::nullopt;
  const Word& w = lexicon.word(word_id);
  if (observed_surface.empty() || observed_surface == w.surface) return std::nullopt;
  if (lexicon.find_surface(observed_surface) >= 0) return std::nullopt;

  Candidate cand{observed_surface, {word_id}, static_cast<double>(support_count)};
  DeltaReport report = score_addition(lexicon, cand, options.new_word_discount);
  if (!(report.delta_bits < 0.0)) return std::nullopt;
  std::map<WordId, double> usage;
  try {
    usage = expected_components(lexicon, cand.surface);
  } catch (const DataError&) {
    return std::nullopt;
  }
  double cX = cand.est_count * options.new_word_discount;
  apply_addition(lexicon, cand, cX, usage);
  return lexicon.find_surface(observed_surface);
}

DescriptionLength true_description_length(const Lexicon& lexicon,
                                          const std::vector<Utterance>& utterances,
                                          const TrainOptions& options) {
  std::vector<double> costs =
      options.channel
          ? noisy_viterbi_costs(lexicon, utterances, *options.channel,
                                options.prune_budget, options.threads)
          : viterbi_costs(lexicon, utterances, options.threads);
  return description_length(lexicon, costs);
}

OuterResult apply_moves(Lexicon& lexicon, const std::vector<Utterance>& utterances,
                        const TrainOptions& options) {
  OuterResult result;

  // stage 1: estimate word probabilities
  run_em(lexicon, utterances, options);

  // stage 2: batched additions
  std::map<WordId, std::map<std::vector<TermId>, int>> observed;
  std::vector<std::vector<WordId>> streams = viterbi_streams(
      lexicon, utterances, options, options.channel ? &observed : nullptr);
  std::vector<Candidate> cands =
      propose_candidates(lexicon, streams, options.candidate_cap);

  struct Scored {
    const Candidate* cand;
    double delta;
  };
  std::vector<Scored> accepted;
  std::vector<std::map<WordId, double>> usages(cands.size());
  for (std::size_t i = 0; i < cands.size(); ++i) {
    DeltaReport rep = score_addition(lexicon, cands[i], options.new_word_discount);
    if (rep.delta_bits < 0.0) {
      try {
        usages[i] = expected_components(lexicon, cands[i].surface);
      } catch (const DataError&) {
        continue;
      }
      accepted.push_back({&cands[i], rep.delta_bits});
    }
  }
  std::stable_sort(accepted.begin(), accepted.end(), [](const Scored& a, const Scored& b) {
    if (a.delta != b.delta) return a.delta < b.delta;
    return a.cand->surface < b.cand->surface;
  });

  std::set<WordId> added_this_pass;
  for (const Scored& s : accepted) {
    if (lexicon.find_surface(s.cand->surface) >= 0) continue;  // first wins
    double before = 0.0;
    if (options.audit)
      before = true_description_length(lexicon, utterances, options).total_bits;
    apply_addition(lexicon, *s.cand,
                   s.cand->est_count * options.new_word_discount,
                   usages[s.cand - cands.data()]);
    added_this_pass.insert(lexicon.find_surface(s.cand->surface));
    ++result.words_added;
    if (options.audit) {
      double after = true_description_length(lexicon, utterances, options).total_bits;
      result.audit.push_back({"add", render(lexicon.alphabet(), s.cand->surface),
                              s.delta, before, after});
    }
  }

  // surface-variant merges ride along with the addition stage
  if (options.channel) {
    for (const auto& [wid, variants] : observed) {
      if (!lexicon.alive(wid)) continue;
      int total = 0;
      const std::vector<TermId>* dominant = nullptr;
      int dom_count = 0;
      for (const auto& [phones, cnt] : variants) {
        total += cnt;
        if (cnt > dom_count) {
          dom_count = cnt;
          dominant = &phones;
        }
      }
      if (!dominant || 2 * dom_count <= total) continue;  // not the usual realization
      double before = 0.0;
      if (options.audit)
        before = true_description_length(lexicon, utterances, options).total_bits;
      auto added = merge_surface_variant(lexicon, wid, *dominant, dom_count, options);
      if (added) {
        added_this_pass.insert(*added);
        ++result.merges;
        ++result.words_added;
        if (options.audit) {
          double after = true_description_length(lexicon, utterances, options).total_bits;
          result.audit.push_back({"merge", render(lexicon.alphabet(), *dominant), 0.0,
                                  before, after});
        }
      }
    }
  }

  // stage 3: re-estimate with the new words in place
  run_em(lexicon, utterances, options);

  // stage 4: deletions, re-scored after each removal.  Words adopted this
  // pass are not deletion candidates until the next estimation round, so an
  // add is never undone in the same pass.
  std::map<WordId, double> original_cost;
  for (WordId id : lexicon.nonterminal_ids()) original_cost[id] = lexicon.word_cost(id);
  while (true) {
    WordId best = -1;
    double best_delta = 0.0;
    for (WordId id : lexicon.nonterminal_ids()) {
      if (added_this_pass.count(id)) continue;
      auto orig = original_cost.find(id);
      if (orig != original_cost.end() &&
          lexicon.word_cost(id) > options.deletion_guard * orig->second + 1e-12)
        continue;  // its representation just got much more expensive
      DeltaReport rep = score_deletion(lexicon, id);
      if (rep.delta_bits < best_delta) {
        best_delta = rep.delta_bits;
        best = id;
      }
    }
    if (best < 0) break;
    double before = 0.0;
    std::string surface = render(lexicon.alphabet(), lexicon.word(best).surface);
    if (options.audit)
      before = true_description_length(lexicon, utterances, options).total_bits;
    std::vector<WordId> deleted;
    apply_deletion(lexicon, best, deleted);
    result.words_deleted += static_cast<int>(deleted.size());
    if (options.audit) {
      double after = true_description_length(lexicon, utterances, options).total_bits;
      result.audit.push_back({"delete", surface, best_delta, before, after});
    }
  }

  result.converged = result.words_added == 0 && result.words_deleted == 0;
  result.dl = true_description_length(lexicon, utterances, options);
  return result;
}

TrainResult train(Lexicon& lexicon, const std::vector<Utterance>& utterances,
                  const TrainOptions& options) {
  TrainResult result;
  // baseline row: terminal-only model after one estimation pass
  run_em(lexicon, utterances, options);
  DescriptionLength dl = true_description_length(lexicon, utterances, options);
  result.trace.push_back({0, dl.input_bits, dl.dictionary_bits, dl.total_bits, 0, 0,
                          lexicon.live_count()});
  for (int outer = 1; outer <= options.max_outer; ++outer) {
    OuterResult r = apply_moves(lexicon, utterances, options);
    result.trace.push_back({outer, r.dl.input_bits, r.dl.dictionary_bits,
                            r.dl.total_bits, r.words_added, r.words_deleted,
                            lexicon.live_count()});
    result.audit.insert(result.audit.end(), r.audit.begin(), r.audit.end());
    if (r.converged) {
      result.converged = true;
      break;
    }
  }
  return result;
}

std::string trace_to_tsv(const std::vector<TraceRow>& rows) {
  std::ostringstream out;
  out << "iteration\tinput_bits\tdictionary_bits\ttotal_bits\twords_added\t"
         "words_deleted\tlexicon_size\n";
  out.precision(6);
  out << std::fixed;
  for (const TraceRow& r : rows)
    out << r.iteration << '\t' << r.input_bits << '\t' << r.dictionary_bits << '\t'
        << r.total_bits << '\t' << r.words_added << '\t' << r.words_deleted << '\t'
        << r.lexicon_size << '\n';
  return out.str();
}

}  // namespace lexmdl
