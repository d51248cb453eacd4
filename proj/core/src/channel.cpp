#include "lexmdl/channel.hpp"

#include <algorithm>
#include <array>
#include <climits>
#include <cmath>

#include "lexmdl/threading.hpp"

namespace lexmdl {

namespace {

constexpr int kStartIdx = 0, kInsertedIdx = 1, kMappedIdx = 2;

struct Coefs {
  double c_i, c_m;
  explicit Coefs(const ChannelParams& p) : c_i(p.c_insert), c_m(p.c_map) {}
  double insert() const { return c_i; }
  double map(int st) const { return st == kStartIdx ? (1 - c_i) * c_m : c_m; }
  // delete is unavailable from the mapped state
  double del(int st, double d) const {
    if (st == kStartIdx) return (1 - c_i) * (1 - c_m) * d;
    if (st == kInsertedIdx) return (1 - c_m) * d;
    return 0.0;
  }
  double copy(int st, double d) const {
    if (st == kStartIdx) return (1 - c_i) * (1 - c_m) * (1 - d);
    if (st == kInsertedIdx) return (1 - c_m) * (1 - d);
    return 1 - c_m;
  }
};

}  // namespace

std::vector<StepOption> step_distribution(const PhoneModel& model,
                                          const TransducerState& state,
                                          std::span<const PhoneId> underlying,
                                          PhoneId next_after_end) {
  std::vector<StepOption> out;
  const int m = static_cast<int>(underlying.size());
  if (state.read_pos >= m) return out;  // generation complete
  const PhoneId u = underlying[state.read_pos];
  const PhoneId n = state.read_pos + 1 < m ? underlying[state.read_pos + 1] : next_after_end;
  const PhoneId q = state.last_phone;
  const Coefs cf(model.params());
  const int st = static_cast<int>(state.tag);
  const int phones = model.inventory().size();
  const double d = model.p_delete(q, u, n);

  if (state.tag == TState::kStart) {
    for (PhoneId s = 0; s < phones; ++s) {
      double p = cf.insert() * model.p_insert(s);
      if (p > 0)
        out.push_back({StepOption::kInsert, s,
                       {TState::kInserted, state.read_pos, s}, p});
    }
  }
  for (PhoneId s = 0; s < phones; ++s) {
    double p = cf.map(st) * model.p_map(s, q, u);
    if (p > 0)
      out.push_back({StepOption::kMap, s, {TState::kMapped, state.read_pos, s}, p});
  }
  if (state.tag != TState::kMapped) {
    double p = cf.del(st, d);
    if (p > 0)
      out.push_back({StepOption::kDelete, kNoPhone,
                     {TState::kStart, state.read_pos + 1, q}, p});
  }
  for (PhoneId s = 0; s < phones; ++s) {
    double p = cf.copy(st, d) * model.p_copy(s, q, u, n);
    if (p > 0)
      out.push_back({StepOption::kCopy, s, {TState::kStart, state.read_pos + 1, s}, p});
  }
  return out;
}

namespace {

// Forward DP over (consumed phonemes, emitted phones, state).  Layer j holds
// the distribution after consuming j phonemes; in-layer moves (insert, map)
// emit without consuming.  The caller supplies what follows the sequence so
// the last phoneme's copy/delete context is exact.
struct LayerDp {
  int width;  // emitted phones considered, inclusive
  std::vector<std::array<double, 3>> cur, nxt;

  explicit LayerDp(int w) : width(w), cur(w + 1), nxt(w + 1) {
    for (auto& a : cur) a = {0, 0, 0};
    for (auto& a : nxt) a = {0, 0, 0};
    cur[0][kStartIdx] = 1.0;
  }

  // in-layer + cross-layer transitions for phoneme u with successor n
  void advance(const PhoneModel& model, const Coefs& cf,
               std::span<const PhoneId> phi, PhoneId prev, PhoneId u, PhoneId n) {
    in_layer(model, cf, phi, prev, u);
    const int c = std::min<int>(width, static_cast<int>(phi.size()));
    for (int i = 0; i <= c; ++i) {
      PhoneId q = i > 0 ? phi[i - 1] : prev;
      double d = model.p_delete(q, u, n);
      double dmass = cf.del(kStartIdx, d) * cur[i][kStartIdx] +
                     cf.del(kInsertedIdx, d) * cur[i][kInsertedIdx];
      nxt[i][kStartIdx] += dmass;
      if (i < c) {
        double cmass = cf.copy(kStartIdx, d) * cur[i][kStartIdx] +
                       cf.copy(kInsertedIdx, d) * cur[i][kInsertedIdx] +
                       cf.copy(kMappedIdx, d) * cur[i][kMappedIdx];
        nxt[i + 1][kStartIdx] += cmass * model.p_copy(phi[i], q, u, n);
      }
    }
    std::swap(cur, nxt);
    for (auto& a : nxt) a = {0, 0, 0};
  }

  // only the insert/map moves of the current layer (used before boundary-
  // dependent exits)
  void in_layer(const PhoneModel& model, const Coefs& cf,
                std::span<const PhoneId> phi, PhoneId prev, PhoneId u) {
    const int c = std::min<int>(width, static_cast<int>(phi.size()));
    for (int i = 0; i < c; ++i) {
      PhoneId q = i > 0 ? phi[i - 1] : prev;
      PhoneId s = phi[i];
      cur[i + 1][kInsertedIdx] += cur[i][kStartIdx] * cf.insert() * model.p_insert(s);
      double mmass = cf.map(kStartIdx) * cur[i][kStartIdx] +
                     cf.map(kInsertedIdx) * cur[i][kInsertedIdx] +
                     cf.map(kMappedIdx) * cur[i][kMappedIdx];
      cur[i + 1][kMappedIdx] += mmass * model.p_map(s, q, u);
    }
  }
};

}  // namespace

double phi_given_pi(const PhoneModel& model, std::span<const PhoneId> pi,
                    std::span<const PhoneId> phi, PhoneId prev_phone,
                    PhoneId next_after_end) {
  if (pi.empty()) throw DataError("phi_given_pi: empty phoneme sequence");
  const int m = static_cast<int>(pi.size());
  const int n = static_cast<int>(phi.size());
  const Coefs cf(model.params());
  LayerDp dp(n);
  for (int j = 0; j < m; ++j)
    dp.advance(model, cf, phi, prev_phone, pi[j],
               j + 1 < m ? pi[j + 1] : next_after_end);
  return dp.cur[n][kStartIdx];
}

Alignment best_alignment(const PhoneModel& model, std::span<const PhoneId> pi,
                         std::span<const PhoneId> phi) {
  if (pi.empty()) throw DataError("best_alignment: empty phoneme sequence");
  const int m = static_cast<int>(pi.size());
  const int n = static_cast<int>(phi.size());
  const Coefs cf(model.params());
  const auto& inv = model.inventory();

  // best[(j*(n+1)+i)*3+st]
  auto idx = [&](int j, int i, int st) { return (j * (n + 1) + i) * 3 + st; };
  std::vector<double> best((m + 1) * (n + 1) * 3, 0.0);
  struct Back {
    int j = -1, i = -1, st = -1;
    StepOption::Action act = StepOption::kCopy;
  };
  std::vector<Back> back(best.size());
  best[idx(0, 0, kStartIdx)] = 1.0;

  auto relax = [&](int j, int i, int st, double val, int pj, int pi_, int pst,
                   StepOption::Action act) {
    if (val > best[idx(j, i, st)]) {
      best[idx(j, i, st)] = val;
      back[idx(j, i, st)] = {pj, pi_, pst, act};
    }
  };

  for (int j = 0; j < m; ++j) {
    PhoneId u = pi[j];
    PhoneId nj = j + 1 < m ? pi[j + 1] : kNoPhone;
    for (int i = 0; i <= n; ++i) {
      PhoneId q = i > 0 ? phi[i - 1] : kNoPhone;
      double d = model.p_delete(q, u, nj);
      for (int st = 0; st < 3; ++st) {
        double v = best[idx(j, i, st)];
        if (v <= 0) continue;
        if (i < n) {
          if (st == kStartIdx)
            relax(j, i + 1, kInsertedIdx, v * cf.insert() * model.p_insert(phi[i]),
                  j, i, st, StepOption::kInsert);
          relax(j, i + 1, kMappedIdx, v * cf.map(st) * model.p_map(phi[i], q, u),
                j, i, st, StepOption::kMap);
          relax(j + 1, i + 1, kStartIdx,
                v * cf.copy(st, d) * model.p_copy(phi[i], q, u, nj), j, i, st,
                StepOption::kCopy);
        }
        if (st != kMappedIdx)
          relax(j + 1, i, kStartIdx, v * cf.del(st, d), j, i, st,
                StepOption::kDelete);
      }
    }
  }

  Alignment out;
  double p = best[idx(m, n, kStartIdx)];
  if (p <= 0.0) return out;
  out.log2_prob = std::log2(p);
  int j = m, i = n, st = kStartIdx;
  std::vector<std::string> rev;
  while (j != 0 || i != 0 || st != kStartIdx) {
    const Back& b = back[idx(j, i, st)];
    std::string line;
    switch (b.act) {
      case StepOption::kInsert:
        line = "insert " + inv.symbol(phi[i - 1]).name;
        break;
      case StepOption::kMap:
        line = "map " + inv.symbol(pi[b.j]).name + " -> " + inv.symbol(phi[i - 1]).name;
        break;
      case StepOption::kDelete:
        line = "delete " + inv.symbol(pi[b.j]).name;
        break;
      case StepOption::kCopy:
        line = "copy " + inv.symbol(pi[b.j]).name + " -> " + inv.symbol(phi[i - 1]).name;
        break;
    }
    rev.push_back(line);
    j = b.j;
    i = b.i;
    st = b.st;
  }
  out.actions.assign(rev.rbegin(), rev.rend());
  return out;
}

std::optional<std::vector<PhoneId>> sample_phones(
    const PhoneModel& model, std::span<const PhoneId> pi, Rng& rng,
    int max_output, const std::vector<int>* boundaries,
    std::vector<int>* boundaries_out) {
  const Coefs cf(model.params());
  const int m = static_cast<int>(pi.size());
  const int phones = model.inventory().size();
  std::vector<PhoneId> out;
  std::vector<int> out_at_read(m + 1, 0);

  auto draw_phone = [&](auto prob_of) -> PhoneId {
    double r = rng.uniform_real();
    double acc = 0.0;
    for (PhoneId s = 0; s < phones; ++s) {
      acc += prob_of(s);
      if (r < acc) return s;
    }
    return phones - 1;
  };

  int j = 0, st = kStartIdx;
  PhoneId q = kNoPhone;
  while (j < m) {
    if (static_cast<int>(out.size()) > max_output) return std::nullopt;
    PhoneId u = pi[j];
    PhoneId n = j + 1 < m ? pi[j + 1] : kNoPhone;
    double d = model.p_delete(q, u, n);
    double r = rng.uniform_real();
    double p_ins = st == kStartIdx ? cf.insert() : 0.0;
    double p_map = cf.map(st);
    double p_del = cf.del(st, d);
    if (r < p_ins) {
      q = draw_phone([&](PhoneId s) { return model.p_insert(s); });
      out.push_back(q);
      st = kInsertedIdx;
    } else if (r < p_ins + p_map) {
      q = draw_phone([&](PhoneId s) { return model.p_map(s, q, u); });
      out.push_back(q);
      st = kMappedIdx;
    } else if (st != kMappedIdx && r < p_ins + p_map + p_del) {
      ++j;
      st = kStartIdx;
      out_at_read[j] = static_cast<int>(out.size());
    } else {
      q = draw_phone([&](PhoneId s) { return model.p_copy(s, q, u, n); });
      out.push_back(q);
      ++j;
      st = kStartIdx;
      out_at_read[j] = static_cast<int>(out.size());
    }
  }

  if (boundaries && boundaries_out) {
    boundaries_out->clear();
    for (int b : *boundaries) {
      int mapped = out_at_read[b];
      if (boundaries_out->empty() || mapped > boundaries_out->back())
        boundaries_out->push_back(mapped);
    }
    // a fully deleted final word can leave the last boundary short
    if (boundaries_out->empty() || boundaries_out->back() != static_cast<int>(out.size()))
      boundaries_out->push_back(static_cast<int>(out.size()));
    if (boundaries_out->size() < 2) *boundaries_out = {0, static_cast<int>(out.size())};
  }
  return out;
}

namespace {

// Upper bounds on span scores from per-step maxima; B[m][c] bounds the
// probability of consuming m phonemes while emitting c phones.
struct BoundTable {
  double bd, bc, bim;
  std::vector<std::vector<double>> rows;  // rows[m][c]

  BoundTable(const PhoneModel& model) {
    const ChannelParams& p = model.params();
    bd = (1 - p.c_map) * std::min(p.c_delete_cap, 2.0 * model.max_copy());
    bc = (1 - p.c_map) * model.max_copy();
    bim = std::max(p.c_insert * model.max_insert(), p.c_map * model.max_map());
  }

  const std::vector<double>& row(int m, int c_max) {
    if (static_cast<int>(rows.size()) <= m) rows.resize(m + 1);
    auto& r = rows[m];
    if (static_cast<int>(r.size()) > c_max) return r;
    // rebuild the whole prefix [0..m] up to c_max
    std::vector<std::vector<double>> b(m + 1, std::vector<double>(c_max + 1, 0.0));
    b[0][0] = 1.0;
    for (int c = 1; c <= c_max; ++c) b[0][c] = b[0][c - 1] * bim;
    for (int j = 1; j <= m; ++j) {
      for (int c = 0; c <= c_max; ++c) {
        double v = b[j - 1][c] * bd;
        if (c > 0) {
          v = std::max(v, b[j - 1][c - 1] * bc);
          v = std::max(v, b[j][c - 1] * bim);
        }
        b[j][c] = v;
      }
    }
    for (int j = 0; j <= m; ++j) {
      if (static_cast<int>(rows.size()) <= j) rows.resize(j + 1);
      rows[j] = b[j];
    }
    return rows[m];
  }
};

struct NoisyEdge {
  int begin, end;
  WordId word;
  std::size_t row;  // offset into the score pool, (F+1) doubles, slot 0 = sentinel
};

struct ScaledRow {
  std::vector<double> v;
  int exp = 0;
  bool zero = true;

  explicit ScaledRow(int slots) : v(slots, 0.0) {}

  void add(int slot, double val, int val_exp) {
    if (val <= 0.0) return;
    if (zero) {
      exp = val_exp;
      zero = false;
    }
    if (val_exp > exp) {
      double scale = std::exp2(static_cast<double>(exp - val_exp));
      for (double& x : v) x *= scale;
      exp = val_exp;
    } else if (val_exp < exp) {
      val = std::ldexp(val, val_exp - exp);
    }
    v[slot] += val;
  }

  void normalize() {
    double mx = 0.0;
    for (double x : v) mx = std::max(mx, x);
    if (mx <= 0.0) {
      zero = true;
      return;
    }
    int e;
    std::frexp(mx, &e);
    if (e != 0) {
      for (double& x : v) x = std::ldexp(x, -e);
      exp += e;
    }
  }

  double log2_slot(int slot) const {
    return v[slot] > 0.0 ? std::log2(v[slot]) + exp : kNegInf;
  }
  double log2_sum() const {
    double s = 0.0;
    for (double x : v) s += x;
    return s > 0.0 ? std::log2(s) + exp : kNegInf;
  }
};

struct LatticeBuild {
  std::vector<NoisyEdge> edges;
  std::vector<double> pool;
  std::vector<std::pair<std::size_t, std::size_t>> by_start;  // edge ranges per k
  std::size_t considered = 0, pruned = 0;
};

// Edge generation with best-first candidate expansion per start position.
LatticeBuild build_edges(const Lexicon& lexicon, std::span<const TermId> phi,
                         const PhoneModel& model, double prune_budget) {
  const int T = static_cast<int>(phi.size());
  const int slots = model.inventory().size() + 1;
  const Coefs cf(model.params());
  BoundTable bounds(model);

  struct Cand {
    WordId id;
    double p;
    double ub;
    int m;
  };
  std::vector<Cand> cands;
  for (WordId id : lexicon.live_ids()) {
    const Word& w = lexicon.word(id);
    if (w.code_len == kInfBits) continue;
    double p = std::exp2(-w.code_len);
    int m = static_cast<int>(w.surface.size());
    const auto& brow = bounds.row(m, std::min(T, m + 48));
    double bmax = 0.0;
    for (double b : brow) bmax = std::max(bmax, b);
    cands.push_back({id, p, p * bmax, m});
  }
  std::stable_sort(cands.begin(), cands.end(),
                   [](const Cand& a, const Cand& b) { return a.ub > b.ub; });

  // band of span widths per surface length, relative to the row maximum
  std::vector<std::pair<int, int>> band_of_m;
  auto band = [&](int m) {
    if (static_cast<int>(band_of_m.size()) <= m)
      band_of_m.resize(m + 1, {-1, -1});
    if (band_of_m[m].first >= 0) return band_of_m[m];
    int c_cap = std::min(T, m + 48);
    const auto& brow = bounds.row(m, c_cap);
    double bmax = 0.0;
    for (double b : brow) bmax = std::max(bmax, b);
    int lo = 1, hi = 0;
    if (prune_budget <= 0.0) {
      lo = 1;
      hi = T;
    } else {
      lo = -1;
      for (int c = 1; c < static_cast<int>(brow.size()); ++c) {
        if (brow[c] >= prune_budget * bmax) {
          if (lo < 0) lo = c;
          hi = c;
        }
      }
      if (lo < 0) lo = 1;
    }
    band_of_m[m] = {lo, hi};
    return band_of_m[m];
  };

  LatticeBuild out;
  out.by_start.assign(T, {0, 0});
  std::vector<double> scores;

  for (int k = 0; k < T; ++k) {
    std::size_t first_edge = out.edges.size();
    PhoneId prev = k > 0 ? phi[k - 1] : kNoPhone;
    double best_strength = 0.0;
    for (const Cand& cand : cands) {
      ++out.considered;
      if (prune_budget > 0.0 && cand.ub < prune_budget * best_strength) {
        // sorted by ub: everything after this is weaker
        out.pruned += cands.size() - (&cand - cands.data());
        break;
      }
      auto [lo, hi] = band(cand.m);
      hi = std::min(hi, T - k);
      if (lo > hi) continue;

      const Word& w = lexicon.word(cand.id);
      auto window = phi.subspan(k, hi);

      // DP through all layers but the last, then boundary-keyed exits
      LayerDp dp(hi);
      for (int j = 0; j + 1 < cand.m; ++j)
        dp.advance(model, cf, window, prev, w.surface[j], w.surface[j + 1]);
      dp.in_layer(model, cf, window, prev, w.surface[cand.m - 1]);

      scores.assign(static_cast<std::size_t>(hi + 1) * slots, 0.0);
      PhoneId u = w.surface[cand.m - 1];
      for (int i = 0; i <= hi; ++i) {
        double a0 = dp.cur[i][kStartIdx], a1 = dp.cur[i][kInsertedIdx],
               a2 = dp.cur[i][kMappedIdx];
        if (a0 <= 0 && a1 <= 0 && a2 <= 0) continue;
        PhoneId q = i > 0 ? window[i - 1] : prev;
        for (int slot = 0; slot < slots; ++slot) {
          PhoneId f = slot - 1;
          double d = model.p_delete(q, u, f);
          double del_mass = cf.del(kStartIdx, d) * a0 + cf.del(kInsertedIdx, d) * a1;
          if (del_mass > 0) scores[static_cast<std::size_t>(i) * slots + slot] += del_mass;
          if (i < hi) {
            double cmass = cf.copy(kStartIdx, d) * a0 + cf.copy(kInsertedIdx, d) * a1 +
                           cf.copy(kMappedIdx, d) * a2;
            if (cmass > 0)
              scores[static_cast<std::size_t>(i + 1) * slots + slot] +=
                  cmass * model.p_copy(window[i], q, u, f);
          }
        }
      }

      for (int c = std::max(1, lo); c <= hi; ++c) {
        double mx = 0.0;
        for (int slot = 0; slot < slots; ++slot)
          mx = std::max(mx, scores[static_cast<std::size_t>(c) * slots + slot]);
        if (mx <= 0.0) continue;
        best_strength = std::max(best_strength, cand.p * mx);
        std::size_t row = out.pool.size();
        out.pool.resize(row + slots);
        for (int slot = 0; slot < slots; ++slot)
          out.pool[row + slot] =
              cand.p * scores[static_cast<std::size_t>(c) * slots + slot];
        out.edges.push_back({k, k + c, cand.id, row});
      }
    }
    out.by_start[k] = {first_edge, out.edges.size()};
  }
  return out;
}

}  // namespace

MatchLattice noisy_lattice(const Lexicon& lexicon, std::span<const TermId> phi,
                           const PhoneModel& model, double prune_budget) {
  if (phi.empty()) throw DataError("cannot parse an empty sequence");
  const int T = static_cast<int>(phi.size());
  const int slots = model.inventory().size() + 1;
  LatticeBuild built = build_edges(lexicon, phi, model, prune_budget);

  auto fail = [&]() -> DataError {
    return DataError(
        "noisy chart has no surviving path; retry with a larger prune budget");
  };

  // beta over (position, first phoneme of the word starting there);
  // slot 0 is the sentinel (no following word).
  std::vector<ScaledRow> beta(T + 1, ScaledRow(slots));
  beta[T].add(0, 1.0, 0);
  for (int k = T - 1; k >= 0; --k) {
    auto [b, e] = built.by_start[k];
    for (std::size_t ei = b; ei < e; ++ei) {
      const NoisyEdge& edge = built.edges[ei];
      const ScaledRow& nb = beta[edge.end];
      if (nb.zero) continue;
      double dot = 0.0;
      for (int slot = 0; slot < slots; ++slot)
        dot += built.pool[edge.row + slot] * nb.v[slot];
      if (dot <= 0.0) continue;
      int slot = lexicon.word(edge.word).surface[0] + 1;
      beta[k].add(slot, dot, nb.exp);
    }
    // beta[k] may be all-zero when no full parse puts a boundary at k
    beta[k].normalize();
  }

  std::vector<ScaledRow> alpha(T + 1, ScaledRow(slots));
  for (int slot = 0; slot < slots; ++slot) alpha[0].add(slot, 1.0, 0);
  for (int k = 0; k < T; ++k) {
    if (alpha[k].zero) continue;
    auto [b, e] = built.by_start[k];
    for (std::size_t ei = b; ei < e; ++ei) {
      const NoisyEdge& edge = built.edges[ei];
      int wslot = lexicon.word(edge.word).surface[0] + 1;
      double in = alpha[k].v[wslot];
      if (in <= 0.0) continue;
      for (int slot = 0; slot < slots; ++slot) {
        double v = in * built.pool[edge.row + slot];
        if (v > 0.0) alpha[edge.end].add(slot, v, alpha[k].exp);
      }
    }
    alpha[k + 1].normalize();
  }
  double log_total = alpha[T].log2_slot(0);
  if (log_total == kNegInf) throw fail();

  MatchLattice lattice;
  lattice.candidates_considered = built.considered;
  lattice.candidates_pruned = built.pruned;
  Chart& chart = lattice.chart;
  chart.log_total = log_total;
  chart.log_alpha.assign(T + 1, kNegInf);
  chart.log_beta.assign(T + 1, kNegInf);
  for (int k = 0; k <= T; ++k) {
    chart.log_alpha[k] = alpha[k].log2_slot(0);
    chart.log_beta[k] = beta[k].log2_sum();
  }

  for (const NoisyEdge& edge : built.edges) {
    int wslot = lexicon.word(edge.word).surface[0] + 1;
    if (alpha[edge.begin].zero || beta[edge.end].zero) continue;
    double la = alpha[edge.begin].log2_slot(wslot);
    if (la == kNegInf) continue;
    double dot = 0.0;
    for (int slot = 0; slot < slots; ++slot)
      dot += built.pool[edge.row + slot] * beta[edge.end].v[slot];
    if (dot <= 0.0) continue;
    double lp = la + std::log2(dot) + beta[edge.end].exp - log_total;
    chart.spans.push_back({edge.begin, edge.end, edge.word, std::exp2(lp)});
  }
  return lattice;
}

Chart noisy_chart(const Lexicon& lexicon, std::span<const TermId> phi,
                  const PhoneModel& model, double prune_budget) {
  return noisy_lattice(lexicon, phi, model, prune_budget).chart;
}

Segmentation noisy_viterbi(const Lexicon& lexicon, std::span<const TermId> phi,
                           const PhoneModel& model, double prune_budget,
                           std::vector<std::pair<WordId, std::vector<TermId>>>*
                               observed_out) {
  if (phi.empty()) throw DataError("cannot parse an empty sequence");
  const int T = static_cast<int>(phi.size());
  const int slots = model.inventory().size() + 1;
  LatticeBuild built = build_edges(lexicon, phi, model, prune_budget);

  // best[k][slot]: best suffix score when the word at k starts with the
  // slot's phoneme
  std::vector<std::vector<double>> best(T + 1, std::vector<double>(slots, kNegInf));
  struct Ptr {
    int end = -1;
    WordId word = -1;
    int next_slot = -1;
  };
  std::vector<std::vector<Ptr>> back(T + 1, std::vector<Ptr>(slots));
  best[T][0] = 0.0;

  for (int k = T - 1; k >= 0; --k) {
    auto [b, e] = built.by_start[k];
    for (std::size_t ei = b; ei < e; ++ei) {
      const NoisyEdge& edge = built.edges[ei];
      int wslot = lexicon.word(edge.word).surface[0] + 1;
      for (int slot = 0; slot < slots; ++slot) {
        double s = built.pool[edge.row + slot];
        if (s <= 0.0 || best[edge.end][slot] == kNegInf) continue;
        double v = std::log2(s) + best[edge.end][slot];
        Ptr& cur = back[k][wslot];
        // ties: longer span, then smaller word id, then smaller slot
        bool better = v > best[k][wslot];
        if (!better && v == best[k][wslot]) {
          better = edge.end > cur.end ||
                   (edge.end == cur.end &&
                    (edge.word < cur.word ||
                     (edge.word == cur.word && slot < cur.next_slot)));
        }
        if (better) {
          best[k][wslot] = v;
          cur = {edge.end, edge.word, slot};
        }
      }
    }
  }

  int slot0 = -1;
  double v0 = kNegInf;
  for (int slot = 0; slot < slots; ++slot)
    if (best[0][slot] > v0) {
      v0 = best[0][slot];
      slot0 = slot;
    }
  if (slot0 < 0 || v0 == kNegInf)
    throw DataError("noisy chart has no surviving path; retry with a larger prune budget");

  Segmentation seg;
  seg.log2_prob = v0;
  int k = 0, slot = slot0;
  while (k < T) {
    const Ptr& p = back[k][slot];
    seg.words.push_back(expand_word(lexicon, p.word, k, p.end));
    if (observed_out) {
      auto span = phi.subspan(k, p.end - k);
      observed_out->push_back({p.word, std::vector<TermId>(span.begin(), span.end())});
    }
    k = p.end;
    slot = p.next_slot;
  }
  return seg;
}

std::vector<double> accumulate_counts_noisy(const Lexicon& lexicon,
                                            const std::vector<Utterance>& utterances,
                                            const PhoneModel& model,
                                            double prune_budget, CountMode mode,
                                            int threads) {
  std::vector<double> counts(lexicon.id_limit(), 0.0);
  std::vector<std::vector<double>> partial(std::max(1, threads),
                                           std::vector<double>(counts.size(), 0.0));
  parallel_chunks(utterances.size(), threads,
                  [&](std::size_t begin, std::size_t end, int t) {
                    for (std::size_t i = begin; i < end; ++i) {
                      if (mode == CountMode::kComplete) {
                        Chart chart = noisy_chart(lexicon, utterances[i].terminals,
                                                  model, prune_budget);
                        for (const ChartSpan& s : chart.spans)
                          partial[t][s.word] += s.posterior;
                      } else {
                        Segmentation seg = noisy_viterbi(
                            lexicon, utterances[i].terminals, model, prune_budget);
                        for (const SegNode& nd : seg.words) partial[t][nd.word] += 1.0;
                      }
                    }
                  });
  for (const auto& p : partial)
    for (std::size_t i = 0; i < counts.size(); ++i) counts[i] += p[i];
  add_dictionary_counts(lexicon, mode, counts);
  return counts;
}

EmTrace em_iterate_noisy(Lexicon& lexicon, const std::vector<Utterance>& utterances,
                         const PhoneModel& model, double prune_budget, int iters,
                         CountMode mode, int threads) {
  if (iters < 1) throw DataError("em_iterate needs iters >= 1");
  EmTrace trace;
  for (int it = 0; it < iters; ++it) {
    // one chart per utterance per iteration: counts and likelihood together
    std::vector<double> per_utt(utterances.size(), 0.0);
    int used = std::max(1, threads);
    std::vector<std::vector<double>> partial(used,
                                             std::vector<double>(lexicon.id_limit(), 0.0));
    parallel_chunks(utterances.size(), threads,
                    [&](std::size_t begin, std::size_t end, int t) {
                      for (std::size_t i = begin; i < end; ++i) {
                        if (mode == CountMode::kComplete) {
                          Chart chart = noisy_chart(lexicon, utterances[i].terminals,
                                                    model, prune_budget);
                          per_utt[i] = chart.log_total;
                          for (const ChartSpan& s : chart.spans)
                            partial[t][s.word] += s.posterior;
                        } else {
                          Segmentation seg = noisy_viterbi(
                              lexicon, utterances[i].terminals, model, prune_budget);
                          per_utt[i] = seg.log2_prob;
                          for (const SegNode& nd : seg.words)
                            partial[t][nd.word] += 1.0;
                        }
                      }
                    });
    std::vector<double> counts(lexicon.id_limit(), 0.0);
    for (const auto& p : partial)
      for (std::size_t i = 0; i < counts.size(); ++i) counts[i] += p[i];
    add_dictionary_counts(lexicon, mode, counts);
    double input = 0.0;
    for (double v : per_utt) input += v;
    trace.input_log2.push_back(input);
    trace.combined_log2.push_back(input + dictionary_log2_likelihood(lexicon));
    lexicon.renormalize(counts);
    rederive_reps(lexicon);
  }
  return trace;
}

std::vector<double> noisy_viterbi_costs(const Lexicon& lexicon,
                                        const std::vector<Utterance>& utterances,
                                        const PhoneModel& model, double prune_budget,
                                        int threads) {
  std::vector<double> costs(utterances.size(), 0.0);
  parallel_chunks(utterances.size(), threads,
                  [&](std::size_t begin, std::size_t end, int) {
                    for (std::size_t i = begin; i < end; ++i)
                      costs[i] = -noisy_viterbi(lexicon, utterances[i].terminals,
                                                model, prune_budget)
                                      .log2_prob;
                  });
  return costs;
}

}  // namespace lexmdl
