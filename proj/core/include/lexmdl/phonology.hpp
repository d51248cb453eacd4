#ifndef LEXMDL_PHONOLOGY_HPP
#define LEXMDL_PHONOLOGY_HPP

#include <array>
#include <map>
#include <string>
#include <vector>

#include "lexmdl/common.hpp"

namespace lexmdl {

using PhoneId = int;
constexpr PhoneId kNoPhone = -1;  // sentinel: no previous phone / no next phoneme

// Articulatory features in chart order.  Applicability of a feature may
// depend on the values of earlier features only.
enum Feature : int {
  kConsonantal = 0,
  kContinuant,
  kSonority,
  kArticulator,
  kAnterior,
  kDistributed,
  kNasality,
  kVoicing,
  kReduced,
  kHigh,
  kBack,
  kLow,
  kRound,
  kAtr,
  kFeatureCount
};

struct FeatureDef {
  std::string name;
  std::vector<std::string> values;
  double mu;   // mapping noise
  int alpha;   // 1 if the feature assimilates from context
};

// Feature-value assignment for one phoneme/phone; -1 where the feature is
// not defined in this segment's applicability context.
struct PhonemeBundle {
  std::array<std::int8_t, kFeatureCount> value;

  PhonemeBundle() { value.fill(-1); }
  bool defined(int f) const { return value[f] >= 0; }
  bool operator==(const PhonemeBundle& o) const { return value == o.value; }
};

struct PhoneSymbol {
  std::string name;     // ASCII mnemonic, e.g. "dh"
  std::string example;  // pronunciation hint, e.g. "then"
  PhonemeBundle bundle;
};

// The built-in phoneme/phone inventory.  Phones and phonemes share it.
class Inventory {
 public:
  static const Inventory& instance();

  int size() const { return static_cast<int>(symbols_.size()); }
  const PhoneSymbol& symbol(PhoneId p) const { return symbols_[p]; }
  const std::vector<PhoneSymbol>& symbols() const { return symbols_; }
  const std::vector<FeatureDef>& features() const { return features_; }

  // -1 if the mnemonic (or a registered alias) is unknown.
  PhoneId find(const std::string& name) const;

  // True if feature f is defined given the earlier feature values in b.
  static bool applicable(const PhonemeBundle& b, int f);

  int value_count(int f) const { return static_cast<int>(features_[f].values.size()); }
  int value_index(int f, const std::string& v) const;

  std::string describe(PhoneId p) const;  // "C,stop,lab,-n,-v" style

 private:
  Inventory();
  std::vector<FeatureDef> features_;
  std::vector<PhoneSymbol> symbols_;
  std::map<std::string, PhoneId> by_name_;  // includes aliases
};

// Transducer constants and per-feature weights (Figure 2 caption and
// Appendix A defaults).
struct ChannelParams {
  double c_insert = 0.05;
  double c_map = 0.05;
  double c_delete_cap = 0.9;
  double beta_u = 1.0;   // not given in the source text; underlying value dominates
  double beta_q = 0.15;
  double beta_n = 0.15;
  std::array<double, kFeatureCount> mu;  // defaults from the feature chart
  // When set, the copy distribution's final assimilation term compares the
  // surface value against the previous phone instead of the next phoneme.
  bool strict_appendix_a = false;

  ChannelParams();
  void validate() const;  // c_insert, c_map < 1 (else generation never halts)

  static ChannelParams noiseless();  // channel degenerates to the identity
};

// Precomputed p_I / p_M / p_C tables over the realized inventory.  Each is a
// per-feature product renormalized over the inventory so the emitted-phone
// distributions sum to one.
class PhoneModel {
 public:
  PhoneModel(const Inventory& inv, const ChannelParams& params);

  const Inventory& inventory() const { return *inv_; }
  const ChannelParams& params() const { return params_; }

  double p_insert(PhoneId s) const { return insert_[s]; }
  double p_map(PhoneId s, PhoneId q, PhoneId u) const {
    return map_[map_ctx(q, u) * n_ + s];
  }
  double p_copy(PhoneId s, PhoneId q, PhoneId u, PhoneId n) const {
    return copy_[copy_ctx(q, u, n) * n_ + s];
  }
  // min(c_D, p_C(q|q,u,n) + p_C(n|q,u,n)); sentinel arguments contribute 0.
  double p_delete(PhoneId q, PhoneId u, PhoneId n) const;

  // Per-feature conditionals, exposed for audit.  Value arguments are value
  // indices; -1 for an inapplicable/missing context value.
  double feature_insert(int f, int sv) const;
  double feature_map(int f, int sv, int qv, int uv) const;
  double feature_copy(int f, int sv, int qv, int uv, int nv) const;

  double max_copy() const { return max_copy_; }
  double max_map() const { return max_map_; }
  double max_insert() const { return max_insert_; }

 private:
  std::size_t map_ctx(PhoneId q, PhoneId u) const {
    return static_cast<std::size_t>(q + 1) * n_ + u;
  }
  std::size_t copy_ctx(PhoneId q, PhoneId u, PhoneId n) const {
    return (static_cast<std::size_t>(q + 1) * n_ + u) * (n_ + 1) + (n + 1);
  }
  double raw_product(PhoneId s, PhoneId q, PhoneId u, PhoneId n, bool with_n) const;

  const Inventory* inv_;
  ChannelParams params_;
  int n_;  // inventory size
  std::vector<double> insert_;
  std::vector<double> map_;   // [(q+1)*n + u][s]
  std::vector<double> copy_;  // [((q+1)*n + u)*(n+1) + (n+1)][s]
  double max_copy_ = 0, max_map_ = 0, max_insert_ = 0;
};

}  // namespace lexmdl

#endif  // LEXMDL_PHONOLOGY_HPP
