#include "lexmdl/phonology.hpp"

#include <cmath>
#include <sstream>

namespace lexmdl {

namespace {

struct ChartRow {
  const char* name;
  const char* example;
  const char* features;
};

// Symbol chart.  The mnemonics are ASCII stand-ins for the source IPA
// glyphs; "u", "i" and "h" are accepted as aliases for uw/iy/hh.  The chart
// omits the sonority value for the glides w and y; it is filled in here
// since sonority is defined for all sonorants.
const ChartRow kChart[] = {
    {"b", "bee", "C,stop,lab,-n,-v"},
    {"p", "pea", "C,stop,lab,-n,+v"},
    {"d", "day", "C,stop,cor,-n,-v,+a,-d"},
    {"t", "tea", "C,stop,cor,-n,+v,+a,-d"},
    {"g", "gay", "C,stop,dors,-n,-v"},
    {"k", "key", "C,stop,dors,-n,+v"},
    {"jh", "joke", "C,fric,cor,-v,-a,-d"},
    {"ch", "choke", "C,fric,cor,+v,-a,-d"},
    {"s", "sea", "C,fric,cor,-v,+a,-d"},
    {"sh", "she", "C,fric,cor,-v,-a,+d"},
    {"z", "zone", "C,fric,cor,+v,+a,-d"},
    {"zh", "azure", "C,fric,cor,+v,-a,+d"},
    {"f", "fin", "C,fric,lab,-v"},
    {"v", "van", "C,fric,lab,+v"},
    {"th", "thin", "C,fric,cor,-v,+a,+d"},
    {"dh", "then", "C,fric,cor,+v,+a,+d"},
    {"m", "mom", "C,stop,lab,+n"},
    {"n", "noon", "C,stop,cor,+n,+a,-d"},
    {"ng", "sing", "C,stop,dors,+n"},
    {"l", "lay", "C,sonorant,lateral"},
    {"r", "ray", "C,sonorant,rhotic"},
    {"w", "way", "C,sonorant,glide,lab"},
    {"y", "yacht", "C,sonorant,glide,cor,+a,-d"},
    {"hh", "hay", "laryngeal,-v"},
    {"hv", "ahead", "laryngeal,+v"},
    {"ih", "bit", "V,full,+h,-l,-b,-r,-ATR"},
    {"iy", "beet", "V,full,+h,-l,-b,-r,+ATR"},
    {"uh", "book", "V,full,+h,-l,+b,+r,-ATR"},
    {"uw", "boot", "V,full,+h,-l,+b,+r,+ATR"},
    {"eh", "bet", "V,full,-h,-l,-b,-r,-ATR"},
    {"ey", "base", "V,full,-h,-l,-b,-r,+ATR"},
    {"ah", "but", "V,full,-h,-l,+b,-r"},
    {"ow", "bone", "V,full,-h,-l,+b,+r"},
    {"ae", "bat", "V,full,-h,+l,-b,-r"},
    {"aa", "bob", "V,full,-h,+l,+b,-r"},
    {"ao", "bought", "V,full,-h,+l,+b,+r"},
    {"ix", "roses", "V,reduced,+h"},
    {"ax", "about", "V,reduced,-h"},
    {"sil", "silence", "silence"},
};

std::vector<FeatureDef> make_features() {
  return {
      {"consonantal", {"silence", "C", "V", "laryngeal"}, 0.0, 0},
      {"continuant", {"stop", "fric", "sonorant"}, 0.01, 1},
      {"sonority", {"lateral", "rhotic", "glide"}, 0.0, 0},
      {"articulator", {"lab", "cor", "dors"}, 0.0, 1},
      {"anterior", {"+a", "-a"}, 0.02, 1},
      {"distributed", {"+d", "-d"}, 0.02, 1},
      {"nasality", {"+n", "-n"}, 0.01, 1},
      {"voicing", {"+v", "-v"}, 0.01, 1},
      {"reduced", {"reduced", "full"}, 0.15, 0},
      {"high", {"+h", "-h"}, 0.01, 0},
      {"back", {"+b", "-b"}, 0.01, 0},
      {"low", {"+l", "-l"}, 0.01, 0},
      {"round", {"+r", "-r"}, 0.01, 0},
      {"ATR", {"+ATR", "-ATR"}, 0.01, 0},
  };
}

}  // namespace

const Inventory& Inventory::instance() {
  static const Inventory inv;
  return inv;
}

Inventory::Inventory() : features_(make_features()) {
  // value name -> (feature, value index); value names are globally unique
  std::map<std::string, std::pair<int, int>> value_of;
  for (int f = 0; f < kFeatureCount; ++f)
    for (int v = 0; v < static_cast<int>(features_[f].values.size()); ++v)
      value_of[features_[f].values[v]] = {f, v};

  for (const ChartRow& row : kChart) {
    PhoneSymbol sym;
    sym.name = row.name;
    sym.example = row.example;
    std::stringstream ss(row.features);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      auto it = value_of.find(tok);
      if (it == value_of.end()) throw std::logic_error("bad chart value: " + tok);
      sym.bundle.value[it->second.first] = static_cast<std::int8_t>(it->second.second);
    }
    // every defined feature must be applicable and vice versa
    for (int f = 0; f < kFeatureCount; ++f) {
      bool app = applicable(sym.bundle, f);
      if (app != sym.bundle.defined(f))
        throw std::logic_error(std::string("chart row ") + row.name +
                               " inconsistent at feature " + features_[f].name);
    }
    by_name_[sym.name] = static_cast<PhoneId>(symbols_.size());
    symbols_.push_back(std::move(sym));
  }
  by_name_["u"] = by_name_["uw"];
  by_name_["i"] = by_name_["iy"];
  by_name_["h"] = by_name_["hh"];
}

PhoneId Inventory::find(const std::string& name) const {
  auto it = by_name_.find(name);
  return it == by_name_.end() ? -1 : it->second;
}

int Inventory::value_index(int f, const std::string& v) const {
  const auto& vals = features_[f].values;
  for (int i = 0; i < static_cast<int>(vals.size()); ++i)
    if (vals[i] == v) return i;
  return -1;
}

bool Inventory::applicable(const PhonemeBundle& b, int f) {
  // value indices within their features, by chart order
  const int kC = 1, kV = 2, kLaryngeal = 3;
  const int kStop = 0, kFric = 1, kSonorant = 2;
  const int kLateral = 0, kRhotic = 1;
  const int kCor = 1;
  const int kPlusN = 0;
  const int kFull = 1;
  const int kPlusH = 0;
  const int kMinusB = 1;
  const int kMinusL = 1;

  int cons = b.value[kConsonantal];
  switch (f) {
    case kConsonantal:
      return true;
    case kContinuant:
      return cons == kC;
    case kSonority:
      return cons == kC && b.value[kContinuant] == kSonorant;
    case kArticulator:
      return cons == kC && !(b.value[kContinuant] == kSonorant &&
                             (b.value[kSonority] == kLateral ||
                              b.value[kSonority] == kRhotic));
    case kAnterior:
    case kDistributed:
      return applicable(b, kArticulator) && b.value[kArticulator] == kCor;
    case kNasality:
      return cons == kC && b.value[kContinuant] == kStop;
    case kVoicing:
      if (cons == kLaryngeal) return true;
      if (cons != kC) return false;
      if (b.value[kContinuant] == kFric) return true;
      return b.value[kContinuant] == kStop && b.value[kNasality] != kPlusN;
    case kReduced:
    case kHigh:
      return cons == kV;
    case kBack:
    case kLow:
    case kRound:
      return cons == kV && b.value[kReduced] == kFull;
    case kAtr:
      return cons == kV && b.value[kReduced] == kFull &&
             (b.value[kHigh] == kPlusH ||
              (b.value[kBack] == kMinusB && b.value[kLow] == kMinusL));
    default:
      return false;
  }
}

std::string Inventory::describe(PhoneId p) const {
  const PhonemeBundle& b = symbols_[p].bundle;
  std::string out;
  for (int f = 0; f < kFeatureCount; ++f) {
    if (!b.defined(f)) continue;
    if (!out.empty()) out += ',';
    out += features_[f].values[b.value[f]];
  }
  return out;
}

ChannelParams::ChannelParams() {
  const auto& feats = Inventory::instance().features();
  for (int f = 0; f < kFeatureCount; ++f) mu[f] = feats[f].mu;
}

void ChannelParams::validate() const {
  if (!(c_insert >= 0.0 && c_insert < 1.0))
    throw DataError("channel: c_I must lie in [0,1); c_I=1 never terminates");
  if (!(c_map >= 0.0 && c_map < 1.0))
    throw DataError("channel: c_M must lie in [0,1); c_M=1 never terminates");
  if (!(c_delete_cap >= 0.0 && c_delete_cap <= 1.0))
    throw DataError("channel: c_D must lie in [0,1]");
  for (double b : {beta_u, beta_q, beta_n})
    if (!(b >= 0.0)) throw DataError("channel: beta weights must be >= 0");
  for (int f = 0; f < kFeatureCount; ++f)
    if (!(mu[f] >= 0.0)) throw DataError("channel: mu must be >= 0");
}

ChannelParams ChannelParams::noiseless() {
  ChannelParams p;
  p.c_insert = 0.0;
  p.c_map = 0.0;
  p.c_delete_cap = 0.0;
  p.beta_q = 0.0;
  p.beta_n = 0.0;
  p.mu.fill(0.0);
  return p;
}

double PhoneModel::feature_insert(int f, int sv) const {
  (void)sv;
  return 1.0 / inv_->value_count(f);
}

double PhoneModel::feature_map(int f, int sv, int qv, int uv) const {
  return feature_copy(f, sv, qv, uv, -1);
}

double PhoneModel::feature_copy(int f, int sv, int qv, int uv, int nv) const {
  const FeatureDef& def = inv_->features()[f];
  int alpha = def.alpha;
  int nv_cmp = params_.strict_appendix_a ? qv : nv;
  int count = inv_->value_count(f);
  double z = 0.0, num_s = 0.0;
  for (int v = 0; v < count; ++v) {
    double num = params_.mu[f];
    if (uv >= 0 && v == uv) num += params_.beta_u;
    if (alpha && qv >= 0 && v == qv) num += params_.beta_q;
    if (alpha && nv_cmp >= 0 && v == nv_cmp) num += params_.beta_n;
    z += num;
    if (v == sv) num_s = num;
  }
  if (z <= 0.0) return 1.0 / count;  // no evidence for any value: uniform
  return num_s / z;
}

double PhoneModel::raw_product(PhoneId s, PhoneId q, PhoneId u, PhoneId n,
                               bool with_n) const {
  const PhonemeBundle& sb = inv_->symbol(s).bundle;
  const PhonemeBundle* qb = q >= 0 ? &inv_->symbol(q).bundle : nullptr;
  const PhonemeBundle* ub = u >= 0 ? &inv_->symbol(u).bundle : nullptr;
  const PhonemeBundle* nb = n >= 0 ? &inv_->symbol(n).bundle : nullptr;
  double p = 1.0;
  for (int f = 0; f < kFeatureCount && p > 0.0; ++f) {
    if (!sb.defined(f)) continue;
    int qv = qb && qb->defined(f) ? qb->value[f] : -1;
    int uv = ub && ub->defined(f) ? ub->value[f] : -1;
    int nv = with_n && nb && nb->defined(f) ? nb->value[f] : -1;
    p *= with_n ? feature_copy(f, sb.value[f], qv, uv, nv)
                : feature_map(f, sb.value[f], qv, uv);
  }
  return p;
}

PhoneModel::PhoneModel(const Inventory& inv, const ChannelParams& params)
    : inv_(&inv), params_(params), n_(inv.size()) {
  params_.validate();

  insert_.resize(n_);
  double mass = 0.0;
  for (PhoneId s = 0; s < n_; ++s) {
    const PhonemeBundle& b = inv.symbol(s).bundle;
    double p = 1.0;
    for (int f = 0; f < kFeatureCount; ++f)
      if (b.defined(f)) p /= inv.value_count(f);
    insert_[s] = p;
    mass += p;
  }
  for (PhoneId s = 0; s < n_; ++s) {
    insert_[s] /= mass;
    max_insert_ = std::max(max_insert_, insert_[s]);
  }

  map_.assign(static_cast<std::size_t>(n_ + 1) * n_ * n_, 0.0);
  for (PhoneId q = -1; q < n_; ++q) {
    for (PhoneId u = 0; u < n_; ++u) {
      double* row = &map_[map_ctx(q, u) * n_];
      double total = 0.0;
      for (PhoneId s = 0; s < n_; ++s) total += (row[s] = raw_product(s, q, u, -1, false));
      for (PhoneId s = 0; s < n_; ++s) {
        row[s] /= total;
        max_map_ = std::max(max_map_, row[s]);
      }
    }
  }

  copy_.assign(static_cast<std::size_t>(n_ + 1) * n_ * (n_ + 1) * n_, 0.0);
  for (PhoneId q = -1; q < n_; ++q) {
    for (PhoneId u = 0; u < n_; ++u) {
      for (PhoneId nn = -1; nn < n_; ++nn) {
        double* row = &copy_[copy_ctx(q, u, nn) * n_];
        double total = 0.0;
        for (PhoneId s = 0; s < n_; ++s) total += (row[s] = raw_product(s, q, u, nn, true));
        for (PhoneId s = 0; s < n_; ++s) {
          row[s] /= total;
          max_copy_ = std::max(max_copy_, row[s]);
        }
      }
    }
  }
}

double PhoneModel::p_delete(PhoneId q, PhoneId u, PhoneId n) const {
  double rewrite = q >= 0 ? p_copy(q, q, u, n) : 0.0;
  double anticipate = n >= 0 ? p_copy(n, q, u, n) : 0.0;
  return std::min(params_.c_delete_cap, rewrite + anticipate);
}

}  // namespace lexmdl
