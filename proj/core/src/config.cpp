#include "lexmdl/config.hpp"

#include <sstream>

namespace lexmdl {

namespace {

double parse_double(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw DataError("config: bad numeric value for " + key + ": '" + value + "'");
  }
}

int parse_int(const std::string& key, const std::string& value) {
  double v = parse_double(key, value);
  int i = static_cast<int>(v);
  if (static_cast<double>(i) != v)
    throw DataError("config: " + key + " must be an integer");
  return i;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw DataError("config: " + key + " must be a boolean");
}

}  // namespace

void Settings::set(const std::string& key, const std::string& value) {
  if (key == "c_I") {
    channel.c_insert = parse_double(key, value);
  } else if (key == "c_M") {
    channel.c_map = parse_double(key, value);
  } else if (key == "c_D") {
    channel.c_delete_cap = parse_double(key, value);
  } else if (key == "beta_u") {
    channel.beta_u = parse_double(key, value);
  } else if (key == "beta_q") {
    channel.beta_q = parse_double(key, value);
  } else if (key == "beta_n") {
    channel.beta_n = parse_double(key, value);
  } else if (key == "strict_appendix_a") {
    channel.strict_appendix_a = parse_bool(key, value);
  } else if (key.rfind("mu.", 0) == 0) {
    std::string feat = key.substr(3);
    const auto& defs = Inventory::instance().features();
    for (int f = 0; f < kFeatureCount; ++f) {
      if (defs[f].name == feat) {
        channel.mu[f] = parse_double(key, value);
        return;
      }
    }
    throw DataError("config: unknown feature in " + key);
  } else if (key == "prune_budget") {
    prune_budget = parse_double(key, value);
  } else if (key == "overhead_bits") {
    overhead_bits = parse_double(key, value);
  } else if (key == "em_iters") {
    em_iters = parse_int(key, value);
  } else if (key == "max_outer") {
    max_outer = parse_int(key, value);
  } else if (key == "deletion_guard") {
    deletion_guard = parse_double(key, value);
  } else if (key == "merge_min_support") {
    merge_min_support = parse_int(key, value);
  } else if (key == "new_word_discount") {
    new_word_discount = parse_double(key, value);
  } else if (key == "candidate_cap") {
    candidate_cap = parse_int(key, value);
  } else if (key == "count_mode") {
    if (value == "complete")
      count_mode = CountMode::kComplete;
    else if (value == "viterbi")
      count_mode = CountMode::kViterbi;
    else
      throw DataError("config: count_mode must be complete or viterbi");
  } else {
    throw DataError("config: unknown key '" + key + "'");
  }
}

void Settings::load_file(const std::string& path) {
  std::istringstream in(read_file(path));
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    // trim
    auto is_space = [](char c) { return c == ' ' || c == '\t' || c == '\r'; };
    while (!line.empty() && is_space(line.back())) line.pop_back();
    std::size_t start = 0;
    while (start < line.size() && is_space(line[start])) ++start;
    if (start >= line.size()) continue;
    std::size_t eq = line.find('=', start);
    if (eq == std::string::npos)
      throw DataError(path + ":" + std::to_string(lineno) + ": expected key=value");
    std::string key = line.substr(start, eq - start);
    std::string value = line.substr(eq + 1);
    while (!key.empty() && is_space(key.back())) key.pop_back();
    std::size_t vstart = 0;
    while (vstart < value.size() && is_space(value[vstart])) ++vstart;
    value = value.substr(vstart);
    set(key, value);
  }
}

TrainOptions Settings::train_options(bool use_channel, const PhoneModel* model,
                                     int threads, bool audit) const {
  TrainOptions opt;
  opt.em_iters = em_iters;
  opt.max_outer = max_outer;
  opt.deletion_guard = deletion_guard;
  opt.merge_min_support = merge_min_support;
  opt.new_word_discount = new_word_discount;
  opt.candidate_cap = candidate_cap;
  opt.count_mode = count_mode;
  opt.threads = threads;
  opt.audit = audit;
  opt.channel = use_channel ? model : nullptr;
  opt.prune_budget = prune_budget;
  return opt;
}

}  // namespace lexmdl
