#ifndef LEXMDL_CONFIG_HPP
#define LEXMDL_CONFIG_HPP

#include <string>

#include "lexmdl/moves.hpp"

namespace lexmdl {

// Everything tunable from the config file (key=value lines, '#' comments).
// Precedence is defaults < config file < command-line flags.
struct Settings {
  ChannelParams channel;
  double prune_budget = 1e-4;
  double overhead_bits = 0.0;
  int em_iters = 3;
  int max_outer = 15;
  double deletion_guard = 2.0;
  int merge_min_support = 3;
  double new_word_discount = 1.0;
  int candidate_cap = 10000;
  CountMode count_mode = CountMode::kComplete;

  void set(const std::string& key, const std::string& value);
  void load_file(const std::string& path);

  TrainOptions train_options(bool use_channel, const PhoneModel* model,
                             int threads, bool audit) const;
};

}  // namespace lexmdl

#endif  // LEXMDL_CONFIG_HPP
