#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include "lexmdl/corpus.hpp"

using lexmdl::read_file;
using lexmdl::write_file;

namespace {

struct RunResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

RunResult run(const std::string& args) {
  static int counter = 0;
  std::string out_path = "/tmp/lexmdl_cli_out_" + std::to_string(counter);
  std::string err_path = "/tmp/lexmdl_cli_err_" + std::to_string(counter);
  ++counter;
  std::string cmd = std::string(LEXMDL_BIN) + " " + args + " >" + out_path +
                    " 2>" + err_path;
  int status = std::system(cmd.c_str());
  RunResult r;
  r.exit_code = WEXITSTATUS(status);
  r.out = read_file(out_path);
  r.err = read_file(err_path);
  std::remove(out_path.c_str());
  std::remove(err_path.c_str());
  return r;
}

const char* kTmp = "/tmp";

std::string path(const std::string& name) { return std::string(kTmp) + "/" + name; }

}  // namespace

TEST_CASE("missing input files exit with the data-error code") {
  RunResult r = run("train /nonexistent/missing.txt");
  CHECK(r.exit_code == 2);
  CHECK(r.err.find("missing.txt") != std::string::npos);
}

TEST_CASE("unknown flags exit with the usage code") {
  RunResult r = run("train corpus.txt --definitely-not-a-flag");
  CHECK(r.exit_code == 1);
}

TEST_CASE("help exits cleanly") {
  CHECK(run("--help").exit_code == 0);
  CHECK(run("train --help").exit_code == 0);
}

TEST_CASE("train, inspect, segment, eval round trip") {
  std::string corpus;
  for (int i = 0; i < 60; ++i) corpus += "thecat thehat\n";
  write_file(path("cli_corpus.txt"), corpus);

  RunResult train = run("train " + path("cli_corpus.txt") + " --iters 3 --out " +
                        path("cli_lex.tsv") + " --log " + path("cli_trace.tsv") +
                        " --threads 2");
  CHECK(train.exit_code == 0);
  CHECK(train.out.find("total_bits") != std::string::npos);

  std::string trace = read_file(path("cli_trace.tsv"));
  CHECK(trace.find("iteration\tinput_bits\tdictionary_bits\ttotal_bits\t"
                   "words_added\twords_deleted\tlexicon_size\n") == 0);

  RunResult inspect = run("inspect " + path("cli_lex.tsv") + " --rows 5");
  CHECK(inspect.exit_code == 0);
  CHECK(inspect.out.find("rank\t-log p\t|rep|\tcount\trep") == 0);

  RunResult seg = run("segment " + path("cli_lex.tsv") + " " + path("cli_corpus.txt"));
  CHECK(seg.exit_code == 0);
  CHECK(seg.out.find('|') != std::string::npos);

  RunResult deep = run("segment " + path("cli_lex.tsv") + " " +
                       path("cli_corpus.txt") + " --deep");
  CHECK(deep.exit_code == 0);
  CHECK(deep.out.find('[') != std::string::npos);

  RunResult eval = run("eval " + path("cli_lex.tsv") + " " + path("cli_corpus.txt"));
  CHECK(eval.exit_code == 0);
  CHECK(eval.out.find("bits_per_char") != std::string::npos);
}

TEST_CASE("training twice yields identical artifacts") {
  std::string corpus;
  for (int i = 0; i < 40; ++i) corpus += "abcabd\n";
  write_file(path("cli_det.txt"), corpus);
  CHECK(run("train " + path("cli_det.txt") + " --iters 2 --out " +
            path("cli_det1.tsv"))
            .exit_code == 0);
  CHECK(run("train " + path("cli_det.txt") + " --iters 2 --out " +
            path("cli_det2.tsv"))
            .exit_code == 0);
  CHECK(read_file(path("cli_det1.tsv")) == read_file(path("cli_det2.tsv")));
}

TEST_CASE("synth is deterministic and feeds eval with gold") {
  // hand-written lexicon file: terminals a,b + words ab/ba
  std::string lex =
      "#lexmdl-lexicon mode=text\n"
      "0\t0\ta\t\n"
      "1\t0\tb\t\n"
      "2\t3\tab\t0 1\n"
      "3\t1\tba\t1 0\n";
  write_file(path("cli_true_lex.tsv"), lex);

  RunResult s1 = run("--seed 9 synth --lexicon " + path("cli_true_lex.tsv") +
                     " --n 50 --out " + path("cli_synth1.txt") + " --gold-out " +
                     path("cli_synth1.gold"));
  CHECK(s1.exit_code == 0);
  RunResult s2 = run("--seed 9 synth --lexicon " + path("cli_true_lex.tsv") +
                     " --n 50 --out " + path("cli_synth2.txt"));
  CHECK(s2.exit_code == 0);
  CHECK(read_file(path("cli_synth1.txt")) == read_file(path("cli_synth2.txt")));

  RunResult train = run("train " + path("cli_synth1.txt") +
                        " --lines --iters 3 --out " + path("cli_synth_lex.tsv"));
  CHECK(train.exit_code == 0);
  RunResult eval = run("eval " + path("cli_synth_lex.tsv") + " " +
                       path("cli_synth1.txt") + " --lines --gold " +
                       path("cli_synth1.gold"));
  CHECK(eval.exit_code == 0);
  CHECK(eval.out.find("recall") != std::string::npos);
}

TEST_CASE("phoneme pipeline with corruption") {
  std::string lex =
      "#lexmdl-lexicon mode=phoneme\n"
      "0\t0\tb\t\n";
  // build a phoneme lexicon file from the dump to keep ids aligned
  RunResult dump = run("phones --dump");
  CHECK(dump.exit_code == 0);
  CHECK(dump.out.find("consonantal") != std::string::npos);
  CHECK(dump.out.find("b\tbee\tC,stop,lab,-n,-v") != std::string::npos);

  // count symbol lines: header + 39 symbols before the blank line
  std::istringstream lines(dump.out);
  std::string line;
  int symbol_rows = -1;  // skip header
  while (std::getline(lines, line) && !line.empty()) ++symbol_rows;
  CHECK(symbol_rows == 39);
  (void)lex;
}

TEST_CASE("channel-score reports a probability and an alignment") {
  RunResult r = run("channel-score --pi \"d u ih n\" --phi \"d u ih ng\"");
  CHECK(r.exit_code == 0);
  CHECK(r.out.find("log2_prob\t-") != std::string::npos);
  CHECK(r.out.find("copy d -> d") != std::string::npos);
  CHECK(r.out.find("ng") != std::string::npos);
}

TEST_CASE("phoneme training accepts gold-marked files") {
  std::string corpus;
  for (int i = 0; i < 30; ++i) corpus += "d ae | n ih\n";
  write_file(path("cli_ph.txt"), corpus);
  RunResult train = run("train " + path("cli_ph.txt") +
                        " --mode phoneme --iters 2 --out " + path("cli_ph_lex.tsv"));
  CHECK(train.exit_code == 0);
  RunResult eval = run("eval " + path("cli_ph_lex.tsv") + " " + path("cli_ph.txt"));
  CHECK(eval.exit_code == 0);
  CHECK(eval.out.find("recall") != std::string::npos);  // inline gold markers
}
