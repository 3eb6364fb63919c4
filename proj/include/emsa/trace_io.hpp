#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "emsa/anneal.hpp"
#include "emsa/corpus.hpp"

namespace emsa {

// Metadata stored in the first line of a trace file.
struct TraceMeta {
  std::string post;     // detokenized post text
  Emotion target = Emotion::Neutral;
  uint64_t seed = 0;
  double alpha = 8.0;
  std::string score_mode = "raw";
};

// JSON-lines trace format: a `meta` record, one `step` record per SA
// iteration, and a closing `final` record. Tokens are written as strings
// so traces are readable and replayable without the vocabulary file.
void write_trace(std::ostream& out, const SaTrace& trace,
                 const ScoredCandidate& best, const Vocabulary& vocab,
                 const TraceMeta& meta);
void write_trace_file(const std::filesystem::path& path, const SaTrace& trace,
                      const ScoredCandidate& best, const Vocabulary& vocab,
                      const TraceMeta& meta);

struct LoadedTrace {
  TraceMeta meta;
  std::vector<std::string> initial;
  struct Step {
    int iter = 0;
    double tau = 0.0;
    std::string op;
    size_t pos = 0;
    std::string word;  // empty for delete
    double proposal_log_f = 0.0;
    double incumbent_log_f = 0.0;
    double accept_prob = 0.0;
    bool accepted = false;
    std::vector<std::string> candidate;
  };
  std::vector<Step> steps;
  size_t best_index = 0;
  double best_log_f = 0.0;
  std::vector<std::string> best_tokens;
};

LoadedTrace read_trace_file(const std::filesystem::path& path);

// One human-readable line per step: op, position, score delta, tau,
// accept/reject and the resulting candidate.
void print_trace(std::ostream& out, const LoadedTrace& trace);

}  // namespace emsa
