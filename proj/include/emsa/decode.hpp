#pragma once

#include <span>
#include <vector>

#include "emsa/corpus.hpp"
#include "emsa/lm.hpp"

namespace emsa {

struct Hypothesis {
  TokenSeq tokens;
  double log_prob = 0.0;  // cumulative stepwise sum, EOS term included
  bool finished = false;
};

struct DbsConfig {
  int beam_size = 20;
  int groups = 20;
  double diversity = 0.5;  // Hamming penalty strength
  int max_len = 20;
};

// Breadth-first beam search over the conditional scorer. Each step extends
// live hypotheses with every scorable token plus EOS (never on the first
// step, so results are nonempty); hypotheses reaching max_len are finished
// with their EOS term. Returns up to beam_size finished hypotheses sorted
// by score, descending.
std::vector<Hypothesis> beam_search(const ConditionalScorer& scorer,
                                    std::span<const TokenId> x, int beam_size,
                                    int max_len);

// Diverse beam search: the beam is split into `groups` groups processed in
// order at each step; a candidate token in group g is penalized by
// diversity * (times it was already selected at this step by groups < g).
// The penalty steers selection only; reported scores stay raw. When
// beam_size is not divisible by groups, the first beam_size mod groups
// groups get one extra beam.
std::vector<Hypothesis> diverse_beam_search(const ConditionalScorer& scorer,
                                            std::span<const TokenId> x,
                                            const DbsConfig& cfg);

}  // namespace emsa
