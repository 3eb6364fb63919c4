#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include "emsa/corpus.hpp"
#include "emsa/emotion.hpp"
#include "emsa/lm.hpp"
#include "emsa/objective.hpp"
#include "emsa/rng.hpp"

namespace emsa {

struct SaConfig {
  double tau_init = 0.015;
  double decay_c = 0.03;  // per-step temperature decrement
  int max_iters = 50;
  // Candidate words per Gibbs proposal; 0 scores the full vocabulary.
  size_t shortlist_size = 500;
  size_t min_len = 1;
  size_t max_len = 30;
  uint64_t rng_seed = 42;
  // Relative weights for sampling the edit operation, in the order
  // (replace, insert, delete).
  std::array<double, 3> op_weights{1.0, 1.0, 1.0};
};

enum class EditKind : uint8_t { Replace = 0, Insert = 1, Delete = 2 };

std::string_view to_string(EditKind k);
std::optional<EditKind> parse_edit_kind(std::string_view name);

// One edit at a 1-based position. Replace rewrites the token at pos;
// Insert places the word before pos (pos may be length+1 to append);
// Delete removes the token at pos and carries no word.
struct EditOp {
  EditKind kind = EditKind::Replace;
  size_t pos = 1;
  std::optional<TokenId> word;
};

TokenSeq apply_edit(const TokenSeq& y, const EditOp& op);

struct SaStepRecord {
  int iter = 0;
  double tau = 0.0;
  EditOp op;
  double proposal_log_f = 0.0;
  double incumbent_log_f = 0.0;
  double accept_prob = 0.0;
  bool accepted = false;
  TokenSeq candidate;  // the proposed sentence, kept whether or not accepted
};

// Replayable record of one annealing run: applying the accepted edits to
// `initial` in order reconstructs every intermediate state.
struct SaTrace {
  TokenSeq initial;
  std::vector<SaStepRecord> steps;
  size_t best_index = 0;  // chain index of the best state (0 = initial)
};

// max{0, tau_init - decay_c * t}
double temperature(const SaConfig& cfg, int t);

// Uniform editing position in {1, ..., length}.
size_t propose_position(Rng& rng, size_t length);

// min{1, exp(delta / tau)} with delta in the objective's score space; at
// tau == 0 this degenerates to accepting exactly the non-worsening moves.
double acceptance_probability(double log_f_new, double log_f_old, double tau,
                              ScoreMode mode);

// Scoring context for one search: binds the models, objective settings and
// the (post, target emotion) pair, and provides both full and incremental
// candidate scoring. Incremental scoring reuses the incumbent's cached
// n-gram terms outside the edited window plus one Model-1 and one
// per-class naive-Bayes term. Instances cache lazily and are not safe for
// concurrent use; create one per run.
class SearchContext {
 public:
  SearchContext(const ObjectiveConfig& objective,
                const ConditionalScorer& scorer, const EmotionClassifier& clf,
                const Vocabulary& vocab, std::span<const TokenId> x, Emotion e,
                const SaConfig& sa);

  const ObjectiveConfig& objective() const { return objective_; }
  const SaConfig& sa_config() const { return sa_; }
  Emotion target() const { return target_; }
  std::span<const TokenId> post() const { return x_; }

  // Full rescore through the public objective path.
  ScoredCandidate score(std::span<const TokenId> y) const;

  // Cached incumbent state for incremental rescoring.
  struct State {
    TokenSeq tokens;
    std::vector<double> lm_terms;  // length T+1; index T is the EOS term
    double lm_sum = 0.0;
    double m1_sum = 0.0;
    std::array<double, kNumEmotions> nb_scores{};  // priors included
    double log_cond = 0.0;
    double log_emo = 0.0;
    double log_f = 0.0;
  };

  State analyze(TokenSeq y) const;

  struct EditScore {
    double log_f = 0.0;
    double log_cond = 0.0;
    double log_emo = 0.0;
  };

  // Score of apply_edit(base.tokens, op) without materializing the edit.
  EditScore score_edit(const State& base, const EditOp& op) const;

  // Candidate words for a Gibbs proposal at pos: the top tokens by
  // target-emotion likelihood ratio joined with the top next-token
  // candidates at the position, or every word when the configured
  // shortlist size is 0 or covers the vocabulary.
  std::vector<TokenId> build_shortlist(const State& base, size_t pos,
                                       EditKind kind) const;

  struct GibbsDistribution {
    std::vector<TokenId> words;
    std::vector<double> probs;        // sums to one over the shortlist
    std::vector<EditScore> scores;    // per-word full objective scores
  };

  // Word proposal distribution for Replace or Insert at a 1-based position:
  // probability of w proportional to exp(log_f) of the edited sentence,
  // normalized over the shortlist.
  GibbsDistribution gibbs_word_distribution(const State& base, size_t pos,
                                            EditKind kind,
                                            std::span<const TokenId> shortlist)
      const;
  GibbsDistribution gibbs_word_distribution(const State& base, size_t pos,
                                            EditKind kind) const;

 private:
  double m1_term(TokenId w) const;
  const std::vector<TokenId>& emotion_shortlist() const;

  ObjectiveConfig objective_;
  const ConditionalScorer* scorer_;
  const EmotionClassifier* clf_;
  const Vocabulary* vocab_;
  TokenSeq x_;
  Emotion target_;
  SaConfig sa_;

  mutable std::unordered_map<TokenId, double> m1_cache_;
  mutable std::vector<TokenId> emotion_top_;
  mutable bool emotion_top_ready_ = false;
};

// One annealing step: sample an operation (delete suppressed at min_len,
// insert at max_len; replace is the fallback when nothing is eligible),
// sample a position, draw the word from the Gibbs distribution for
// replace/insert, then accept or reject. On acceptance `state` is advanced
// to the proposal.
SaStepRecord sa_step(const SearchContext& ctx, SearchContext::State& state,
                     int iter, Rng& rng);

struct SaResult {
  ScoredCandidate best;
  SaTrace trace;
};

// Runs max_iters annealing steps from y0 and returns the best-scored state
// seen anywhere along the chain, which is never worse than y0.
SaResult run_sa(const SearchContext& ctx, TokenSeq y0, Rng& rng);
SaResult run_sa(const SearchContext& ctx, TokenSeq y0);  // seeds from config

}  // namespace emsa
