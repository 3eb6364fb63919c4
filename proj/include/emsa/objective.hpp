#pragma once

#include <span>

#include "emsa/corpus.hpp"
#include "emsa/emotion.hpp"
#include "emsa/lm.hpp"

namespace emsa {

// How the conditional term enters the combined score. Raw keeps the plain
// log-probability; PerToken divides it by the candidate length so the
// acceptance differences stay on a scale where the temperature matters for
// sentences of any length.
enum class ScoreMode { Raw, PerToken };

struct ObjectiveConfig {
  double alpha = 8.0;  // emotion weight
  ScoreMode mode = ScoreMode::Raw;
};

// A candidate with its combined log score and the two components it was
// assembled from: log_f = g(log_cond) + alpha * log_emo, where g is the
// identity in Raw mode and division by token count in PerToken mode.
struct ScoredCandidate {
  TokenSeq tokens;
  double log_f = 0.0;
  double log_cond = 0.0;
  double log_emo = 0.0;
};

double combine_log_f(double log_cond, double log_emo, double alpha,
                     ScoreMode mode, size_t length);

ScoredCandidate score(const ObjectiveConfig& cfg,
                      const ConditionalScorer& scorer,
                      const EmotionClassifier& clf,
                      std::span<const TokenId> x, Emotion e,
                      std::span<const TokenId> y);

// Score-space difference f(new) - f(old) used by the acceptance rule. Raw
// mode works in probability space: exp(m) * (exp(a-m) - exp(b-m)) with
// m = max(a, b), which never overflows and keeps the sign through gradual
// underflow. PerToken mode compares log scores directly.
double acceptance_delta(double log_f_new, double log_f_old, ScoreMode mode);

}  // namespace emsa
