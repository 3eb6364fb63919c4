#include "emsa/objective.hpp"

#include <cmath>

#include "emsa/errors.hpp"

namespace emsa {

double combine_log_f(double log_cond, double log_emo, double alpha,
                     ScoreMode mode, size_t length) {
  if (alpha < 0.0) throw UsageError("alpha must be nonnegative");
  if (length == 0) {
    throw InternalError("objective score undefined for empty candidate");
  }
  const double cond = mode == ScoreMode::PerToken
                          ? log_cond / static_cast<double>(length)
                          : log_cond;
  return cond + alpha * log_emo;
}

ScoredCandidate score(const ObjectiveConfig& cfg,
                      const ConditionalScorer& scorer,
                      const EmotionClassifier& clf,
                      std::span<const TokenId> x, Emotion e,
                      std::span<const TokenId> y) {
  if (y.empty()) {
    throw InternalError("objective score undefined for empty candidate");
  }
  ScoredCandidate c;
  c.tokens.assign(y.begin(), y.end());
  c.log_cond = scorer.logprob(x, y);
  c.log_emo = clf.log_posterior(e, y);
  c.log_f = combine_log_f(c.log_cond, c.log_emo, cfg.alpha, cfg.mode, y.size());
  return c;
}

double acceptance_delta(double log_f_new, double log_f_old, ScoreMode mode) {
  if (mode == ScoreMode::PerToken) {
    return log_f_new - log_f_old;
  }
  const double m = std::max(log_f_new, log_f_old);
  if (m == -std::numeric_limits<double>::infinity()) return 0.0;
  return std::exp(m) * (std::exp(log_f_new - m) - std::exp(log_f_old - m));
}

}  // namespace emsa
