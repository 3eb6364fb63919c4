#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <unordered_map>
#include <vector>

#include "emsa/corpus.hpp"

namespace emsa {

// Multinomial naive Bayes emotion classifier with Laplace smoothing.
// Produces a proper posterior over the six classes for any utterance;
// an empty utterance yields the class priors. Immutable after training.
class EmotionClassifier {
 public:
  // One label per utterance. If any class has no examples, the priors fall
  // back to uniform (recorded in the model and surfaced as a warning by the
  // trainer); smoothed token likelihoods still cover every class.
  static EmotionClassifier train(std::span<const TokenSeq> utterances,
                                 std::span<const Emotion> labels,
                                 double laplace, const Vocabulary& vocab);

  double laplace() const { return laplace_; }
  size_t event_count() const { return events_; }
  bool uniform_prior_fallback() const { return uniform_prior_; }

  std::span<const double> log_priors() const { return log_prior_; }

  // Unnormalized per-class log scores: log prior + sum of token likelihoods.
  std::array<double, kNumEmotions> class_scores(
      std::span<const TokenId> u) const;

  // Normalized posterior over the six classes; sums to one.
  std::array<double, kNumEmotions> posterior(std::span<const TokenId> u) const;

  // log P(e | u), computed in log space.
  double log_posterior(Emotion e, std::span<const TokenId> u) const;

  // Argmax of the posterior; ties break toward the lower enum value.
  Emotion classify(std::span<const TokenId> u) const;

  double token_loglik(Emotion e, TokenId token) const;

  void save(const std::filesystem::path& path) const;
  static EmotionClassifier load(const std::filesystem::path& path);

  EmotionClassifier() = default;

 private:
  void finalize_priors();

  double laplace_ = 1.0;
  size_t events_ = 0;
  bool uniform_prior_ = false;
  std::array<uint64_t, kNumEmotions> doc_counts_{};
  std::array<double, kNumEmotions> log_prior_{};
  std::array<uint64_t, kNumEmotions> token_totals_{};
  std::array<std::unordered_map<TokenId, uint64_t>, kNumEmotions> counts_;
};

}  // namespace emsa
