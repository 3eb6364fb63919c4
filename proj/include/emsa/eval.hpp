#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "emsa/corpus.hpp"
#include "emsa/emotion.hpp"

namespace emsa {

// Corpus-level BLEU-n on the 0-100 scale: geometric mean of clipped k-gram
// precisions for k <= n times the brevity penalty, no smoothing (a zero
// precision gives 0). One reference per candidate.
double bleu_n(std::span<const TokenSeq> candidates,
              std::span<const TokenSeq> references, int n);

// Unique n-grams over total n-grams, pooled across all outputs.
double distinct_n(std::span<const TokenSeq> outputs, int n);

// Fraction of outputs whose classified emotion matches the target.
double emotion_accuracy(const EmotionClassifier& judge,
                        std::span<const TokenSeq> outputs,
                        std::span<const Emotion> targets);

// Word vectors in text format: optional `count dim` header, then one
// `word v1 ... vd` line per word. Out-of-vocabulary words are skipped by
// every metric; duplicate words keep their first vector.
class EmbeddingTable {
 public:
  static EmbeddingTable load(const std::filesystem::path& path);

  size_t dim() const { return dim_; }
  size_t size() const { return vectors_.size(); }
  const std::vector<float>* find(const std::string& word) const;
  void insert(const std::string& word, std::vector<float> vec);

 private:
  size_t dim_ = 0;
  std::unordered_map<std::string, std::vector<float>> vectors_;
};

struct EmbeddingScores {
  double average = 0.0;    // cosine of mean vectors, candidate vs reference
  double greedy = 0.0;     // symmetric mean of best per-word matches
  double extreme = 0.0;    // cosine of dimension-wise max-magnitude vectors
  double coherence = 0.0;  // cosine of mean vectors, candidate vs post
  size_t skipped = 0;      // pairs with a fully out-of-vocabulary side
  size_t scored = 0;
};

EmbeddingScores embedding_metrics(const EmbeddingTable& table,
                                  std::span<const std::vector<std::string>> candidates,
                                  std::span<const std::vector<std::string>> references,
                                  std::span<const std::vector<std::string>> posts);

struct MetricsReport {
  size_t pairs = 0;
  double bleu1 = 0.0;
  double bleu2 = 0.0;
  double dist1 = 0.0;
  double dist2 = 0.0;
  double emotion_accuracy = 0.0;
  std::optional<EmbeddingScores> embedding;
};

struct SweepRow {
  double alpha = 0.0;
  double bleu1 = 0.0;
  double bleu2 = 0.0;
  double dist1 = 0.0;
  double dist2 = 0.0;
  double emotion_accuracy = 0.0;
};

// Runs the supplied pipeline once per alpha and collects the headline
// metrics into one row each.
std::vector<SweepRow> sweep_alpha(
    std::span<const double> alphas,
    const std::function<MetricsReport(double)>& run_pipeline);

void write_sweep_csv(std::ostream& out, std::span<const SweepRow> rows);

}  // namespace emsa
