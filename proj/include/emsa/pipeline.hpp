#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "emsa/anneal.hpp"
#include "emsa/corpus.hpp"
#include "emsa/decode.hpp"
#include "emsa/emotion.hpp"
#include "emsa/eval.hpp"
#include "emsa/lm.hpp"
#include "emsa/objective.hpp"

namespace emsa {

struct TrainOptions {
  int min_count = 2;
  int order = 3;
  double add_k = 0.01;
  std::vector<double> lambdas;  // empty = default weighting
  int em_iters = 5;
  double laplace = 1.0;
  // Tail fraction of the corpus held out to train the evaluation judge;
  // 0 disables the judge model.
  double judge_frac = 0.2;
};

struct Models {
  Vocabulary vocab;
  NGramModel lm;
  TranslationTable translation;
  EmotionClassifier classifier;
  std::optional<EmotionClassifier> judge;
};

Models train_models(std::span<const RawPair> corpus, const TrainOptions& opt);

// Model files inside a directory: vocab.tsv, ngram.txt, ibm1.txt,
// emotion.txt and, when present, emotion_judge.txt.
void save_models(const Models& models, const std::filesystem::path& dir);
Models load_models(const std::filesystem::path& dir);

enum class DecoderKind { BeamSearch, DiverseBeamSearch };

struct PipelineConfig {
  ObjectiveConfig objective;
  SaConfig sa;
  DbsConfig dbs;
  double gamma = 0.3;
  DecoderKind decoder = DecoderKind::BeamSearch;
};

struct GenerationResult {
  TokenSeq initial;  // best decoder hypothesis, the SA starting point
  ScoredCandidate best;
  SaTrace trace;
};

// decode -> anneal for one post. All randomness comes from the supplied
// seed; identical inputs and seed give identical results.
GenerationResult generate_response(const Models& models,
                                   const PipelineConfig& cfg,
                                   std::span<const TokenId> post, Emotion e,
                                   uint64_t seed);

struct EvalOptions {
  int threads = 1;
  uint64_t seed = 42;
  const EmotionClassifier* judge = nullptr;  // default: models.judge or classifier
  const EmbeddingTable* embeddings = nullptr;
};

struct EvalResult {
  MetricsReport report;
  std::vector<TokenSeq> outputs;  // ordered by input pair index
};

// Generates a response for every test pair (target = the pair's label,
// per-pair seeds derived from the base seed and pair index) and scores the
// corpus. Thread count never affects the results.
EvalResult evaluate_split(const Models& models, const PipelineConfig& cfg,
                          std::span<const DialoguePair> test,
                          const EvalOptions& opt);

}  // namespace emsa
