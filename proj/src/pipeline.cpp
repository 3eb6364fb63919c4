#include "emsa/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <thread>

#include "emsa/errors.hpp"
#include "emsa/rng.hpp"

namespace emsa {

Models train_models(std::span<const RawPair> corpus, const TrainOptions& opt) {
  if (corpus.empty()) throw DataError("cannot train: empty corpus");
  if (opt.judge_frac < 0.0 || opt.judge_frac >= 1.0) {
    throw UsageError("judge fraction must be in [0, 1)");
  }

  const size_t judge_count =
      static_cast<size_t>(opt.judge_frac * static_cast<double>(corpus.size()));
  const size_t train_count = corpus.size() - judge_count;
  if (train_count == 0) throw DataError("judge split leaves no training data");

  Models m;
  m.vocab = Vocabulary::build(corpus, opt.min_count);

  const auto train_raw = corpus.subspan(0, train_count);
  const auto pairs = encode_pairs(m.vocab, train_raw);

  std::vector<TokenSeq> responses;
  std::vector<Emotion> labels;
  responses.reserve(pairs.size());
  labels.reserve(pairs.size());
  for (const DialoguePair& p : pairs) {
    responses.push_back(p.response);
    labels.push_back(p.label);
  }

  NGramModel::Config lm_cfg;
  lm_cfg.order = opt.order;
  lm_cfg.add_k = opt.add_k;
  lm_cfg.lambdas = opt.lambdas;
  m.lm = NGramModel::train(responses, lm_cfg, m.vocab);
  m.translation = TranslationTable::train(pairs, opt.em_iters, m.vocab);
  m.classifier =
      EmotionClassifier::train(responses, labels, opt.laplace, m.vocab);

  if (judge_count > 0) {
    const auto judge_pairs =
        encode_pairs(m.vocab, corpus.subspan(train_count));
    std::vector<TokenSeq> judge_responses;
    std::vector<Emotion> judge_labels;
    for (const DialoguePair& p : judge_pairs) {
      judge_responses.push_back(p.response);
      judge_labels.push_back(p.label);
    }
    m.judge = EmotionClassifier::train(judge_responses, judge_labels,
                                       opt.laplace, m.vocab);
  }
  return m;
}

void save_models(const Models& models, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  models.vocab.save(dir / "vocab.tsv");
  models.lm.save(dir / "ngram.txt");
  models.translation.save(dir / "ibm1.txt");
  models.classifier.save(dir / "emotion.txt");
  if (models.judge) models.judge->save(dir / "emotion_judge.txt");
}

Models load_models(const std::filesystem::path& dir) {
  Models m;
  m.vocab = Vocabulary::load(dir / "vocab.tsv");
  m.lm = NGramModel::load(dir / "ngram.txt");
  m.translation = TranslationTable::load(dir / "ibm1.txt");
  m.classifier = EmotionClassifier::load(dir / "emotion.txt");
  const auto judge_path = dir / "emotion_judge.txt";
  if (std::filesystem::exists(judge_path)) {
    m.judge = EmotionClassifier::load(judge_path);
  }
  return m;
}

GenerationResult generate_response(const Models& models,
                                   const PipelineConfig& cfg,
                                   std::span<const TokenId> post, Emotion e,
                                   uint64_t seed) {
  const ConditionalScorer scorer(models.lm, models.translation, cfg.gamma);

  std::vector<Hypothesis> hyps;
  if (cfg.decoder == DecoderKind::BeamSearch) {
    hyps = beam_search(scorer, post, cfg.dbs.beam_size, cfg.dbs.max_len);
  } else {
    hyps = diverse_beam_search(scorer, post, cfg.dbs);
  }
  if (hyps.empty() || hyps.front().tokens.empty()) {
    throw InternalError("decoder produced no usable hypothesis");
  }

  GenerationResult out;
  out.initial = hyps.front().tokens;

  SearchContext ctx(cfg.objective, scorer, models.classifier, models.vocab,
                    post, e, cfg.sa);
  Rng rng(seed);
  SaResult sa = run_sa(ctx, out.initial, rng);
  out.best = std::move(sa.best);
  out.trace = std::move(sa.trace);
  return out;
}

EvalResult evaluate_split(const Models& models, const PipelineConfig& cfg,
                          std::span<const DialoguePair> test,
                          const EvalOptions& opt) {
  if (test.empty()) throw DataError("cannot evaluate: empty test split");
  const int threads =
      std::max(1, std::min(opt.threads, static_cast<int>(test.size())));

  EvalResult result;
  result.outputs.resize(test.size());

  // Per-pair seeds depend only on the base seed and the pair index, and
  // results land in index order, so the thread count cannot change them.
  std::atomic<size_t> next{0};
  const auto worker = [&] {
    for (size_t i = next.fetch_add(1); i < test.size();
         i = next.fetch_add(1)) {
      const DialoguePair& pair = test[i];
      const auto gen = generate_response(models, cfg, pair.post, pair.label,
                                         derive_seed(opt.seed, i));
      result.outputs[i] = gen.best.tokens;
    }
  };
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  std::vector<TokenSeq> references;
  std::vector<Emotion> targets;
  references.reserve(test.size());
  targets.reserve(test.size());
  for (const DialoguePair& p : test) {
    references.push_back(p.response);
    targets.push_back(p.label);
  }

  const EmotionClassifier& judge =
      opt.judge ? *opt.judge
                : (models.judge ? *models.judge : models.classifier);

  MetricsReport& r = result.report;
  r.pairs = test.size();
  r.bleu1 = bleu_n(result.outputs, references, 1);
  r.bleu2 = bleu_n(result.outputs, references, 2);
  r.dist1 = distinct_n(result.outputs, 1);
  r.dist2 = distinct_n(result.outputs, 2);
  r.emotion_accuracy = emotion_accuracy(judge, result.outputs, targets);

  if (opt.embeddings) {
    std::vector<std::vector<std::string>> cand_words, ref_words, post_words;
    for (size_t i = 0; i < test.size(); ++i) {
      cand_words.push_back(models.vocab.decode(result.outputs[i]));
      ref_words.push_back(models.vocab.decode(references[i]));
      post_words.push_back(models.vocab.decode(test[i].post));
    }
    r.embedding =
        embedding_metrics(*opt.embeddings, cand_words, ref_words, post_words);
  }
  return result;
}

}  // namespace emsa
