#include "emsa/emotion.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "emsa/errors.hpp"
#include "emsa/util.hpp"

namespace emsa {

void EmotionClassifier::finalize_priors() {
  uint64_t total = 0;
  bool missing = false;
  for (uint64_t c : doc_counts_) {
    total += c;
    if (c == 0) missing = true;
  }
  uniform_prior_ = missing;
  for (int e = 0; e < kNumEmotions; ++e) {
    log_prior_[e] = missing
                        ? -std::log(static_cast<double>(kNumEmotions))
                        : std::log(static_cast<double>(doc_counts_[e]) /
                                   static_cast<double>(total));
  }
}

EmotionClassifier EmotionClassifier::train(
    std::span<const TokenSeq> utterances, std::span<const Emotion> labels,
    double laplace, const Vocabulary& vocab) {
  if (utterances.empty()) {
    throw DataError("cannot train emotion classifier: empty training set");
  }
  if (utterances.size() != labels.size()) {
    throw InternalError("emotion training: utterance/label count mismatch");
  }
  if (!(laplace > 0.0)) throw UsageError("laplace constant must be positive");

  EmotionClassifier clf;
  clf.laplace_ = laplace;
  clf.events_ = vocab.num_scorable();
  for (size_t i = 0; i < utterances.size(); ++i) {
    const int e = static_cast<int>(labels[i]);
    ++clf.doc_counts_[e];
    for (TokenId t : utterances[i]) {
      ++clf.counts_[e][t];
      ++clf.token_totals_[e];
    }
  }
  clf.finalize_priors();
  return clf;
}

double EmotionClassifier::token_loglik(Emotion e, TokenId token) const {
  const int c = static_cast<int>(e);
  const auto it = counts_[c].find(token);
  const uint64_t count = it == counts_[c].end() ? 0 : it->second;
  return std::log((static_cast<double>(count) + laplace_) /
                  (static_cast<double>(token_totals_[c]) +
                   laplace_ * static_cast<double>(events_)));
}

std::array<double, kNumEmotions> EmotionClassifier::class_scores(
    std::span<const TokenId> u) const {
  std::array<double, kNumEmotions> scores = log_prior_;
  for (TokenId t : u) {
    for (int e = 0; e < kNumEmotions; ++e) {
      scores[e] += token_loglik(static_cast<Emotion>(e), t);
    }
  }
  return scores;
}

std::array<double, kNumEmotions> EmotionClassifier::posterior(
    std::span<const TokenId> u) const {
  const auto scores = class_scores(u);
  const double z = logsumexp(scores);
  std::array<double, kNumEmotions> post{};
  for (int e = 0; e < kNumEmotions; ++e) post[e] = std::exp(scores[e] - z);
  return post;
}

double EmotionClassifier::log_posterior(Emotion e,
                                        std::span<const TokenId> u) const {
  const auto scores = class_scores(u);
  return scores[static_cast<int>(e)] - logsumexp(scores);
}

Emotion EmotionClassifier::classify(std::span<const TokenId> u) const {
  const auto scores = class_scores(u);
  int best = 0;
  for (int e = 1; e < kNumEmotions; ++e) {
    if (scores[e] > scores[best]) best = e;
  }
  return static_cast<Emotion>(best);
}

void EmotionClassifier::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write emotion model: " + path.string());
  out << "emsa-emotion 1\n";
  out << "laplace " << format_double(laplace_) << '\n';
  out << "events " << events_ << '\n';
  out << "uniform_prior_fallback " << (uniform_prior_ ? 1 : 0) << '\n';
  out << "docs";
  for (uint64_t c : doc_counts_) out << ' ' << c;
  out << '\n';
  size_t entries = 0;
  for (const auto& m : counts_) entries += m.size();
  out << "entries " << entries << '\n';
  for (int e = 0; e < kNumEmotions; ++e) {
    std::vector<TokenId> tokens;
    tokens.reserve(counts_[e].size());
    for (const auto& [t, c] : counts_[e]) tokens.push_back(t);
    std::sort(tokens.begin(), tokens.end());
    for (TokenId t : tokens) {
      out << e << ' ' << t << ' ' << counts_[e].at(t) << '\n';
    }
  }
}

EmotionClassifier EmotionClassifier::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open emotion model: " + path.string());
  std::string magic;
  int version = 0;
  in >> magic >> version;
  if (magic != "emsa-emotion" || version != 1) {
    throw DataError("not an emotion model file: " + path.string());
  }

  EmotionClassifier clf;
  std::string key;
  in >> key >> clf.laplace_;
  if (key != "laplace") throw DataError("bad emotion model header: laplace");
  in >> key >> clf.events_;
  if (key != "events") throw DataError("bad emotion model header: events");
  int fallback = 0;
  in >> key >> fallback;
  if (key != "uniform_prior_fallback") {
    throw DataError("bad emotion model header: uniform_prior_fallback");
  }
  in >> key;
  if (key != "docs") throw DataError("bad emotion model header: docs");
  for (uint64_t& c : clf.doc_counts_) in >> c;
  size_t entries = 0;
  in >> key >> entries;
  if (key != "entries" || !in) {
    throw DataError("bad emotion model header: entries");
  }
  for (size_t i = 0; i < entries; ++i) {
    int e = 0;
    TokenId t = 0;
    uint64_t c = 0;
    in >> e >> t >> c;
    if (!in || e < 0 || e >= kNumEmotions) {
      throw DataError("bad emotion model record in " + path.string());
    }
    clf.counts_[e][t] += c;
    clf.token_totals_[e] += c;
  }
  clf.finalize_priors();
  if (clf.uniform_prior_ != (fallback != 0)) {
    throw DataError("emotion model header disagrees with class counts");
  }
  return clf;
}

}  // namespace emsa
