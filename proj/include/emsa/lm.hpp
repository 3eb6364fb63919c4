#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <unordered_map>
#include <vector>

#include "emsa/corpus.hpp"

namespace emsa {

inline constexpr int kMaxNgramOrder = 8;

// Fixed-capacity id tuple used as a hash key for n-gram histories.
struct NGramKey {
  std::array<TokenId, kMaxNgramOrder> ids{};
  uint8_t len = 0;

  NGramKey() = default;
  NGramKey(std::span<const TokenId> span) : len(static_cast<uint8_t>(span.size())) {
    for (size_t i = 0; i < span.size(); ++i) ids[i] = span[i];
  }
  bool operator==(const NGramKey& o) const {
    if (len != o.len) return false;
    for (uint8_t i = 0; i < len; ++i) {
      if (ids[i] != o.ids[i]) return false;
    }
    return true;
  }
};

struct NGramKeyHash {
  size_t operator()(const NGramKey& k) const {
    // FNV-1a over the used ids.
    uint64_t h = 14695981039346656037ull;
    for (uint8_t i = 0; i < k.len; ++i) {
      uint32_t v = k.ids[i];
      for (int b = 0; b < 4; ++b) {
        h ^= (v >> (8 * b)) & 0xFF;
        h *= 1099511628211ull;
      }
    }
    h ^= k.len;
    h *= 1099511628211ull;
    return static_cast<size_t>(h);
  }
};

// Interpolated add-k n-gram language model over responses. The prediction
// event space is every scorable token plus EOS; BOS pads histories and PAD
// is never predicted, so each conditional distribution sums to one by
// construction. Immutable once trained; safe for concurrent reads.
class NGramModel {
 public:
  struct Config {
    int order = 3;
    double add_k = 0.01;
    // Per-order interpolation weights, lowest order first; must sum to 1.
    // Empty selects the default: 0.6 on the top order, the rest split
    // evenly across lower orders.
    std::vector<double> lambdas;
  };

  static NGramModel train(std::span<const TokenSeq> responses,
                          const Config& config, const Vocabulary& vocab);

  int order() const { return order_; }
  double add_k() const { return add_k_; }
  std::span<const double> lambdas() const { return lambdas_; }
  size_t event_count() const { return events_; }
  size_t vocab_size() const { return vocab_size_; }

  // log P(event at pos | preceding tokens), with pos == y.size() meaning
  // the terminal EOS event.
  double term_logprob(std::span<const TokenId> y, size_t pos) const;

  // Distribution over the next event given a prefix, indexed by token id.
  // Entries for BOS and PAD are exactly zero; the rest sum to one.
  std::vector<double> next_token_distribution(
      std::span<const TokenId> prefix) const;

  // Sum of stepwise term log-probabilities including the EOS term.
  double sequence_logprob(std::span<const TokenId> y) const;

  void save(const std::filesystem::path& path) const;
  static NGramModel load(const std::filesystem::path& path);

  NGramModel() = default;

 private:
  struct Row {
    uint64_t total = 0;
    std::unordered_map<TokenId, uint64_t> counts;
  };
  using RowMap = std::unordered_map<NGramKey, Row, NGramKeyHash>;

  double order_prob(int k, const NGramKey& hist, TokenId event) const;
  NGramKey history_key(std::span<const TokenId> y, size_t pos, int k) const;

  int order_ = 0;
  double add_k_ = 0.0;
  std::vector<double> lambdas_;
  size_t events_ = 0;
  size_t vocab_size_ = 0;
  std::vector<RowMap> rows_;  // index k-1 holds the order-k tables
};

// IBM Model 1 lexical translation table with a NULL source token, trained
// by EM. Rows are proper distributions over scorable response tokens. A
// source token never seen in training keeps its uniform initialization;
// a response token never seen with a given source has probability zero.
class TranslationTable {
 public:
  static constexpr TokenId kNull = 0xFFFFFFFFu;

  static TranslationTable train(std::span<const DialoguePair> pairs,
                                int iterations, const Vocabulary& vocab);

  size_t event_count() const { return events_; }
  int iterations() const { return static_cast<int>(loglik_.size()); }
  // Corpus log-likelihood measured at the start of each EM iteration;
  // non-decreasing by the EM guarantee.
  std::span<const double> iteration_logliks() const { return loglik_; }

  double lex_prob(TokenId src, TokenId tgt) const;

  // log[(1/(S+1)) * (tr(y|NULL) + sum_s tr(y|x_s))]; -inf when the token was
  // never seen as a response token.
  double lex_term_logprob(std::span<const TokenId> x, TokenId y_t) const;

  // Sum of lexical terms over y; zero for empty y.
  double logprob(std::span<const TokenId> x, std::span<const TokenId> y) const;

  void save(const std::filesystem::path& path) const;
  static TranslationTable load(const std::filesystem::path& path);

  TranslationTable() = default;

 private:
  std::unordered_map<TokenId, std::unordered_map<TokenId, double>> rows_;
  std::vector<double> loglik_;
  size_t events_ = 0;
};

// The conditional response score: a gamma-mixture of n-gram fluency and
// Model-1 adequacy, both in log space.
class ConditionalScorer {
 public:
  ConditionalScorer(const NGramModel& lm, const TranslationTable& translation,
                    double gamma);

  double gamma() const { return gamma_; }
  const NGramModel& lm() const { return *lm_; }
  const TranslationTable& translation() const { return *translation_; }

  // (1 - gamma) * lm.sequence_logprob(y) + gamma * translation.logprob(x, y)
  double logprob(std::span<const TokenId> x, std::span<const TokenId> y) const;

  // Per-token Model-1 contribution for every token id given this post;
  // entries for reserved ids other than UNK are meaningless.
  std::vector<double> lex_terms(std::span<const TokenId> x,
                                size_t vocab_size) const;

 private:
  const NGramModel* lm_;
  const TranslationTable* translation_;
  double gamma_;
};

}  // namespace emsa
