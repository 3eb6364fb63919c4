#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "emsa/errors.hpp"
#include "emsa/lm.hpp"
#include "emsa/util.hpp"

namespace emsa {

namespace {

std::vector<double> default_lambdas(int order) {
  if (order == 1) return {1.0};
  std::vector<double> l(order, 0.4 / (order - 1));
  l.back() = 0.6;
  return l;
}

void validate_lambdas(const std::vector<double>& lambdas, int order) {
  if (static_cast<int>(lambdas.size()) != order) {
    throw UsageError("need one interpolation weight per n-gram order");
  }
  double sum = 0.0;
  for (double l : lambdas) {
    if (l < 0.0) throw UsageError("interpolation weights must be nonnegative");
    sum += l;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw UsageError("interpolation weights must sum to 1");
  }
}

}  // namespace

NGramKey NGramModel::history_key(std::span<const TokenId> y, size_t pos,
                                 int k) const {
  NGramKey key;
  key.len = static_cast<uint8_t>(k - 1);
  for (int j = 0; j < k - 1; ++j) {
    const long idx = static_cast<long>(pos) - (k - 1) + j;
    key.ids[j] = idx < 0 ? Vocabulary::kBos : y[static_cast<size_t>(idx)];
  }
  return key;
}

NGramModel NGramModel::train(std::span<const TokenSeq> responses,
                             const Config& config, const Vocabulary& vocab) {
  if (responses.empty()) throw DataError("cannot train n-gram model: empty training set");
  if (config.order < 1) throw UsageError("n-gram order must be >= 1");
  if (config.order > kMaxNgramOrder) {
    throw UsageError("n-gram order must be <= " +
                     std::to_string(kMaxNgramOrder));
  }
  if (!(config.add_k > 0.0)) throw UsageError("add_k must be positive");

  NGramModel m;
  m.order_ = config.order;
  m.add_k_ = config.add_k;
  m.lambdas_ =
      config.lambdas.empty() ? default_lambdas(config.order) : config.lambdas;
  validate_lambdas(m.lambdas_, config.order);
  m.events_ = vocab.num_events();
  m.vocab_size_ = vocab.size();
  m.rows_.resize(config.order);

  for (const TokenSeq& y : responses) {
    for (size_t pos = 0; pos <= y.size(); ++pos) {
      const TokenId event = pos < y.size() ? y[pos] : Vocabulary::kEos;
      for (int k = 1; k <= config.order; ++k) {
        Row& row = m.rows_[k - 1][m.history_key(y, pos, k)];
        ++row.counts[event];
        ++row.total;
      }
    }
  }
  return m;
}

double NGramModel::order_prob(int k, const NGramKey& hist,
                              TokenId event) const {
  const RowMap& table = rows_[k - 1];
  const auto it = table.find(hist);
  uint64_t total = 0;
  uint64_t count = 0;
  if (it != table.end()) {
    total = it->second.total;
    const auto c = it->second.counts.find(event);
    if (c != it->second.counts.end()) count = c->second;
  }
  return (static_cast<double>(count) + add_k_) /
         (static_cast<double>(total) + add_k_ * static_cast<double>(events_));
}

double NGramModel::term_logprob(std::span<const TokenId> y, size_t pos) const {
  const TokenId event = pos < y.size() ? y[pos] : Vocabulary::kEos;
  double p = 0.0;
  for (int k = 1; k <= order_; ++k) {
    p += lambdas_[k - 1] * order_prob(k, history_key(y, pos, k), event);
  }
  return std::log(p);
}

std::vector<double> NGramModel::next_token_distribution(
    std::span<const TokenId> prefix) const {
  std::vector<double> p(vocab_size_, 0.0);
  const size_t pos = prefix.size();
  // Every event shares the smoothing baseline; observed events add their
  // count mass on top.
  double base = 0.0;
  for (int k = 1; k <= order_; ++k) {
    const NGramKey hist = history_key(prefix, pos, k);
    const auto it = rows_[k - 1].find(hist);
    const uint64_t total = it == rows_[k - 1].end() ? 0 : it->second.total;
    const double denom = static_cast<double>(total) +
                         add_k_ * static_cast<double>(events_);
    base += lambdas_[k - 1] * add_k_ / denom;
    if (it != rows_[k - 1].end()) {
      for (const auto& [event, count] : it->second.counts) {
        p[event] += lambdas_[k - 1] * static_cast<double>(count) / denom;
      }
    }
  }
  for (size_t id = 0; id < vocab_size_; ++id) {
    if (id == Vocabulary::kBos || id == Vocabulary::kPad) {
      p[id] = 0.0;
    } else {
      p[id] += base;
    }
  }
  return p;
}

double NGramModel::sequence_logprob(std::span<const TokenId> y) const {
  double sum = 0.0;
  for (size_t pos = 0; pos <= y.size(); ++pos) {
    sum += term_logprob(y, pos);
  }
  return sum;
}

void NGramModel::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write n-gram model: " + path.string());
  out << "emsa-ngram 1\n";
  out << "order " << order_ << '\n';
  out << "add_k " << format_double(add_k_) << '\n';
  out << "lambdas";
  for (double l : lambdas_) out << ' ' << format_double(l);
  out << '\n';
  out << "events " << events_ << '\n';
  out << "vocab " << vocab_size_ << '\n';

  // One record per (history, event) pair, sorted for stable output.
  std::vector<std::vector<TokenId>> lines;
  for (int k = 1; k <= order_; ++k) {
    std::vector<std::vector<TokenId>> grams;
    for (const auto& [hist, row] : rows_[k - 1]) {
      for (const auto& [event, count] : row.counts) {
        std::vector<TokenId> g;
        g.reserve(k + 2);
        g.push_back(static_cast<TokenId>(k));
        for (uint8_t i = 0; i < hist.len; ++i) g.push_back(hist.ids[i]);
        g.push_back(event);
        g.push_back(static_cast<TokenId>(count));
        if (count >> 32) {
          throw InternalError("n-gram count exceeds serializable range");
        }
        grams.push_back(std::move(g));
      }
    }
    std::sort(grams.begin(), grams.end());
    for (auto& g : grams) lines.push_back(std::move(g));
  }
  out << "grams " << lines.size() << '\n';
  for (const auto& g : lines) {
    for (size_t i = 0; i < g.size(); ++i) {
      if (i > 0) out << ' ';
      out << g[i];
    }
    out << '\n';
  }
}

NGramModel NGramModel::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open n-gram model: " + path.string());
  std::string magic;
  int version = 0;
  in >> magic >> version;
  if (magic != "emsa-ngram" || version != 1) {
    throw DataError("not an n-gram model file: " + path.string());
  }

  NGramModel m;
  std::string key;
  in >> key >> m.order_;
  if (key != "order" || m.order_ < 1 || m.order_ > kMaxNgramOrder) {
    throw DataError("bad n-gram model header: order");
  }
  in >> key >> m.add_k_;
  if (key != "add_k") throw DataError("bad n-gram model header: add_k");
  in >> key;
  if (key != "lambdas") throw DataError("bad n-gram model header: lambdas");
  m.lambdas_.resize(m.order_);
  for (double& l : m.lambdas_) in >> l;
  in >> key >> m.events_;
  if (key != "events") throw DataError("bad n-gram model header: events");
  in >> key >> m.vocab_size_;
  if (key != "vocab") throw DataError("bad n-gram model header: vocab");
  size_t num_grams = 0;
  in >> key >> num_grams;
  if (key != "grams" || !in) throw DataError("bad n-gram model header: grams");

  m.rows_.resize(m.order_);
  for (size_t i = 0; i < num_grams; ++i) {
    int k = 0;
    in >> k;
    if (!in || k < 1 || k > m.order_) {
      throw DataError("bad n-gram record in " + path.string());
    }
    NGramKey hist;
    hist.len = static_cast<uint8_t>(k - 1);
    for (int j = 0; j < k - 1; ++j) in >> hist.ids[j];
    TokenId event = 0;
    uint64_t count = 0;
    in >> event >> count;
    if (!in) throw DataError("truncated n-gram record in " + path.string());
    Row& row = m.rows_[k - 1][hist];
    row.counts[event] += count;
    row.total += count;
  }
  return m;
}

ConditionalScorer::ConditionalScorer(const NGramModel& lm,
                                     const TranslationTable& translation,
                                     double gamma)
    : lm_(&lm), translation_(&translation), gamma_(gamma) {
  if (gamma < 0.0 || gamma > 1.0) {
    throw UsageError("gamma must be in [0, 1]");
  }
}

double ConditionalScorer::logprob(std::span<const TokenId> x,
                                  std::span<const TokenId> y) const {
  return (1.0 - gamma_) * lm_->sequence_logprob(y) +
         gamma_ * translation_->logprob(x, y);
}

std::vector<double> ConditionalScorer::lex_terms(std::span<const TokenId> x,
                                                 size_t vocab_size) const {
  std::vector<double> terms(vocab_size, kNegInf);
  for (size_t id = 0; id < vocab_size; ++id) {
    if (Vocabulary::is_reserved(static_cast<TokenId>(id)) &&
        id != Vocabulary::kUnk) {
      continue;
    }
    terms[id] = translation_->lex_term_logprob(x, static_cast<TokenId>(id));
  }
  return terms;
}

}  // namespace emsa
