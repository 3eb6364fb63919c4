#include <algorithm>
#include <cmath>
#include <fstream>

#include "emsa/errors.hpp"
#include "emsa/lm.hpp"
#include "emsa/util.hpp"

namespace emsa {

TranslationTable TranslationTable::train(std::span<const DialoguePair> pairs,
                                         int iterations,
                                         const Vocabulary& vocab) {
  if (pairs.empty()) throw DataError("cannot train translation table: empty corpus");
  if (iterations < 1) throw UsageError("EM iterations must be >= 1");

  TranslationTable t;
  t.events_ = vocab.num_scorable();
  const double uniform = 1.0 / static_cast<double>(t.events_);

  // Only co-occurring (source, target) entries ever receive posterior mass,
  // so the table holds exactly those; they start at the uniform value.
  for (const DialoguePair& p : pairs) {
    for (TokenId y : p.response) {
      t.rows_[kNull].emplace(y, uniform);
      for (TokenId x : p.post) t.rows_[x].emplace(y, uniform);
    }
  }

  for (int iter = 0; iter < iterations; ++iter) {
    std::unordered_map<TokenId, std::unordered_map<TokenId, double>> counts;
    std::unordered_map<TokenId, double> totals;
    double loglik = 0.0;

    for (const DialoguePair& p : pairs) {
      const double s1 = static_cast<double>(p.post.size()) + 1.0;
      for (TokenId y : p.response) {
        double denom = t.rows_.at(kNull).at(y);
        for (TokenId x : p.post) denom += t.rows_.at(x).at(y);
        loglik += std::log(denom / s1);

        const auto add = [&](TokenId x) {
          const double c = t.rows_.at(x).at(y) / denom;
          counts[x][y] += c;
          totals[x] += c;
        };
        add(kNull);
        for (TokenId x : p.post) add(x);
      }
    }
    t.loglik_.push_back(loglik);

    for (auto& [x, row] : t.rows_) {
      const double total = totals.at(x);
      const auto& row_counts = counts.at(x);
      for (auto& [y, prob] : row) {
        prob = row_counts.at(y) / total;
      }
    }
  }
  return t;
}

double TranslationTable::lex_prob(TokenId src, TokenId tgt) const {
  const auto row = rows_.find(src);
  if (row == rows_.end()) {
    // Source token never seen in training: the row was never updated away
    // from its uniform initialization.
    return 1.0 / static_cast<double>(events_);
  }
  const auto it = row->second.find(tgt);
  return it == row->second.end() ? 0.0 : it->second;
}

double TranslationTable::lex_term_logprob(std::span<const TokenId> x,
                                          TokenId y_t) const {
  double sum = lex_prob(kNull, y_t);
  for (TokenId x_s : x) sum += lex_prob(x_s, y_t);
  return std::log(sum / (static_cast<double>(x.size()) + 1.0));
}

double TranslationTable::logprob(std::span<const TokenId> x,
                                 std::span<const TokenId> y) const {
  double sum = 0.0;
  for (TokenId y_t : y) sum += lex_term_logprob(x, y_t);
  return sum;
}

void TranslationTable::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write translation table: " + path.string());
  out << "emsa-ibm1 1\n";
  out << "events " << events_ << '\n';
  out << "iterations " << loglik_.size() << '\n';
  out << "loglik";
  for (double l : loglik_) out << ' ' << format_double(l);
  out << '\n';

  std::vector<TokenId> srcs;
  srcs.reserve(rows_.size());
  for (const auto& [x, row] : rows_) srcs.push_back(x);
  std::sort(srcs.begin(), srcs.end());

  size_t entries = 0;
  for (const auto& [x, row] : rows_) entries += row.size();
  out << "entries " << entries << '\n';
  for (TokenId x : srcs) {
    const auto& row = rows_.at(x);
    std::vector<TokenId> tgts;
    tgts.reserve(row.size());
    for (const auto& [y, p] : row) tgts.push_back(y);
    std::sort(tgts.begin(), tgts.end());
    for (TokenId y : tgts) {
      out << x << ' ' << y << ' ' << format_double(row.at(y)) << '\n';
    }
  }
}

TranslationTable TranslationTable::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open translation table: " + path.string());
  std::string magic;
  int version = 0;
  in >> magic >> version;
  if (magic != "emsa-ibm1" || version != 1) {
    throw DataError("not a translation table file: " + path.string());
  }

  TranslationTable t;
  std::string key;
  in >> key >> t.events_;
  if (key != "events") throw DataError("bad translation table header: events");
  size_t iterations = 0;
  in >> key >> iterations;
  if (key != "iterations") {
    throw DataError("bad translation table header: iterations");
  }
  in >> key;
  if (key != "loglik") throw DataError("bad translation table header: loglik");
  t.loglik_.resize(iterations);
  for (double& l : t.loglik_) in >> l;
  size_t entries = 0;
  in >> key >> entries;
  if (key != "entries" || !in) {
    throw DataError("bad translation table header: entries");
  }
  for (size_t i = 0; i < entries; ++i) {
    TokenId x = 0, y = 0;
    double p = 0.0;
    in >> x >> y >> p;
    if (!in) throw DataError("truncated translation table: " + path.string());
    t.rows_[x][y] = p;
  }
  return t;
}

}  // namespace emsa
