#include "emsa/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "emsa/errors.hpp"
#include "emsa/lm.hpp"

namespace emsa {

namespace {

// n-grams keyed through the shared NGramKey hasher.
using GramCounts = std::unordered_map<NGramKey, uint64_t, NGramKeyHash>;

GramCounts count_ngrams(const TokenSeq& y, int n) {
  GramCounts counts;
  if (static_cast<int>(y.size()) >= n) {
    for (size_t i = 0; i + n <= y.size(); ++i) {
      ++counts[NGramKey(std::span(y.data() + i, static_cast<size_t>(n)))];
    }
  }
  return counts;
}

double cosine(std::span<const double> a, std::span<const double> b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

// In-vocabulary word vectors of a sentence.
std::vector<const std::vector<float>*> lookup_all(
    const EmbeddingTable& table, const std::vector<std::string>& words) {
  std::vector<const std::vector<float>*> out;
  for (const auto& w : words) {
    if (const auto* v = table.find(w)) out.push_back(v);
  }
  return out;
}

std::vector<double> mean_vector(
    std::span<const std::vector<float>* const> vecs, size_t dim) {
  std::vector<double> mean(dim, 0.0);
  for (const auto* v : vecs) {
    for (size_t d = 0; d < dim; ++d) mean[d] += (*v)[d];
  }
  for (double& m : mean) m /= static_cast<double>(vecs.size());
  return mean;
}

std::vector<double> extreme_vector(
    std::span<const std::vector<float>* const> vecs, size_t dim) {
  std::vector<double> ext(dim, 0.0);
  for (const auto* v : vecs) {
    for (size_t d = 0; d < dim; ++d) {
      if (std::abs((*v)[d]) > std::abs(ext[d])) ext[d] = (*v)[d];
    }
  }
  return ext;
}

double greedy_directional(std::span<const std::vector<float>* const> from,
                          std::span<const std::vector<float>* const> to) {
  double sum = 0.0;
  for (const auto* f : from) {
    std::vector<double> fd(f->begin(), f->end());
    double best = -1.0;
    for (const auto* t : to) {
      std::vector<double> td(t->begin(), t->end());
      best = std::max(best, cosine(fd, td));
    }
    sum += best;
  }
  return sum / static_cast<double>(from.size());
}

}  // namespace

double bleu_n(std::span<const TokenSeq> candidates,
              std::span<const TokenSeq> references, int n) {
  if (candidates.empty()) throw DataError("BLEU: empty corpus");
  if (candidates.size() != references.size()) {
    throw DataError("BLEU: candidate/reference count mismatch");
  }
  if (n < 1) throw UsageError("BLEU order must be >= 1");

  uint64_t cand_len = 0, ref_len = 0;
  std::vector<uint64_t> matches(n, 0), totals(n, 0);
  for (size_t i = 0; i < candidates.size(); ++i) {
    cand_len += candidates[i].size();
    ref_len += references[i].size();
    for (int k = 1; k <= n; ++k) {
      const auto cand = count_ngrams(candidates[i], k);
      const auto ref = count_ngrams(references[i], k);
      for (const auto& [gram, count] : cand) {
        totals[k - 1] += count;
        const auto it = ref.find(gram);
        if (it != ref.end()) {
          matches[k - 1] += std::min(count, it->second);  // clipped
        }
      }
    }
  }

  double log_precision = 0.0;
  for (int k = 1; k <= n; ++k) {
    if (totals[k - 1] == 0 || matches[k - 1] == 0) return 0.0;
    log_precision += std::log(static_cast<double>(matches[k - 1]) /
                              static_cast<double>(totals[k - 1]));
  }
  log_precision /= n;

  double bp = 1.0;
  if (cand_len == 0) return 0.0;
  if (cand_len < ref_len) {
    bp = std::exp(1.0 - static_cast<double>(ref_len) /
                            static_cast<double>(cand_len));
  }
  return 100.0 * bp * std::exp(log_precision);
}

double distinct_n(std::span<const TokenSeq> outputs, int n) {
  if (outputs.empty()) throw DataError("distinct-n: empty output set");
  if (n < 1) throw UsageError("distinct-n order must be >= 1");
  GramCounts seen;
  uint64_t total = 0;
  for (const TokenSeq& y : outputs) {
    for (const auto& [gram, count] : count_ngrams(y, n)) {
      seen[gram] += count;
      total += count;
    }
  }
  if (total == 0) return 0.0;
  return static_cast<double>(seen.size()) / static_cast<double>(total);
}

double emotion_accuracy(const EmotionClassifier& judge,
                        std::span<const TokenSeq> outputs,
                        std::span<const Emotion> targets) {
  if (outputs.size() != targets.size()) {
    throw DataError("emotion accuracy: output/target count mismatch");
  }
  if (outputs.empty()) throw DataError("emotion accuracy: empty output set");
  size_t hits = 0;
  for (size_t i = 0; i < outputs.size(); ++i) {
    if (judge.classify(outputs[i]) == targets[i]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(outputs.size());
}

EmbeddingTable EmbeddingTable::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open embedding file: " + path.string());

  EmbeddingTable table;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string word;
    ss >> word;
    std::vector<float> vec;
    float v = 0.0f;
    while (ss >> v) vec.push_back(v);

    // Optional word2vec-style `count dim` header.
    if (line_no == 1 && vec.size() == 1) {
      bool numeric = !word.empty() &&
                     word.find_first_not_of("0123456789") == std::string::npos;
      if (numeric) {
        table.dim_ = static_cast<size_t>(vec[0]);
        continue;
      }
    }
    if (vec.empty()) {
      throw DataError("embedding line " + std::to_string(line_no) +
                      ": no vector values");
    }
    if (table.dim_ == 0) table.dim_ = vec.size();
    if (vec.size() != table.dim_) {
      throw DataError("embedding line " + std::to_string(line_no) +
                      ": dimension mismatch");
    }
    table.vectors_.emplace(std::move(word), std::move(vec));
  }
  if (table.vectors_.empty()) {
    throw DataError("embedding file has no vectors: " + path.string());
  }
  return table;
}

const std::vector<float>* EmbeddingTable::find(const std::string& word) const {
  const auto it = vectors_.find(word);
  return it == vectors_.end() ? nullptr : &it->second;
}

void EmbeddingTable::insert(const std::string& word, std::vector<float> vec) {
  if (dim_ == 0) dim_ = vec.size();
  if (vec.size() != dim_) throw DataError("embedding insert: dimension mismatch");
  vectors_[word] = std::move(vec);
}

EmbeddingScores embedding_metrics(
    const EmbeddingTable& table,
    std::span<const std::vector<std::string>> candidates,
    std::span<const std::vector<std::string>> references,
    std::span<const std::vector<std::string>> posts) {
  if (candidates.size() != references.size() ||
      candidates.size() != posts.size()) {
    throw DataError("embedding metrics: corpus size mismatch");
  }
  if (candidates.empty()) throw DataError("embedding metrics: empty corpus");

  EmbeddingScores out;
  const size_t dim = table.dim();
  for (size_t i = 0; i < candidates.size(); ++i) {
    const auto cand = lookup_all(table, candidates[i]);
    const auto ref = lookup_all(table, references[i]);
    const auto post = lookup_all(table, posts[i]);
    if (cand.empty() || ref.empty() || post.empty()) {
      ++out.skipped;
      continue;
    }
    ++out.scored;
    out.average += cosine(mean_vector(cand, dim), mean_vector(ref, dim));
    out.greedy += 0.5 * (greedy_directional(cand, ref) +
                         greedy_directional(ref, cand));
    out.extreme += cosine(extreme_vector(cand, dim), extreme_vector(ref, dim));
    out.coherence += cosine(mean_vector(cand, dim), mean_vector(post, dim));
  }
  if (out.scored > 0) {
    const double n = static_cast<double>(out.scored);
    out.average /= n;
    out.greedy /= n;
    out.extreme /= n;
    out.coherence /= n;
  }
  return out;
}

std::vector<SweepRow> sweep_alpha(
    std::span<const double> alphas,
    const std::function<MetricsReport(double)>& run_pipeline) {
  std::vector<SweepRow> rows;
  rows.reserve(alphas.size());
  for (double alpha : alphas) {
    const MetricsReport r = run_pipeline(alpha);
    rows.push_back(SweepRow{alpha, r.bleu1, r.bleu2, r.dist1, r.dist2,
                            r.emotion_accuracy});
  }
  return rows;
}

void write_sweep_csv(std::ostream& out, std::span<const SweepRow> rows) {
  out << "alpha,bleu1,bleu2,dist1,dist2,emotion_accuracy\n";
  char buf[160];
  for (const SweepRow& r : rows) {
    std::snprintf(buf, sizeof(buf), "%g,%.6f,%.6f,%.6f,%.6f,%.6f\n", r.alpha,
                  r.bleu1, r.bleu2, r.dist1, r.dist2, r.emotion_accuracy);
    out << buf;
  }
}

}  // namespace emsa
