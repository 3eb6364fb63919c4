#include "emsa/decode.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "emsa/errors.hpp"
#include "emsa/util.hpp"

namespace emsa {

namespace {

bool better(const Hypothesis& a, const Hypothesis& b) {
  if (a.log_prob != b.log_prob) return a.log_prob > b.log_prob;
  return a.tokens < b.tokens;  // deterministic tie-break
}

struct Candidate {
  size_t parent;
  TokenId event;  // kEos finishes the hypothesis
  double log_prob;
  double selection_score;  // log_prob minus any diversity penalty
};

// One beam of the given width advanced to completion. step_penalty(event)
// is subtracted from candidate scores during selection; on_select reports
// the events this beam chose at the current step.
class Beam {
 public:
  Beam(const ConditionalScorer& scorer, std::span<const TokenId> x, int width,
       int max_len)
      : scorer_(scorer),
        x_(x),
        width_(width),
        max_len_(max_len),
        gamma_(scorer.gamma()),
        lex_terms_(scorer.lex_terms(x, scorer.lm().vocab_size())) {
    live_.push_back(Hypothesis{});
  }

  bool done() const { return live_.empty(); }

  template <typename PenaltyFn, typename SelectFn>
  void step(int step_index, PenaltyFn&& penalty, SelectFn&& on_select) {
    if (live_.empty()) return;
    // Live hypotheses at step i all have length i; once they reach max_len
    // only the terminal EOS expansion remains.
    const bool at_cap = step_index >= max_len_;
    std::vector<Candidate> cands;
    for (size_t h = 0; h < live_.size(); ++h) {
      const auto dist = scorer_.lm().next_token_distribution(live_[h].tokens);
      for (size_t id = 0; id < dist.size(); ++id) {
        const TokenId event = static_cast<TokenId>(id);
        if (dist[id] <= 0.0) continue;  // BOS / PAD
        if (event == Vocabulary::kEos && live_[h].tokens.empty()) continue;
        if (at_cap && event != Vocabulary::kEos) continue;
        const double term =
            event == Vocabulary::kEos
                ? (1.0 - gamma_) * std::log(dist[id])
                : (1.0 - gamma_) * std::log(dist[id]) + gamma_ * lex_terms_[id];
        const double score = live_[h].log_prob + term;
        cands.push_back(Candidate{h, event, score, score - penalty(event)});
      }
    }
    std::sort(cands.begin(), cands.end(),
              [&](const Candidate& a, const Candidate& b) {
                if (a.selection_score != b.selection_score) {
                  return a.selection_score > b.selection_score;
                }
                const Hypothesis& ha = live_[a.parent];
                const Hypothesis& hb = live_[b.parent];
                if (ha.tokens != hb.tokens) return ha.tokens < hb.tokens;
                return a.event < b.event;
              });
    if (static_cast<int>(cands.size()) > width_) cands.resize(width_);

    std::vector<Hypothesis> next;
    for (const Candidate& c : cands) {
      on_select(c.event);
      Hypothesis h = live_[c.parent];
      h.log_prob = c.log_prob;
      if (c.event == Vocabulary::kEos) {
        h.finished = true;
        finished_.push_back(std::move(h));
      } else {
        h.tokens.push_back(c.event);
        next.push_back(std::move(h));
      }
    }
    live_ = std::move(next);
  }

  std::vector<Hypothesis> take_finished() { return std::move(finished_); }

 private:
  const ConditionalScorer& scorer_;
  std::span<const TokenId> x_;
  int width_;
  int max_len_;
  double gamma_;
  std::vector<double> lex_terms_;
  std::vector<Hypothesis> live_;
  std::vector<Hypothesis> finished_;
};

std::vector<Hypothesis> finish(std::vector<Hypothesis> pool, int limit) {
  std::sort(pool.begin(), pool.end(), better);
  if (static_cast<int>(pool.size()) > limit) pool.resize(limit);
  return pool;
}

}  // namespace

std::vector<Hypothesis> beam_search(const ConditionalScorer& scorer,
                                    std::span<const TokenId> x, int beam_size,
                                    int max_len) {
  if (beam_size < 1) throw UsageError("beam size must be >= 1");
  if (max_len < 1) throw UsageError("max decode length must be >= 1");

  Beam beam(scorer, x, beam_size, max_len);
  for (int step = 0; step <= max_len && !beam.done(); ++step) {
    beam.step(
        step, [](TokenId) { return 0.0; }, [](TokenId) {});
  }
  return finish(beam.take_finished(), beam_size);
}

std::vector<Hypothesis> diverse_beam_search(const ConditionalScorer& scorer,
                                            std::span<const TokenId> x,
                                            const DbsConfig& cfg) {
  if (cfg.beam_size < 1) throw UsageError("beam size must be >= 1");
  if (cfg.groups < 1 || cfg.groups > cfg.beam_size) {
    throw UsageError("groups must be in [1, beam_size]");
  }
  if (cfg.diversity < 0.0) throw UsageError("diversity strength must be >= 0");
  if (cfg.max_len < 1) throw UsageError("max decode length must be >= 1");

  const int base = cfg.beam_size / cfg.groups;
  const int extra = cfg.beam_size % cfg.groups;

  std::vector<Beam> beams;
  beams.reserve(cfg.groups);
  for (int g = 0; g < cfg.groups; ++g) {
    beams.emplace_back(scorer, x, base + (g < extra ? 1 : 0), cfg.max_len);
  }

  for (int step = 0; step <= cfg.max_len; ++step) {
    // Tokens already chosen at this step by earlier groups.
    std::unordered_map<TokenId, int> chosen;
    for (Beam& beam : beams) {
      beam.step(
          step,
          [&](TokenId event) {
            const auto it = chosen.find(event);
            return it == chosen.end() ? 0.0 : cfg.diversity * it->second;
          },
          [&](TokenId event) { ++chosen[event]; });
    }
  }

  std::vector<Hypothesis> pool;
  for (Beam& beam : beams) {
    auto part = beam.take_finished();
    pool.insert(pool.end(), std::make_move_iterator(part.begin()),
                std::make_move_iterator(part.end()));
  }
  return finish(std::move(pool), cfg.beam_size);
}

}  // namespace emsa
