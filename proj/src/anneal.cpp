#include "emsa/anneal.hpp"

#include <algorithm>
#include <cmath>

#include "emsa/errors.hpp"
#include "emsa/util.hpp"

namespace emsa {

namespace {

constexpr std::array<std::string_view, 3> kEditNames = {"replace", "insert",
                                                        "delete"};

}  // namespace

std::string_view to_string(EditKind k) {
  return kEditNames[static_cast<size_t>(k)];
}

std::optional<EditKind> parse_edit_kind(std::string_view name) {
  for (size_t i = 0; i < kEditNames.size(); ++i) {
    if (name == kEditNames[i]) return static_cast<EditKind>(i);
  }
  return std::nullopt;
}

TokenSeq apply_edit(const TokenSeq& y, const EditOp& op) {
  TokenSeq out = y;
  const size_t idx = op.pos - 1;
  switch (op.kind) {
    case EditKind::Replace:
      if (idx >= out.size() || !op.word) {
        throw InternalError("bad replace edit");
      }
      out[idx] = *op.word;
      break;
    case EditKind::Insert:
      if (idx > out.size() || !op.word) throw InternalError("bad insert edit");
      out.insert(out.begin() + static_cast<long>(idx), *op.word);
      break;
    case EditKind::Delete:
      if (idx >= out.size()) throw InternalError("bad delete edit");
      out.erase(out.begin() + static_cast<long>(idx));
      break;
  }
  return out;
}

double temperature(const SaConfig& cfg, int t) {
  if (t < 0) throw InternalError("temperature: negative step index");
  return std::max(0.0, cfg.tau_init - cfg.decay_c * static_cast<double>(t));
}

size_t propose_position(Rng& rng, size_t length) {
  if (length == 0) throw InternalError("propose_position: empty sentence");
  return static_cast<size_t>(rng.below(length)) + 1;
}

double acceptance_probability(double log_f_new, double log_f_old, double tau,
                              ScoreMode mode) {
  if (tau < 0.0) throw InternalError("acceptance_probability: negative tau");
  if (tau == 0.0) {
    // Sign only; the log comparison is exact where the probability-space
    // difference may underflow.
    return log_f_new >= log_f_old ? 1.0 : 0.0;
  }
  const double delta = acceptance_delta(log_f_new, log_f_old, mode);
  if (delta >= 0.0) return 1.0;
  return std::exp(delta / tau);
}

SearchContext::SearchContext(const ObjectiveConfig& objective,
                             const ConditionalScorer& scorer,
                             const EmotionClassifier& clf,
                             const Vocabulary& vocab,
                             std::span<const TokenId> x, Emotion e,
                             const SaConfig& sa)
    : objective_(objective),
      scorer_(&scorer),
      clf_(&clf),
      vocab_(&vocab),
      x_(x.begin(), x.end()),
      target_(e),
      sa_(sa) {
  if (sa_.min_len < 1) throw UsageError("min_len must be >= 1");
  if (sa_.max_len < sa_.min_len) throw UsageError("max_len must be >= min_len");
}

ScoredCandidate SearchContext::score(std::span<const TokenId> y) const {
  return emsa::score(objective_, *scorer_, *clf_, x_, target_, y);
}

double SearchContext::m1_term(TokenId w) const {
  const auto it = m1_cache_.find(w);
  if (it != m1_cache_.end()) return it->second;
  const double term = scorer_->translation().lex_term_logprob(x_, w);
  m1_cache_.emplace(w, term);
  return term;
}

SearchContext::State SearchContext::analyze(TokenSeq y) const {
  if (y.empty()) {
    throw InternalError("objective score undefined for empty candidate");
  }
  State s;
  s.tokens = std::move(y);
  s.lm_terms.resize(s.tokens.size() + 1);
  const auto& lm = scorer_->lm();
  for (size_t pos = 0; pos <= s.tokens.size(); ++pos) {
    s.lm_terms[pos] = lm.term_logprob(s.tokens, pos);
    s.lm_sum += s.lm_terms[pos];
  }
  for (TokenId w : s.tokens) s.m1_sum += m1_term(w);

  s.nb_scores = clf_->class_scores(s.tokens);
  const double gamma = scorer_->gamma();
  s.log_cond = (1.0 - gamma) * s.lm_sum + gamma * s.m1_sum;
  s.log_emo =
      s.nb_scores[static_cast<int>(target_)] - logsumexp(s.nb_scores);
  s.log_f = combine_log_f(s.log_cond, s.log_emo, objective_.alpha,
                          objective_.mode, s.tokens.size());
  return s;
}

SearchContext::EditScore SearchContext::score_edit(const State& base,
                                                   const EditOp& op) const {
  const TokenSeq& y = base.tokens;
  const size_t old_len = y.size();
  const size_t idx = op.pos - 1;
  const int order = scorer_->lm().order();

  size_t new_len = old_len;
  std::array<double, kNumEmotions> nb = base.nb_scores;
  double m1 = base.m1_sum;
  const auto add_token = [&](TokenId w) {
    m1 += m1_term(w);
    for (int c = 0; c < kNumEmotions; ++c) {
      nb[c] += clf_->token_loglik(static_cast<Emotion>(c), w);
    }
  };
  const auto drop_token = [&](TokenId w) {
    m1 -= m1_term(w);
    for (int c = 0; c < kNumEmotions; ++c) {
      nb[c] -= clf_->token_loglik(static_cast<Emotion>(c), w);
    }
  };

  switch (op.kind) {
    case EditKind::Replace:
      if (idx >= old_len || !op.word) throw InternalError("bad replace edit");
      drop_token(y[idx]);
      add_token(*op.word);
      break;
    case EditKind::Insert:
      if (idx > old_len || !op.word) throw InternalError("bad insert edit");
      add_token(*op.word);
      new_len = old_len + 1;
      break;
    case EditKind::Delete:
      if (idx >= old_len) throw InternalError("bad delete edit");
      drop_token(y[idx]);
      new_len = old_len - 1;
      break;
  }

  // n-gram terms. Term i covers tokens [i-n+1, i] (index new_len/old_len is
  // the EOS term), so an edit at idx invalidates the window of terms
  // starting at idx whose width is the model order, one less on the side
  // the sentence shrank or grew; terms outside the window keep their value
  // under the index shift. Windows are clamped to the EOS index.
  const size_t new_width = op.kind == EditKind::Delete
                               ? static_cast<size_t>(order) - 1
                               : static_cast<size_t>(order);
  const size_t old_width = op.kind == EditKind::Insert
                               ? static_cast<size_t>(order) - 1
                               : static_cast<size_t>(order);

  const TokenSeq edited = apply_edit(y, op);
  const auto& lm = scorer_->lm();
  double lm_sum = base.lm_sum;
  if (new_width > 0) {
    const size_t hi = std::min(idx + new_width - 1, new_len);  // inclusive
    for (size_t i = idx; i <= hi; ++i) lm_sum += lm.term_logprob(edited, i);
  }
  if (old_width > 0) {
    const size_t hi = std::min(idx + old_width - 1, old_len);  // inclusive
    for (size_t i = idx; i <= hi; ++i) lm_sum -= base.lm_terms[i];
  }

  const double gamma = scorer_->gamma();
  EditScore out;
  out.log_cond = (1.0 - gamma) * lm_sum + gamma * m1;
  out.log_emo = nb[static_cast<int>(target_)] - logsumexp(nb);
  out.log_f = combine_log_f(out.log_cond, out.log_emo, objective_.alpha,
                            objective_.mode, new_len);
  return out;
}

const std::vector<TokenId>& SearchContext::emotion_shortlist() const {
  if (emotion_top_ready_) return emotion_top_;
  emotion_top_ready_ = true;
  if (sa_.shortlist_size == 0) return emotion_top_;

  // Rank words by how much the target class likes them relative to the
  // other classes.
  std::vector<std::pair<double, TokenId>> ranked;
  ranked.reserve(vocab_->num_words());
  for (TokenId id = Vocabulary::kNumReserved;
       id < static_cast<TokenId>(vocab_->size()); ++id) {
    const double own = clf_->token_loglik(target_, id);
    std::array<double, kNumEmotions - 1> others;
    size_t k = 0;
    for (int c = 0; c < kNumEmotions; ++c) {
      if (c == static_cast<int>(target_)) continue;
      others[k++] = clf_->token_loglik(static_cast<Emotion>(c), id);
    }
    const double rest =
        logsumexp(others) - std::log(static_cast<double>(kNumEmotions - 1));
    ranked.emplace_back(own - rest, id);
  }
  const size_t take = std::min(ranked.size(), (sa_.shortlist_size + 1) / 2);
  std::partial_sort(ranked.begin(), ranked.begin() + static_cast<long>(take),
                    ranked.end(), [](const auto& a, const auto& b) {
                      if (a.first != b.first) return a.first > b.first;
                      return a.second < b.second;
                    });
  emotion_top_.reserve(take);
  for (size_t i = 0; i < take; ++i) emotion_top_.push_back(ranked[i].second);
  return emotion_top_;
}

std::vector<TokenId> SearchContext::build_shortlist(const State& base,
                                                    size_t pos,
                                                    EditKind kind) const {
  const size_t num_words = vocab_->num_words();
  std::vector<TokenId> words;
  if (sa_.shortlist_size == 0 || sa_.shortlist_size >= num_words) {
    words.reserve(num_words);
    for (TokenId id = Vocabulary::kNumReserved;
         id < static_cast<TokenId>(vocab_->size()); ++id) {
      words.push_back(id);
    }
    return words;
  }

  words = emotion_shortlist();

  // Top next-token candidates given the left context of the edit site.
  const size_t idx = pos - 1;
  const std::span<const TokenId> prefix(base.tokens.data(), idx);
  const auto dist = scorer_->lm().next_token_distribution(prefix);
  std::vector<std::pair<double, TokenId>> ranked;
  ranked.reserve(num_words);
  for (TokenId id = Vocabulary::kNumReserved;
       id < static_cast<TokenId>(vocab_->size()); ++id) {
    ranked.emplace_back(dist[id], id);
  }
  const size_t take = std::min(ranked.size(), (sa_.shortlist_size + 1) / 2);
  std::partial_sort(ranked.begin(), ranked.begin() + static_cast<long>(take),
                    ranked.end(), [](const auto& a, const auto& b) {
                      if (a.first != b.first) return a.first > b.first;
                      return a.second < b.second;
                    });
  for (size_t i = 0; i < take; ++i) words.push_back(ranked[i].second);

  std::sort(words.begin(), words.end());
  words.erase(std::unique(words.begin(), words.end()), words.end());
  (void)kind;
  return words;
}

SearchContext::GibbsDistribution SearchContext::gibbs_word_distribution(
    const State& base, size_t pos, EditKind kind,
    std::span<const TokenId> shortlist) const {
  if (kind == EditKind::Delete) {
    throw InternalError("gibbs_word_distribution: delete proposes no word");
  }
  if (shortlist.empty()) {
    throw InternalError("gibbs_word_distribution: empty shortlist");
  }
  const size_t limit =
      kind == EditKind::Insert ? base.tokens.size() + 1 : base.tokens.size();
  if (pos < 1 || pos > limit) {
    throw InternalError("gibbs_word_distribution: position out of range");
  }

  GibbsDistribution g;
  g.words.assign(shortlist.begin(), shortlist.end());
  g.scores.reserve(g.words.size());
  double max_log_f = kNegInf;
  for (TokenId w : g.words) {
    const EditScore s = score_edit(base, EditOp{kind, pos, w});
    max_log_f = std::max(max_log_f, s.log_f);
    g.scores.push_back(s);
  }

  g.probs.resize(g.words.size());
  if (max_log_f == kNegInf) {
    // Every candidate scored zero probability; fall back to uniform so the
    // proposal stays well defined.
    const double u = 1.0 / static_cast<double>(g.words.size());
    std::fill(g.probs.begin(), g.probs.end(), u);
    return g;
  }
  double z = 0.0;
  for (size_t i = 0; i < g.scores.size(); ++i) {
    g.probs[i] = std::exp(g.scores[i].log_f - max_log_f);
    z += g.probs[i];
  }
  for (double& p : g.probs) p /= z;
  return g;
}

SearchContext::GibbsDistribution SearchContext::gibbs_word_distribution(
    const State& base, size_t pos, EditKind kind) const {
  return gibbs_word_distribution(base, pos, kind,
                                 build_shortlist(base, pos, kind));
}

SaStepRecord sa_step(const SearchContext& ctx, SearchContext::State& state,
                     int iter, Rng& rng) {
  const SaConfig& cfg = ctx.sa_config();
  const size_t len = state.tokens.size();

  std::array<double, 3> weights = cfg.op_weights;
  if (len <= cfg.min_len) weights[static_cast<int>(EditKind::Delete)] = 0.0;
  if (len >= cfg.max_len) weights[static_cast<int>(EditKind::Insert)] = 0.0;
  double total = weights[0] + weights[1] + weights[2];
  if (!(total > 0.0)) {
    // Everything eligible was weighted out; replace always applies.
    weights = {1.0, 0.0, 0.0};
  }
  const EditKind kind = static_cast<EditKind>(rng.sample(weights));

  EditOp op;
  op.kind = kind;
  op.pos = propose_position(rng, kind == EditKind::Insert ? len + 1 : len);

  SearchContext::EditScore proposal;
  if (kind == EditKind::Delete) {
    proposal = ctx.score_edit(state, op);
  } else {
    const auto gibbs = ctx.gibbs_word_distribution(state, op.pos, kind);
    const size_t pick = rng.sample(gibbs.probs);
    op.word = gibbs.words[pick];
    proposal = gibbs.scores[pick];
  }

  SaStepRecord rec;
  rec.iter = iter;
  rec.tau = temperature(cfg, iter);
  rec.op = op;
  rec.proposal_log_f = proposal.log_f;
  rec.incumbent_log_f = state.log_f;
  rec.accept_prob = acceptance_probability(proposal.log_f, state.log_f,
                                           rec.tau, ctx.objective().mode);
  rec.candidate = apply_edit(state.tokens, op);
  rec.accepted = rng.uniform01() < rec.accept_prob;
  if (rec.accepted) {
    state = ctx.analyze(rec.candidate);
  }
  return rec;
}

SaResult run_sa(const SearchContext& ctx, TokenSeq y0, Rng& rng) {
  if (y0.empty()) throw InternalError("run_sa: empty initial candidate");
  const SaConfig& cfg = ctx.sa_config();

  SearchContext::State state = ctx.analyze(std::move(y0));
  SaResult result;
  result.trace.initial = state.tokens;
  result.best.tokens = state.tokens;
  result.best.log_f = state.log_f;
  result.best.log_cond = state.log_cond;
  result.best.log_emo = state.log_emo;
  result.trace.best_index = 0;

  for (int iter = 0; iter < cfg.max_iters; ++iter) {
    SaStepRecord rec = sa_step(ctx, state, iter, rng);
    if (rec.accepted && state.log_f > result.best.log_f) {
      result.best.tokens = state.tokens;
      result.best.log_f = state.log_f;
      result.best.log_cond = state.log_cond;
      result.best.log_emo = state.log_emo;
      result.trace.best_index = static_cast<size_t>(iter) + 1;
    }
    result.trace.steps.push_back(std::move(rec));
  }
  return result;
}

SaResult run_sa(const SearchContext& ctx, TokenSeq y0) {
  Rng rng(ctx.sa_config().rng_seed);
  return run_sa(ctx, std::move(y0), rng);
}

}  // namespace emsa
