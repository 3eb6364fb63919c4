#include "emsa/trace_io.hpp"

#include <cstdio>
#include <fstream>
#include <ostream>

#include "json.hpp"

#include "emsa/errors.hpp"

namespace emsa {

namespace {

using nlohmann::ordered_json;

ordered_json tokens_json(const Vocabulary& vocab,
                         std::span<const TokenId> ids) {
  ordered_json arr = ordered_json::array();
  for (TokenId id : ids) arr.push_back(vocab.token(id));
  return arr;
}

std::vector<std::string> string_array(const nlohmann::json& j,
                                      const char* field) {
  if (!j.contains(field) || !j[field].is_array()) {
    throw DataError(std::string("trace record missing array field ") + field);
  }
  std::vector<std::string> out;
  for (const auto& v : j[field]) out.push_back(v.get<std::string>());
  return out;
}

}  // namespace

void write_trace(std::ostream& out, const SaTrace& trace,
                 const ScoredCandidate& best, const Vocabulary& vocab,
                 const TraceMeta& meta) {
  ordered_json m;
  m["type"] = "meta";
  m["post"] = meta.post;
  m["emotion"] = std::string(to_string(meta.target));
  m["seed"] = meta.seed;
  m["alpha"] = meta.alpha;
  m["score_mode"] = meta.score_mode;
  m["initial"] = tokens_json(vocab, trace.initial);
  out << m.dump() << '\n';

  for (const SaStepRecord& s : trace.steps) {
    ordered_json j;
    j["type"] = "step";
    j["iter"] = s.iter;
    j["tau"] = s.tau;
    j["op"] = std::string(to_string(s.op.kind));
    j["pos"] = s.op.pos;
    if (s.op.word) j["word"] = vocab.token(*s.op.word);
    j["proposal_log_f"] = s.proposal_log_f;
    j["incumbent_log_f"] = s.incumbent_log_f;
    j["accept_prob"] = s.accept_prob;
    j["accepted"] = s.accepted;
    j["candidate"] = tokens_json(vocab, s.candidate);
    out << j.dump() << '\n';
  }

  ordered_json f;
  f["type"] = "final";
  f["best_index"] = trace.best_index;
  f["best_log_f"] = best.log_f;
  f["best"] = tokens_json(vocab, best.tokens);
  out << f.dump() << '\n';
}

void write_trace_file(const std::filesystem::path& path, const SaTrace& trace,
                      const ScoredCandidate& best, const Vocabulary& vocab,
                      const TraceMeta& meta) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write trace file: " + path.string());
  write_trace(out, trace, best, vocab, meta);
}

LoadedTrace read_trace_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open trace file: " + path.string());

  LoadedTrace t;
  std::string line;
  size_t line_no = 0;
  bool saw_meta = false;
  bool saw_final = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw DataError("trace line " + std::to_string(line_no) +
                      ": invalid JSON: " + e.what());
    }
    const std::string type = j.value("type", "");
    if (type == "meta") {
      saw_meta = true;
      t.meta.post = j.value("post", "");
      const auto e = parse_emotion(j.value("emotion", ""));
      t.meta.target = e.value_or(Emotion::Neutral);
      t.meta.seed = j.value("seed", uint64_t{0});
      t.meta.alpha = j.value("alpha", 0.0);
      t.meta.score_mode = j.value("score_mode", "raw");
      t.initial = string_array(j, "initial");
    } else if (type == "step") {
      LoadedTrace::Step s;
      s.iter = j.value("iter", 0);
      s.tau = j.value("tau", 0.0);
      s.op = j.value("op", "");
      s.pos = j.value("pos", size_t{0});
      s.word = j.value("word", "");
      s.proposal_log_f = j.value("proposal_log_f", 0.0);
      s.incumbent_log_f = j.value("incumbent_log_f", 0.0);
      s.accept_prob = j.value("accept_prob", 0.0);
      s.accepted = j.value("accepted", false);
      s.candidate = string_array(j, "candidate");
      t.steps.push_back(std::move(s));
    } else if (type == "final") {
      saw_final = true;
      t.best_index = j.value("best_index", size_t{0});
      t.best_log_f = j.value("best_log_f", 0.0);
      t.best_tokens = string_array(j, "best");
    } else {
      throw DataError("trace line " + std::to_string(line_no) +
                      ": unknown record type");
    }
  }
  if (!saw_meta || !saw_final) {
    throw DataError("trace file missing meta or final record: " +
                    path.string());
  }
  return t;
}

void print_trace(std::ostream& out, const LoadedTrace& trace) {
  out << "post: " << trace.meta.post << '\n';
  out << "emotion: " << to_string(trace.meta.target)
      << "  alpha: " << trace.meta.alpha << "  seed: " << trace.meta.seed
      << "  mode: " << trace.meta.score_mode << '\n';
  std::string initial;
  for (size_t i = 0; i < trace.initial.size(); ++i) {
    if (i) initial += ' ';
    initial += trace.initial[i];
  }
  out << "initial: " << initial << '\n';
  char buf[160];
  for (const auto& s : trace.steps) {
    const double delta = s.proposal_log_f - s.incumbent_log_f;
    std::snprintf(buf, sizeof(buf),
                  "%3d  tau=%.4f  %-7s@%-2zu %-12s dlogf=%+9.4f  p=%.4f  %s",
                  s.iter, s.tau, s.op.c_str(), s.pos,
                  s.word.empty() ? "-" : s.word.c_str(), delta, s.accept_prob,
                  s.accepted ? "accept" : "reject");
    out << buf;
    if (s.accepted) {
      out << "  -> ";
      for (size_t i = 0; i < s.candidate.size(); ++i) {
        if (i) out << ' ';
        out << s.candidate[i];
      }
    }
    out << '\n';
  }
  std::string best;
  for (size_t i = 0; i < trace.best_tokens.size(); ++i) {
    if (i) best += ' ';
    best += trace.best_tokens[i];
  }
  out << "best (step " << trace.best_index << ", log_f=" << trace.best_log_f
      << "): " << best << '\n';
}

}  // namespace emsa
