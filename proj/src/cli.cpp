#include "emsa/cli.hpp"

#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "emsa/anneal.hpp"
#include "emsa/errors.hpp"
#include "emsa/eval.hpp"
#include "emsa/pipeline.hpp"
#include "emsa/rng.hpp"
#include "emsa/trace_io.hpp"
#include "emsa/util.hpp"

namespace emsa::cli {

namespace {

struct RunConfig {
  // paths
  std::string corpus;
  std::string models = "models";
  std::string out;
  std::string embeddings;
  std::string judge;
  std::string trace_file;
  std::string format = "tsv";
  // train
  int min_count = 2;
  int order = 3;
  double add_k = 0.01;
  std::string lambdas;  // comma-separated, empty = default weighting
  int em_iters = 5;
  double laplace = 1.0;
  double judge_frac = 0.2;
  // objective / scorer
  double alpha = 8.0;
  std::string score_mode = "raw";
  double gamma = 0.3;
  // annealing
  double tau_init = 0.015;
  double decay = 0.03;
  int iters = 50;
  std::string shortlist = "500";
  int min_len = 1;
  int max_len = 30;
  std::string op_weights = "1,1,1";
  // decoding
  std::string decoder = "bs";
  int beam = 20;
  int groups = 20;
  double diversity = 0.5;
  int decode_len = 20;
  // run control
  uint64_t seed = 42;
  int threads = 1;
  std::string alphas = "0,1,2,4,8,16,64";
  int top = 5;
  // command inputs
  std::string post;
  std::string emotion;
};

std::vector<double> parse_double_list(const std::string& text,
                                      const std::string& what) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw UsageError("bad value in " + what + ": \"" + item + "\"");
    }
  }
  if (out.empty()) throw UsageError(what + " must not be empty");
  return out;
}

CorpusFormat parse_format_or_throw(const std::string& name) {
  const auto f = parse_format(name);
  if (!f) throw UsageError("unknown corpus format \"" + name + "\" (tsv, jsonl)");
  return *f;
}

Emotion parse_emotion_or_throw(const std::string& name) {
  const auto e = parse_emotion(name);
  if (!e) {
    std::string valid;
    for (Emotion cand : all_emotions()) {
      if (!valid.empty()) valid += ", ";
      valid += to_string(cand);
    }
    throw UsageError("unknown emotion \"" + name + "\"; valid labels: " +
                     valid);
  }
  return *e;
}

size_t parse_shortlist(const std::string& text) {
  if (text == "full") return 0;
  try {
    size_t used = 0;
    const long v = std::stol(text, &used);
    if (used != text.size() || v < 1) throw std::invalid_argument(text);
    return static_cast<size_t>(v);
  } catch (const std::exception&) {
    throw UsageError("shortlist must be a positive integer or \"full\"");
  }
}

ScoreMode parse_score_mode(const std::string& text) {
  if (text == "raw") return ScoreMode::Raw;
  if (text == "per-token" || text == "per_token") return ScoreMode::PerToken;
  throw UsageError("score mode must be raw or per-token");
}

DecoderKind parse_decoder(const std::string& text) {
  if (text == "bs") return DecoderKind::BeamSearch;
  if (text == "dbs") return DecoderKind::DiverseBeamSearch;
  throw UsageError("decoder must be bs or dbs");
}

TrainOptions train_options(const RunConfig& cfg) {
  TrainOptions opt;
  opt.min_count = cfg.min_count;
  opt.order = cfg.order;
  opt.add_k = cfg.add_k;
  if (!cfg.lambdas.empty()) {
    opt.lambdas = parse_double_list(cfg.lambdas, "lambdas");
  }
  opt.em_iters = cfg.em_iters;
  opt.laplace = cfg.laplace;
  opt.judge_frac = cfg.judge_frac;
  return opt;
}

PipelineConfig pipeline_config(const RunConfig& cfg) {
  PipelineConfig p;
  p.objective.alpha = cfg.alpha;
  p.objective.mode = parse_score_mode(cfg.score_mode);
  p.sa.tau_init = cfg.tau_init;
  p.sa.decay_c = cfg.decay;
  p.sa.max_iters = cfg.iters;
  p.sa.shortlist_size = parse_shortlist(cfg.shortlist);
  if (cfg.min_len < 1) throw UsageError("min-len must be >= 1");
  if (cfg.max_len < cfg.min_len) throw UsageError("max-len must be >= min-len");
  p.sa.min_len = static_cast<size_t>(cfg.min_len);
  p.sa.max_len = static_cast<size_t>(cfg.max_len);
  p.sa.rng_seed = cfg.seed;
  const auto w = parse_double_list(cfg.op_weights, "op-weights");
  if (w.size() != 3) throw UsageError("op-weights needs 3 values");
  for (double x : w) {
    if (x < 0.0) throw UsageError("op-weights must be nonnegative");
  }
  p.sa.op_weights = {w[0], w[1], w[2]};
  p.dbs.beam_size = cfg.beam;
  p.dbs.groups = cfg.groups;
  p.dbs.diversity = cfg.diversity;
  p.dbs.max_len = cfg.decode_len;
  p.gamma = cfg.gamma;
  p.decoder = parse_decoder(cfg.decoder);
  if (cfg.iters < 0) throw UsageError("iters must be >= 0");
  return p;
}

// The fully resolved configuration, defaults included, one key per line.
void write_resolved_config(const std::filesystem::path& path,
                           const RunConfig& cfg, const std::string& command) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write config echo: " + path.string());
  out << "command=" << command << '\n';
  out << "add-k=" << format_double(cfg.add_k) << '\n';
  out << "alpha=" << format_double(cfg.alpha) << '\n';
  out << "alphas=" << cfg.alphas << '\n';
  out << "beam=" << cfg.beam << '\n';
  out << "corpus=" << cfg.corpus << '\n';
  out << "decay=" << format_double(cfg.decay) << '\n';
  out << "decode-len=" << cfg.decode_len << '\n';
  out << "decoder=" << cfg.decoder << '\n';
  out << "diversity=" << format_double(cfg.diversity) << '\n';
  out << "em-iters=" << cfg.em_iters << '\n';
  out << "embeddings=" << cfg.embeddings << '\n';
  out << "emotion=" << cfg.emotion << '\n';
  out << "format=" << cfg.format << '\n';
  out << "gamma=" << format_double(cfg.gamma) << '\n';
  out << "groups=" << cfg.groups << '\n';
  out << "iters=" << cfg.iters << '\n';
  out << "judge=" << cfg.judge << '\n';
  out << "judge-frac=" << format_double(cfg.judge_frac) << '\n';
  out << "lambdas=" << cfg.lambdas << '\n';
  out << "laplace=" << format_double(cfg.laplace) << '\n';
  out << "max-len=" << cfg.max_len << '\n';
  out << "min-count=" << cfg.min_count << '\n';
  out << "min-len=" << cfg.min_len << '\n';
  out << "models=" << cfg.models << '\n';
  out << "op-weights=" << cfg.op_weights << '\n';
  out << "order=" << cfg.order << '\n';
  out << "out=" << cfg.out << '\n';
  out << "post=" << cfg.post << '\n';
  out << "score-mode=" << cfg.score_mode << '\n';
  out << "seed=" << cfg.seed << '\n';
  out << "shortlist=" << cfg.shortlist << '\n';
  out << "tau-init=" << format_double(cfg.tau_init) << '\n';
  out << "threads=" << cfg.threads << '\n';
  out << "top=" << cfg.top << '\n';
  out << "trace=" << cfg.trace_file << '\n';
}

nlohmann::ordered_json report_json(const MetricsReport& r,
                                   double objective_judge_accuracy) {
  nlohmann::ordered_json j;
  j["pairs"] = r.pairs;
  j["bleu1"] = r.bleu1;
  j["bleu2"] = r.bleu2;
  j["dist1"] = r.dist1;
  j["dist2"] = r.dist2;
  j["emotion_accuracy"] = r.emotion_accuracy;
  j["emotion_accuracy_objective_judge"] = objective_judge_accuracy;
  if (r.embedding) {
    nlohmann::ordered_json e;
    e["average"] = r.embedding->average;
    e["greedy"] = r.embedding->greedy;
    e["extreme"] = r.embedding->extreme;
    e["coherence"] = r.embedding->coherence;
    e["scored"] = r.embedding->scored;
    e["skipped"] = r.embedding->skipped;
    j["embedding"] = e;
  }
  return j;
}

int cmd_train(const RunConfig& cfg, std::ostream& out) {
  const auto corpus = load_corpus(cfg.corpus, parse_format_or_throw(cfg.format));
  if (corpus.empty()) throw DataError("corpus is empty: " + cfg.corpus);
  const Models models = train_models(corpus, train_options(cfg));
  save_models(models, cfg.models);
  write_resolved_config(std::filesystem::path(cfg.models) /
                            "config_resolved.txt",
                        cfg, "train");
  out << "trained on " << corpus.size() << " pairs; vocabulary "
      << models.vocab.size() << " entries -> " << cfg.models << '\n';
  if (models.classifier.uniform_prior_fallback()) {
    out << "warning: at least one emotion class absent from training data; "
           "priors fall back to uniform\n";
  }
  return 0;
}

// Target emotion, objective weights and seed resolved; shared by respond
// and evaluate-style commands.
struct Prepared {
  Models models;
  PipelineConfig pipeline;
};

Prepared prepare(const RunConfig& cfg) {
  Prepared p{load_models(cfg.models), pipeline_config(cfg)};
  return p;
}

int cmd_respond(const RunConfig& cfg, std::ostream& out) {
  if (cfg.post.empty()) throw UsageError("respond needs --post text");
  const Emotion target = parse_emotion_or_throw(cfg.emotion);
  Prepared p = prepare(cfg);

  const auto post_tokens = tokenize(cfg.post);
  if (post_tokens.empty()) throw DataError("post tokenizes to nothing");
  const TokenSeq post_ids = p.models.vocab.encode(post_tokens);

  const auto gen =
      generate_response(p.models, p.pipeline, post_ids, target, cfg.seed);
  const auto words = p.models.vocab.decode(gen.best.tokens);
  out << detokenize(words) << '\n';

  if (!cfg.trace_file.empty()) {
    TraceMeta meta;
    meta.post = cfg.post;
    meta.target = target;
    meta.seed = cfg.seed;
    meta.alpha = cfg.alpha;
    meta.score_mode = cfg.score_mode;
    write_trace_file(cfg.trace_file, gen.trace, gen.best, p.models.vocab,
                     meta);
  }
  if (!cfg.out.empty()) {
    std::filesystem::create_directories(cfg.out);
    std::ofstream rf(std::filesystem::path(cfg.out) / "response.txt");
    rf << detokenize(words) << '\n';
    write_resolved_config(std::filesystem::path(cfg.out) /
                              "config_resolved.txt",
                          cfg, "respond");
  }
  return 0;
}

int cmd_decode(const RunConfig& cfg, std::ostream& out) {
  if (cfg.post.empty()) throw UsageError("decode needs --post text");
  Prepared p = prepare(cfg);
  const auto post_tokens = tokenize(cfg.post);
  if (post_tokens.empty()) throw DataError("post tokenizes to nothing");
  const TokenSeq post_ids = p.models.vocab.encode(post_tokens);

  const ConditionalScorer scorer(p.models.lm, p.models.translation,
                                 p.pipeline.gamma);
  std::vector<Hypothesis> hyps;
  if (p.pipeline.decoder == DecoderKind::BeamSearch) {
    hyps = beam_search(scorer, post_ids, p.pipeline.dbs.beam_size,
                       p.pipeline.dbs.max_len);
  } else {
    hyps = diverse_beam_search(scorer, post_ids, p.pipeline.dbs);
  }
  const size_t limit =
      std::min(hyps.size(), static_cast<size_t>(std::max(cfg.top, 1)));
  char buf[64];
  for (size_t i = 0; i < limit; ++i) {
    std::snprintf(buf, sizeof(buf), "%.6f", hyps[i].log_prob);
    out << buf << '\t'
        << detokenize(p.models.vocab.decode(hyps[i].tokens)) << '\n';
  }
  if (!cfg.out.empty()) {
    std::filesystem::create_directories(cfg.out);
    write_resolved_config(std::filesystem::path(cfg.out) /
                              "config_resolved.txt",
                          cfg, "decode");
  }
  return 0;
}

int cmd_evaluate(const RunConfig& cfg, std::ostream& out) {
  Prepared p = prepare(cfg);
  const auto raw =
      load_corpus(cfg.corpus, parse_format_or_throw(cfg.format));
  if (raw.empty()) throw DataError("test split is empty: " + cfg.corpus);
  const auto test = encode_pairs(p.models.vocab, raw);

  std::optional<EmotionClassifier> judge_override;
  EvalOptions opt;
  opt.threads = cfg.threads;
  opt.seed = cfg.seed;
  if (!cfg.judge.empty()) {
    judge_override = EmotionClassifier::load(cfg.judge);
    opt.judge = &*judge_override;
  }
  std::optional<EmbeddingTable> table;
  if (!cfg.embeddings.empty()) {
    table = EmbeddingTable::load(cfg.embeddings);
    opt.embeddings = &*table;
  }

  const EvalResult result = evaluate_split(p.models, p.pipeline, test, opt);

  std::vector<Emotion> targets;
  for (const auto& pair : test) targets.push_back(pair.label);
  const double objective_acc =
      emotion_accuracy(p.models.classifier, result.outputs, targets);

  std::filesystem::create_directories(cfg.out);
  {
    std::ofstream rf(std::filesystem::path(cfg.out) / "report.json");
    if (!rf) throw DataError("cannot write report.json under " + cfg.out);
    rf << report_json(result.report, objective_acc).dump(2) << '\n';
  }
  {
    std::ofstream tf(std::filesystem::path(cfg.out) / "responses.tsv");
    if (!tf) throw DataError("cannot write responses.tsv under " + cfg.out);
    for (size_t i = 0; i < test.size(); ++i) {
      tf << detokenize(raw[i].post) << '\t' << to_string(test[i].label)
         << '\t' << detokenize(p.models.vocab.decode(result.outputs[i]))
         << '\n';
    }
  }
  write_resolved_config(std::filesystem::path(cfg.out) /
                            "config_resolved.txt",
                        cfg, "evaluate");

  out << report_json(result.report, objective_acc).dump(2) << '\n';
  return 0;
}

int cmd_sweep(const RunConfig& cfg, std::ostream& out) {
  Prepared p = prepare(cfg);
  const auto raw =
      load_corpus(cfg.corpus, parse_format_or_throw(cfg.format));
  if (raw.empty()) throw DataError("test split is empty: " + cfg.corpus);
  const auto test = encode_pairs(p.models.vocab, raw);
  const auto alphas = parse_double_list(cfg.alphas, "alphas");

  std::optional<EmotionClassifier> judge_override;
  EvalOptions opt;
  opt.threads = cfg.threads;
  opt.seed = cfg.seed;
  if (!cfg.judge.empty()) {
    judge_override = EmotionClassifier::load(cfg.judge);
    opt.judge = &*judge_override;
  }

  const auto rows = sweep_alpha(alphas, [&](double alpha) {
    PipelineConfig run_cfg = p.pipeline;
    run_cfg.objective.alpha = alpha;
    return evaluate_split(p.models, run_cfg, test, opt).report;
  });

  std::filesystem::create_directories(cfg.out);
  {
    std::ofstream csv(std::filesystem::path(cfg.out) / "sweep.csv");
    if (!csv) throw DataError("cannot write sweep.csv under " + cfg.out);
    write_sweep_csv(csv, rows);
  }
  write_resolved_config(std::filesystem::path(cfg.out) /
                            "config_resolved.txt",
                        cfg, "sweep-alpha");

  std::ostringstream echo;
  write_sweep_csv(echo, rows);
  out << echo.str();
  return 0;
}

int cmd_trace(const RunConfig& cfg, std::ostream& out) {
  const LoadedTrace trace = read_trace_file(cfg.trace_file);
  print_trace(out, trace);
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err) {
  RunConfig cfg;
  CLI::App app{"Emotion-controlled dialogue responses by edit-based "
               "annealing search"};
  app.require_subcommand(1);
  app.set_config("--config", "", "Flat key=value configuration file");

  // All options live on the parent so they work for every subcommand and
  // map onto flat config-file keys; precedence is CLI > file > defaults.
  app.add_option("--models", cfg.models, "Model directory");
  app.add_option("--out", cfg.out, "Output directory");
  app.add_option("--format", cfg.format, "Corpus format: tsv or jsonl");
  app.add_option("--embeddings", cfg.embeddings, "Word-vector file");
  app.add_option("--judge", cfg.judge, "Judge classifier model file");
  app.add_option("--trace", cfg.trace_file, "Trace output file (respond)");
  app.add_option("--min-count", cfg.min_count, "Vocabulary frequency cutoff");
  app.add_option("--order", cfg.order, "n-gram order");
  app.add_option("--add-k", cfg.add_k, "n-gram smoothing constant");
  app.add_option("--lambdas", cfg.lambdas,
                 "Comma-separated interpolation weights");
  app.add_option("--em-iters", cfg.em_iters, "Model-1 EM iterations");
  app.add_option("--laplace", cfg.laplace, "Classifier smoothing constant");
  app.add_option("--judge-frac", cfg.judge_frac,
                 "Held-out fraction for the judge classifier");
  app.add_option("--alpha", cfg.alpha, "Emotion weight");
  app.add_option("--score-mode", cfg.score_mode,
                 "Objective mode: raw or per-token");
  app.add_option("--gamma", cfg.gamma, "Model-1 mixture weight");
  app.add_option("--tau-init", cfg.tau_init, "Initial temperature");
  app.add_option("--decay", cfg.decay, "Per-step temperature decrement");
  app.add_option("--iters", cfg.iters, "Annealing iterations");
  app.add_option("--shortlist", cfg.shortlist,
                 "Gibbs candidates per proposal, or \"full\"");
  app.add_option("--min-len", cfg.min_len, "Minimum candidate length");
  app.add_option("--max-len", cfg.max_len, "Maximum candidate length");
  app.add_option("--op-weights", cfg.op_weights,
                 "Weights for replace,insert,delete");
  app.add_option("--decoder", cfg.decoder, "Initial decoder: bs or dbs");
  app.add_option("--beam", cfg.beam, "Beam size");
  app.add_option("--groups", cfg.groups, "Diverse beam groups");
  app.add_option("--diversity", cfg.diversity, "Diversity strength");
  app.add_option("--decode-len", cfg.decode_len, "Decoder length cap");
  app.add_option("--seed", cfg.seed, "Random seed");
  app.add_option("--threads", cfg.threads, "Evaluation worker threads");
  app.add_option("--alphas", cfg.alphas, "Comma-separated sweep weights");
  app.add_option("--top", cfg.top, "Hypotheses to print (decode)");
  app.add_option("--post", cfg.post, "Input utterance");
  app.add_option("--emotion", cfg.emotion, "Target emotion label");

  auto* train = app.add_subcommand("train", "Train all models from a corpus");
  train->add_option("corpus", cfg.corpus, "Labeled corpus file")->required();

  auto* respond =
      app.add_subcommand("respond", "Generate one emotional response");
  auto* decode =
      app.add_subcommand("decode", "Show raw decoder hypotheses for a post");

  auto* evaluate =
      app.add_subcommand("evaluate", "Score the pipeline on a test split");
  evaluate->add_option("corpus", cfg.corpus, "Test corpus file")->required();

  auto* sweep = app.add_subcommand(
      "sweep-alpha", "Evaluate across a range of emotion weights");
  sweep->add_option("corpus", cfg.corpus, "Test corpus file")->required();

  auto* trace =
      app.add_subcommand("trace", "Pretty-print a stored annealing trace");
  trace->add_option("file", cfg.trace_file, "Trace file (JSON lines)")
      ->required();

  for (auto* sub : {train, respond, decode, evaluate, sweep, trace}) {
    sub->fallthrough();
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }

  try {
    if (train->parsed()) return cmd_train(cfg, out);
    if (respond->parsed()) return cmd_respond(cfg, out);
    if (decode->parsed()) return cmd_decode(cfg, out);
    if (evaluate->parsed()) return cmd_evaluate(cfg, out);
    if (sweep->parsed()) return cmd_sweep(cfg, out);
    if (trace->parsed()) return cmd_trace(cfg, out);
    err << "error: no command\n";
    return 1;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const DataError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const InternalError& e) {
    err << "internal error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return 3;
  }
}

int run(int argc, const char* const* argv, std::ostream& out,
        std::ostream& err) {
  std::vector<std::string> args;
  args.reserve(argc > 0 ? static_cast<size_t>(argc - 1) : 0);
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args, out, err);
}

}  // namespace emsa::cli
