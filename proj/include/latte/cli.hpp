// Copyright 2026 The latte Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Command-line front end: argument parsing and the pipelines behind each
// subcommand. Requires CLI11.

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

#include "latte/eval.hpp"
#include "latte/ingest.hpp"
#include "latte/vae.hpp"
#include "latte/verify.hpp"

namespace latte::cli {

enum class Command { help, train, eval, sweep, verify, dist };

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitVerifyFailed = 3;

class UsageError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

struct RunConfig {
  Command command = Command::help;
  std::string help_text;

  std::string glove_path;
  std::vector<std::string> dump_paths;  // sweep accepts several
  std::string corpus_path;
  std::string train_dump_path;
  std::string sts_path;
  std::string checkpoint_path;  // may contain "{seed}"
  std::string out_path;         // may contain "{seed}" for train
  std::string report_path;      // per-step training log, may contain "{seed}"

  VaeConfig vae;
  std::vector<std::uint64_t> seeds = {0};
  std::optional<Method> method;  // resolved at run time when unset
  Metric metric = Metric::cosine;

  bool has_glove() const noexcept { return !glove_path.empty(); }
  bool has_dump() const noexcept { return !dump_paths.empty(); }
};

/// Replaces every "{seed}" in `path`.
inline std::string expand_seed(std::string path, std::uint64_t seed) {
  const std::string key = "{seed}";
  const std::string value = std::to_string(seed);
  for (auto pos = path.find(key); pos != std::string::npos; pos = path.find(key, pos)) {
    path.replace(pos, key.size(), value);
    pos += value.size();
  }
  return path;
}

namespace detail {

inline void add_source_options(CLI::App& sub, RunConfig& cfg, bool many_dumps = false) {
  auto* glove = sub.add_option("--glove", cfg.glove_path, "GloVe text file");
  auto* dump = sub.add_option("--dump", cfg.dump_paths,
                              many_dumps ? "LTMX token dump (repeatable, one per layer)"
                                         : "LTMX token dump");
  if (!many_dumps) dump->expected(1);
  glove->excludes(dump);
  dump->excludes(glove);
}

inline void add_seed_option(CLI::App& sub, RunConfig& cfg) {
  sub.add_option("--seed,--seeds", cfg.seeds, "seed or comma-separated seeds")
      ->delimiter(',')
      ->expected(1, 1 << 20);
}

inline void add_model_options(CLI::App& sub, RunConfig& cfg, std::string& kind) {
  auto& v = cfg.vae;
  sub.add_option("--model", kind, "categorical | normal | auto");
  sub.add_option("--latent-dims", v.latent_dims, "latent dimensions D");
  sub.add_option("--classes", v.latent_classes, "classes per latent dimension C");
  sub.add_option("--tau", v.tau, "Gumbel-Softmax temperature");
  sub.add_option("--encoder-layers", v.encoder_layers, "encoder depth (1-3)");
  sub.add_option("--hidden", v.hidden_width, "hidden width (0 = input dim)");
  sub.add_option("--epochs", v.epochs, "training epochs");
  sub.add_option("--batch-size", v.batch_size, "sentences per batch");
  sub.add_option("--lr", v.base_lr, "peak learning rate");
  sub.add_option("--free-bits", v.free_bits_eps, "per-dimension KL floor");
}

inline void add_method_options(CLI::App& sub, std::string& method, std::string& metric) {
  sub.add_option("--method", method, "mean | max | cls | lattemix | normal-vae | ae");
  sub.add_option("--metric", metric, "cosine | js | l2");
}

}  // namespace detail

/// Parses a full argv (argv[0] is the program name). Throws UsageError with
/// the relevant usage text appended. `--help` yields Command::help.
inline RunConfig parse_args(int argc, const char* const* argv) {
  RunConfig cfg;
  std::string kind, method, metric;

  CLI::App app{"latent mixture sentence similarity", "latte"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "show help for every subcommand");

  auto* train = app.add_subcommand("train", "train a model and write a checkpoint");
  detail::add_source_options(*train, cfg);
  train->add_option("--corpus", cfg.corpus_path, "training sentences, one per line (with --glove)");
  train->add_option("--out", cfg.out_path, "checkpoint path; {seed} is replaced")->required();
  train->add_option("--report", cfg.report_path, "per-step loss TSV; {seed} is replaced");
  detail::add_seed_option(*train, cfg);
  detail::add_model_options(*train, cfg, kind);

  auto* eval = app.add_subcommand("eval", "score STS pairs and report Spearman rho x 100");
  detail::add_source_options(*eval, cfg);
  eval->add_option("--sts", cfg.sts_path, "pairs TSV")->required();
  eval->add_option("--checkpoint", cfg.checkpoint_path, "trained model; {seed} is replaced");
  eval->add_option("--corpus", cfg.corpus_path, "training sentences when no checkpoint");
  eval->add_option("--train-dump", cfg.train_dump_path, "LTMX training sentences when no checkpoint");
  eval->add_option("--out", cfg.out_path, "report TSV");
  detail::add_method_options(*eval, method, metric);
  detail::add_seed_option(*eval, cfg);
  detail::add_model_options(*eval, cfg, kind);

  auto* sweep = app.add_subcommand("sweep", "evaluate one method on several layer dumps");
  detail::add_source_options(*sweep, cfg, true);
  sweep->add_option("--sts", cfg.sts_path, "pairs TSV")->required();
  sweep->add_option("--out", cfg.out_path, "report TSV");
  detail::add_method_options(*sweep, method, metric);
  detail::add_seed_option(*sweep, cfg);
  detail::add_model_options(*sweep, cfg, kind);

  auto* verify = app.add_subcommand("verify", "run the built-in property verifications");
  detail::add_seed_option(*verify, cfg);

  auto* dist = app.add_subcommand("dist", "write per-pair similarities as TSV");
  detail::add_source_options(*dist, cfg);
  dist->add_option("--sts", cfg.sts_path, "pairs TSV")->required();
  dist->add_option("--checkpoint", cfg.checkpoint_path, "trained model; {seed} is replaced");
  dist->add_option("--corpus", cfg.corpus_path, "training sentences when no checkpoint");
  dist->add_option("--train-dump", cfg.train_dump_path, "LTMX training sentences when no checkpoint");
  dist->add_option("--out", cfg.out_path, "output TSV (stdout when omitted)");
  detail::add_method_options(*dist, method, metric);
  detail::add_seed_option(*dist, cfg);
  detail::add_model_options(*dist, cfg, kind);

  const auto usage = [&](const std::string& msg) {
    const CLI::App* sub = nullptr;
    for (const auto* s : app.get_subcommands()) sub = s;
    return UsageError(msg + "\n\n" + (sub != nullptr ? sub->help() : app.help()));
  };

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    cfg.command = Command::help;
    const CLI::App* sub = nullptr;
    for (const auto* s : app.get_subcommands()) sub = s;
    cfg.help_text = sub != nullptr ? sub->help() : app.help();
    return cfg;
  } catch (const CLI::CallForAllHelp&) {
    cfg.command = Command::help;
    cfg.help_text = app.help("", CLI::AppFormatMode::All);
    return cfg;
  } catch (const CLI::ParseError& e) {
    throw usage(e.what());
  }

  if (train->parsed()) cfg.command = Command::train;
  if (eval->parsed()) cfg.command = Command::eval;
  if (sweep->parsed()) cfg.command = Command::sweep;
  if (verify->parsed()) cfg.command = Command::verify;
  if (dist->parsed()) cfg.command = Command::dist;

  try {
    if (!kind.empty()) cfg.vae.kind = parse_model_kind(kind);
    if (!method.empty()) cfg.method = parse_method(method);
    if (!metric.empty()) cfg.metric = parse_metric(metric);
    if (cfg.method) check_method_metric(*cfg.method, cfg.metric);
    VaeConfig probe = cfg.vae;
    probe.input_dim = 1;
    probe.validate();
  } catch (const ConfigError& e) {
    throw usage(e.what());
  }
  if (cfg.seeds.empty()) throw usage("at least one seed is required");
  if (cfg.command == Command::train && cfg.seeds.size() > 1 &&
      cfg.out_path.find("{seed}") == std::string::npos) {
    throw usage("several seeds need a {seed} placeholder in --out");
  }
  if (cfg.command == Command::sweep && !cfg.dump_paths.empty() && !cfg.glove_path.empty()) {
    throw usage("--glove excludes --dump");
  }
  return cfg;
}

inline RunConfig parse_args(const std::vector<std::string>& args) {
  std::vector<const char*> argv{"latte"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return parse_args(static_cast<int>(argv.size()), argv.data());
}

// ---------------------------------------------------------------------------
// Pipelines.

namespace detail {

inline std::ifstream open_in(const std::string& path, std::ios::openmode mode = std::ios::in) {
  std::ifstream in(path, mode);
  if (!in) throw DataError(latte::detail::concat("cannot open '", path, "'"));
  return in;
}

inline std::ofstream open_out(const std::string& path, std::ios::openmode mode = std::ios::out) {
  std::ofstream out(path, mode);
  if (!out) throw DataError(latte::detail::concat("cannot write '", path, "'"));
  return out;
}

inline std::vector<TokenMatrix> load_dump(const std::string& path) {
  auto in = open_in(path, std::ios::binary);
  return read_dump(in);
}

inline std::vector<ScoredPair> load_pairs(const std::string& path) {
  auto in = open_in(path);
  auto pairs = parse_sts_tsv(in);
  if (pairs.empty()) throw DataError(latte::detail::concat("no pairs in '", path, "'"));
  return pairs;
}

/// Sentences tokenized against a GloVe table on demand, so a large training
/// corpus is never materialized as dense rows.
class GloveSentences {
 public:
  GloveSentences(const EmbeddingTable& table, std::vector<std::string> sentences)
      : table_(&table), sentences_(std::move(sentences)) {}
  std::size_t size() const noexcept { return sentences_.size(); }
  TokenMatrix operator[](std::size_t i) const { return tokenize_static(sentences_[i], *table_); }

 private:
  const EmbeddingTable* table_;
  std::vector<std::string> sentences_;
};

/// GloVe vectors restricted to the vocabulary of `texts`.
inline EmbeddingTable load_glove(const std::string& path, const std::vector<std::string>& texts) {
  std::unordered_set<std::string> vocab;
  for (const auto& t : texts) {
    for (auto& tok : static_tokens(t)) vocab.insert(std::move(tok));
  }
  auto in = open_in(path);
  GloveOptions opts;
  opts.keep = &vocab;
  EmbeddingTable table = parse_glove_text(in, opts);
  if (table.empty()) throw DataError("no GloVe vector matches the input vocabulary");
  log(LogLevel::info, "loaded ", table.size(), " GloVe vectors of dim ", table.dim());
  return table;
}

/// Keeps sentences with at least one in-vocabulary token.
inline std::vector<std::string> known_sentences(const EmbeddingTable& table,
                                                std::vector<std::string> sentences) {
  std::vector<std::string> kept;
  for (auto& s : sentences) {
    for (const auto& tok : static_tokens(s)) {
      if (table.find(tok)) {
        kept.push_back(std::move(s));
        break;
      }
    }
  }
  if (kept.empty()) throw DataError("every training sentence is out of vocabulary");
  if (kept.size() < sentences.size()) {
    log(LogLevel::warn, sentences.size() - kept.size(), " training sentences dropped as OOV");
  }
  return kept;
}

/// Evaluation sentences for a list of pairs, interleaved (a0, b0, a1, b1, ...).
/// A sentence with no in-vocabulary token is nullopt and its pair is dropped.
struct EvalInputs {
  std::optional<EmbeddingTable> table;
  std::vector<std::optional<TokenMatrix>> sentences;
  std::size_t dim = 0;
};

inline EvalInputs load_eval_inputs(const RunConfig& cfg, const std::vector<ScoredPair>& pairs) {
  EvalInputs inputs;
  if (cfg.has_dump()) {
    auto rows = load_dump(cfg.dump_paths.front());
    if (rows.size() != 2 * pairs.size()) {
      throw DataError(latte::detail::concat("dump has ", rows.size(), " sentences, expected ",
                                            2 * pairs.size(), " (pairs interleaved)"));
    }
    inputs.dim = rows.front().dim();
    for (auto& r : rows) inputs.sentences.emplace_back(std::move(r));
    return inputs;
  }
  if (!cfg.has_glove()) throw UsageError("an embedding source is required: --glove or --dump");
  std::vector<std::string> texts;
  for (const auto& p : pairs) {
    texts.push_back(p.sentence_a);
    texts.push_back(p.sentence_b);
  }
  std::vector<std::string> corpus;
  if (!cfg.corpus_path.empty()) {
    auto in = open_in(cfg.corpus_path);
    corpus = read_corpus(in).sentences;
  }
  std::vector<std::string> all = texts;
  all.insert(all.end(), corpus.begin(), corpus.end());
  inputs.table = load_glove(cfg.glove_path, all);
  inputs.dim = inputs.table->dim();
  std::size_t oov = 0;
  for (const auto& t : texts) {
    try {
      inputs.sentences.emplace_back(tokenize_static(t, *inputs.table, &oov));
    } catch (const DataError&) {
      inputs.sentences.emplace_back(std::nullopt);
    }
  }
  log(LogLevel::info, oov, " OOV tokens in evaluation sentences");
  return inputs;
}

inline Method resolve_method(const RunConfig& cfg) {
  if (cfg.method) return *cfg.method;
  if (cfg.checkpoint_path.empty()) return Method::mean_pool;
  switch (cfg.vae.kind) {
    case ModelKind::categorical:
      return Method::latte_mix;
    case ModelKind::normal:
      return Method::normal_vae;
    case ModelKind::autoencoder:
      return Method::autoencoder;
  }
  return Method::latte_mix;
}

/// One model per seed, loaded from the checkpoint or trained from scratch.
inline VaeModel obtain_model(const RunConfig& cfg, Method method, std::uint64_t seed,
                             const EvalInputs& inputs) {
  if (!cfg.checkpoint_path.empty()) {
    auto in = open_in(expand_seed(cfg.checkpoint_path, seed), std::ios::binary);
    VaeModel model = load_checkpoint(in);
    if (model.config.input_dim != inputs.dim) {
      throw ShapeError(latte::detail::concat("checkpoint expects dim ", model.config.input_dim,
                                             ", embeddings have dim ", inputs.dim));
    }
    return model;
  }
  VaeConfig vc = cfg.vae;
  vc.kind = model_kind_for(method);
  vc.input_dim = inputs.dim;
  vc.seed = seed;
  SeededRng rng(seed);
  if (!cfg.train_dump_path.empty()) {
    return train(load_dump(cfg.train_dump_path), vc, rng).model;
  }
  if (inputs.table && !cfg.corpus_path.empty()) {
    auto in = open_in(cfg.corpus_path);
    const GloveSentences corpus(*inputs.table, known_sentences(*inputs.table, read_corpus(in).sentences));
    return train(corpus, vc, rng).model;
  }
  std::vector<TokenMatrix> own;
  for (const auto& s : inputs.sentences) {
    if (s) own.push_back(*s);
  }
  return train(own, vc, rng).model;
}

inline std::string dataset_name(const std::string& path) {
  return std::filesystem::path(path).stem().string();
}

inline std::vector<std::optional<double>> score_pairs(const EvalInputs& inputs,
                                                      const PairScorer& scorer,
                                                      std::size_t pairs) {
  std::vector<std::optional<double>> out;
  for (std::size_t i = 0; i < pairs; ++i) {
    const auto& a = inputs.sentences[2 * i];
    const auto& b = inputs.sentences[2 * i + 1];
    out.push_back(a && b ? std::optional<double>(scorer.similarity(*a, *b)) : std::nullopt);
  }
  return out;
}

inline void write_train_report(const TrainReport& rep, std::ostream& out) {
  out << "step\tloss\treconstruction\tkl\tbeta\tlr_multiplier\n";
  for (std::size_t i = 0; i < rep.steps(); ++i) {
    out << i + 1 << '\t' << latte::detail::format_double(rep.loss[i]) << '\t'
        << latte::detail::format_double(rep.reconstruction[i]) << '\t' << latte::detail::format_double(rep.kl[i]) << '\t'
        << latte::detail::format_double(rep.beta[i]) << '\t' << latte::detail::format_double(rep.lr_multiplier[i]) << '\n';
  }
}

inline int run_train(const RunConfig& cfg, std::ostream& out) {
  std::optional<EmbeddingTable> table;
  std::vector<TokenMatrix> dumped;
  std::vector<std::string> texts;
  if (cfg.has_dump()) {
    dumped = load_dump(cfg.dump_paths.front());
  } else if (cfg.has_glove()) {
    if (cfg.corpus_path.empty()) throw UsageError("train with --glove needs --corpus");
    auto in = open_in(cfg.corpus_path);
    texts = read_corpus(in).sentences;
    table = load_glove(cfg.glove_path, texts);
    texts = known_sentences(*table, std::move(texts));
  } else {
    throw UsageError("an embedding source is required: --glove or --dump");
  }

  for (std::uint64_t seed : cfg.seeds) {
    VaeConfig vc = cfg.vae;
    vc.input_dim = table ? table->dim() : dumped.front().dim();
    vc.seed = seed;
    SeededRng rng(seed);
    const TrainResult result =
        table ? train(GloveSentences(*table, texts), vc, rng) : train(dumped, vc, rng);
    const std::string path = expand_seed(cfg.out_path, seed);
    {
      auto f = open_out(path, std::ios::binary);
      save_checkpoint(result.model, f);
    }
    if (!cfg.report_path.empty()) {
      auto f = open_out(expand_seed(cfg.report_path, seed));
      write_train_report(result.report, f);
    }
    const auto& rep = result.report;
    out << "seed " << seed << ": " << rep.steps() << " steps, loss " << rep.loss.front()
        << " -> " << rep.loss.back() << ", wrote " << path << '\n';
  }
  return kExitOk;
}

inline int run_eval(const RunConfig& cfg, std::ostream& out) {
  const auto pairs = load_pairs(cfg.sts_path);
  const auto inputs = load_eval_inputs(cfg, pairs);
  const Method method = resolve_method(cfg);
  check_method_metric(method, cfg.metric);

  std::vector<EvalReport> runs;
  const auto evaluate = [&](const PairScorer& scorer) {
    const auto scores = score_pairs(inputs, scorer, pairs.size());
    runs.push_back(evaluate_sts(pairs, [&](std::size_t i, const ScoredPair&) { return scores[i]; }));
  };
  if (!needs_model(method)) {
    evaluate(PairScorer(method, cfg.metric));
  } else {
    for (std::uint64_t seed : cfg.seeds) {
      const VaeModel model = obtain_model(cfg, method, seed, inputs);
      evaluate(PairScorer(method, cfg.metric, &model));
    }
  }
  EvalReport report = combine_seeds(runs);
  report.dataset = dataset_name(cfg.sts_path);
  report.method = std::string(to_string(method));
  report.metric = std::string(to_string(cfg.metric));
  const std::vector<EvalReport> reports{report};
  write_reports_table(reports, out);
  if (!cfg.out_path.empty()) {
    auto f = open_out(cfg.out_path);
    write_reports_tsv(reports, f);
  }
  return kExitOk;
}

inline int run_sweep(const RunConfig& cfg, std::ostream& out) {
  if (!cfg.has_dump()) throw UsageError("sweep needs at least one --dump");
  const auto pairs = load_pairs(cfg.sts_path);
  std::vector<LayerDump> dumps;
  for (const auto& path : cfg.dump_paths) {
    dumps.push_back({dataset_name(path), load_dump(path), {}});
  }
  SweepOptions opts;
  opts.method = cfg.method.value_or(Method::mean_pool);
  opts.metric = cfg.metric;
  opts.config = cfg.vae;
  opts.seeds = cfg.seeds;
  opts.dataset = dataset_name(cfg.sts_path);
  const auto reports = layer_sweep(dumps, pairs, opts);
  write_reports_table(reports, out);
  if (!cfg.out_path.empty()) {
    auto f = open_out(cfg.out_path);
    write_reports_tsv(reports, f);
  }
  return kExitOk;
}

inline int run_verify(const RunConfig& cfg, std::ostream& out) {
  SeededRng rng(cfg.seeds.front());
  std::vector<VerificationResult> results;
  results.push_back(theorem1_counterexample());
  results.push_back(theorem2_property(rng));
  results.push_back(tau_limit_check(rng));
  bool all = true;
  for (const auto& r : results) {
    out << (r.passed ? "PASS " : "FAIL ") << r.name << ": " << r.details << '\n';
    all = all && r.passed;
  }
  return all ? kExitOk : kExitVerifyFailed;
}

inline int run_dist(const RunConfig& cfg, std::ostream& out) {
  const auto pairs = load_pairs(cfg.sts_path);
  const auto inputs = load_eval_inputs(cfg, pairs);
  const Method method = resolve_method(cfg);
  check_method_metric(method, cfg.metric);
  std::optional<VaeModel> model;
  if (needs_model(method)) model = obtain_model(cfg, method, cfg.seeds.front(), inputs);
  const PairScorer scorer(method, cfg.metric, model ? &*model : nullptr);
  const auto scores = score_pairs(inputs, scorer, pairs.size());

  std::ofstream file;
  if (!cfg.out_path.empty()) file = open_out(cfg.out_path);
  std::ostream& sink = cfg.out_path.empty() ? out : file;
  sink << "index\tgold\tsimilarity\n";
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    sink << i << '\t' << latte::detail::format_double(pairs[i].gold) << '\t'
         << (scores[i] ? latte::detail::format_double(*scores[i]) : std::string("-")) << '\n';
  }
  return kExitOk;
}

}  // namespace detail

/// Executes a parsed configuration. Exit codes: 0 success, 1 runtime error,
/// 2 usage error, 3 a verification failed.
inline int run(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  try {
    switch (cfg.command) {
      case Command::help:
        out << cfg.help_text;
        return kExitOk;
      case Command::train:
        return detail::run_train(cfg, out);
      case Command::eval:
        return detail::run_eval(cfg, out);
      case Command::sweep:
        return detail::run_sweep(cfg, out);
      case Command::verify:
        return detail::run_verify(cfg, out);
      case Command::dist:
        return detail::run_dist(cfg, out);
    }
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitError;
  }
  return kExitError;
}

/// parse_args followed by run, with usage errors reported on `err`.
inline int main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  try {
    cfg = parse_args(argc, argv);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  }
  return run(cfg, out, err);
}

}  // namespace latte::cli
