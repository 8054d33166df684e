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

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <iomanip>
#include <numeric>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "latte/ingest.hpp"
#include "latte/semantics.hpp"
#include "latte/vae.hpp"

namespace latte {

/// Average (fractional) ranks, 1-based; tied values share the mean of their ranks.
inline std::vector<double> average_ranks(std::span<const double> xs) {
  std::vector<std::size_t> order(xs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
  std::vector<double> ranks(xs.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i + 1;
    while (j < order.size() && xs[order[j]] == xs[order[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + j + 1);  // mean of i+1 .. j
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = rank;
    i = j;
  }
  return ranks;
}

inline double pearson(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw ShapeError("pearson: length mismatch");
  if (xs.size() < 2) throw DataError("pearson: need at least two values");
  const double n = static_cast<double>(xs.size());
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = xs[i] - mx;
    const double dy = ys[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw DataError("correlation undefined for constant input");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

/// Spearman's rho: Pearson correlation of average ranks.
inline double spearman(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw ShapeError("spearman: length mismatch");
  if (xs.size() < 2) throw DataError("spearman: need at least two values");
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (!std::isfinite(xs[i]) || !std::isfinite(ys[i])) {
      throw DataError("spearman: non-finite input");
    }
  }
  const auto rx = average_ranks(xs);
  const auto ry = average_ranks(ys);
  return pearson(rx, ry);
}

/// Area under the ROC curve of `scores` for separating positive labels,
/// via the rank-sum statistic (ties count one half).
inline double roc_auc(std::span<const double> scores, std::span<const bool> positive) {
  if (scores.size() != positive.size()) throw ShapeError("roc_auc: length mismatch");
  const auto ranks = average_ranks(scores);
  double rank_sum = 0.0;
  std::size_t pos = 0;
  for (std::size_t i = 0; i < ranks.size(); ++i) {
    if (positive[i]) {
      rank_sum += ranks[i];
      ++pos;
    }
  }
  const std::size_t neg = scores.size() - pos;
  if (pos == 0 || neg == 0) throw DataError("roc_auc needs both classes");
  const double p = static_cast<double>(pos);
  return (rank_sum - p * (p + 1.0) / 2.0) / (p * static_cast<double>(neg));
}

struct EvalReport {
  std::string dataset;
  std::string method;
  std::string metric;
  double rho_times_100 = 0.0;
  std::optional<double> std_times_100;  // multi-seed runs only
  std::vector<double> per_seed;         // rho x 100 per seed
  std::size_t n_pairs = 0;
  std::size_t n_dropped = 0;
};

/// Scores every pair (higher = more similar); pairs the scorer cannot handle
/// (nullopt) are dropped and counted.
inline EvalReport evaluate_sts(
    std::span<const ScoredPair> pairs,
    const std::function<std::optional<double>(std::size_t index, const ScoredPair&)>& scorer) {
  std::vector<double> sims;
  std::vector<double> gold;
  EvalReport report;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto s = scorer(i, pairs[i]);
    if (!s) {
      ++report.n_dropped;
      continue;
    }
    sims.push_back(*s);
    gold.push_back(pairs[i].gold);
  }
  if (sims.empty()) throw DataError("evaluate_sts: every pair was dropped");
  report.n_pairs = sims.size();
  report.rho_times_100 = 100.0 * spearman(sims, gold);
  report.per_seed = {report.rho_times_100};
  return report;
}

inline double sample_std(std::span<const double> xs) {
  if (xs.size() < 2) return 0.0;
  const double n = static_cast<double>(xs.size());
  const double m = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  return std::sqrt(ss / (n - 1.0));
}

/// Combines single-seed reports of the same configuration into mean and sample std.
inline EvalReport combine_seeds(std::span<const EvalReport> runs) {
  if (runs.empty()) throw DataError("combine_seeds: no runs");
  EvalReport out = runs.front();
  out.per_seed.clear();
  for (const auto& r : runs) out.per_seed.push_back(r.rho_times_100);
  out.rho_times_100 = std::accumulate(out.per_seed.begin(), out.per_seed.end(), 0.0) /
                      static_cast<double>(out.per_seed.size());
  if (runs.size() > 1) out.std_times_100 = sample_std(out.per_seed);
  return out;
}

// ---------------------------------------------------------------------------
// Scoring methods.

enum class Method { mean_pool, max_pool, cls_pool, latte_mix, normal_vae, autoencoder };
enum class Metric { cosine, js, l2 };

inline std::string_view to_string(Method m) {
  switch (m) {
    case Method::mean_pool:
      return "mean";
    case Method::max_pool:
      return "max";
    case Method::cls_pool:
      return "cls";
    case Method::latte_mix:
      return "lattemix";
    case Method::normal_vae:
      return "normal-vae";
    case Method::autoencoder:
      return "ae";
  }
  return "?";
}

inline std::string_view to_string(Metric m) {
  switch (m) {
    case Metric::cosine:
      return "cosine";
    case Metric::js:
      return "js";
    case Metric::l2:
      return "l2";
  }
  return "?";
}

inline Method parse_method(std::string_view s) {
  for (Method m : {Method::mean_pool, Method::max_pool, Method::cls_pool, Method::latte_mix,
                   Method::normal_vae, Method::autoencoder}) {
    if (s == to_string(m)) return m;
  }
  throw ConfigError(detail::concat("unknown method '", s, "'"));
}

inline Metric parse_metric(std::string_view s) {
  for (Metric m : {Metric::cosine, Metric::js, Metric::l2}) {
    if (s == to_string(m)) return m;
  }
  throw ConfigError(detail::concat("unknown metric '", s, "'"));
}

inline bool needs_model(Method m) {
  return m == Method::latte_mix || m == Method::normal_vae || m == Method::autoencoder;
}

inline ModelKind model_kind_for(Method m) {
  switch (m) {
    case Method::latte_mix:
      return ModelKind::categorical;
    case Method::normal_vae:
      return ModelKind::normal;
    case Method::autoencoder:
      return ModelKind::autoencoder;
    default:
      throw ConfigError(detail::concat("method '", to_string(m), "' has no model"));
  }
}

/// Rejects method/metric combinations that have no defined distance.
inline void check_method_metric(Method method, Metric metric) {
  const bool ok = [&] {
    switch (method) {
      case Method::mean_pool:
      case Method::max_pool:
      case Method::cls_pool:
        return metric == Metric::cosine;
      case Method::latte_mix:
        return true;
      case Method::normal_vae:
        return metric == Metric::l2;
      case Method::autoencoder:
        return metric != Metric::js;
    }
    return false;
  }();
  if (!ok) {
    throw ConfigError(detail::concat("metric '", to_string(metric), "' is not defined for method '",
                                     to_string(method), "'"));
  }
}

/// Similarity of two sentences under a method and metric; distances are
/// negated so that higher always means more similar.
class PairScorer {
 public:
  PairScorer(Method method, Metric metric, const VaeModel* model = nullptr)
      : method_(method), metric_(metric), model_(model) {
    check_method_metric(method, metric);
    if (needs_model(method)) {
      if (model == nullptr) throw ConfigError("method needs a trained model");
      if (model->config.kind != model_kind_for(method)) {
        throw ConfigError(detail::concat("method '", to_string(method), "' needs a ",
                                         to_string(model_kind_for(method)), " model, got ",
                                         to_string(model->config.kind)));
      }
    }
  }

  double similarity(const TokenMatrix& a, const TokenMatrix& b) const {
    switch (method_) {
      case Method::mean_pool:
      case Method::max_pool:
      case Method::cls_pool: {
        const auto pm = method_ == Method::mean_pool  ? PoolMethod::mean
                        : method_ == Method::max_pool ? PoolMethod::max
                                                      : PoolMethod::cls;
        return vector_cosine(pool(a, pm), pool(b, pm));
      }
      case Method::latte_mix: {
        const auto ma = latent_mixture(*model_, a);
        const auto mb = latent_mixture(*model_, b);
        if (metric_ == Metric::js) return -js_divergence(ma, mb);
        if (metric_ == Metric::l2) return -mixture_l2(ma, mb);
        return mixture_cosine(ma, mb);
      }
      case Method::normal_vae:
        return -gaussian_mixture_l2(gaussian_mixture(*model_, a), gaussian_mixture(*model_, b));
      case Method::autoencoder: {
        const auto za = mean_pool(TokenMatrix{encode_auto(*model_, a.rows), {}});
        const auto zb = mean_pool(TokenMatrix{encode_auto(*model_, b.rows), {}});
        if (metric_ == Metric::cosine) return vector_cosine(za, zb);
        double ss = 0.0;
        for (std::size_t i = 0; i < za.values.size(); ++i) {
          ss += (za.values[i] - zb.values[i]) * (za.values[i] - zb.values[i]);
        }
        return -std::sqrt(ss);
      }
    }
    throw ConfigError("unknown method");
  }

  Method method() const noexcept { return method_; }
  Metric metric() const noexcept { return metric_; }

 private:
  Method method_;
  Metric metric_;
  const VaeModel* model_;
};

// ---------------------------------------------------------------------------
// Layer sweep.

/// Token embeddings of one layer. `eval_sentences` holds the pair sentences
/// interleaved (a0, b0, a1, b1, ...); `train_sentences` is the unlabeled
/// training corpus and defaults to the evaluation sentences when empty.
struct LayerDump {
  std::string name;
  std::vector<TokenMatrix> eval_sentences;
  std::vector<TokenMatrix> train_sentences;
};

struct SweepOptions {
  Method method = Method::mean_pool;
  Metric metric = Metric::cosine;
  VaeConfig config;                 // input_dim is taken from each dump
  std::vector<std::uint64_t> seeds = {1, 2, 3};
  std::string dataset = "sts";
};

/// Scores the interleaved sentences of one dump against `pairs`.
inline EvalReport evaluate_dump(std::span<const TokenMatrix> sentences,
                                std::span<const ScoredPair> pairs, const PairScorer& scorer) {
  if (sentences.size() != 2 * pairs.size()) {
    throw DataError(detail::concat("dump has ", sentences.size(), " sentences, expected ",
                                   2 * pairs.size(), " for ", pairs.size(), " pairs"));
  }
  return evaluate_sts(pairs, [&](std::size_t i, const ScoredPair&) -> std::optional<double> {
    return scorer.similarity(sentences[2 * i], sentences[2 * i + 1]);
  });
}

/// One report per layer. Pooling methods are deterministic and evaluated
/// once; model methods are trained and evaluated once per seed and reported
/// as mean and sample standard deviation.
inline std::vector<EvalReport> layer_sweep(std::span<const LayerDump> dumps,
                                           std::span<const ScoredPair> pairs,
                                           const SweepOptions& options) {
  check_method_metric(options.method, options.metric);
  for (const auto& dump : dumps) {
    if (dump.eval_sentences.size() != 2 * pairs.size()) {
      throw DataError(detail::concat("layer '", dump.name, "' is misaligned with the pairs: ",
                                     dump.eval_sentences.size(), " sentences for ", pairs.size(),
                                     " pairs"));
    }
  }
  std::vector<EvalReport> reports;
  for (const auto& dump : dumps) {
    std::vector<EvalReport> runs;
    if (!needs_model(options.method)) {
      runs.push_back(evaluate_dump(dump.eval_sentences, pairs,
                                   PairScorer(options.method, options.metric)));
    } else {
      if (options.seeds.empty()) throw ConfigError("layer_sweep: model methods need seeds");
      const auto& corpus = dump.train_sentences.empty() ? dump.eval_sentences
                                                        : dump.train_sentences;
      VaeConfig cfg = options.config;
      cfg.kind = model_kind_for(options.method);
      cfg.input_dim = dump.eval_sentences.front().dim();
      for (std::uint64_t seed : options.seeds) {
        cfg.seed = seed;
        SeededRng rng(seed);
        const auto trained = train(corpus, cfg, rng);
        runs.push_back(evaluate_dump(dump.eval_sentences, pairs,
                                     PairScorer(options.method, options.metric, &trained.model)));
      }
    }
    EvalReport report = combine_seeds(runs);
    report.dataset = options.dataset + ":" + dump.name;
    report.method = std::string(to_string(options.method));
    report.metric = std::string(to_string(options.metric));
    reports.push_back(std::move(report));
  }
  return reports;
}

// ---------------------------------------------------------------------------
// Report output.

inline std::string format_fixed(double v, int digits = 2) {
  std::ostringstream oss;
  oss << std::fixed << std::setprecision(digits) << v;
  return oss.str();
}

inline void write_reports_tsv(std::span<const EvalReport> reports, std::ostream& out) {
  out << "dataset\tmethod\tmetric\trho_x100\tstd\tn_pairs\tn_dropped\n";
  for (const auto& r : reports) {
    out << r.dataset << '\t' << r.method << '\t' << r.metric << '\t'
        << format_fixed(r.rho_times_100) << '\t'
        << (r.std_times_100 ? format_fixed(*r.std_times_100) : std::string("-")) << '\t'
        << r.n_pairs << '\t' << r.n_dropped << '\n';
  }
}

inline void write_reports_table(std::span<const EvalReport> reports, std::ostream& out) {
  std::size_t w_data = 7, w_method = 6, w_metric = 6;
  for (const auto& r : reports) {
    w_data = std::max(w_data, r.dataset.size());
    w_method = std::max(w_method, r.method.size());
    w_metric = std::max(w_metric, r.metric.size());
  }
  const auto pad = [&](const std::string& s, std::size_t w) {
    return s + std::string(w > s.size() ? w - s.size() : 0, ' ');
  };
  out << pad("dataset", w_data) << "  " << pad("method", w_method) << "  "
      << pad("metric", w_metric) << "  rho x 100       pairs  dropped\n";
  for (const auto& r : reports) {
    std::string score = format_fixed(r.rho_times_100);
    if (r.std_times_100) score += "±" + format_fixed(*r.std_times_100);
    out << pad(r.dataset, w_data) << "  " << pad(r.method, w_method) << "  "
        << pad(r.metric, w_metric) << "  " << pad(score, 14) << "  " << r.n_pairs << "  "
        << r.n_dropped << '\n';
  }
}

// ---------------------------------------------------------------------------
// First principal component of a word's contextual occurrences.

struct OccurrenceBag {
  std::string word;
  Tensor2 occurrences;  // N x d
};

/// Dominant direction of the mean-centred occurrence matrix by power iteration
/// on its covariance. Unit norm; the largest-magnitude entry is positive. A bag
/// with zero variance yields its normalized mean occurrence.
inline std::vector<double> first_principal_component(const OccurrenceBag& bag, double tol = 1e-12,
                                                     std::size_t max_iter = 10000) {
  const Tensor2& x = bag.occurrences;
  if (x.rows() == 0 || x.cols() == 0) throw DataError("occurrence bag is empty");
  const std::size_t n = x.rows();
  const std::size_t d = x.cols();

  std::vector<double> mean(d, 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < d; ++c) mean[c] += x(r, c);
  }
  for (double& m : mean) m /= static_cast<double>(n);

  Tensor2 centered(n, d);
  double scale = 0.0;
  std::size_t start_row = 0;
  double best = -1.0;
  for (std::size_t r = 0; r < n; ++r) {
    double norm = 0.0;
    for (std::size_t c = 0; c < d; ++c) {
      centered(r, c) = x(r, c) - mean[c];
      norm += centered(r, c) * centered(r, c);
      scale = std::max(scale, std::abs(x(r, c)));
    }
    if (norm > best) {
      best = norm;
      start_row = r;
    }
  }

  const auto normalize_signed = [](std::vector<double> v) {
    double norm = 0.0;
    for (double e : v) norm += e * e;
    norm = std::sqrt(norm);
    if (norm == 0.0) throw DataError("principal component undefined for an all-zero bag");
    std::size_t arg = 0;
    for (std::size_t i = 0; i < v.size(); ++i) {
      v[i] /= norm;
      if (std::abs(v[i]) > std::abs(v[arg])) arg = i;
    }
    if (v[arg] < 0.0) {
      for (double& e : v) e = -e;
    }
    return v;
  };

  if (std::sqrt(best) <= 1e-12 * std::max(scale, 1.0)) return normalize_signed(mean);

  const Tensor2 cov = matmul_tn(centered, centered);
  auto row = centered.row(start_row);
  std::vector<double> v = normalize_signed(std::vector<double>(row.begin(), row.end()));
  std::vector<double> next(d);
  for (std::size_t iter = 0; iter < max_iter; ++iter) {
    for (std::size_t i = 0; i < d; ++i) {
      double acc = 0.0;
      for (std::size_t j = 0; j < d; ++j) acc += cov(i, j) * v[j];
      next[i] = acc;
    }
    next = normalize_signed(next);
    double delta = 0.0;
    for (std::size_t i = 0; i < d; ++i) delta = std::max(delta, std::abs(next[i] - v[i]));
    v.swap(next);
    if (delta <= tol) return v;
  }
  throw NumericError(detail::concat("power iteration did not converge in ", max_iter,
                                    " iterations for '", bag.word, "'"));
}

}  // namespace latte
