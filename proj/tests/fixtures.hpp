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

// Shared fixtures for the unit tests and the acceptance runner.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "latte/eval.hpp"
#include "latte/semantics.hpp"
#include "latte/synthetic.hpp"
#include "latte/vae.hpp"
#include "oracles.hpp"

namespace fixture {

// ---------------------------------------------------------------------------
// Gradient check on the full training loss.

struct GradCheck {
  std::uint64_t seed = 0;     // model/input seed actually used
  std::size_t scalars = 0;    // parameter scalars compared
  double max_rel_error = 0.0;
  std::string worst;          // "name[index]: analytic vs numeric"
};

/// Relative error with a small absolute floor on the denominator so that
/// components that are zero up to rounding compare by absolute difference.
inline double relative_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), 1e-4});
}

/// Smallest distance of any ReLU pre-activation, or of any KL value, to its kink.
/// KL is never negative, so a zero floor has no reachable kink.
inline double kink_margin(const latte::VaeModel& model, const latte::Tensor2& u,
                          const latte::Tensor2& noise, double eps) {
  double margin = 1e300;
  const auto scan = [&](std::string_view part, std::size_t layers, latte::Tensor2 x) {
    for (std::size_t l = 0; l < layers; ++l) {
      x = latte::dense_forward(model.params.at(latte::layer_name(part, l, "weight")),
                               model.params.at(latte::layer_name(part, l, "bias")).values(), x);
      if (l + 1 < layers) {
        for (double v : x.values()) margin = std::min(margin, std::abs(v));
        x = latte::relu(std::move(x));
      }
    }
    return x;
  };
  const auto& cfg = model.config;
  const latte::Tensor2 h = scan("encoder", cfg.encoder_layers, u);
  latte::Tensor2 z;
  switch (cfg.kind) {
    case latte::ModelKind::categorical: {
      const auto enc = latte::encode_categorical(model, u, &noise);
      for (double v : latte::kl_categorical_uniform(enc.probs, cfg.latent_classes).values()) {
        if (eps > 0.0) margin = std::min(margin, std::abs(v - eps));
      }
      z = enc.z;
      break;
    }
    case latte::ModelKind::normal: {
      const auto enc = latte::encode_normal(model, u);
      for (double v : latte::kl_normal_standard(enc.mu, enc.logvar).values()) {
        if (eps > 0.0) margin = std::min(margin, std::abs(v - eps));
      }
      z = latte::reparameterize(enc, noise);
      break;
    }
    case latte::ModelKind::autoencoder:
      z = h;
      break;
  }
  scan("decoder", latte::VaeConfig::kDecoderLayers, z);
  return margin;
}

inline latte::VaeConfig gradcheck_config(latte::ModelKind kind, std::size_t encoder_layers) {
  latte::VaeConfig cfg;
  cfg.kind = kind;
  cfg.input_dim = 8;
  cfg.latent_dims = 4;
  cfg.latent_classes = 5;
  cfg.encoder_layers = encoder_layers;
  return cfg;
}

/// Compares every parameter gradient of the loss against central differences
/// (h = 1e-4). Seeds whose draws put a kink within 1e-3 of the evaluation
/// point are skipped, since a finite difference straddling a kink is not a
/// derivative. Throws if no seed in the first 200 is kink-free.
inline GradCheck check_gradients(latte::ModelKind kind, std::size_t encoder_layers,
                                 double beta = 0.7, double eps = 0.3, std::size_t tokens = 3) {
  const latte::VaeConfig cfg = gradcheck_config(kind, encoder_layers);
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    latte::SeededRng rng(seed);
    latte::VaeModel model = latte::init_model(cfg, rng);
    // Non-zero biases so that bias gradients are exercised off the init point.
    for (const auto& s : latte::parameter_shapes(cfg)) {
      if (s.name.ends_with("bias")) {
        latte::Tensor2 b(s.rows, s.cols);
        for (double& v : b.values()) v = 0.1 * rng.normal();
        model.params.assign(s.name, b);
      }
    }
    latte::Tensor2 u(tokens, cfg.input_dim);
    for (double& v : u.values()) v = rng.normal();
    const latte::Tensor2 noise = latte::sample_noise(cfg, tokens, rng);
    if (kink_margin(model, u, noise, eps) < 1e-3) continue;

    std::map<std::string, latte::Tensor2> analytic;
    latte::compute_loss(model, u, noise, beta, eps, &analytic);
    const auto numeric = oracle::finite_difference_grads(
        model,
        [&](const latte::VaeModel& m) { return latte::compute_loss(m, u, noise, beta, eps).loss; },
        1e-4);
    GradCheck out;
    out.seed = seed;
    for (const auto& [name, g] : numeric) {
      const auto& a = analytic.at(name);
      for (std::size_t i = 0; i < g.size(); ++i) {
        ++out.scalars;
        const double err = relative_error(a[i], g[i]);
        if (err > out.max_rel_error) {
          out.max_rel_error = err;
          out.worst = name + "[" + std::to_string(i) + "]: " + std::to_string(a[i]) + " vs " +
                      std::to_string(g[i]);
        }
      }
    }
    return out;
  }
  throw latte::NumericError("no kink-free gradient-check seed found");
}

// ---------------------------------------------------------------------------
// Training sanity.

/// Small categorical model for the loss-halving check. The library defaults
/// (D=64, C=100, peak lr 2e-5) take 13 steps on 200 sentences, far too few
/// at that learning rate to move the loss. tau = 1 keeps the relaxed samples
/// smooth enough that every seed we tried trains stably.
inline latte::VaeConfig training_fixture_config(std::size_t input_dim) {
  latte::VaeConfig cfg;
  cfg.kind = latte::ModelKind::categorical;
  cfg.input_dim = input_dim;
  cfg.latent_dims = 2;
  cfg.latent_classes = 4;
  cfg.tau = 1.0;
  cfg.batch_size = 4;
  cfg.epochs = 1;
  cfg.base_lr = 3e-2;
  cfg.free_bits_eps = 0.3;
  return cfg;
}

/// Mean of the first and last `window` entries; window 0 means a fifth of the run.
inline std::pair<double, double> smoothed_ends(const std::vector<double>& xs, std::size_t window) {
  if (window == 0) window = std::max<std::size_t>(1, xs.size() / 5);
  window = std::min(window, xs.size());
  double head = 0.0, tail = 0.0;
  for (std::size_t i = 0; i < window; ++i) {
    head += xs[i];
    tail += xs[xs.size() - 1 - i];
  }
  return {head / static_cast<double>(window), tail / static_cast<double>(window)};
}

// ---------------------------------------------------------------------------
// Equal-mean topic separation.

struct SeparationResult {
  double mean_pool_auc = 0.0;
  double lattemix_auc = 0.0;
  std::size_t pairs = 0;
};

/// Trains a small categorical model on two topics with identical expected
/// token vectors and scores same-topic detection over all sentence pairs.
inline SeparationResult topic_separation(std::uint64_t seed) {
  latte::SeededRng rng(seed);
  const auto corpus = latte::synthetic::equal_mean_topics(rng, 60, 8);
  latte::VaeConfig cfg;
  cfg.kind = latte::ModelKind::categorical;
  cfg.input_dim = 8;
  cfg.latent_dims = 4;
  cfg.latent_classes = 5;
  cfg.tau = 1.0;
  cfg.epochs = 30;
  cfg.batch_size = 8;
  cfg.base_lr = 1e-2;
  cfg.seed = seed;
  const auto trained = latte::train(corpus.sentences, cfg, rng);

  const std::size_t n = corpus.sentences.size();
  std::vector<latte::PooledVector> pooled;
  std::vector<latte::LatentMixture> mixtures;
  for (const auto& s : corpus.sentences) {
    pooled.push_back(latte::mean_pool(s));
    mixtures.push_back(latte::latent_mixture(trained.model, s));
  }
  std::vector<double> cos_scores, js_scores;
  std::vector<bool> same;  // std::vector<bool> cannot back a span
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      cos_scores.push_back(latte::vector_cosine(pooled[i], pooled[j]));
      js_scores.push_back(-latte::js_divergence(mixtures[i], mixtures[j]));
      same.push_back(corpus.topic[i] == corpus.topic[j]);
    }
  }
  const std::unique_ptr<bool[]> labels(new bool[same.size()]);
  std::copy(same.begin(), same.end(), labels.get());
  const std::span<const bool> lab(labels.get(), same.size());
  return {latte::roc_auc(cos_scores, lab), latte::roc_auc(js_scores, lab), same.size()};
}

}  // namespace fixture
