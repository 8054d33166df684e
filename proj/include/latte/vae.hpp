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

// Token-wise variational autoencoders over frozen word embeddings.
//
// Three model kinds share one encoder/decoder layout:
//
//   categorical  encoder -> D*C logits, Gumbel-Softmax sample per latent dim,
//                KL against the uniform categorical prior
//   normal       encoder -> D means and D log-variances, reparameterized
//                sample, KL against N(0, I)
//   autoencoder  encoder -> D deterministic latents, no KL term
//
// The decoder is always a 3-layer MLP (ReLU between layers, linear output).
// The training loss is
//
//   MSE(u_hat, u) + beta * mean_tokens( sum_dims max(KL[token, dim], eps) )
//
// with beta annealed linearly 0 -> 1 and a triangular learning-rate multiplier.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <istream>
#include <map>
#include <numeric>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "latte/autodiff.hpp"
#include "latte/binary_io.hpp"
#include "latte/ingest.hpp"
#include "latte/optim.hpp"
#include "latte/rng.hpp"
#include "latte/tensor.hpp"

namespace latte {

enum class ModelKind { categorical, normal, autoencoder };

inline std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::categorical:
      return "categorical";
    case ModelKind::normal:
      return "normal";
    case ModelKind::autoencoder:
      return "auto";
  }
  return "?";
}

inline ModelKind parse_model_kind(std::string_view name) {
  if (name == "categorical") return ModelKind::categorical;
  if (name == "normal") return ModelKind::normal;
  if (name == "auto" || name == "autoencoder") return ModelKind::autoencoder;
  throw ConfigError(detail::concat("unknown model kind '", name, "'"));
}

struct VaeConfig {
  static constexpr std::size_t kDecoderLayers = 3;

  ModelKind kind = ModelKind::categorical;
  std::size_t input_dim = 0;
  std::size_t latent_dims = 64;
  std::size_t latent_classes = 100;  // categorical only
  double tau = 0.3;
  std::size_t encoder_layers = 1;
  std::size_t hidden_width = 0;  // 0 means input_dim
  std::size_t epochs = 1;
  std::size_t batch_size = 16;
  double base_lr = 2e-5;
  double free_bits_eps = 0.3;
  std::uint64_t seed = 0;

  std::size_t hidden() const noexcept { return hidden_width == 0 ? input_dim : hidden_width; }

  /// Width of the encoder's final layer.
  std::size_t encoder_width() const noexcept {
    switch (kind) {
      case ModelKind::categorical:
        return latent_dims * latent_classes;
      case ModelKind::normal:
        return 2 * latent_dims;
      case ModelKind::autoencoder:
        return latent_dims;
    }
    return 0;
  }

  /// Width of the decoder's input.
  std::size_t latent_width() const noexcept {
    return kind == ModelKind::categorical ? latent_dims * latent_classes : latent_dims;
  }

  void validate() const {
    if (input_dim == 0) throw ConfigError("input_dim must be >= 1");
    if (latent_dims == 0) throw ConfigError("latent_dims must be >= 1");
    if (kind == ModelKind::categorical && latent_classes < 2) {
      throw ConfigError("latent_classes must be >= 2 for the categorical model");
    }
    if (!(tau > 0.0) || !std::isfinite(tau)) throw ConfigError("tau must be positive");
    if (encoder_layers < 1 || encoder_layers > 3) throw ConfigError("encoder_layers must be 1..3");
    if (epochs == 0) throw ConfigError("epochs must be >= 1");
    if (batch_size == 0) throw ConfigError("batch_size must be >= 1");
    if (!(base_lr >= 0.0)) throw ConfigError("base_lr must be non-negative");
    if (!(free_bits_eps >= 0.0)) throw ConfigError("free_bits_eps must be non-negative");
  }

  friend bool operator==(const VaeConfig&, const VaeConfig&) = default;
};

struct VaeModel {
  VaeConfig config;
  ParamStore params;
};

struct ParamShape {
  std::string name;
  std::size_t rows;
  std::size_t cols;
};

inline std::string layer_name(std::string_view part, std::size_t index, std::string_view leaf) {
  return detail::concat(part, '.', index, '.', leaf);
}

/// Parameter table implied by a configuration, in initialization order.
inline std::vector<ParamShape> parameter_shapes(const VaeConfig& config) {
  config.validate();
  std::vector<ParamShape> shapes;
  const std::size_t hidden = config.hidden();
  for (std::size_t l = 0; l < config.encoder_layers; ++l) {
    const std::size_t in = l == 0 ? config.input_dim : hidden;
    const std::size_t out = l + 1 == config.encoder_layers ? config.encoder_width() : hidden;
    shapes.push_back({layer_name("encoder", l, "weight"), out, in});
    shapes.push_back({layer_name("encoder", l, "bias"), 1, out});
  }
  for (std::size_t l = 0; l < VaeConfig::kDecoderLayers; ++l) {
    const std::size_t in = l == 0 ? config.latent_width() : hidden;
    const std::size_t out = l + 1 == VaeConfig::kDecoderLayers ? config.input_dim : hidden;
    shapes.push_back({layer_name("decoder", l, "weight"), out, in});
    shapes.push_back({layer_name("decoder", l, "bias"), 1, out});
  }
  return shapes;
}

/// Weights ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)), biases zero.
inline VaeModel init_model(const VaeConfig& config, SeededRng& rng) {
  VaeModel model{config, {}};
  for (const auto& shape : parameter_shapes(config)) {
    Tensor2 t(shape.rows, shape.cols);
    if (shape.name.ends_with("weight")) {
      const double bound = 1.0 / std::sqrt(static_cast<double>(shape.cols));
      for (double& v : t.values()) v = rng.uniform(-bound, bound);
    }
    model.params.add(shape.name, std::move(t));
  }
  return model;
}

// ---------------------------------------------------------------------------
// Plain forward passes (no recording).

namespace detail {

inline void require_input(const VaeModel& model, const Tensor2& u) {
  if (u.cols() != model.config.input_dim || u.rows() == 0) {
    throw ShapeError(concat("input has shape ", u.rows(), "x", u.cols(), ", model expects d=",
                            model.config.input_dim));
  }
}

inline Tensor2 mlp_forward(const VaeModel& model, std::string_view part, std::size_t layers,
                           Tensor2 x) {
  for (std::size_t l = 0; l < layers; ++l) {
    const Tensor2& w = model.params.at(layer_name(part, l, "weight"));
    const Tensor2& b = model.params.at(layer_name(part, l, "bias"));
    x = dense_forward(w, b.values(), x);
    if (l + 1 < layers) x = relu(std::move(x));
  }
  return x;
}

}  // namespace detail

/// Raw encoder output, K x encoder_width.
inline Tensor2 encoder_forward(const VaeModel& model, const Tensor2& u) {
  detail::require_input(model, u);
  return detail::mlp_forward(model, "encoder", model.config.encoder_layers, u);
}

/// Decoder: latent (K x latent_width) -> reconstruction (K x d).
inline Tensor2 decode(const VaeModel& model, const Tensor2& z) {
  if (z.cols() != model.config.latent_width()) {
    throw ShapeError(detail::concat("decode: latent width ", z.cols(), ", expected ",
                                    model.config.latent_width()));
  }
  return detail::mlp_forward(model, "decoder", VaeConfig::kDecoderLayers, z);
}

struct CategoricalEncoding {
  Tensor2 logits;  // K x (D*C)
  Tensor2 probs;   // K x (D*C): softmax(logits / tau) per C-block, no noise
  Tensor2 z;       // K x (D*C): softmax((logits + g) / tau) per C-block
};

/// Gumbel-Softmax encoding. The class log-probabilities log(pi) are the logits
/// up to a per-block constant, which the block softmax cancels. A null `gumbel`
/// means g = 0, in which case z == probs.
inline CategoricalEncoding encode_categorical(const VaeModel& model, const Tensor2& u,
                                              const Tensor2* gumbel = nullptr) {
  const auto& cfg = model.config;
  if (cfg.kind != ModelKind::categorical) throw ConfigError("model is not categorical");
  CategoricalEncoding enc;
  enc.logits = encoder_forward(model, u);
  enc.probs = softmax_blocks(enc.logits, cfg.latent_classes, cfg.tau);
  if (gumbel == nullptr) {
    enc.z = enc.probs;
  } else {
    detail::require_same_shape(enc.logits, *gumbel, "encode_categorical noise");
    Tensor2 perturbed = enc.logits;
    for (std::size_t i = 0; i < perturbed.size(); ++i) perturbed[i] += (*gumbel)[i];
    enc.z = softmax_blocks(perturbed, cfg.latent_classes, cfg.tau);
  }
  return enc;
}

inline CategoricalEncoding encode_categorical(const VaeModel& model, const Tensor2& u,
                                              SeededRng& rng) {
  const Tensor2 g = gumbel_noise(rng, u.rows(), model.config.encoder_width());
  return encode_categorical(model, u, &g);
}

struct NormalEncoding {
  Tensor2 mu;      // K x D
  Tensor2 logvar;  // K x D
};

inline NormalEncoding encode_normal(const VaeModel& model, const Tensor2& u) {
  const auto& cfg = model.config;
  if (cfg.kind != ModelKind::normal) throw ConfigError("model is not normal");
  const Tensor2 h = encoder_forward(model, u);
  NormalEncoding enc{Tensor2(h.rows(), cfg.latent_dims), Tensor2(h.rows(), cfg.latent_dims)};
  for (std::size_t r = 0; r < h.rows(); ++r) {
    for (std::size_t c = 0; c < cfg.latent_dims; ++c) {
      enc.mu(r, c) = h(r, c);
      enc.logvar(r, c) = h(r, cfg.latent_dims + c);
    }
  }
  return enc;
}

/// z = mu + exp(logvar / 2) * n.
inline Tensor2 reparameterize(const NormalEncoding& enc, const Tensor2& standard_normal) {
  detail::require_same_shape(enc.mu, standard_normal, "reparameterize");
  Tensor2 z = enc.mu;
  for (std::size_t i = 0; i < z.size(); ++i) {
    z[i] += std::exp(0.5 * enc.logvar[i]) * standard_normal[i];
  }
  return z;
}

inline Tensor2 encode_auto(const VaeModel& model, const Tensor2& u) {
  if (model.config.kind != ModelKind::autoencoder) throw ConfigError("model is not an autoencoder");
  return encoder_forward(model, u);
}

// ---------------------------------------------------------------------------
// KL terms and loss composition.

/// KL(q || Uniform(C)) = sum_c q_c log(C q_c) for each C-block; returns K x D.
/// Rounding residue below zero is clamped, so a uniform block gives exactly 0.
inline Tensor2 kl_categorical_uniform(const Tensor2& probs, std::size_t classes) {
  if (classes < 2 || probs.cols() % classes != 0) {
    throw ShapeError("kl_categorical_uniform: columns not a multiple of the class count");
  }
  const std::size_t dims = probs.cols() / classes;
  const double c_count = static_cast<double>(classes);
  Tensor2 kl(probs.rows(), dims);
  for (std::size_t r = 0; r < probs.rows(); ++r) {
    for (std::size_t d = 0; d < dims; ++d) {
      double total = 0.0;
      double acc = 0.0;
      for (std::size_t c = 0; c < classes; ++c) {
        const double p = probs(r, d * classes + c);
        if (p < 0.0) throw DataError("kl_categorical_uniform: negative probability");
        total += p;
        if (p > 0.0) acc += p * std::log(c_count * p);
      }
      if (std::abs(total - 1.0) > 1e-6) {
        throw DataError(detail::concat("kl_categorical_uniform: block sums to ", total));
      }
      kl(r, d) = std::max(acc, 0.0);
    }
  }
  return kl;
}

/// 0.5 * (mu^2 + sigma^2 - log sigma^2 - 1) elementwise.
inline Tensor2 kl_normal_standard(const Tensor2& mu, const Tensor2& logvar) {
  detail::require_same_shape(mu, logvar, "kl_normal_standard");
  Tensor2 kl(mu.rows(), mu.cols());
  for (std::size_t i = 0; i < kl.size(); ++i) {
    kl[i] = 0.5 * (mu[i] * mu[i] + std::exp(logvar[i]) - logvar[i] - 1.0);
  }
  return kl;
}

/// MSE(u_hat, u) + beta * mean over tokens of sum_dims max(KL, eps).
/// An empty kl matrix means "no KL term" (autoencoder).
inline double elbo_loss(const Tensor2& u, const Tensor2& u_hat, const Tensor2& kl, double beta,
                        double eps) {
  detail::require_same_shape(u, u_hat, "elbo_loss reconstruction");
  if (beta < 0.0 || eps < 0.0) throw ConfigError("elbo_loss: beta and eps must be >= 0");
  double sq = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double diff = u_hat[i] - u[i];
    sq += diff * diff;
  }
  const double mse = sq / static_cast<double>(u.size());
  if (kl.empty()) return mse;
  if (kl.rows() != u.rows()) throw ShapeError("elbo_loss: KL rows differ from token count");
  double clamped = 0.0;
  for (double v : kl.values()) clamped += std::max(v, eps);
  return mse + beta * clamped / static_cast<double>(kl.rows());
}

/// Linear KL annealing: beta = step / total_steps, clamped to [0, 1].
inline double beta_schedule(double step, double total_steps) {
  if (total_steps <= 0.0) throw ConfigError("beta_schedule: total_steps must be positive");
  if (step < 0.0 || step > total_steps) throw ConfigError("beta_schedule: step out of range");
  return std::clamp(step / total_steps, 0.0, 1.0);
}

// ---------------------------------------------------------------------------
// Recorded loss for training and gradient checks.

/// Noise for one forward pass: Gumbel (K x D*C) for categorical, standard
/// normal (K x D) for normal, empty for the autoencoder.
inline Tensor2 sample_noise(const VaeConfig& config, std::size_t tokens, SeededRng& rng) {
  switch (config.kind) {
    case ModelKind::categorical:
      return gumbel_noise(rng, tokens, config.encoder_width());
    case ModelKind::normal:
      return normal_noise(rng, tokens, config.latent_dims);
    case ModelKind::autoencoder:
      return {};
  }
  return {};
}

struct LossParts {
  double loss = 0.0;
  double reconstruction = 0.0;
  double kl_term = 0.0;  // already multiplied by beta
  Tensor2 kl;            // K x D raw KL values; empty for the autoencoder
};

/// Evaluates the training loss on `u` with frozen `noise`. When `grads` is
/// non-null it receives the gradient of the loss for every parameter.
inline LossParts compute_loss(const VaeModel& model, const Tensor2& u, const Tensor2& noise,
                              double beta, double eps,
                              std::map<std::string, Tensor2>* grads = nullptr) {
  const auto& cfg = model.config;
  detail::require_input(model, u);
  Graph g;
  std::map<std::string, Var> p;
  for (const auto& [name, value] : model.params) p.emplace(name, g.parameter(name, value));

  const auto mlp = [&](std::string_view part, std::size_t layers, Var x) {
    for (std::size_t l = 0; l < layers; ++l) {
      x = ops::linear(x, p.at(layer_name(part, l, "weight")), p.at(layer_name(part, l, "bias")));
      if (l + 1 < layers) x = ops::relu(x);
    }
    return x;
  };

  const Var x = g.constant(u);
  const Var h = mlp("encoder", cfg.encoder_layers, x);
  Var z{};
  std::optional<Var> kl;
  switch (cfg.kind) {
    case ModelKind::categorical: {
      const std::size_t c = cfg.latent_classes;
      const Var log_probs = ops::block_log_softmax(h, c, cfg.tau);
      const Var probs = ops::exp(log_probs);
      kl = ops::add_scalar(ops::block_sum(ops::mul(probs, log_probs), c),
                           std::log(static_cast<double>(c)));
      z = ops::exp(ops::block_log_softmax(ops::add_constant(h, noise), c, cfg.tau));
      break;
    }
    case ModelKind::normal: {
      const Var mu = ops::slice_cols(h, 0, cfg.latent_dims);
      const Var logvar = ops::slice_cols(h, cfg.latent_dims, cfg.latent_dims);
      const Var sigma = ops::exp(ops::scale(logvar, 0.5));
      z = ops::add(mu, ops::mul(sigma, g.constant(noise)));
      const Var inner = ops::sub(ops::add(ops::square(mu), ops::exp(logvar)), logvar);
      kl = ops::scale(ops::add_scalar(inner, -1.0), 0.5);
      break;
    }
    case ModelKind::autoencoder:
      z = h;
      break;
  }
  const Var u_hat = mlp("decoder", VaeConfig::kDecoderLayers, z);
  const Var recon = ops::mean(ops::square(ops::sub(u_hat, x)));
  Var loss = recon;
  LossParts parts;
  parts.reconstruction = recon.value()[0];
  if (kl) {
    const double per_token = beta / static_cast<double>(u.rows());
    const Var kl_term = ops::scale(ops::sum(ops::clamp_min(*kl, eps)), per_token);
    loss = ops::add(recon, kl_term);
    parts.kl_term = kl_term.value()[0];
    parts.kl = kl->value();
  }
  parts.loss = loss.value()[0];
  if (grads != nullptr) {
    g.backward(loss);
    *grads = g.parameter_grads();
  }
  return parts;
}

// ---------------------------------------------------------------------------
// Training.

struct TrainReport {
  std::vector<double> loss;
  std::vector<double> reconstruction;
  std::vector<double> kl;  // beta-weighted, clamped KL term
  std::vector<double> beta;
  std::vector<double> lr_multiplier;

  std::size_t steps() const noexcept { return loss.size(); }
  friend bool operator==(const TrainReport&, const TrainReport&) = default;
};

struct TrainResult {
  VaeModel model;
  TrainReport report;
};

/// Any indexable collection of sentences: size() and operator[] yielding a
/// TokenMatrix (by value or reference).
template <typename T>
concept SentenceSource = requires(const T& src, std::size_t i) {
  { src.size() } -> std::convertible_to<std::size_t>;
  { src[i].rows } -> std::convertible_to<const Tensor2&>;
};

/// Stacks the rows of several sentences into one matrix.
template <SentenceSource Source>
Tensor2 stack_rows(const Source& src, std::span<const std::size_t> ids, std::size_t dim) {
  std::vector<double> data;
  std::size_t rows = 0;
  for (std::size_t id : ids) {
    decltype(auto) s = src[id];
    if (s.rows.cols() != dim) {
      throw ShapeError(detail::concat("sentence ", id, " has dimension ", s.rows.cols(),
                                      ", model expects ", dim));
    }
    if (s.rows.rows() == 0) throw DataError(detail::concat("sentence ", id, " is empty"));
    data.insert(data.end(), s.rows.values().begin(), s.rows.values().end());
    rows += s.rows.rows();
  }
  return Tensor2(rows, dim, std::move(data));
}

/// Trains a fresh model. Sentences are shuffled each epoch; the loss of a batch
/// is averaged over all of its tokens. The input embeddings are read-only.
template <SentenceSource Source>
TrainResult train(const Source& corpus, const VaeConfig& config, SeededRng& rng) {
  config.validate();
  const std::size_t n = corpus.size();
  if (n == 0) throw DataError("train: empty corpus");

  TrainResult result{init_model(config, rng), {}};
  AdamState adam(result.model.params, AdamHyper{.base_lr = config.base_lr});
  const std::size_t per_epoch = (n + config.batch_size - 1) / config.batch_size;
  const std::size_t total = per_epoch * config.epochs;

  std::vector<std::size_t> order(n);
  std::size_t step = 0;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    rng.shuffle(order);
    for (std::size_t start = 0; start < n; start += config.batch_size, ++step) {
      const std::size_t stop = std::min(n, start + config.batch_size);
      const Tensor2 batch = stack_rows(
          corpus, std::span<const std::size_t>(order).subspan(start, stop - start),
          config.input_dim);
      const double lr_mult = lr_multiplier(static_cast<double>(step + 1),
                                           static_cast<double>(total + 1));
      const double beta =
          total > 1 ? beta_schedule(static_cast<double>(step), static_cast<double>(total - 1))
                    : 1.0;
      const Tensor2 noise = sample_noise(config, batch.rows(), rng);
      std::map<std::string, Tensor2> grads;
      const LossParts parts =
          compute_loss(result.model, batch, noise, beta, config.free_bits_eps, &grads);
      adam_step(result.model.params, grads, adam, lr_mult);

      auto& rep = result.report;
      rep.loss.push_back(parts.loss);
      rep.reconstruction.push_back(parts.reconstruction);
      rep.kl.push_back(parts.kl_term);
      rep.beta.push_back(beta);
      rep.lr_multiplier.push_back(lr_mult);
      if (log_threshold() >= LogLevel::info && (step % 100 == 0 || step + 1 == total)) {
        log(LogLevel::info, "step ", step + 1, "/", total, " loss=", parts.loss,
            " recon=", parts.reconstruction, " kl=", parts.kl_term, " beta=", beta);
      }
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// Checkpoints: "LTCK" | u32 version | u32 len + config text | u32 count |
//              count x (u32 len + name | u32 rows | u32 cols | rows*cols f32)
// The config text is "key=value\n" lines sorted by key.

inline constexpr std::uint32_t kCheckpointVersion = 1;
inline constexpr std::string_view kCheckpointMagic = "LTCK";

namespace detail {

inline std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) throw FormatError("cannot format number");
  return std::string(buf, ptr);
}

inline std::map<std::string, std::string> config_fields(const VaeConfig& c) {
  return {
      {"base_lr", format_double(c.base_lr)},
      {"batch_size", std::to_string(c.batch_size)},
      {"encoder_layers", std::to_string(c.encoder_layers)},
      {"epochs", std::to_string(c.epochs)},
      {"free_bits_eps", format_double(c.free_bits_eps)},
      {"hidden_width", std::to_string(c.hidden_width)},
      {"input_dim", std::to_string(c.input_dim)},
      {"kind", std::string(to_string(c.kind))},
      {"latent_classes", std::to_string(c.latent_classes)},
      {"latent_dims", std::to_string(c.latent_dims)},
      {"seed", std::to_string(c.seed)},
      {"tau", format_double(c.tau)},
  };
}

template <typename T>
T field_number(const std::map<std::string, std::string>& fields, const std::string& key) {
  auto it = fields.find(key);
  if (it == fields.end()) throw FormatError("checkpoint config missing key '" + key + "'");
  auto v = parse_number<T>(it->second);
  if (!v) throw FormatError("checkpoint config key '" + key + "' is not a number");
  return *v;
}

}  // namespace detail

/// Canonical text form of a configuration (keys sorted).
inline std::string serialize_config(const VaeConfig& config) {
  std::string text;
  for (const auto& [k, v] : detail::config_fields(config)) text += k + "=" + v + "\n";
  return text;
}

inline VaeConfig parse_config(std::string_view text) {
  std::map<std::string, std::string> fields;
  for (auto line : detail::split(text, '\n')) {
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw FormatError("malformed config line");
    fields.emplace(std::string(line.substr(0, eq)), std::string(line.substr(eq + 1)));
  }
  VaeConfig c;
  auto kind = fields.find("kind");
  if (kind == fields.end()) throw FormatError("checkpoint config missing key 'kind'");
  c.kind = parse_model_kind(kind->second);
  c.base_lr = detail::field_number<double>(fields, "base_lr");
  c.batch_size = detail::field_number<std::size_t>(fields, "batch_size");
  c.encoder_layers = detail::field_number<std::size_t>(fields, "encoder_layers");
  c.epochs = detail::field_number<std::size_t>(fields, "epochs");
  c.free_bits_eps = detail::field_number<double>(fields, "free_bits_eps");
  c.hidden_width = detail::field_number<std::size_t>(fields, "hidden_width");
  c.input_dim = detail::field_number<std::size_t>(fields, "input_dim");
  c.latent_classes = detail::field_number<std::size_t>(fields, "latent_classes");
  c.latent_dims = detail::field_number<std::size_t>(fields, "latent_dims");
  c.seed = detail::field_number<std::uint64_t>(fields, "seed");
  c.tau = detail::field_number<double>(fields, "tau");
  c.validate();
  return c;
}

inline void save_checkpoint(const VaeModel& model, std::ostream& out) {
  out.write(kCheckpointMagic.data(), 4);
  binary::write_u32(out, kCheckpointVersion);
  const std::string text = serialize_config(model.config);
  binary::write_u32(out, binary::checked_u32(text.size(), "config"));
  binary::write_bytes(out, text);
  binary::write_u32(out, binary::checked_u32(model.params.size(), "parameter count"));
  for (const auto& [name, t] : model.params) {
    binary::write_u32(out, binary::checked_u32(name.size(), "name"));
    binary::write_bytes(out, name);
    binary::write_u32(out, binary::checked_u32(t.rows(), "rows"));
    binary::write_u32(out, binary::checked_u32(t.cols(), "cols"));
    for (double v : t.values()) binary::write_f32(out, static_cast<float>(v));
  }
  if (!out) throw FormatError("save_checkpoint: output stream failed");
}

inline VaeModel load_checkpoint(std::istream& in) {
  if (binary::read_string(in, 4, "magic") != kCheckpointMagic) {
    throw FormatError("bad magic: not an LTCK checkpoint");
  }
  const auto version = binary::read_u32(in, "version");
  if (version != kCheckpointVersion) {
    throw FormatError(detail::concat("unsupported checkpoint version ", version));
  }
  const auto text_len = binary::read_u32(in, "config length");
  VaeModel model;
  model.config = parse_config(binary::read_string(in, text_len, "config"));

  std::map<std::string, std::pair<std::size_t, std::size_t>> expected;
  for (const auto& s : parameter_shapes(model.config)) expected[s.name] = {s.rows, s.cols};
  const auto count = binary::read_u32(in, "parameter count");
  if (count != expected.size()) {
    throw FormatError(detail::concat("checkpoint has ", count, " parameters, config implies ",
                                     expected.size()));
  }
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::string name = binary::read_string(in, binary::read_u32(in, "name length"), "name");
    const std::size_t rows = binary::read_u32(in, "rows");
    const std::size_t cols = binary::read_u32(in, "cols");
    auto it = expected.find(name);
    if (it == expected.end() || it->second != std::pair{rows, cols}) {
      throw FormatError(detail::concat("checkpoint parameter '", name, "' (", rows, "x", cols,
                                       ") disagrees with the config"));
    }
    Tensor2 t(rows, cols);
    for (double& v : t.values()) v = binary::read_f32(in, "parameter data");
    model.params.add(name, std::move(t));
  }
  return model;
}

}  // namespace latte
