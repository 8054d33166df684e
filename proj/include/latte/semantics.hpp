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

// Sentence representations and the distances between them.
//
// A sentence encoded by the categorical model becomes a LatentMixture: for each
// latent dimension, the average over its tokens of the (noise-free) class
// probabilities. Averaging categoricals gives a categorical, so every row of
// the mixture is itself a distribution over the C classes.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string_view>
#include <vector>

#include "latte/ingest.hpp"
#include "latte/tensor.hpp"
#include "latte/vae.hpp"

namespace latte {

/// D x C matrix whose rows are categorical distributions.
struct LatentMixture {
  Tensor2 probs;

  std::size_t dims() const noexcept { return probs.rows(); }
  std::size_t classes() const noexcept { return probs.cols(); }

  void validate(double tol = 1e-9) const {
    if (probs.empty()) throw ShapeError("latent mixture is empty");
    for (std::size_t r = 0; r < probs.rows(); ++r) {
      double total = 0.0;
      for (double p : probs.row(r)) {
        if (p < 0.0) throw DataError("latent mixture has a negative entry");
        total += p;
      }
      if (std::abs(total - 1.0) > tol) {
        throw DataError(detail::concat("latent mixture row ", r, " sums to ", total));
      }
    }
  }
};

/// Uniformly weighted mixture of diagonal Gaussians (one per token).
struct GaussianMixture {
  Tensor2 means;      // K x D
  Tensor2 variances;  // K x D, strictly positive

  std::size_t components() const noexcept { return means.rows(); }
  std::size_t dims() const noexcept { return means.cols(); }
  double weight() const noexcept { return 1.0 / static_cast<double>(components()); }

  void validate() const {
    detail::require_same_shape(means, variances, "GaussianMixture");
    if (means.rows() == 0) throw ShapeError("gaussian mixture needs K >= 1 components");
    for (double v : variances.values()) {
      if (!(v > 0.0)) throw DataError("gaussian mixture variance must be positive");
    }
  }
};

enum class PoolMethod { mean, max, cls };

inline std::string_view to_string(PoolMethod m) {
  switch (m) {
    case PoolMethod::mean:
      return "mean";
    case PoolMethod::max:
      return "max";
    case PoolMethod::cls:
      return "cls";
  }
  return "?";
}

struct PooledVector {
  std::vector<double> values;
  PoolMethod method = PoolMethod::mean;
};

// ---------------------------------------------------------------------------

/// Averages a K x (D*C) block of per-token probabilities into a D x C mixture.
inline LatentMixture mixture_from_token_probs(const Tensor2& probs, std::size_t classes) {
  if (probs.rows() == 0 || classes == 0 || probs.cols() % classes != 0) {
    throw ShapeError("mixture_from_token_probs: bad shape");
  }
  const std::size_t dims = probs.cols() / classes;
  LatentMixture mix{Tensor2(dims, classes)};
  for (std::size_t k = 0; k < probs.rows(); ++k) {
    for (std::size_t i = 0; i < probs.cols(); ++i) mix.probs[i] += probs(k, i);
  }
  const double inv = 1.0 / static_cast<double>(probs.rows());
  for (double& p : mix.probs.values()) p *= inv;
  return mix;
}

inline LatentMixture latent_mixture(const VaeModel& model, const TokenMatrix& u) {
  if (model.config.kind != ModelKind::categorical) {
    throw ConfigError("latent_mixture needs a categorical model");
  }
  const auto enc = encode_categorical(model, u.rows);
  return mixture_from_token_probs(enc.probs, model.config.latent_classes);
}

inline GaussianMixture gaussian_mixture(const VaeModel& model, const TokenMatrix& u) {
  auto enc = encode_normal(model, u.rows);
  GaussianMixture gm{std::move(enc.mu), std::move(enc.logvar)};
  for (double& v : gm.variances.values()) v = std::exp(v);
  return gm;
}

namespace detail {

inline void require_same_mixture_shape(const LatentMixture& a, const LatentMixture& b) {
  if (!a.probs.same_shape(b.probs) || a.probs.empty()) {
    throw ShapeError(concat("mixture shapes differ: ", a.dims(), "x", a.classes(), " vs ",
                            b.dims(), "x", b.classes()));
  }
}

// sum_i p_i log(p_i / m_i), with 0 log 0 = 0.
inline double kl_to(std::span<const double> p, std::span<const double> m) {
  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] > 0.0) total += p[i] * std::log(p[i] / m[i]);
  }
  return total;
}

}  // namespace detail

/// Jensen-Shannon divergence of two categorical distributions, natural log.
inline double js_categorical(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size() || p.empty()) throw ShapeError("js_categorical: length mismatch");
  std::vector<double> mid(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) mid[i] = 0.5 * (p[i] + q[i]);
  const double js = 0.5 * detail::kl_to(p, mid) + 0.5 * detail::kl_to(q, mid);
  return std::clamp(js, 0.0, std::numbers::ln2);
}

/// Mean over latent dimensions of the per-dimension JS divergence.
inline double js_divergence(const LatentMixture& a, const LatentMixture& b) {
  detail::require_same_mixture_shape(a, b);
  double total = 0.0;
  for (std::size_t d = 0; d < a.dims(); ++d) total += js_categorical(a.probs.row(d), b.probs.row(d));
  return total / static_cast<double>(a.dims());
}

/// Frobenius distance between the mixture probability matrices.
inline double mixture_l2(const LatentMixture& a, const LatentMixture& b) {
  detail::require_same_mixture_shape(a, b);
  double total = 0.0;
  for (std::size_t i = 0; i < a.probs.size(); ++i) {
    const double diff = a.probs[i] - b.probs[i];
    total += diff * diff;
  }
  return std::sqrt(total);
}

inline double cosine(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.empty()) throw ShapeError("cosine: length mismatch");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) throw DataError("cosine of a zero vector");
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

/// Cosine similarity of the flattened D*C probability vectors.
inline double mixture_cosine(const LatentMixture& a, const LatentMixture& b) {
  detail::require_same_mixture_shape(a, b);
  return std::clamp(cosine(a.probs.values(), b.probs.values()), 0.0, 1.0);
}

namespace detail {

// N(x; y, diag(var)) for diagonal covariance.
inline double gaussian_overlap(std::span<const double> mean_a, std::span<const double> var_a,
                               std::span<const double> mean_b, std::span<const double> var_b) {
  double log_density = 0.0;
  for (std::size_t j = 0; j < mean_a.size(); ++j) {
    const double var = var_a[j] + var_b[j];
    const double diff = mean_a[j] - mean_b[j];
    log_density += -0.5 * (std::log(2.0 * std::numbers::pi * var) + diff * diff / var);
  }
  return std::exp(log_density);
}

// sum_ij w_i w_j integral N_i N_j
inline double mixture_inner(const GaussianMixture& a, const GaussianMixture& b) {
  double total = 0.0;
  for (std::size_t i = 0; i < a.components(); ++i) {
    for (std::size_t j = 0; j < b.components(); ++j) {
      total += gaussian_overlap(a.means.row(i), a.variances.row(i), b.means.row(j),
                                b.variances.row(j));
    }
  }
  return total * a.weight() * b.weight();
}

}  // namespace detail

/// Squared L2 distance between the two mixture densities, integral (p_a - p_b)^2.
inline double gaussian_mixture_l2_squared(const GaussianMixture& a, const GaussianMixture& b) {
  a.validate();
  b.validate();
  if (a.dims() != b.dims()) throw ShapeError("gaussian mixtures have different dimensions");
  const double cross = detail::mixture_inner(a, b) + detail::mixture_inner(b, a);
  return detail::mixture_inner(a, a) + detail::mixture_inner(b, b) - cross;
}

/// L2 distance between mixture densities (square root of the integral above).
inline double gaussian_mixture_l2(const GaussianMixture& a, const GaussianMixture& b) {
  return std::sqrt(std::max(0.0, gaussian_mixture_l2_squared(a, b)));
}

// ---------------------------------------------------------------------------
// Pooling baselines.

namespace detail {

inline void require_tokens(const TokenMatrix& u) {
  if (u.rows.rows() == 0 || u.rows.cols() == 0) throw DataError("cannot pool an empty matrix");
}

}  // namespace detail

inline PooledVector mean_pool(const TokenMatrix& u) {
  detail::require_tokens(u);
  PooledVector out{std::vector<double>(u.dim(), 0.0), PoolMethod::mean};
  for (std::size_t k = 0; k < u.length(); ++k) {
    const auto row = u.rows.row(k);
    for (std::size_t j = 0; j < row.size(); ++j) out.values[j] += row[j];
  }
  for (double& v : out.values) v /= static_cast<double>(u.length());
  return out;
}

inline PooledVector max_pool(const TokenMatrix& u) {
  detail::require_tokens(u);
  const auto first = u.rows.row(0);
  PooledVector out{std::vector<double>(first.begin(), first.end()), PoolMethod::max};
  for (std::size_t k = 1; k < u.length(); ++k) {
    const auto row = u.rows.row(k);
    for (std::size_t j = 0; j < row.size(); ++j) out.values[j] = std::max(out.values[j], row[j]);
  }
  return out;
}

/// First row; for transformer dumps this is the sequence-start token.
inline PooledVector cls_pool(const TokenMatrix& u) {
  detail::require_tokens(u);
  const auto first = u.rows.row(0);
  return {std::vector<double>(first.begin(), first.end()), PoolMethod::cls};
}

inline PooledVector pool(const TokenMatrix& u, PoolMethod method) {
  switch (method) {
    case PoolMethod::mean:
      return mean_pool(u);
    case PoolMethod::max:
      return max_pool(u);
    case PoolMethod::cls:
      return cls_pool(u);
  }
  throw ConfigError("unknown pooling method");
}

inline double vector_cosine(const PooledVector& a, const PooledVector& b) {
  return cosine(a.values, b.values);
}

}  // namespace latte
