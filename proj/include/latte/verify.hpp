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

// Executable checks of the theory behind comparing latent mixtures:
//
//   * equal expected word vectors do not imply equal sentence semantics
//   * zero distance between latent distributions iff equal distributions,
//     and empirical token mixtures approach the true distance as K grows
//   * Gumbel-Softmax samples approach one-hot vectors as tau -> 0

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "latte/rng.hpp"
#include "latte/semantics.hpp"
#include "latte/tensor.hpp"

namespace latte {

struct VerificationResult {
  std::string name;
  bool passed = false;
  std::string details;
};

struct ExpectationComparison {
  std::vector<double> p1;
  std::vector<double> p2;
  double mean1 = 0.0;
  double mean2 = 0.0;
  bool semantics_equal = false;
  bool distributions_equal = false;
  double js = 0.0;
};

/// Normalizes two non-negative semantics vectors over the support {0, 1, ...}
/// and compares their expectations and distributions.
inline ExpectationComparison compare_expectations(std::span<const double> m1,
                                                  std::span<const double> m2) {
  if (m1.size() != m2.size() || m1.empty()) throw ShapeError("semantics vectors differ in size");
  const auto normalize = [](std::span<const double> m) {
    double total = 0.0;
    for (double v : m) total += v;
    if (!(total > 0.0)) throw DataError("semantics vector must have positive mass");
    std::vector<double> p(m.size());
    for (std::size_t i = 0; i < m.size(); ++i) p[i] = m[i] / total;
    return p;
  };
  const auto expectation = [](const std::vector<double>& p) {
    double e = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) e += static_cast<double>(i) * p[i];
    return e;
  };
  ExpectationComparison out;
  out.p1 = normalize(m1);
  out.p2 = normalize(m2);
  out.mean1 = expectation(out.p1);
  out.mean2 = expectation(out.p2);
  out.semantics_equal = std::equal(m1.begin(), m1.end(), m2.begin(), m2.end());
  out.distributions_equal = out.p1 == out.p2;
  out.js = js_categorical(out.p1, out.p2);
  return out;
}

inline VerificationResult theorem1_counterexample() {
  const std::array<double, 3> m1{0.0, 1.0, 0.0};
  const std::array<double, 3> m2{1.0, 0.0, 1.0};
  const auto cmp = compare_expectations(m1, m2);
  const std::array<double, 3> control{0.0, 1.0, 0.0};
  const auto same = compare_expectations(m1, control);

  const bool expectations_match = cmp.mean1 == 1.0 && cmp.mean2 == 1.0;
  const bool p2_exact = cmp.p2 == std::vector<double>{0.5, 0.0, 0.5};
  const bool control_ok = same.mean1 == same.mean2 && same.distributions_equal;
  std::ostringstream oss;
  oss << "m1=[0,1,0] m2=[1,0,1] p(u|m1)=[" << cmp.p1[0] << "," << cmp.p1[1] << "," << cmp.p1[2]
      << "] p(u|m2)=[" << cmp.p2[0] << "," << cmp.p2[1] << "," << cmp.p2[2] << "] E1=" << cmp.mean1
      << " E2=" << cmp.mean2 << " JS=" << cmp.js << " (ln2=" << std::numbers::ln2 << ")"
      << " control_equal=" << (control_ok ? "yes" : "no");
  return {"theorem1_counterexample",
          expectations_match && !cmp.semantics_equal && p2_exact && cmp.js > 0.0 && control_ok,
          oss.str()};
}

namespace detail {

inline LatentMixture random_mixture(SeededRng& rng, std::size_t dims, std::size_t classes) {
  LatentMixture mix{Tensor2(dims, classes)};
  for (std::size_t d = 0; d < dims; ++d) {
    double total = 0.0;
    for (double& p : mix.probs.row(d)) {
      p = -std::log(rng.uniform());  // Dirichlet(1) via normalized exponentials
      total += p;
    }
    for (double& p : mix.probs.row(d)) p /= total;
  }
  return mix;
}

inline double mean_total_variation(const LatentMixture& a, const LatentMixture& b) {
  double tv = 0.0;
  for (std::size_t i = 0; i < a.probs.size(); ++i) tv += std::abs(a.probs[i] - b.probs[i]);
  return 0.5 * tv / static_cast<double>(a.dims());
}

/// Histogram of K one-hot draws per latent dimension, divided by K.
inline LatentMixture empirical_mixture(SeededRng& rng, const LatentMixture& truth, std::size_t k) {
  LatentMixture mix{Tensor2(truth.dims(), truth.classes())};
  for (std::size_t d = 0; d < truth.dims(); ++d) {
    const auto row = truth.probs.row(d);
    for (std::size_t draw = 0; draw < k; ++draw) {
      const double u = rng.uniform();
      double acc = 0.0;
      std::size_t cls = row.size() - 1;
      for (std::size_t c = 0; c < row.size(); ++c) {
        acc += row[c];
        if (u < acc) {
          cls = c;
          break;
        }
      }
      mix.probs(d, cls) += 1.0;
    }
  }
  for (double& p : mix.probs.values()) p /= static_cast<double>(k);
  return mix;
}

}  // namespace detail

/// Identity of indiscernibles for JS, L2 and cosine distance on random
/// mixtures, plus convergence of empirical token mixtures to the true distance.
inline VerificationResult theorem2_property(SeededRng& rng, std::size_t trials = 100,
                                            std::size_t k_max = 256) {
  if (trials == 0) throw ConfigError("theorem2_property needs at least one trial");
  constexpr std::size_t kDims = 4;
  constexpr std::size_t kClasses = 8;
  constexpr std::size_t kDraws = 10;

  double worst_identical = 0.0;
  double smallest_distinct = std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < trials; ++t) {
    const auto a = detail::random_mixture(rng, kDims, kClasses);
    const LatentMixture copy = a;
    worst_identical = std::max({worst_identical, js_divergence(a, copy), mixture_l2(a, copy),
                                1.0 - mixture_cosine(a, copy)});
    auto b = detail::random_mixture(rng, kDims, kClasses);
    while (detail::mean_total_variation(a, b) < 0.01) b = detail::random_mixture(rng, kDims, kClasses);
    smallest_distinct = std::min({smallest_distinct, js_divergence(a, b), mixture_l2(a, b),
                                  1.0 - mixture_cosine(a, b)});
  }

  std::vector<std::size_t> sizes;
  for (std::size_t k : {4, 16, 64, 256}) {
    if (k <= k_max) sizes.push_back(k);
  }
  if (sizes.size() < 2) throw ConfigError("theorem2_property: k_max must be at least 16");
  std::vector<double> mean_error(sizes.size(), 0.0);
  std::size_t improved = 0;
  for (std::size_t t = 0; t < trials; ++t) {
    const auto a = detail::random_mixture(rng, kDims, kClasses);
    const auto b = detail::random_mixture(rng, kDims, kClasses);
    const double truth = js_divergence(a, b);
    std::vector<double> err(sizes.size(), 0.0);
    for (std::size_t s = 0; s < sizes.size(); ++s) {
      for (std::size_t r = 0; r < kDraws; ++r) {
        const auto ea = detail::empirical_mixture(rng, a, sizes[s]);
        const auto eb = detail::empirical_mixture(rng, b, sizes[s]);
        err[s] += std::abs(js_divergence(ea, eb) - truth) / kDraws;
      }
      mean_error[s] += err[s] / static_cast<double>(trials);
    }
    if (err.back() < err.front()) ++improved;
  }
  bool monotone = true;
  for (std::size_t s = 1; s < sizes.size(); ++s) monotone = monotone && mean_error[s] < mean_error[s - 1];
  const double improved_frac = static_cast<double>(improved) / static_cast<double>(trials);

  std::ostringstream oss;
  oss << "max distance for identical mixtures=" << worst_identical
      << " min distance for distinct mixtures=" << smallest_distinct << " mean |JS_emp - JS|:";
  for (std::size_t s = 0; s < sizes.size(); ++s) oss << " K=" << sizes[s] << ":" << mean_error[s];
  oss << " largest-K beats K=" << sizes.front() << " in " << improved_frac * 100.0
      << "% of trials";
  const bool passed = worst_identical < 1e-9 && smallest_distinct > 0.0 && monotone &&
                      improved_frac >= 0.95;
  return {"theorem2_property", passed, oss.str()};
}

/// z = softmax((log pi + g) / tau) for one row of class log-probabilities.
inline Tensor2 gumbel_softmax(const Tensor2& log_pi, const Tensor2& gumbel, double tau) {
  detail::require_same_shape(log_pi, gumbel, "gumbel_softmax");
  Tensor2 x = log_pi;
  for (std::size_t j = 0; j < x.size(); ++j) x[j] += gumbel[j];
  return softmax_rows(x, tau);
}

/// Fraction of Gumbel-Softmax samples whose largest entry exceeds `threshold`.
inline double one_hot_fraction(SeededRng& rng, std::span<const double> log_pi, double tau,
                               std::size_t samples, double threshold = 0.999) {
  const Tensor2 logits = Tensor2::row_vector(log_pi);
  Tensor2 g(1, log_pi.size());
  std::size_t hits = 0;
  for (std::size_t s = 0; s < samples; ++s) {
    for (double& v : g.values()) v = sample_gumbel(rng);
    const Tensor2 z = gumbel_softmax(logits, g, tau);
    if (*std::max_element(z.values().begin(), z.values().end()) > threshold) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(samples);
}

/// Mean entropy (nats) of Gumbel-Softmax samples.
inline double mean_sample_entropy(SeededRng& rng, std::span<const double> log_pi, double tau,
                                  std::size_t samples) {
  const Tensor2 logits = Tensor2::row_vector(log_pi);
  Tensor2 g(1, log_pi.size());
  double total = 0.0;
  for (std::size_t s = 0; s < samples; ++s) {
    for (double& v : g.values()) v = sample_gumbel(rng);
    const Tensor2 z = gumbel_softmax(logits, g, tau);
    for (double p : z.values()) {
      if (p > 0.0) total -= p * std::log(p);
    }
  }
  return total / static_cast<double>(samples);
}

/// Low-temperature samples are one-hot (tau = 0.01: more than 99% of samples
/// have a max entry above 0.999), high-temperature samples are near uniform
/// (tau = 10: mean entropy above 0.9 log C), and zero noise reduces the sampler
/// to softmax(log pi / tau). Uses uniform class probabilities over C = 100.
inline VerificationResult tau_limit_check(SeededRng& rng, std::size_t samples = 10000) {
  if (samples < 1000) throw ConfigError("tau_limit_check needs at least 1000 samples");
  constexpr std::size_t kClasses = 100;
  const std::vector<double> uniform_logits(kClasses, 0.0);

  const double low = one_hot_fraction(rng, uniform_logits, 0.01, samples);
  const double entropy = mean_sample_entropy(rng, uniform_logits, 10.0, samples);
  const double log_c = std::log(static_cast<double>(kClasses));

  std::vector<double> trend;
  for (double tau : {1.0, 0.1, 0.01, 0.001}) {
    trend.push_back(one_hot_fraction(rng, uniform_logits, tau, samples / 4));
  }

  Tensor2 log_pi(1, kClasses);
  for (double& v : log_pi.values()) v = std::log(rng.uniform());
  const Tensor2 zero_noise(1, kClasses);
  bool zero_noise_ok = true;
  for (double tau : {0.01, 0.3, 1.0, 10.0}) {
    zero_noise_ok = zero_noise_ok && gumbel_softmax(log_pi, zero_noise, tau) == softmax_rows(log_pi, tau);
  }

  std::ostringstream oss;
  oss << "C=" << kClasses << " one-hot fraction at tau=0.01: " << low
      << " (need > 0.99); mean entropy at tau=10: " << entropy << " (need > "
      << 0.9 * log_c << "); one-hot fraction at tau=1,0.1,0.01,0.001: " << trend[0] << ","
      << trend[1] << "," << trend[2] << "," << trend[3]
      << "; zero-noise identity: " << (zero_noise_ok ? "exact" : "violated");
  return {"tau_limit_check", low > 0.99 && entropy > 0.9 * log_c && zero_noise_ok, oss.str()};
}

}  // namespace latte
