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

// Seeded synthetic sentence generators for tests and demos.

#include <cmath>
#include <cstddef>
#include <vector>

#include "latte/ingest.hpp"
#include "latte/rng.hpp"

namespace latte::synthetic {

/// Sentences whose tokens are drawn around one of two fixed centres.
/// Each sentence mixes both clusters in random proportion.
inline std::vector<TokenMatrix> two_cluster_corpus(SeededRng& rng, std::size_t sentences,
                                                   std::size_t dim, std::size_t min_tokens = 4,
                                                   std::size_t max_tokens = 12,
                                                   double noise = 0.1) {
  std::vector<double> centre_a(dim), centre_b(dim);
  for (std::size_t j = 0; j < dim; ++j) {
    centre_a[j] = rng.uniform() < 0.5 ? -2.0 : 2.0;
    centre_b[j] = -centre_a[j] + rng.uniform(-0.5, 0.5);
  }
  std::vector<TokenMatrix> out;
  out.reserve(sentences);
  for (std::size_t s = 0; s < sentences; ++s) {
    const std::size_t k = min_tokens + rng.index(max_tokens - min_tokens + 1);
    const double share_a = rng.uniform();
    TokenMatrix tm{Tensor2(k, dim), {}};
    for (std::size_t t = 0; t < k; ++t) {
      const auto& centre = rng.uniform() < share_a ? centre_a : centre_b;
      for (std::size_t j = 0; j < dim; ++j) {
        tm.rows(t, j) = static_cast<float>(centre[j] + noise * rng.normal());
      }
    }
    out.push_back(std::move(tm));
  }
  return out;
}

struct TopicCorpus {
  std::vector<TokenMatrix> sentences;
  std::vector<int> topic;  // 0 or 1 per sentence
};

/// Two topics whose sentences share the same expected token vector.
///
/// Every sentence has an even number of tokens: half at mean + offset and half
/// at mean - offset, where the offset direction depends on the topic and the
/// two directions are orthogonal. Mean pooling sees only the shared mean plus
/// noise; the token distributions of the two topics are disjoint.
inline TopicCorpus equal_mean_topics(SeededRng& rng, std::size_t per_topic, std::size_t dim,
                                     std::size_t half_tokens_min = 2,
                                     std::size_t half_tokens_max = 6, double spread = 2.0,
                                     double noise = 0.1) {
  if (dim < 2) throw ConfigError("equal_mean_topics needs dim >= 2");
  std::vector<double> mean(dim);
  for (double& m : mean) m = rng.uniform(0.5, 1.5);
  // Orthogonal offsets along two coordinate-pair directions.
  std::vector<std::vector<double>> offset(2, std::vector<double>(dim, 0.0));
  for (std::size_t j = 0; j < dim; ++j) {
    if (j % 2 == 0) {
      offset[0][j] = spread / std::sqrt(static_cast<double>((dim + 1) / 2));
    } else {
      offset[1][j] = spread / std::sqrt(static_cast<double>(dim / 2));
    }
  }
  TopicCorpus out;
  for (std::size_t s = 0; s < 2 * per_topic; ++s) {
    const int topic = static_cast<int>(s % 2);
    const std::size_t half = half_tokens_min + rng.index(half_tokens_max - half_tokens_min + 1);
    TokenMatrix tm{Tensor2(2 * half, dim), {}};
    for (std::size_t t = 0; t < 2 * half; ++t) {
      const double sign = t < half ? 1.0 : -1.0;
      for (std::size_t j = 0; j < dim; ++j) {
        tm.rows(t, j) = static_cast<float>(mean[j] + sign * offset[topic][j] + noise * rng.normal());
      }
    }
    out.sentences.push_back(std::move(tm));
    out.topic.push_back(topic);
  }
  return out;
}

}  // namespace latte::synthetic
