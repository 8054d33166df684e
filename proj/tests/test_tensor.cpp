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

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "latte/rng.hpp"
#include "latte/tensor.hpp"
#include "oracles.hpp"

namespace {

using latte::Tensor2;

TEST(DenseForward, IdentityWeightsPassThrough) {
  const Tensor2 x = Tensor2::from_rows({{1.5, -2.0, 3.0}, {0.0, 4.0, -1.0}});
  const Tensor2 w = Tensor2::from_rows({{1, 0, 0}, {0, 1, 0}, {0, 0, 1}});
  const std::vector<double> b(3, 0.0);
  EXPECT_EQ(latte::dense_forward(w, b, x), x);
}

TEST(DenseForward, ZeroInputGivesBiasRows) {
  const Tensor2 x(4, 3);
  const Tensor2 w = Tensor2::from_rows({{1, 2, 3}, {4, 5, 6}});
  const std::vector<double> b{0.25, -7.0};
  const Tensor2 y = latte::dense_forward(w, b, x);
  for (std::size_t r = 0; r < y.rows(); ++r) {
    EXPECT_EQ(y(r, 0), 0.25);
    EXPECT_EQ(y(r, 1), -7.0);
  }
}

TEST(DenseForward, MatchesNaiveTripleLoop) {
  latte::SeededRng rng(11);
  // Integer-valued entries keep every partial sum exact, so the comparison is exact.
  Tensor2 x(3, 4), w(5, 4);
  for (double& v : x.values()) v = static_cast<double>(static_cast<int>(rng.index(19)) - 9);
  for (double& v : w.values()) v = static_cast<double>(static_cast<int>(rng.index(19)) - 9);
  std::vector<double> b(5);
  for (double& v : b) v = static_cast<double>(rng.index(7));
  EXPECT_EQ(latte::dense_forward(w, b, x), oracle::naive_dense(w, b, x));
}

TEST(DenseForward, ShapeMismatchThrows) {
  const Tensor2 x(2, 3);
  const Tensor2 w(4, 2);
  EXPECT_THROW(latte::dense_forward(w, std::vector<double>(4), x), latte::ShapeError);
  EXPECT_THROW(latte::dense_forward(Tensor2(4, 3), std::vector<double>(3), x), latte::ShapeError);
}

TEST(SoftmaxRows, UniformForEqualLogits) {
  const Tensor2 y = latte::softmax_rows(Tensor2::from_rows({{0, 0, 0}}), 1.0);
  for (double v : y.values()) EXPECT_DOUBLE_EQ(v, 1.0 / 3.0);
}

TEST(SoftmaxRows, LargeLogitsDoNotOverflow) {
  const Tensor2 y = latte::softmax_rows(Tensor2::from_rows({{1000.0, 0.0}}), 1.0);
  EXPECT_TRUE(latte::all_finite(y));
  EXPECT_NEAR(y[0], 1.0, 1e-15);
  EXPECT_NEAR(y[1], 0.0, 1e-15);
}

TEST(SoftmaxRows, MatchesQuadPrecisionEvaluation) {
  using Quad = boost::multiprecision::cpp_bin_float_quad;
  const std::vector<double> logits{1.0, 2.0, 3.0};
  const double tau = 0.5;
  Quad total = 0;
  std::vector<Quad> e;
  for (double l : logits) {
    e.push_back(boost::multiprecision::exp(Quad(l) / Quad(tau)));
    total += e.back();
  }
  const Tensor2 y = latte::softmax_rows(Tensor2::from_rows({{1.0, 2.0, 3.0}}), tau);
  for (std::size_t i = 0; i < logits.size(); ++i) {
    EXPECT_NEAR(y[i], static_cast<double>(e[i] / total), 1e-15);
  }
}

TEST(SoftmaxRows, NonPositiveTemperatureThrows) {
  const Tensor2 x = Tensor2::from_rows({{1, 2}});
  EXPECT_THROW(latte::softmax_rows(x, 0.0), latte::ConfigError);
  EXPECT_THROW(latte::softmax_rows(x, -1.0), latte::ConfigError);
}

TEST(SoftmaxRows, RowsSumToOneProperty) {
  latte::SeededRng rng(5);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t cols = 1 + rng.index(40);
    Tensor2 x(3, cols);
    const double scale = std::exp(rng.uniform(-3.0, 6.0));
    for (double& v : x.values()) v = rng.normal() * scale;
    const double tau = std::exp(rng.uniform(std::log(1e-3), std::log(10.0)));
    const Tensor2 y = latte::softmax_rows(x, tau);
    for (std::size_t r = 0; r < y.rows(); ++r) {
      const auto row = y.row(r);
      double total = 0.0;
      for (double p : row) {
        ASSERT_GE(p, 0.0);
        total += p;
      }
      ASSERT_NEAR(total, 1.0, 1e-12) << "tau=" << tau << " scale=" << scale;
    }
  }
}

TEST(Gumbel, AnalyticPoints) {
  EXPECT_NEAR(latte::gumbel_from_uniform(std::exp(-1.0)), 0.0, 1e-15);
  EXPECT_NEAR(latte::gumbel_from_uniform(std::exp(-std::exp(1.0))), -1.0, 1e-15);
}

TEST(Gumbel, UniformStaysInsideOpenInterval) {
  latte::SeededRng rng(0);
  for (int i = 0; i < 200000; ++i) {
    const double u = latte::sample_uniform(rng);
    ASSERT_GT(u, 0.0);
    ASSERT_LT(u, 1.0);
  }
}

TEST(Gumbel, MonteCarloMeanIsEulerMascheroni) {
  latte::SeededRng rng(2024);
  double total = 0.0;
  constexpr int kSamples = 1000000;
  for (int i = 0; i < kSamples; ++i) total += latte::sample_gumbel(rng);
  EXPECT_NEAR(total / kSamples, 0.5772156649, 0.01);
}

TEST(SeededRng, SameSeedSameStream) {
  latte::SeededRng a(99), b(99), c(100);
  bool differs = false;
  for (int i = 0; i < 1000; ++i) {
    const auto x = a.next_u64();
    ASSERT_EQ(x, b.next_u64());
    differs = differs || x != c.next_u64();
  }
  EXPECT_TRUE(differs);
}

TEST(SeededRng, NormalHasUnitMomentsApproximately) {
  latte::SeededRng rng(3);
  double s = 0.0, ss = 0.0;
  constexpr int kSamples = 200000;
  for (int i = 0; i < kSamples; ++i) {
    const double z = rng.normal();
    s += z;
    ss += z * z;
  }
  EXPECT_NEAR(s / kSamples, 0.0, 0.01);
  EXPECT_NEAR(ss / kSamples, 1.0, 0.02);
}

}  // namespace
