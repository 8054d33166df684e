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

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "fixtures.hpp"
#include "latte/synthetic.hpp"
#include "latte/vae.hpp"
#include "oracles.hpp"

namespace {

using latte::ModelKind;
using latte::Tensor2;
using latte::VaeConfig;
using latte::VaeModel;

VaeConfig small_config(ModelKind kind, std::size_t d = 8, std::size_t latent = 4,
                       std::size_t classes = 5) {
  VaeConfig c;
  c.kind = kind;
  c.input_dim = d;
  c.latent_dims = latent;
  c.latent_classes = classes;
  return c;
}

void zero_all(VaeModel& m) {
  std::vector<std::string> names;
  for (const auto& [name, _] : m.params) names.push_back(name);
  for (const auto& n : names) m.params.assign(n, Tensor2(m.params.at(n).rows(), m.params.at(n).cols()));
}

TEST(Config, ValidationErrors) {
  VaeConfig c = small_config(ModelKind::categorical);
  EXPECT_NO_THROW(c.validate());
  for (auto mutate : std::vector<std::function<void(VaeConfig&)>>{
           [](VaeConfig& x) { x.input_dim = 0; }, [](VaeConfig& x) { x.latent_classes = 1; },
           [](VaeConfig& x) { x.tau = 0.0; }, [](VaeConfig& x) { x.encoder_layers = 4; },
           [](VaeConfig& x) { x.batch_size = 0; }, [](VaeConfig& x) { x.free_bits_eps = -1; }}) {
    VaeConfig bad = c;
    mutate(bad);
    EXPECT_THROW(bad.validate(), latte::ConfigError);
  }
}

TEST(Init, Shapes) {
  latte::SeededRng rng(0);
  const VaeModel cat = latte::init_model(small_config(ModelKind::categorical), rng);
  EXPECT_EQ(cat.params.at("encoder.0.weight").rows(), 20u);
  EXPECT_EQ(cat.params.at("encoder.0.weight").cols(), 8u);
  EXPECT_EQ(cat.params.at("decoder.0.weight").cols(), 20u);
  EXPECT_EQ(cat.params.at("decoder.2.weight").rows(), 8u);
  const VaeModel normal = latte::init_model(small_config(ModelKind::normal), rng);
  EXPECT_EQ(normal.params.at("encoder.0.weight").rows(), 8u);
  EXPECT_EQ(normal.params.at("decoder.0.weight").cols(), 4u);
  VaeConfig deep = small_config(ModelKind::autoencoder);
  deep.encoder_layers = 3;
  deep.hidden_width = 6;
  const VaeModel ae = latte::init_model(deep, rng);
  EXPECT_EQ(ae.params.size(), 12u);
  EXPECT_EQ(ae.params.at("encoder.1.weight").rows(), 6u);
  EXPECT_EQ(ae.params.at("encoder.2.weight").rows(), 4u);
}

TEST(Init, SameSeedSameParameters) {
  latte::SeededRng a(42), b(42), c(43);
  const auto cfg = small_config(ModelKind::categorical);
  const auto ma = latte::init_model(cfg, a);
  EXPECT_EQ(ma.params, latte::init_model(cfg, b).params);
  EXPECT_FALSE(ma.params == latte::init_model(cfg, c).params);
}

TEST(Categorical, ZeroLogitsGiveUniform) {
  latte::SeededRng rng(0);
  VaeConfig cfg = small_config(ModelKind::categorical);
  cfg.tau = 1.0;
  VaeModel m = latte::init_model(cfg, rng);
  zero_all(m);
  const Tensor2 u(2, 8, 1.0);
  const auto enc = latte::encode_categorical(m, u);
  for (double v : enc.z.values()) EXPECT_DOUBLE_EQ(v, 0.2);
}

VaeModel identity_encoder(std::size_t c, double tau) {
  latte::SeededRng rng(0);
  VaeConfig cfg = small_config(ModelKind::categorical, c, 1, c);
  cfg.tau = tau;
  VaeModel m = latte::init_model(cfg, rng);
  Tensor2 eye(c, c);
  for (std::size_t i = 0; i < c; ++i) eye(i, i) = 1.0;
  m.params.assign("encoder.0.weight", eye);
  return m;
}

TEST(Categorical, MatchesDirectRelaxationFormula) {
  const VaeModel m = identity_encoder(3, 0.5);
  const Tensor2 u = Tensor2::from_rows({{1, 2, 3}});
  const Tensor2 g = Tensor2::from_rows({{0.5, -0.2, 0.1}});
  const auto enc = latte::encode_categorical(m, u, &g);
  const double e[] = {std::exp((1 + 0.5) / 0.5), std::exp((2 - 0.2) / 0.5), std::exp((3 + 0.1) / 0.5)};
  const double total = e[0] + e[1] + e[2];
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(enc.z[i], e[i] / total, 1e-15);
}

TEST(Categorical, LowTemperatureIsNearlyOneHotAtPerturbedArgmax) {
  latte::SeededRng rng(9);
  const VaeModel m = identity_encoder(6, 0.01);
  std::size_t checked = 0;
  for (int trial = 0; trial < 200; ++trial) {
    Tensor2 u(1, 6);
    for (double& v : u.values()) v = rng.normal();
    const Tensor2 g = latte::gumbel_noise(rng, 1, 6);
    std::vector<double> perturbed(6);
    for (int i = 0; i < 6; ++i) perturbed[i] = u[i] + g[i];
    std::vector<double> sorted = perturbed;
    std::sort(sorted.rbegin(), sorted.rend());
    // A one-hot claim needs the top two perturbed logits separated by more than tau * ln(1000 * C).
    if (sorted[0] - sorted[1] < 0.01 * std::log(6000.0)) continue;
    ++checked;
    const auto enc = latte::encode_categorical(m, u, &g);
    const auto best = std::max_element(perturbed.begin(), perturbed.end()) - perturbed.begin();
    EXPECT_GT(enc.z[static_cast<std::size_t>(best)], 0.999);
  }
  EXPECT_GT(checked, 150u);
}

TEST(Categorical, NoNoiseMeansSampleEqualsProbs) {
  latte::SeededRng rng(1);
  const VaeModel m = latte::init_model(small_config(ModelKind::categorical), rng);
  Tensor2 u(3, 8);
  for (double& v : u.values()) v = rng.normal();
  const auto enc = latte::encode_categorical(m, u);
  EXPECT_EQ(enc.z, enc.probs);
}

TEST(Normal, ZeroModelIsStandard) {
  latte::SeededRng rng(0);
  VaeModel m = latte::init_model(small_config(ModelKind::normal), rng);
  zero_all(m);
  const auto enc = latte::encode_normal(m, Tensor2(2, 8, 3.0));
  EXPECT_EQ(enc.mu, Tensor2(2, 4));
  EXPECT_EQ(enc.logvar, Tensor2(2, 4));
  EXPECT_EQ(latte::reparameterize(enc, Tensor2(2, 4)), enc.mu);
}

TEST(Normal, SampleVarianceMatchesExpLogvar) {
  latte::SeededRng rng(3);
  const VaeModel m = latte::init_model(small_config(ModelKind::normal), rng);
  Tensor2 u(1, 8);
  for (double& v : u.values()) v = rng.normal();
  const auto enc = latte::encode_normal(m, u);
  constexpr int kDraws = 100000;
  std::vector<double> s(4, 0.0), ss(4, 0.0);
  for (int i = 0; i < kDraws; ++i) {
    const Tensor2 z = latte::reparameterize(enc, latte::normal_noise(rng, 1, 4));
    for (std::size_t j = 0; j < 4; ++j) {
      s[j] += z[j];
      ss[j] += z[j] * z[j];
    }
  }
  for (std::size_t j = 0; j < 4; ++j) {
    const double mean = s[j] / kDraws;
    const double var = ss[j] / kDraws - mean * mean;
    const double expected = std::exp(enc.logvar[j]);
    // Standard error of a normal sample variance: var * sqrt(2 / (n - 1)).
    EXPECT_NEAR(var, expected, 3.0 * expected * std::sqrt(2.0 / (kDraws - 1)));
  }
}

TEST(Decoder, ZeroWeightsGiveFinalBias) {
  latte::SeededRng rng(0);
  VaeModel m = latte::init_model(small_config(ModelKind::autoencoder), rng);
  zero_all(m);
  Tensor2 bias(1, 8);
  for (std::size_t i = 0; i < 8; ++i) bias[i] = 0.5 * static_cast<double>(i);
  m.params.assign("decoder.2.bias", bias);
  const Tensor2 out = latte::decode(m, Tensor2(3, 4, 7.0));
  for (std::size_t r = 0; r < 3; ++r) {
    for (std::size_t c = 0; c < 8; ++c) EXPECT_EQ(out(r, c), bias[c]);
  }
}

TEST(Decoder, OneWideIdentityChainPassesThrough) {
  latte::SeededRng rng(0);
  VaeConfig cfg = small_config(ModelKind::autoencoder, 1, 1);
  VaeModel m = latte::init_model(cfg, rng);
  zero_all(m);
  for (int l = 0; l < 3; ++l) m.params.assign(latte::layer_name("decoder", l, "weight"), Tensor2(1, 1, 1.0));
  const Tensor2 z = Tensor2::from_rows({{0.25}, {3.0}});
  EXPECT_EQ(latte::decode(m, z), z);
}

TEST(Decoder, MatchesManualLayerByLayer) {
  latte::SeededRng rng(5);
  const VaeModel m = latte::init_model(small_config(ModelKind::normal), rng);
  Tensor2 z(4, 4);
  for (double& v : z.values()) v = rng.normal();
  Tensor2 x = z;
  for (int l = 0; l < 3; ++l) {
    const auto& b = m.params.at(latte::layer_name("decoder", l, "bias"));
    x = oracle::naive_dense(m.params.at(latte::layer_name("decoder", l, "weight")),
                            std::vector<double>(b.values().begin(), b.values().end()), x);
    if (l < 2) {
      for (double& v : x.values()) v = v > 0.0 ? v : 0.0;
    }
  }
  const Tensor2 got = latte::decode(m, z);
  for (std::size_t i = 0; i < got.size(); ++i) EXPECT_NEAR(got[i], x[i], 1e-14);
}

TEST(KlCategorical, KnownValues) {
  EXPECT_EQ(latte::kl_categorical_uniform(Tensor2::from_rows({{0.25, 0.25, 0.25, 0.25}}), 4)[0], 0.0);
  EXPECT_EQ(latte::kl_categorical_uniform(Tensor2::from_rows({{0, 0, 1, 0}}), 4)[0], std::log(4.0));
  const double direct = std::log(3.0) + 0.5 * std::log(0.5) + 0.5 * std::log(0.25);
  const double got = latte::kl_categorical_uniform(Tensor2::from_rows({{0.5, 0.25, 0.25}}), 3)[0];
  EXPECT_NEAR(got, direct, 1e-15);
  EXPECT_NEAR(got, 0.0589, 5e-5);
  EXPECT_THROW(latte::kl_categorical_uniform(Tensor2::from_rows({{0.5, 0.6}}), 2), latte::DataError);
}

TEST(KlNormal, KnownValuesAndQuadrature) {
  EXPECT_EQ(latte::kl_normal_standard(Tensor2(1, 1), Tensor2(1, 1))[0], 0.0);
  EXPECT_EQ(latte::kl_normal_standard(Tensor2(1, 1, 1.0), Tensor2(1, 1))[0], 0.5);
  const double mu = 0.3, logvar = -0.7, var = std::exp(logvar);
  const double integral = oracle::simpson(
      [&](double x) {
        const double q = oracle::normal_pdf(x, mu, var);
        return q * (std::log(q) - std::log(oracle::normal_pdf(x, 0.0, 1.0)));
      },
      -12.0, 12.0);
  EXPECT_NEAR(latte::kl_normal_standard(Tensor2(1, 1, mu), Tensor2(1, 1, logvar))[0], integral, 1e-9);
}

TEST(Elbo, Composition) {
  const Tensor2 u = Tensor2::from_rows({{1.0, 2.0}});
  const Tensor2 uh = Tensor2::from_rows({{1.5, 2.0}});
  const Tensor2 kl = Tensor2::from_rows({{0.1, 0.5}});
  EXPECT_DOUBLE_EQ(latte::elbo_loss(u, uh, kl, 0.0, 0.3), 0.125);
  EXPECT_DOUBLE_EQ(latte::elbo_loss(u, uh, Tensor2::from_rows({{0.1, 0.1}}), 1.0, 0.3), 0.125 + 0.6);
  // MSE 0.2, KL [0.1, 0.5], beta 0.5, eps 0.3: 0.2 + 0.5 * (0.3 + 0.5) = 0.6.
  const Tensor2 z(1, 2);
  const Tensor2 target = Tensor2::from_rows({{std::sqrt(0.4), 0.0}});
  EXPECT_NEAR(latte::elbo_loss(z, target, kl, 0.5, 0.3), 0.6, 1e-15);
  EXPECT_EQ(latte::elbo_loss(u, uh, Tensor2(), 1.0, 0.3), 0.125);
}

TEST(Elbo, ClampedKlContributesNoGradient) {
  latte::SeededRng rng(2);
  const VaeConfig cfg = small_config(ModelKind::categorical);
  const VaeModel m = latte::init_model(cfg, rng);
  Tensor2 u(3, 8);
  for (double& v : u.values()) v = rng.normal();
  const Tensor2 noise = latte::sample_noise(cfg, 3, rng);
  // Every KL value is below log 5 < 10, so the whole KL term sits on the floor.
  std::map<std::string, Tensor2> clamped, plain;
  const auto parts = latte::compute_loss(m, u, noise, 1.0, 10.0, &clamped);
  latte::compute_loss(m, u, noise, 0.0, 10.0, &plain);
  EXPECT_NEAR(parts.kl_term, 4 * 10.0, 1e-12);
  for (const auto& [name, g] : clamped) EXPECT_EQ(g, plain.at(name)) << name;
}

TEST(Elbo, RecordedLossMatchesPlainForward) {
  latte::SeededRng rng(8);
  for (auto kind : {ModelKind::categorical, ModelKind::normal, ModelKind::autoencoder}) {
    const VaeConfig cfg = small_config(kind);
    const VaeModel m = latte::init_model(cfg, rng);
    Tensor2 u(4, 8);
    for (double& v : u.values()) v = rng.normal();
    const Tensor2 noise = latte::sample_noise(cfg, 4, rng);
    Tensor2 z, kl;
    if (kind == ModelKind::categorical) {
      const auto enc = latte::encode_categorical(m, u, &noise);
      z = enc.z;
      kl = latte::kl_categorical_uniform(enc.probs, cfg.latent_classes);
    } else if (kind == ModelKind::normal) {
      const auto enc = latte::encode_normal(m, u);
      z = latte::reparameterize(enc, noise);
      kl = latte::kl_normal_standard(enc.mu, enc.logvar);
    } else {
      z = latte::encode_auto(m, u);
    }
    const double plain = latte::elbo_loss(u, latte::decode(m, z), kl, 0.4, 0.3);
    EXPECT_NEAR(latte::compute_loss(m, u, noise, 0.4, 0.3).loss, plain, 1e-12)
        << latte::to_string(kind);
  }
}

TEST(Elbo, GradientsMatchFiniteDifferences) {
  for (auto kind : {ModelKind::categorical, ModelKind::normal, ModelKind::autoencoder}) {
    for (std::size_t layers = 1; layers <= 3; ++layers) {
      const auto r = fixture::check_gradients(kind, layers);
      EXPECT_LT(r.max_rel_error, 1e-4) << latte::to_string(kind) << " layers=" << layers << " "
                                       << r.worst;
    }
  }
}

TEST(Elbo, GradientsWithoutFreeBitsFloor) {
  const auto r = fixture::check_gradients(ModelKind::normal, 2, 1.0, 0.0);
  EXPECT_LT(r.max_rel_error, 1e-4) << r.worst;
}

TEST(BetaSchedule, Linear) {
  EXPECT_EQ(latte::beta_schedule(0, 8), 0.0);
  EXPECT_EQ(latte::beta_schedule(8, 8), 1.0);
  EXPECT_EQ(latte::beta_schedule(2, 8), 0.25);
  EXPECT_THROW(latte::beta_schedule(9, 8), latte::ConfigError);
}

TEST(Train, HalvesSmoothedLossInOneEpoch) {
  latte::SeededRng rng(0);
  const auto corpus = latte::synthetic::two_cluster_corpus(rng, 200, 16);
  const auto result = latte::train(corpus, fixture::training_fixture_config(16), rng);
  EXPECT_EQ(result.report.steps(), 50u);
  const auto [head, tail] = fixture::smoothed_ends(result.report.loss, 0);
  EXPECT_LT(tail, 0.5 * head);
}

TEST(Train, SameSeedIdenticalReports) {
  const auto run = [](std::uint64_t seed) {
    latte::SeededRng rng(seed);
    const auto corpus = latte::synthetic::two_cluster_corpus(rng, 40, 6);
    VaeConfig cfg = fixture::training_fixture_config(6);
    cfg.epochs = 2;
    return latte::train(corpus, cfg, rng);
  };
  const auto a = run(11), b = run(11), c = run(12);
  EXPECT_EQ(a.report, b.report);
  EXPECT_EQ(a.model.params, b.model.params);
  EXPECT_FALSE(a.report == c.report);
}

TEST(Train, ScheduleEndpoints) {
  latte::SeededRng rng(1);
  const auto corpus = latte::synthetic::two_cluster_corpus(rng, 10, 4);
  VaeConfig cfg = fixture::training_fixture_config(4);
  cfg.batch_size = 3;
  cfg.epochs = 2;
  const auto rep = latte::train(corpus, cfg, rng).report;
  ASSERT_EQ(rep.steps(), 8u);
  EXPECT_EQ(rep.beta.front(), 0.0);
  EXPECT_EQ(rep.beta.back(), 1.0);
  for (double m : rep.lr_multiplier) {
    EXPECT_GT(m, 0.0);
    EXPECT_LE(m, 1.0);
  }
}

TEST(Train, BatchLargerThanCorpus) {
  latte::SeededRng rng(2);
  const auto corpus = latte::synthetic::two_cluster_corpus(rng, 5, 4);
  VaeConfig cfg = fixture::training_fixture_config(4);
  cfg.batch_size = 64;
  cfg.epochs = 3;
  const auto result = latte::train(corpus, cfg, rng);
  EXPECT_EQ(result.report.steps(), 3u);
  latte::SeededRng fresh(2);
  EXPECT_FALSE(result.model.params == latte::init_model(cfg, fresh).params);
}

TEST(Train, RejectsBadInput) {
  latte::SeededRng rng(3);
  const std::vector<latte::TokenMatrix> empty;
  EXPECT_THROW(latte::train(empty, fixture::training_fixture_config(4), rng), latte::DataError);
  const std::vector<latte::TokenMatrix> wrong{{Tensor2(2, 5), {}}};
  EXPECT_THROW(latte::train(wrong, fixture::training_fixture_config(4), rng), latte::ShapeError);
}

TEST(Checkpoint, RoundTripAndReevaluation) {
  latte::SeededRng rng(4);
  const auto corpus = latte::synthetic::two_cluster_corpus(rng, 30, 6);
  VaeConfig cfg = fixture::training_fixture_config(6);
  cfg.encoder_layers = 2;
  const auto trained = latte::train(corpus, cfg, rng);
  std::stringstream buf;
  latte::save_checkpoint(trained.model, buf);
  const VaeModel loaded = latte::load_checkpoint(buf);
  EXPECT_EQ(loaded.config, trained.model.config);
  EXPECT_EQ(loaded.params, trained.model.params);

  const auto held_out = latte::synthetic::two_cluster_corpus(rng, 4, 6);
  const Tensor2 batch = latte::stack_rows(held_out, std::vector<std::size_t>{0, 1, 2, 3}, 6);
  const Tensor2 noise = latte::sample_noise(cfg, batch.rows(), rng);
  EXPECT_EQ(latte::compute_loss(loaded, batch, noise, 1.0, 0.3).loss,
            latte::compute_loss(trained.model, batch, noise, 1.0, 0.3).loss);
}

TEST(Checkpoint, CorruptInputs) {
  latte::SeededRng rng(5);
  const VaeModel m = latte::init_model(small_config(ModelKind::normal), rng);
  std::stringstream buf;
  latte::save_checkpoint(m, buf);
  const std::string bytes = buf.str();
  for (std::size_t cut : {std::size_t{2}, std::size_t{10}, bytes.size() / 2, bytes.size() - 1}) {
    std::istringstream in(bytes.substr(0, cut));
    EXPECT_THROW(latte::load_checkpoint(in), latte::FormatError) << "cut=" << cut;
  }
  std::istringstream wrong_magic("LTMX" + bytes.substr(4));
  EXPECT_THROW(latte::load_checkpoint(wrong_magic), latte::FormatError);
}

TEST(Checkpoint, ConfigTextRoundTrip) {
  VaeConfig c = small_config(ModelKind::autoencoder, 13, 7, 3);
  c.tau = 0.123456789;
  c.base_lr = 3.3e-7;
  c.seed = 18446744073709551615ull;
  EXPECT_EQ(latte::parse_config(latte::serialize_config(c)), c);
}

}  // namespace
