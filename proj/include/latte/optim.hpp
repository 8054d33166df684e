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

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "latte/tensor.hpp"

namespace latte {

/// Named model parameters.
///
/// Values are kept on the 32-bit float grid (every stored double is exactly
/// representable as a float) so checkpoints round-trip bit-exactly.
class ParamStore {
 public:
  void add(const std::string& name, Tensor2 value) {
    if (params_.count(name) != 0) throw ConfigError("duplicate parameter name: " + name);
    round_to_float(value);
    params_.emplace(name, std::move(value));
  }

  bool contains(const std::string& name) const { return params_.count(name) != 0; }

  const Tensor2& at(const std::string& name) const {
    auto it = params_.find(name);
    if (it == params_.end()) throw ConfigError("unknown parameter: " + name);
    return it->second;
  }

  /// Replaces a value; the shape is fixed after add().
  void assign(const std::string& name, Tensor2 value) {
    auto it = params_.find(name);
    if (it == params_.end()) throw ConfigError("unknown parameter: " + name);
    detail::require_same_shape(it->second, value, "ParamStore::assign");
    round_to_float(value);
    it->second = std::move(value);
  }

  /// Mutable access without rounding; for finite-difference probes.
  Tensor2& raw(const std::string& name) {
    auto it = params_.find(name);
    if (it == params_.end()) throw ConfigError("unknown parameter: " + name);
    return it->second;
  }

  std::size_t size() const noexcept { return params_.size(); }
  std::size_t scalar_count() const {
    std::size_t n = 0;
    for (const auto& [_, t] : params_) n += t.size();
    return n;
  }

  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

  friend bool operator==(const ParamStore&, const ParamStore&) = default;

  static void round_to_float(Tensor2& t) {
    for (double& v : t.values()) v = static_cast<double>(static_cast<float>(v));
  }

 private:
  std::map<std::string, Tensor2> params_;
};

struct AdamHyper {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double base_lr = 2e-5;
};

struct AdamState {
  AdamHyper hyper;
  std::map<std::string, Tensor2> first_moment;
  std::map<std::string, Tensor2> second_moment;
  std::uint64_t step = 0;

  AdamState() = default;
  AdamState(const ParamStore& params, AdamHyper h) : hyper(h) {
    for (const auto& [name, t] : params) {
      first_moment.emplace(name, Tensor2(t.rows(), t.cols()));
      second_moment.emplace(name, Tensor2(t.rows(), t.cols()));
    }
  }
};

/// One bias-corrected Adam update with step size base_lr * lr_multiplier.
/// Parameters without an entry in `grads` receive a zero gradient.
inline void adam_step(ParamStore& params, const std::map<std::string, Tensor2>& grads,
                      AdamState& state, double lr_multiplier) {
  if (lr_multiplier < 0.0) throw ConfigError("lr multiplier must be non-negative");
  for (const auto& [name, g] : grads) {
    if (!params.contains(name)) throw ShapeError("gradient for unknown parameter " + name);
    detail::require_same_shape(params.at(name), g, "adam_step");
  }
  state.step += 1;
  const auto& h = state.hyper;
  const double t = static_cast<double>(state.step);
  const double correct1 = 1.0 - std::pow(h.beta1, t);
  const double correct2 = 1.0 - std::pow(h.beta2, t);
  const double lr = h.base_lr * lr_multiplier;

  for (const auto& [name, current] : params) {
    auto m_it = state.first_moment.find(name);
    auto v_it = state.second_moment.find(name);
    if (m_it == state.first_moment.end() || v_it == state.second_moment.end()) {
      throw ShapeError("adam state missing parameter " + name);
    }
    Tensor2& m = m_it->second;
    Tensor2& v = v_it->second;
    detail::require_same_shape(current, m, "adam_step moments");
    auto g_it = grads.find(name);
    Tensor2 updated = current;
    for (std::size_t i = 0; i < updated.size(); ++i) {
      const double g = g_it == grads.end() ? 0.0 : g_it->second[i];
      m[i] = h.beta1 * m[i] + (1.0 - h.beta1) * g;
      v[i] = h.beta2 * v[i] + (1.0 - h.beta2) * g * g;
      const double m_hat = m[i] / correct1;
      const double v_hat = v[i] / correct2;
      updated[i] -= lr * m_hat / (std::sqrt(v_hat) + h.eps);
    }
    params.assign(name, std::move(updated));
  }
}

/// Triangular multiplier: 0 -> 1 over the first half of training, 1 -> 0 over the second.
inline double lr_multiplier(double step, double total_steps) {
  if (total_steps <= 0.0) throw ConfigError("lr_multiplier: total_steps must be positive");
  if (step < 0.0 || step > total_steps) throw ConfigError("lr_multiplier: step out of range");
  const double half = total_steps / 2.0;
  return step <= half ? step / half : (total_steps - step) / half;
}

}  // namespace latte
