// Copyright 2026 The RSTG Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <random>
#include <stdexcept>

#include "rstg/parameters.hpp"
#include "rstg/random.hpp"

RSTG_NAMESPACE_BEGIN

Tensor ParameterStore::insert(const std::string& name, Tensor t, InitRecord init, bool trainable) {
  if (name.empty()) throw std::invalid_argument("parameter name must not be empty");
  if (contains(name)) throw std::invalid_argument("duplicate parameter name '" + name + "'");
  index_[name] = params_.size();
  params_.push_back(Parameter{name, t, std::move(init), trainable});
  return t;
}

Tensor ParameterStore::create(const std::string& name, Shape shape, std::size_t fan_in) {
  if (fan_in == 0) throw std::invalid_argument("fan_in must be positive for '" + name + "'");
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  const std::uint64_t seed = derive_seed(seed_, hash_name(name));
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-bound, bound);
  std::vector<real> values(shape_numel(shape));
  for (real& v : values) v = static_cast<real>(dist(rng));
  return insert(name, Tensor(std::move(shape), std::move(values), true), {"uniform", bound, seed}, true);
}

Tensor ParameterStore::create_constant(const std::string& name, Shape shape, real value, bool trainable) {
  return insert(name, Tensor(std::move(shape), value, trainable), {"constant", static_cast<double>(value), 0},
                trainable);
}

const Parameter& ParameterStore::get(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw std::out_of_range("no parameter named '" + name + "'");
  return params_[it->second];
}

std::vector<Parameter> ParameterStore::trainable() const {
  std::vector<Parameter> out;
  for (const Parameter& p : params_) {
    if (p.trainable) out.push_back(p);
  }
  return out;
}

std::size_t ParameterStore::trainable_count() const {
  std::size_t n = 0;
  for (const Parameter& p : params_) {
    if (p.trainable) n += p.tensor.numel();
  }
  return n;
}

void ParameterStore::zero_grad() {
  for (Parameter& p : params_) p.tensor.zero_grad();
}

std::size_t ParameterStore::copy_values_from(const ParameterStore& other) {
  std::size_t copied = 0;
  for (Parameter& p : params_) {
    if (!other.contains(p.name)) continue;
    const Tensor& src = other.get(p.name).tensor;
    if (src.shape() != p.tensor.shape()) {
      throw ShapeError("copy_values_from: '" + p.name + "' has shape " + shape_to_string(src.shape()) +
                       ", expected " + shape_to_string(p.tensor.shape()));
    }
    auto dst = p.tensor.mutable_data();
    std::copy(src.data().begin(), src.data().end(), dst.begin());
    ++copied;
  }
  return copied;
}

SgdOptimizer::SgdOptimizer(const ParameterStore& store, SgdConfig config)
    : SgdOptimizer(store.trainable(), config) {}

SgdOptimizer::SgdOptimizer(const std::vector<Parameter>& parameters, SgdConfig config) : config_(config) {
  for (const Parameter& p : parameters) {
    if (!p.trainable) continue;
    params_.push_back(p.tensor);
    velocity_.emplace_back(p.tensor.numel(), real(0));
  }
}

void SgdOptimizer::step() {
  const auto lr = static_cast<real>(config_.learning_rate);
  const auto mu = static_cast<real>(config_.momentum);
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Tensor& p = params_[i];
    if (!p.has_grad()) continue;
    auto w = p.mutable_data();
    auto g = p.grad();
    auto& v = velocity_[i];
    for (std::size_t k = 0; k < w.size(); ++k) {
      v[k] = mu * v[k] + g[k];
      w[k] -= lr * (config_.nesterov ? g[k] + mu * v[k] : v[k]);
    }
  }
}

void SgdOptimizer::zero_grad() {
  for (Tensor& p : params_) p.zero_grad();
}

RSTG_NAMESPACE_END
