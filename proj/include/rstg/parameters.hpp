// Copyright 2026 The RSTG Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "rstg/tensor.hpp"

RSTG_NAMESPACE_BEGIN

struct InitRecord {
  std::string distribution;  // "uniform" or "constant"
  double bound = 0;          // half-width for uniform, value for constant
  std::uint64_t seed = 0;
};

struct Parameter {
  std::string name;
  Tensor tensor;
  InitRecord init;
  bool trainable = true;
};

/// Owns the named parameters of a model. Names are hierarchical
/// ("rstg.send.w1") and unique within a store.
class ParameterStore {
 public:
  explicit ParameterStore(std::uint64_t seed = 0) : seed_(seed) {}

  /// Uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)], seeded from (store seed, name).
  Tensor create(const std::string& name, Shape shape, std::size_t fan_in);
  Tensor create_constant(const std::string& name, Shape shape, real value, bool trainable = true);

  bool contains(const std::string& name) const { return index_.count(name) != 0; }
  const Parameter& get(const std::string& name) const;
  Tensor tensor(const std::string& name) const { return get(name).tensor; }

  const std::vector<Parameter>& parameters() const { return params_; }
  std::vector<Parameter> trainable() const;
  std::size_t trainable_count() const;

  void zero_grad();
  /// Copies values of every parameter whose name exists in `other` with an
  /// identical shape. Returns the number of parameters copied.
  std::size_t copy_values_from(const ParameterStore& other);
  std::uint64_t seed() const { return seed_; }

 private:
  Tensor insert(const std::string& name, Tensor t, InitRecord init, bool trainable);

  std::uint64_t seed_;
  std::vector<Parameter> params_;
  std::map<std::string, std::size_t> index_;
};

struct SgdConfig {
  double learning_rate = 1e-4;
  double momentum = 0.9;
  bool nesterov = true;
};

/// SGD with (Nesterov) momentum:
///   v <- mu * v + g;  p <- p - lr * (g + mu * v)  (nesterov)
///                     p <- p - lr * v             (classical)
class SgdOptimizer {
 public:
  SgdOptimizer(const ParameterStore& store, SgdConfig config);
  SgdOptimizer(const std::vector<Parameter>& parameters, SgdConfig config);

  void step();
  void zero_grad();
  double learning_rate() const { return config_.learning_rate; }
  void set_learning_rate(double lr) { config_.learning_rate = lr; }

 private:
  std::vector<Tensor> params_;
  std::vector<std::vector<real>> velocity_;
  SgdConfig config_;
};

RSTG_NAMESPACE_END
