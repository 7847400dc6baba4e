// Copyright 2026 The RSTG Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>

#include "rstg/ops.hpp"
#include "rstg/parameters.hpp"

RSTG_NAMESPACE_BEGIN

enum class Activation { sigmoid, relu, tanh, identity };

Activation parse_activation(const std::string& s);
std::string to_string(Activation a);
Tensor activate(Activation a, const Tensor& x);

/// y = x W + b with W: [in, out].
struct Linear {
  Linear() = default;
  Linear(ParameterStore& store, const std::string& name, std::size_t in, std::size_t out, bool bias = true);

  Tensor operator()(const Tensor& x) const;

  std::size_t in = 0, out = 0;
  Tensor weight;
  Tensor bias;  // undefined when constructed without bias
};

/// act_out(W2 act_hidden(W1 x + b1) + b2)
struct Mlp {
  Mlp() = default;
  Mlp(ParameterStore& store, const std::string& name, std::size_t in, std::size_t hidden, std::size_t out,
      Activation hidden_act, Activation out_act);

  Tensor operator()(const Tensor& x) const;
  /// Second half only, given the hidden pre-activation.
  Tensor from_hidden_pre(const Tensor& pre) const;

  Linear first, second;
  Activation hidden_act = Activation::sigmoid, out_act = Activation::sigmoid;
};

struct LstmState {
  Tensor h, c;  // [M, hidden]
};

/// Standard LSTM step with gates (i, f, g, o) from one fused weight over [x | h].
struct LstmCell {
  LstmCell() = default;
  LstmCell(ParameterStore& store, const std::string& name, std::size_t input, std::size_t hidden);

  LstmState operator()(const Tensor& x, const LstmState& state) const;
  LstmState zero_state(std::size_t rows) const;

  std::size_t input = 0, hidden = 0;
  Tensor weight;  // [input + hidden, 4 * hidden]
  Tensor bias;    // [4 * hidden]
};

RSTG_NAMESPACE_END
