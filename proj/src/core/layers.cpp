// Copyright 2026 The RSTG Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include "rstg/layers.hpp"

#include <stdexcept>

RSTG_NAMESPACE_BEGIN

Activation parse_activation(const std::string& s) {
  if (s == "sigmoid") return Activation::sigmoid;
  if (s == "relu") return Activation::relu;
  if (s == "tanh") return Activation::tanh;
  if (s == "identity" || s == "none") return Activation::identity;
  throw std::invalid_argument("unknown activation '" + s + "'");
}

std::string to_string(Activation a) {
  switch (a) {
    case Activation::sigmoid: return "sigmoid";
    case Activation::relu: return "relu";
    case Activation::tanh: return "tanh";
    case Activation::identity: return "identity";
  }
  return "?";
}

Tensor activate(Activation a, const Tensor& x) {
  switch (a) {
    case Activation::sigmoid: return sigmoid(x);
    case Activation::relu: return relu(x);
    case Activation::tanh: return tanh(x);
    case Activation::identity: return x;
  }
  return x;
}

Linear::Linear(ParameterStore& store, const std::string& name, std::size_t in_, std::size_t out_, bool bias_)
    : in(in_), out(out_) {
  weight = store.create(name + ".w", {in, out}, in);
  if (bias_) bias = store.create(name + ".b", {out}, in);
}

Tensor Linear::operator()(const Tensor& x) const {
  if (x.rank() != 2 || x.dim(1) != in) {
    throw ShapeError("linear layer expects [*, " + std::to_string(in) + "], got " + shape_to_string(x.shape()));
  }
  Tensor y = matmul(x, weight);
  return bias.defined() ? add(y, bias) : y;
}

Mlp::Mlp(ParameterStore& store, const std::string& name, std::size_t in, std::size_t hidden, std::size_t out,
         Activation hidden_act_, Activation out_act_)
    : first(store, name + ".l1", in, hidden),
      second(store, name + ".l2", hidden, out),
      hidden_act(hidden_act_),
      out_act(out_act_) {}

Tensor Mlp::operator()(const Tensor& x) const { return from_hidden_pre(first(x)); }

Tensor Mlp::from_hidden_pre(const Tensor& pre) const {
  return activate(out_act, second(activate(hidden_act, pre)));
}

LstmCell::LstmCell(ParameterStore& store, const std::string& name, std::size_t input_, std::size_t hidden_)
    : input(input_), hidden(hidden_) {
  weight = store.create(name + ".w", {input + hidden, 4 * hidden}, input + hidden);
  bias = store.create(name + ".b", {4 * hidden}, input + hidden);
}

LstmState LstmCell::zero_state(std::size_t rows) const {
  return {Tensor({rows, hidden}), Tensor({rows, hidden})};
}

LstmState LstmCell::operator()(const Tensor& x, const LstmState& state) const {
  if (x.rank() != 2 || x.dim(1) != input) {
    throw ShapeError("lstm expects input [*, " + std::to_string(input) + "], got " + shape_to_string(x.shape()));
  }
  const Tensor gates = add(matmul(concat(x, state.h, 1), weight), bias);
  const std::size_t H = hidden;
  const Tensor i = sigmoid(slice(gates, 1, 0, H));
  const Tensor f = sigmoid(slice(gates, 1, H, 2 * H));
  const Tensor g = tanh(slice(gates, 1, 2 * H, 3 * H));
  const Tensor o = sigmoid(slice(gates, 1, 3 * H, 4 * H));
  const Tensor c = add(mul(f, state.c), mul(i, g));
  return {mul(o, tanh(c)), c};
}

RSTG_NAMESPACE_END
