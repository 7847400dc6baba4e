// Copyright 2026 The RSTG Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <functional>
#include <numeric>

#include "rstg/nn_ops.hpp"
#include "rstg/ops.hpp"
#include "test_util.hpp"

namespace rstg {
namespace {

using test::away_from_zero;
using test::param;
using test::random_tensor;
using test::weighted_sum;

static_assert(std::is_same_v<real, double>, "engine tests run at 64-bit");

constexpr int kSeeds = 10;

// Builds fresh leaves per seed and checks every one of them.
void expect_gradients(const std::function<std::vector<Tensor>(std::uint64_t)>& make_inputs,
                      const std::function<Tensor(const std::vector<Tensor>&)>& f) {
  for (int seed = 0; seed < kSeeds; ++seed) {
    const std::vector<Tensor> inputs = make_inputs(static_cast<std::uint64_t>(seed) * 7919 + 1);
    std::vector<Parameter> params;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      if (inputs[i].requires_grad()) params.push_back(param("x" + std::to_string(i), inputs[i]));
    }
    const GradCheckReport r =
        check_gradients(params, [&] { return weighted_sum(f(inputs), 99 + static_cast<std::uint64_t>(seed)); });
    EXPECT_TRUE(r.passed) << "seed " << seed << " max rel err " << r.max_rel_error;
    EXPECT_LE(r.max_rel_error, 1e-4);
  }
}

TEST(Tensor, ConstructionAndShape) {
  Tensor t({2, 3}, real(1.5));
  EXPECT_EQ(t.numel(), 6u);
  EXPECT_EQ(t.rank(), 2u);
  EXPECT_EQ(t.at({1, 2}), 1.5);
  EXPECT_THROW(Tensor({2, 2}, std::vector<real>{1, 2, 3}), ShapeError);
  EXPECT_EQ(shape_to_string({3, 4}), "[3x4]");
}

TEST(Tensor, NonFiniteResultRaises) {
  Tensor a({1}, std::vector<real>{std::numeric_limits<real>::max()});
  EXPECT_THROW(mul(a, a), NumericError);
  Tensor b({1}, std::vector<real>{1000});
  EXPECT_NO_THROW(sigmoid(b));
}

TEST(Tensor, ShapeMismatchNamesBothShapes) {
  try {
    add(Tensor({2, 3}), Tensor({3, 2}));
    FAIL() << "expected ShapeError";
  } catch (const ShapeError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("[2x3]"), std::string::npos);
    EXPECT_NE(msg.find("[3x2]"), std::string::npos);
  }
}

TEST(Tensor, ElementwiseForwardValues) {
  EXPECT_EQ(sigmoid(Tensor({1}, real(0))).item(), 0.5);
  EXPECT_EQ(tanh(Tensor({1}, real(0))).item(), 0.0);
  EXPECT_EQ(relu(Tensor({2}, std::vector<real>{-1, 2})).data()[0], 0.0);
  EXPECT_EQ(parse_elementwise_op("mul"), ElementwiseOp::mul);
  EXPECT_THROW(parse_elementwise_op("pow"), std::invalid_argument);
  Tensor a({2, 2}, std::vector<real>{1, 2, 3, 4});
  Tensor row({2}, std::vector<real>{10, 20});
  Tensor col({2, 1}, std::vector<real>{10, 20});
  const Tensor r = add(a, row);
  EXPECT_EQ(std::vector<real>(r.data().begin(), r.data().end()), (std::vector<real>{11, 22, 13, 24}));
  const Tensor c = mul(a, col);
  EXPECT_EQ(std::vector<real>(c.data().begin(), c.data().end()), (std::vector<real>{10, 20, 60, 80}));
  EXPECT_THROW(elementwise(ElementwiseOp::sigmoid, a, a), std::invalid_argument);
}

TEST(Tensor, SigmoidGradientAtZero) {
  Tensor x({1}, real(0), true);
  backward(sum(sigmoid(x)));
  EXPECT_NEAR(x.grad()[0], 0.25, 1e-15);
  expect_gradients([](std::uint64_t) { return std::vector<Tensor>{Tensor({1}, real(0), true)}; },
                   [](const auto& in) { return sigmoid(in[0]); });
}

TEST(Tensor, MatmulForwardAndGradient) {
  Tensor a({2, 2}, std::vector<real>{1, 2, 3, 4});
  Tensor b({2, 1}, std::vector<real>{5, 6});
  const Tensor y = matmul(a, b);
  EXPECT_EQ(y.data()[0], 17);
  EXPECT_EQ(y.data()[1], 39);
  EXPECT_THROW(matmul(a, Tensor({3, 1})), ShapeError);
  expect_gradients([](std::uint64_t s) { return std::vector<Tensor>{random_tensor({3, 4}, s, true), random_tensor({4, 2}, s + 1, true)}; },
                   [](const auto& in) { return matmul(in[0], in[1]); });
}

TEST(Tensor, LinearModelGradientIsExact) {
  Tensor w = random_tensor({3}, 4, true);
  Tensor x = random_tensor({3}, 5);
  GradCheckOptions opt;
  const auto r = check_gradients({param("w", w)}, [&] { return sum(mul(w, x)); }, opt);
  EXPECT_LE(r.max_rel_error, 1e-9);
}

TEST(Tensor, ElementwiseGradients) {
  for (ElementwiseOp op : {ElementwiseOp::add, ElementwiseOp::sub, ElementwiseOp::mul}) {
    expect_gradients([](std::uint64_t s) { return std::vector<Tensor>{random_tensor({3, 4}, s, true), random_tensor({3, 4}, s + 1, true)}; },
                     [op](const auto& in) { return elementwise(op, in[0], in[1]); });
    expect_gradients([](std::uint64_t s) { return std::vector<Tensor>{random_tensor({3, 4}, s, true), random_tensor({4}, s + 1, true)}; },
                     [op](const auto& in) { return elementwise(op, in[0], in[1]); });
    expect_gradients([](std::uint64_t s) { return std::vector<Tensor>{random_tensor({3, 4}, s, true), random_tensor({3, 1}, s + 1, true)}; },
                     [op](const auto& in) { return elementwise(op, in[0], in[1]); });
  }
  for (ElementwiseOp op : {ElementwiseOp::sigmoid, ElementwiseOp::tanh, ElementwiseOp::relu}) {
    expect_gradients([](std::uint64_t s) { return std::vector<Tensor>{away_from_zero({3, 5}, s)}; },
                     [op](const auto& in) { return elementwise(op, in[0]); });
  }
  expect_gradients([](std::uint64_t s) { return std::vector<Tensor>{random_tensor({4, 2}, s, true)}; },
                   [](const auto& in) { return scale(in[0], real(-2.5)); });
}

TEST(Tensor, StructuralGradients) {
  auto two = [](std::uint64_t s) { return std::vector<Tensor>{random_tensor({3, 4}, s, true), random_tensor({3, 2}, s + 1, true)}; };
  expect_gradients(two, [](const auto& in) { return concat(in[0], in[1], 1); });
  expect_gradients([](std::uint64_t s) { return std::vector<Tensor>{random_tensor({2, 4}, s, true), random_tensor({3, 4}, s + 1, true)}; },
                   [](const auto& in) { return concat(in[0], in[1], 0); });
  expect_gradients([](std::uint64_t s) { return std::vector<Tensor>{random_tensor({4, 5}, s, true)}; },
                   [](const auto& in) { return slice(in[0], 1, 1, 4); });
  expect_gradients([](std::uint64_t s) { return std::vector<Tensor>{random_tensor({4, 5}, s, true)}; },
                   [](const auto& in) {
                     auto parts = split(in[0], 0, {1, 3});
                     return mul(parts[1], parts[1]);
                   });
  expect_gradients([](std::uint64_t s) { return std::vector<Tensor>{random_tensor({2, 6}, s, true)}; },
                   [](const auto& in) { return reshape(in[0], {3, 2, 2}); });
  const std::vector<std::size_t> idx{2, 0, 2, 1};
  expect_gradients([](std::uint64_t s) { return std::vector<Tensor>{random_tensor({3, 4}, s, true)}; },
                   [&](const auto& in) { return gather_rows(in[0], idx); });
  expect_gradients([](std::uint64_t s) { return std::vector<Tensor>{random_tensor({4, 3}, s, true)}; },
                   [&](const auto& in) { return scatter_add_rows(in[0], idx, 3); });
  expect_gradients([](std::uint64_t s) { return std::vector<Tensor>{random_tensor({4, 3}, s, true), random_tensor({4, 3}, s + 1, true)}; },
                   [](const auto& in) { return row_dot(in[0], in[1]); });
  const std::vector<std::size_t> seg{0, 1, 0, 0, 1};
  expect_gradients([](std::uint64_t s) { return std::vector<Tensor>{random_tensor({5, 1}, s, true)}; },
                   [&](const auto& in) { return segment_softmax(in[0], seg, 2); });
}

TEST(Tensor, ReductionGradients) {
  for (ReduceOp op : {ReduceOp::sum, ReduceOp::mean, ReduceOp::max}) {
    for (std::vector<std::size_t> axes : {std::vector<std::size_t>{0}, {1}, {0, 2}}) {
      expect_gradients([](std::uint64_t s) { return std::vector<Tensor>{random_tensor({3, 4, 2}, s, true)}; },
                       [op, axes](const auto& in) { return reduce(op, in[0], axes); });
    }
  }
}

TEST(Tensor, MaxTieBreaksToLowestIndex) {
  Tensor x({4}, std::vector<real>{1, 3, 3, 2}, true);
  backward(sum(reduce(ReduceOp::max, x, {0})));
  const auto g = x.grad();
  EXPECT_EQ(std::vector<real>(g.begin(), g.end()), (std::vector<real>{0, 1, 0, 0}));
}

TEST(Tensor, SegmentSoftmaxSumsToOnePerSegment) {
  const std::vector<std::size_t> seg{0, 1, 0, 2, 1, 0};
  const Tensor p = segment_softmax(random_tensor({6, 1}, 3), seg, 3);
  double s[3] = {0, 0, 0};
  for (std::size_t r = 0; r < 6; ++r) s[seg[r]] += p.data()[r];
  for (double v : s) EXPECT_NEAR(v, 1.0, 1e-14);
}

TEST(Tensor, NnOpGradients) {
  expect_gradients([](std::uint64_t s) { return std::vector<Tensor>{random_tensor({2, 5, 4, 2}, s, true), random_tensor({3, 3, 2, 3}, s + 1, true), random_tensor({3}, s + 2, true)}; },
                   [](const auto& in) { return conv2d(in[0], in[1], in[2]); });
  expect_gradients([](std::uint64_t s) { return std::vector<Tensor>{random_tensor({2, 4, 5, 3}, s, true)}; },
                   [](const auto& in) { return max_pool2d(in[0], 2); });
  expect_gradients([](std::uint64_t s) { return std::vector<Tensor>{random_tensor({6, 3}, s, true), random_tensor({3}, s + 1, true, 0.5, 1.5), random_tensor({3}, s + 2, true)}; },
                   [](const auto& in) {
                     Tensor rm({3}), rv({3}, real(1));
                     return batch_norm(in[0], in[1], in[2], rm, rv, true);
                   });
  const std::vector<int> labels{2, 0, 1};
  for (int seed = 0; seed < kSeeds; ++seed) {
    Tensor z = random_tensor({3, 4}, static_cast<std::uint64_t>(seed), true, -3, 3);
    const auto r = check_gradients({param("z", z)}, [&] { return cross_entropy(z, labels); });
    EXPECT_LE(r.max_rel_error, 1e-4);
  }
}

TEST(Tensor, CrossEntropyMatchesDirectFormula) {
  Tensor z({2, 3}, std::vector<real>{1, 2, 3, 0, 0, 0});
  const std::vector<int> labels{2, 1};
  const double l0 = -std::log(std::exp(3.0) / (std::exp(1.0) + std::exp(2.0) + std::exp(3.0)));
  const double l1 = std::log(3.0);
  EXPECT_NEAR(cross_entropy(z, labels).item(), (l0 + l1) / 2, 1e-14);
  EXPECT_THROW(cross_entropy(z, std::vector<int>{3, 0}), std::out_of_range);
}

// Direct loops as the oracle for the im2col path.
TEST(Tensor, ConvMatchesNaiveLoops) {
  const std::size_t B = 2, H = 5, W = 6, Ci = 3, Co = 4, K = 3;
  Tensor x = random_tensor({B, H, W, Ci}, 1), k = random_tensor({K, K, Ci, Co}, 2), b = random_tensor({Co}, 3);
  const Tensor y = conv2d(x, k, b);
  ASSERT_EQ(y.shape(), (Shape{B, H, W, Co}));
  double worst = 0;
  for (std::size_t n = 0; n < B; ++n)
    for (std::size_t i = 0; i < H; ++i)
      for (std::size_t j = 0; j < W; ++j)
        for (std::size_t o = 0; o < Co; ++o) {
          double acc = b.data()[o];
          for (std::size_t di = 0; di < K; ++di)
            for (std::size_t dj = 0; dj < K; ++dj) {
              const long yi = static_cast<long>(i + di) - 1, xj = static_cast<long>(j + dj) - 1;
              if (yi < 0 || xj < 0 || yi >= static_cast<long>(H) || xj >= static_cast<long>(W)) continue;
              for (std::size_t c = 0; c < Ci; ++c) {
                acc += x.at({n, static_cast<std::size_t>(yi), static_cast<std::size_t>(xj), c}) * k.at({di, dj, c, o});
              }
            }
          worst = std::max(worst, std::abs(acc - y.at({n, i, j, o})));
        }
  EXPECT_LE(worst, 1e-12);
  EXPECT_THROW(conv2d(x, random_tensor({2, 2, Ci, Co}, 4)), ShapeError);
}

TEST(Tensor, MaxPoolDropsRemainderAndPicksMax) {
  Tensor x({1, 3, 3, 1}, std::vector<real>{1, 5, 9, 2, 3, 9, 9, 9, 9});
  const Tensor y = max_pool2d(x, 2);
  ASSERT_EQ(y.shape(), (Shape{1, 1, 1, 1}));
  EXPECT_EQ(y.item(), 5);
}

// <A x, y> = <x, A^T y>, with A^T y read from backward().
double adjoint_gap(const std::function<Tensor(const Tensor&)>& A, const Shape& in_shape, std::uint64_t seed) {
  Tensor x = random_tensor(in_shape, seed, true);
  const Tensor ax = A(x);
  const Tensor y = random_tensor(ax.shape(), seed + 1);
  backward(sum(mul(ax, y)));
  const double lhs = test::dot(ax.data(), y.data());
  const double rhs = test::dot(x.data(), x.grad());
  return std::abs(lhs - rhs);
}

TEST(Tensor, AdjointDotProductTests) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    EXPECT_LE(adjoint_gap([](const Tensor& x) { return conv2d(x, random_tensor({3, 3, 2, 3}, 77)); }, {2, 4, 5, 2}, seed), 1e-10);
    EXPECT_LE(adjoint_gap([](const Tensor& x) { return concat(x, scale(x, 2), 1); }, {3, 4}, seed), 1e-10);
    EXPECT_LE(adjoint_gap([](const Tensor& x) { return split(x, 1, {1, 3})[1]; }, {3, 4}, seed), 1e-10);
    const std::vector<std::size_t> idx{1, 1, 0, 2};
    EXPECT_LE(adjoint_gap([&](const Tensor& x) { return gather_rows(x, idx); }, {3, 2}, seed), 1e-10);
    EXPECT_LE(adjoint_gap([&](const Tensor& x) { return scatter_add_rows(x, idx, 5); }, {4, 2}, seed), 1e-10);
  }
}

// concat and split are each other's adjoint: <concat(a,b), y> = <a, y0> + <b, y1>.
TEST(Tensor, ConcatSplitAdjointPair) {
  const Tensor a = random_tensor({3, 2}, 1), b = random_tensor({3, 5}, 2), y = random_tensor({3, 7}, 3);
  const auto parts = split(y, 1, {2, 5});
  const double lhs = test::dot(concat(a, b, 1).data(), y.data());
  const double rhs = test::dot(a.data(), parts[0].data()) + test::dot(b.data(), parts[1].data());
  EXPECT_LE(std::abs(lhs - rhs), 1e-10);
}

SparseMap random_sparse(std::size_t out, std::size_t in, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  SparseMap m;
  m.out_rows = out;
  m.in_rows = in;
  m.row_begin.push_back(0);
  for (std::size_t r = 0; r < out; ++r) {
    for (std::size_t c = 0; c < in; ++c) {
      if (rng() % 3 == 0) {
        m.column.push_back(c);
        m.weight.push_back(static_cast<double>(rng() % 1000) / 500.0 - 1.0);
      }
    }
    m.row_begin.push_back(m.column.size());
  }
  return m;
}

TEST(Tensor, SparseMapTransposeAndAdjoint) {
  const SparseMap m = random_sparse(5, 7, 3);
  const auto d = m.to_dense(), dt = m.transposed().to_dense();
  for (std::size_t r = 0; r < 5; ++r)
    for (std::size_t c = 0; c < 7; ++c) EXPECT_EQ(d[r * 7 + c], dt[c * 5 + r]);
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    EXPECT_LE(adjoint_gap([&](const Tensor& x) { return apply_sparse(m, x, 2); }, {14, 3}, seed), 1e-10);
  }
  EXPECT_THROW(apply_sparse(m, Tensor({13, 3}), 2), ShapeError);
}

TEST(Tensor, BackwardAccumulatesUntilZeroGrad) {
  Tensor x({2}, std::vector<real>{1, 2}, true);
  backward(sum(mul(x, x)));
  backward(sum(mul(x, x)));
  EXPECT_EQ(x.grad()[1], 8);
  x.zero_grad();
  EXPECT_EQ(x.grad()[1], 0);
}

TEST(Tensor, NoGradGuardRecordsNothing) {
  Tensor x({2}, real(1), true);
  {
    NoGradGuard guard;
    EXPECT_FALSE(grad_enabled());
    EXPECT_FALSE(mul(x, x).requires_grad());
  }
  EXPECT_TRUE(grad_enabled());
  EXPECT_TRUE(mul(x, x).requires_grad());
}

TEST(Tensor, ForwardIsDeterministic) {
  const Tensor x = random_tensor({4, 6}, 1), w = random_tensor({6, 3}, 2);
  const Tensor a = sigmoid(matmul(x, w));
  const Tensor b = sigmoid(matmul(x, w));
  EXPECT_EQ(0, std::memcmp(a.data().data(), b.data().data(), a.data().size_bytes()));
}

TEST(GradCheck, RelativeErrorFloor) {
  EXPECT_NEAR(relative_error(1.0, 1.1, 1e-5), 0.1 / 1.1, 1e-15);
  EXPECT_DOUBLE_EQ(relative_error(0.0, 1e-9, 1e-5), 1e-4);
}

TEST(GradCheck, DetectsAWrongGradient) {
  Tensor w = random_tensor({3}, 1, true);
  // The backward of this hand-made op is off by a factor of two.
  auto bad = [&] {
    std::vector<real> out(w.data().begin(), w.data().end());
    for (real& v : out) v *= v;
    Tensor y = detail::make_result({3}, std::move(out), "bad_square", {w}, [](TensorImpl& self) {
      TensorImpl& p = *self.parents[0];
      auto& g = p.ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * 4 * p.data[i];
    });
    return sum(y);
  };
  EXPECT_FALSE(check_gradients({param("w", w)}, bad).passed);
}

TEST(GradCheck, NondeterministicClosureRaises) {
  Tensor w = random_tensor({2}, 1, true);
  int calls = 0;
  auto flaky = [&] { return sum(scale(w, static_cast<real>(1 + (calls++ % 2)))); };
  EXPECT_THROW(check_gradients({param("w", w)}, flaky), NondeterminismError);
}

}  // namespace
}  // namespace rstg
