#include <gtest/gtest.h>

#include <cmath>

#include "acf/autodiff/gradcheck.hpp"
#include "acf/autodiff/ops.hpp"
#include "acf/error.hpp"
#include "reference_ops.hpp"
#include "test_helpers.hpp"

using namespace acf;
using namespace acf::ad;
using testing_support::bit_equal;
using testing_support::max_abs_diff;
using testing_support::random_tensor;

namespace {

Var<double> param(Tape<double>& t, ParamStore<double>& s, const std::string& name) {
  return t.parameter(name, s.params.at(name));
}

GradCheckReport check(ParamStore<double> params, const LossFn& fn, double tol) {
  GradCheckOptions o;
  o.step = 1e-5;
  o.tolerance = tol;
  o.abs_floor = 1e-8;
  o.samples = params.parameter_count();
  return finite_diff_check(fn, params, o);
}

}  // namespace

TEST(Conv2d, BoxSumOfOnes) {
  Tape<double> tape;
  auto x = tape.constant(Tensor<double>::full(Shape::nchw(1, 1, 3, 3), 1.0));
  auto k = tape.constant(Tensor<double>::full(Shape::nchw(1, 1, 3, 3), 1.0));
  auto y = conv2d(x, k, std::nullopt, {1, 1, 1});
  EXPECT_DOUBLE_EQ(y.value().at(0, 0, 1, 1), 9.0);
  EXPECT_DOUBLE_EQ(y.value().at(0, 0, 0, 0), 4.0);
}

TEST(Conv2d, DilatedSameSize) {
  Tape<double> tape;
  auto x = tape.constant(random_tensor(Shape::nchw(1, 1, 5, 5), 1));
  auto k = tape.constant(random_tensor(Shape::nchw(1, 1, 3, 3), 2));
  auto y = conv2d(x, k, std::nullopt, {1, 3, 3});
  EXPECT_EQ(y.shape(), Shape::nchw(1, 1, 5, 5));
}

TEST(Conv2d, MatchesLoopOracle) {
  for (const ConvGeometry g : {ConvGeometry{1, 0, 1}, ConvGeometry{1, 1, 1}, ConvGeometry{2, 1, 1},
                               ConvGeometry{1, 2, 2}, ConvGeometry{2, 3, 3}}) {
    const auto x = random_tensor(Shape::nchw(2, 2, 7, 7), 3);
    const auto k = random_tensor(Shape::nchw(4, 2, 3, 3), 4);
    const auto b = random_tensor(Shape{4}, 5);
    Tape<double> tape;
    auto y = conv2d(tape.constant(x), tape.constant(k), tape.constant(b), g);
    const auto ref = oracle::conv2d(x, k, {b[0], b[1], b[2], b[3]}, g.stride, g.padding, g.dilation);
    ASSERT_EQ(y.shape(), ref.shape());
    EXPECT_LT(max_abs_diff(y.value(), ref), 1e-12);
  }
}

TEST(Conv2d, FloatMatchesOracleIncludingPointwise) {
  for (int ksize : {1, 3}) {
    const auto x = random_tensor(Shape::nchw(2, 5, 9, 8), 6);
    const auto k = random_tensor(Shape::nchw(7, 5, ksize, ksize), 7);
    Tape<float> tape;
    auto y = conv2d(tape.constant(x.cast<float>()), tape.constant(k.cast<float>()), std::nullopt,
                    {1, ksize / 2, 1});
    const auto ref = oracle::conv2d(x, k, {}, 1, ksize / 2, 1);
    EXPECT_LT(max_abs_diff(y.value().cast<double>(), ref), 1e-5);
  }
}

TEST(Conv2d, LinearInInput) {
  const auto x = random_tensor(Shape::nchw(1, 3, 6, 6), 8);
  Tensor<double> ax = x;
  for (std::size_t i = 0; i < ax.size(); ++i) ax[i] *= -1.7;
  const auto k = random_tensor(Shape::nchw(2, 3, 3, 3), 9);
  Tape<double> tape;
  auto y1 = conv2d(tape.constant(x), tape.constant(k), std::nullopt, {1, 1, 1});
  auto y2 = conv2d(tape.constant(ax), tape.constant(k), std::nullopt, {1, 1, 1});
  for (std::size_t i = 0; i < y1.value().size(); ++i) EXPECT_NEAR(y2.value()[i], -1.7 * y1.value()[i], 1e-6);
}

TEST(Conv2d, Errors) {
  Tape<double> tape;
  auto x = tape.constant(Tensor<double>(Shape::nchw(1, 2, 4, 4)));
  auto k = tape.constant(Tensor<double>(Shape::nchw(1, 3, 3, 3)));
  EXPECT_THROW(conv2d(x, k, std::nullopt, {}), ShapeError);
  auto k5 = tape.constant(Tensor<double>(Shape::nchw(1, 2, 5, 5)));
  EXPECT_THROW(conv2d(x, k5, std::nullopt, {}), GeometryError);
  EXPECT_EQ(conv_output_size(5, 3, {1, 3, 3}), 5);
}

TEST(Conv2d, GradientsMatchFiniteDifferences) {
  ParamStore<double> p;
  p.params["x"] = random_tensor(Shape::nchw(2, 2, 6, 5), 10);
  p.params["k"] = random_tensor(Shape::nchw(3, 2, 3, 3), 11);
  p.params["b"] = random_tensor(Shape{3}, 12);
  for (const ConvGeometry g : {ConvGeometry{1, 1, 1}, ConvGeometry{2, 2, 2}}) {
    auto r = check(p, [g](Tape<double>& t, ParamStore<double>& s) {
      auto y = conv2d(param(t, s, "x"), param(t, s, "k"), param(t, s, "b"), g);
      return sum(mul(y, y));
    }, 1e-6);
    EXPECT_TRUE(r.passed()) << r.max_rel_error();
  }
  ParamStore<double> pw;
  pw.params["x"] = random_tensor(Shape::nchw(2, 3, 4, 4), 13);
  pw.params["k"] = random_tensor(Shape::nchw(2, 3, 1, 1), 14);
  auto r = check(pw, [](Tape<double>& t, ParamStore<double>& s) {
    auto y = conv2d(param(t, s, "x"), param(t, s, "k"), std::nullopt, {});
    return sum(mul(y, y));
  }, 1e-6);
  EXPECT_TRUE(r.passed()) << r.max_rel_error();
}

TEST(BatchNorm, TrainModeMatchesOracleAndUpdatesRunningStats) {
  const auto x = random_tensor(Shape::nchw(2, 3, 4, 4), 20, -2, 3);
  const auto gamma = random_tensor(Shape{3}, 21, 0.5, 1.5);
  const auto beta = random_tensor(Shape{3}, 22);
  Tensor<double> rm = Tensor<double>::full(Shape{3}, 0.2), rv = Tensor<double>::full(Shape{3}, 2.0);
  Tape<double> tape;
  auto y = batchnorm2d(tape.constant(x), tape.constant(gamma), tape.constant(beta), rm, rv, BnMode::train);
  std::vector<double> mu, var;
  const auto ref = oracle::batchnorm_train(x, {gamma[0], gamma[1], gamma[2]}, {beta[0], beta[1], beta[2]}, 1e-5,
                                           &mu, &var);
  EXPECT_LT(max_abs_diff(y.value(), ref), 1e-10);
  for (int c = 0; c < 3; ++c) {
    EXPECT_NEAR(rm[static_cast<std::size_t>(c)], 0.9 * 0.2 + 0.1 * mu[static_cast<std::size_t>(c)], 1e-12);
    EXPECT_NEAR(rv[static_cast<std::size_t>(c)], 0.9 * 2.0 + 0.1 * var[static_cast<std::size_t>(c)], 1e-12);
  }
}

TEST(BatchNorm, EvalModeUsesRunningStats) {
  const auto x = random_tensor(Shape::nchw(1, 2, 3, 3), 23);
  Tensor<double> rm(Shape{2}, {0.5, -0.25}), rv(Shape{2}, {4.0, 0.25});
  Tape<double> tape;
  auto y = batchnorm2d(tape.constant(x), tape.constant(Tensor<double>::full(Shape{2}, 2.0)),
                       tape.constant(Tensor<double>::full(Shape{2}, 1.0)), rm, rv, BnMode::eval);
  for (int c = 0; c < 2; ++c)
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        EXPECT_NEAR(y.value().at(0, c, i, j),
                    2.0 * (x.at(0, c, i, j) - rm[static_cast<std::size_t>(c)]) /
                            std::sqrt(rv[static_cast<std::size_t>(c)] + 1e-5) + 1.0,
                    1e-12);
  EXPECT_DOUBLE_EQ(rm[0], 0.5);
}

TEST(BatchNorm, IdentityOnNormalisedInputAndZeroGamma) {
  Tensor<double> x(Shape::nchw(1, 1, 2, 2), {-1, 1, -1, 1});
  Tensor<double> rm(Shape{1}), rv = Tensor<double>::full(Shape{1}, 1.0);
  Tape<double> tape;
  auto y = batchnorm2d(tape.constant(x), tape.constant(Tensor<double>::full(Shape{1}, 1.0)),
                       tape.constant(Tensor<double>(Shape{1})), rm, rv, BnMode::train);
  EXPECT_LT(max_abs_diff(y.value(), x), 1e-5);
  auto z = batchnorm2d(tape.constant(x), tape.constant(Tensor<double>(Shape{1})),
                       tape.constant(Tensor<double>::full(Shape{1}, 0.7)), rm, rv, BnMode::train);
  for (double v : z.value().values()) EXPECT_DOUBLE_EQ(v, 0.7);
}

TEST(BatchNorm, ErrorsAndGradients) {
  Tape<double> tape;
  Tensor<double> rm(Shape{3}), rv = Tensor<double>::full(Shape{3}, 1.0);
  auto x = tape.constant(Tensor<double>(Shape::nchw(1, 2, 2, 2)));
  auto g3 = tape.constant(Tensor<double>(Shape{3}));
  EXPECT_THROW(batchnorm2d(x, g3, g3, rm, rv, BnMode::train), ShapeError);

  ParamStore<double> p;
  p.params["x"] = random_tensor(Shape::nchw(2, 2, 3, 3), 24);
  p.params["g"] = random_tensor(Shape{2}, 25, 0.5, 1.5);
  p.params["b"] = random_tensor(Shape{2}, 26);
  const auto w = random_tensor(Shape::nchw(2, 2, 3, 3), 27);
  auto r = check(p, [w](Tape<double>& t, ParamStore<double>& s) {
    Tensor<double> m(Shape{2}), v = Tensor<double>::full(Shape{2}, 1.0);
    auto y = batchnorm2d(param(t, s, "x"), param(t, s, "g"), param(t, s, "b"), m, v, BnMode::train);
    return sum(mul(mul(y, y), t.constant(w)));
  }, 1e-6);
  EXPECT_TRUE(r.passed()) << r.max_rel_error();
}

TEST(Activation, ValuesAndStability) {
  EXPECT_DOUBLE_EQ(sigmoid_value(0.0), 0.5);
  const double lo = sigmoid_value(-100.0);
  EXPECT_GT(lo, 0.0);
  EXPECT_NEAR(lo, std::exp(-100.0) / (1 + std::exp(-100.0)), 1e-50);
  EXPECT_LT(sigmoid_value(100.0), 1.0);
  EXPECT_LT(sigmoid_value(100.0f), 1.0f);
  EXPECT_GT(sigmoid_value(-200.0f), 0.0f);
  Tape<double> tape;
  auto y = relu(tape.constant(Tensor<double>(Shape{2}, {-2.5, 3.0})));
  EXPECT_EQ(y.value()[0], 0.0);
  EXPECT_EQ(y.value()[1], 3.0);
  const auto x = random_tensor(Shape{1000}, 28, -50, 50);
  auto s = sigmoid(tape.constant(x));
  for (double v : s.value().values()) {
    EXPECT_GT(v, 0.0);
    EXPECT_LT(v, 1.0);
  }
}

TEST(Pool, MatchesLoopOracle) {
  const auto x = random_tensor(Shape::nchw(2, 3, 4, 5), 30);
  Tape<double> tape;
  auto gs = pool(tape.constant(x), PoolKind::gap_spatial);
  auto gc = pool(tape.constant(x), PoolKind::gap_channel);
  auto mc = pool(tape.constant(x), PoolKind::gmp_channel);
  ASSERT_EQ(gs.shape(), Shape::nchw(2, 3, 1, 1));
  ASSERT_EQ(gc.shape(), Shape::nchw(2, 1, 4, 5));
  for (int n = 0; n < 2; ++n) {
    for (int c = 0; c < 3; ++c) {
      double s = 0;
      for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 5; ++j) s += x.at(n, c, i, j);
      EXPECT_NEAR(gs.value().at(n, c, 0, 0), s / 20, 1e-12);
    }
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 5; ++j) {
        const double a = x.at(n, 0, i, j), b = x.at(n, 1, i, j), c = x.at(n, 2, i, j);
        EXPECT_NEAR(gc.value().at(n, 0, i, j), (a + b + c) / 3, 1e-12);
        EXPECT_EQ(mc.value().at(n, 0, i, j), std::max({a, b, c}));
      }
  }
}

TEST(Pool, ConstantAndMaxTieGradient) {
  Tape<double> tape;
  auto gs = pool(tape.constant(Tensor<double>::full(Shape::nchw(1, 2, 3, 3), 0.3)), PoolKind::gap_spatial);
  for (double v : gs.value().values()) EXPECT_DOUBLE_EQ(v, 0.3);

  Tape<double> t2;
  auto x = t2.parameter("x", Tensor<double>(Shape::nchw(1, 3, 1, 1), {1, 5, 3}));
  EXPECT_EQ(pool(x, PoolKind::gmp_channel).value()[0], 5.0);
  auto tie = t2.parameter("t", Tensor<double>(Shape::nchw(1, 3, 1, 1), {2, 2, 1}));
  auto g = t2.backward(sum(pool(tie, PoolKind::gmp_channel)));
  EXPECT_EQ(g.at("t")[0], 1.0);
  EXPECT_EQ(g.at("t")[1], 0.0);
  EXPECT_EQ(g.at("x")[1], 0.0);
}

TEST(Pool, Gradients) {
  ParamStore<double> p;
  p.params["x"] = random_tensor(Shape::nchw(2, 3, 3, 3), 31);
  const auto w1 = random_tensor(Shape::nchw(2, 3, 1, 1), 32);
  const auto w2 = random_tensor(Shape::nchw(2, 1, 3, 3), 33);
  auto r = check(p, [&](Tape<double>& t, ParamStore<double>& s) {
    auto x = param(t, s, "x");
    return add(add(sum(mul(pool(x, PoolKind::gap_spatial), t.constant(w1))),
                   sum(mul(pool(x, PoolKind::gap_channel), t.constant(w2)))),
               sum(mul(pool(x, PoolKind::gmp_channel), t.constant(w2))));
  }, 1e-6);
  EXPECT_TRUE(r.passed()) << r.max_rel_error();
}

TEST(Upsample, HandComputedWeights) {
  Tape<double> tape;
  auto y = upsample_bilinear(tape.constant(Tensor<double>(Shape::nchw(1, 1, 2, 2), {1, 2, 3, 4})), 2);
  const double expected[4][4] = {{1, 1.25, 1.75, 2}, {1.5, 1.75, 2.25, 2.5}, {2.5, 2.75, 3.25, 3.5}, {3, 3.25, 3.75, 4}};
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) EXPECT_NEAR(y.value().at(0, 0, i, j), expected[i][j], 1e-6);
}

TEST(Upsample, IdentityConstantAndOracle) {
  const auto x = random_tensor(Shape::nchw(2, 2, 3, 5), 34);
  Tape<double> tape;
  EXPECT_TRUE(bit_equal(upsample_bilinear(tape.constant(x), 1).value(), x));
  auto c = upsample_bilinear(tape.constant(Tensor<double>::full(Shape::nchw(1, 1, 3, 3), 0.7)), 4);
  for (double v : c.value().values()) EXPECT_NEAR(v, 0.7, 1e-15);
  auto y = upsample_bilinear(tape.constant(x), 4);
  auto r = resize_bilinear(tape.constant(x), 5, 7);
  for (int n = 0; n < 2; ++n)
    for (int ch = 0; ch < 2; ++ch) {
      for (int i = 0; i < 12; ++i)
        for (int j = 0; j < 20; ++j)
          EXPECT_NEAR(y.value().at(n, ch, i, j), oracle::bilinear_at(x, n, ch, 12, 20, i, j), 1e-12);
      for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 7; ++j)
          EXPECT_NEAR(r.value().at(n, ch, i, j), oracle::bilinear_at(x, n, ch, 5, 7, i, j), 1e-12);
    }
}

TEST(Upsample, Gradients) {
  ParamStore<double> p;
  p.params["x"] = random_tensor(Shape::nchw(1, 2, 3, 4), 35);
  const auto w = random_tensor(Shape::nchw(1, 2, 6, 8), 36);
  const auto w2 = random_tensor(Shape::nchw(1, 2, 5, 3), 37);
  auto r = check(p, [&](Tape<double>& t, ParamStore<double>& s) {
    auto x = param(t, s, "x");
    return add(sum(mul(upsample_bilinear(x, 2), t.constant(w))), sum(mul(resize_bilinear(x, 5, 3), t.constant(w2))));
  }, 1e-6);
  EXPECT_TRUE(r.passed()) << r.max_rel_error();
}

TEST(Concat, RoundTripAndErrors) {
  const auto a = random_tensor(Shape::nchw(2, 3, 4, 4), 40);
  const auto b = random_tensor(Shape::nchw(2, 1, 4, 4), 41);
  Tape<double> tape;
  auto va = tape.constant(a), vb = tape.constant(b);
  EXPECT_TRUE(bit_equal(concat_channels({va}).value(), a));
  auto cat = concat_channels({va, vb});
  EXPECT_EQ(cat.shape().c(), 4);
  EXPECT_TRUE(bit_equal(slice_channels(cat, 0, 3).value(), a));
  EXPECT_TRUE(bit_equal(slice_channels(cat, 3, 1).value(), b));
  auto bad = tape.constant(Tensor<double>(Shape::nchw(2, 1, 3, 4)));
  EXPECT_THROW(concat_channels({va, bad}), ShapeError);
  EXPECT_THROW(concat_channels(std::span<const Var<double>>{}), ArgumentError);
}

TEST(Concat, Gradients) {
  ParamStore<double> p;
  p.params["a"] = random_tensor(Shape::nchw(1, 2, 2, 3), 42);
  p.params["b"] = random_tensor(Shape::nchw(1, 3, 2, 3), 43);
  const auto w = random_tensor(Shape::nchw(1, 5, 2, 3), 44);
  auto r = check(p, [&](Tape<double>& t, ParamStore<double>& s) {
    auto c = concat_channels({param(t, s, "a"), param(t, s, "b")});
    return add(sum(mul(mul(c, c), t.constant(w))), sum(slice_channels(c, 1, 3)));
  }, 1e-6);
  EXPECT_TRUE(r.passed()) << r.max_rel_error();
}

TEST(Linear, IdentityOracleAndChain) {
  Tape<double> tape;
  Tensor<double> eye(Shape{3, 3});
  for (int i = 0; i < 3; ++i) eye[static_cast<std::size_t>(i * 3 + i)] = 1;
  const auto x = random_tensor(Shape{3}, 50);
  auto y = linear(tape.constant(x), tape.constant(eye), tape.constant(Tensor<double>(Shape{3})));
  EXPECT_TRUE(bit_equal(y.value(), x));

  const auto w = random_tensor(Shape{4, 64}, 51), b = random_tensor(Shape{4}, 52);
  const auto w2 = random_tensor(Shape{1, 4}, 53), b2 = random_tensor(Shape{1}, 54);
  const auto v = random_tensor(Shape{64}, 55);
  auto h = linear(tape.constant(v), tape.constant(w), tape.constant(b));
  auto out = linear(relu(h), tape.constant(w2), tape.constant(b2));
  EXPECT_EQ(out.value().size(), 1u);
  const auto ref = oracle::matvec({w.values().begin(), w.values().end()}, {b.values().begin(), b.values().end()},
                                  {v.values().begin(), v.values().end()}, 4, 64);
  for (int i = 0; i < 4; ++i) EXPECT_NEAR(h.value()[static_cast<std::size_t>(i)], ref[static_cast<std::size_t>(i)], 1e-12);
  EXPECT_THROW(linear(tape.constant(random_tensor(Shape{5}, 56)), tape.constant(w), tape.constant(b)), ShapeError);
}

TEST(Linear, BatchedGradients) {
  ParamStore<double> p;
  p.params["x"] = random_tensor(Shape{3, 6}, 57);
  p.params["w"] = random_tensor(Shape{4, 6}, 58);
  p.params["b"] = random_tensor(Shape{4}, 59);
  auto r = check(p, [](Tape<double>& t, ParamStore<double>& s) {
    auto y = linear(param(t, s, "x"), param(t, s, "w"), param(t, s, "b"));
    return sum(mul(y, y));
  }, 1e-6);
  EXPECT_TRUE(r.passed()) << r.max_rel_error();
}

TEST(Backward, BasicContracts) {
  Tape<double> tape;
  auto x = tape.parameter("x", random_tensor(Shape::nchw(2, 3, 2, 2), 60));
  auto g = tape.backward(sum(x));
  for (double v : g.at("x").values()) EXPECT_EQ(v, 1.0);

  Tape<double> t2;
  auto w = t2.parameter("w", Tensor<double>::scalar(0.0));
  auto unused = t2.parameter("u", Tensor<double>(Shape{3}));
  (void)unused;
  auto y = sigmoid(mul(w, t2.constant(Tensor<double>::scalar(1.0))));
  auto g2 = t2.backward(sum(y));
  EXPECT_DOUBLE_EQ(g2.at("w")[0], 0.25);
  for (double v : g2.at("u").values()) EXPECT_EQ(v, 0.0);

  Tape<double> t3;
  auto a = t3.parameter("a", Tensor<double>::scalar(3.0));
  auto g3 = t3.backward(add(mul(a, a), a));  // fan-out: d/da (a² + a) = 2a + 1
  EXPECT_DOUBLE_EQ(g3.at("a")[0], 7.0);
  EXPECT_THROW(t3.backward(t3.constant(Tensor<double>(Shape{2}))), ArgumentError);
}

TEST(GradCheck, QuadraticIsExact) {
  ParamStore<double> p;
  p.params["theta"] = random_tensor(Shape{250}, 61);
  auto r = finite_diff_check([](Tape<double>& t, ParamStore<double>& s) {
    auto th = param(t, s, "theta");
    return sum(mul(th, th));
  }, p);
  EXPECT_GE(r.entries.size(), 200u);
  EXPECT_TRUE(r.passed());
  EXPECT_LT(r.max_rel_error(), 1e-6);  // central differences are exact for quadratics; only rounding remains
}

TEST(GradCheck, ConvSigmoidBceMicroNet) {
  ParamStore<double> p;
  p.params["k"] = random_tensor(Shape::nchw(1, 2, 3, 3), 62);
  p.params["b"] = random_tensor(Shape{1}, 63);
  const auto x = random_tensor(Shape::nchw(1, 2, 5, 5), 64);
  Tensor<double> g(Shape::nchw(1, 1, 5, 5));
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = (i % 3 == 0) ? 1.0 : 0.0;
  auto r = check(p, [&](Tape<double>& t, ParamStore<double>& s) {
    return bce_loss(sigmoid(conv2d(t.constant(x), param(t, s, "k"), param(t, s, "b"), {1, 1, 1})), g);
  }, 1e-5);
  EXPECT_TRUE(r.passed()) << r.max_rel_error();
}

TEST(GradCheck, ReportsFailuresAndNonFiniteLoss) {
  ParamStore<double> p;
  p.params["x"] = Tensor<double>::full(Shape{2}, 1.0);
  // A loss whose recorded gradient is wrong: a constant copy hides x from the tape.
  auto r = finite_diff_check([](Tape<double>& t, ParamStore<double>& s) {
    auto x = param(t, s, "x");
    auto hidden = t.constant(s.params.at("x"));
    return add(sum(x), sum(mul(hidden, hidden)));
  }, p);
  EXPECT_FALSE(r.passed());
  EXPECT_EQ(r.failures(), 2u);
  EXPECT_THROW(finite_diff_check([](Tape<double>& t, ParamStore<double>& s) {
    return sum(scale(param(t, s, "x"), std::numeric_limits<double>::infinity()));
  }, p), EvaluationError);
}

TEST(Determinism, RepeatedForwardIsBitIdentical) {
  const auto x = random_tensor<float>(Shape::nchw(2, 4, 8, 8), 70);
  const auto k = random_tensor<float>(Shape::nchw(6, 4, 3, 3), 71);
  Tape<float> t1, t2;
  auto y1 = sigmoid(conv2d(t1.constant(x), t1.constant(k), std::nullopt, {2, 1, 1}));
  auto y2 = sigmoid(conv2d(t2.constant(x), t2.constant(k), std::nullopt, {2, 1, 1}));
  EXPECT_TRUE(bit_equal(y1.value(), y2.value()));
}
