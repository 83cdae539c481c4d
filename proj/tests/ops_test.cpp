// Copyright 2026 sefpnet authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <gtest/gtest.h>

#include <random>

#include "sefpnet/nn.hpp"
#include "sefpnet/ops_signal.hpp"
#include "testing_util.hpp"

using namespace sefpnet;
using sefpnet::testing::fd_check;
using sefpnet::testing::max_abs_diff;

namespace {

Var leaf(Tensor t) { return Var(std::move(t), true); }

Tensor rnd(Shape s, uint64_t seed, double scale = 1.0) {
  std::mt19937_64 rng(seed);
  return Tensor::randn(std::move(s), rng, scale);
}

Var sq_loss(const Var& y) { return sum_all(mul(y, y)); }

}  // namespace

TEST(Ops, BroadcastBinaries) {
  Var a = leaf(rnd({2, 3, 4}, 1));
  Var b = leaf(rnd({3, 1}, 2));
  auto rep = fd_check([&] { return sq_loss(mul(add(a, b), sub(a, b))); },
                      {{"a", a}, {"b", b}});
  EXPECT_LT(rep.max_rel, 1e-6) << rep.worst;

  Var c = leaf(rnd({2, 3, 4}, 3));
  Var d = leaf(Tensor::full({1}, 2.5));
  rep = fd_check([&] { return sq_loss(divide(c, d)); }, {{"c", c}, {"d", d}});
  EXPECT_LT(rep.max_rel, 1e-6) << rep.worst;
}

TEST(Ops, BroadcastValueOracle) {
  // (2,1,3) + (4,1) -> (2,4,3), checked against direct indexing.
  Tensor a = rnd({2, 1, 3}, 11);
  Tensor b = rnd({4, 1}, 12);
  Var out = add(Var(a), Var(b));
  ASSERT_EQ(out.shape(), (Shape{2, 4, 3}));
  for (int64_t i = 0; i < 2; ++i)
    for (int64_t j = 0; j < 4; ++j)
      for (int64_t k = 0; k < 3; ++k)
        EXPECT_DOUBLE_EQ(out.value().at(i, j, k), a.at(i, 0, k) + b.at(j, 0));
}

TEST(Ops, Activations) {
  Var x = leaf(rnd({3, 4}, 4));
  auto rep = fd_check([&] { return sq_loss(sigmoid(x)); }, {{"x", x}});
  EXPECT_LT(rep.max_rel, 1e-6) << rep.worst;

  rep = fd_check([&] { return sq_loss(relu(x)); }, {{"x", x}});
  EXPECT_LT(rep.max_rel, 1e-5) << rep.worst;

  Var pos = leaf(Tensor::full({2, 3}, 1.7));
  rep = fd_check([&] { return sum_all(log_op(pos)); }, {{"pos", pos}});
  EXPECT_LT(rep.max_rel, 1e-6) << rep.worst;

  Var xc = leaf(rnd({2, 3, 2, 2}, 5));
  Var alpha = leaf(Tensor::full({3}, 0.25));
  rep = fd_check([&] { return sq_loss(prelu(xc, alpha)); },
                 {{"x", xc}, {"alpha", alpha}});
  EXPECT_LT(rep.max_rel, 1e-5) << rep.worst;
}

TEST(Ops, MatmulAndSoftmax) {
  Var a = leaf(rnd({3, 5}, 6));
  Var b = leaf(rnd({5, 2}, 7));
  auto rep = fd_check([&] { return sq_loss(matmul(a, b)); },
                      {{"a", a}, {"b", b}});
  EXPECT_LT(rep.max_rel, 1e-6) << rep.worst;

  Var logits = leaf(rnd({4, 6}, 8, 2.0));
  Var p = softmax_rows(logits);
  for (int64_t i = 0; i < 4; ++i) {
    double s = 0.0;
    for (int64_t j = 0; j < 6; ++j) s += p.value().at(i, j);
    EXPECT_NEAR(s, 1.0, 1e-12);
  }
  Var w = Var(rnd({4, 6}, 9));
  rep = fd_check([&] { return sq_loss(mul(softmax_rows(logits), w)); },
                 {{"logits", logits}});
  EXPECT_LT(rep.max_rel, 1e-5) << rep.worst;
}

TEST(Ops, ChannelReductions) {
  Var x = leaf(rnd({2, 3, 2, 4}, 10));
  auto rep = fd_check([&] { return sq_loss(channel_mean(x)); }, {{"x", x}});
  EXPECT_LT(rep.max_rel, 1e-6) << rep.worst;
  rep = fd_check([&] { return sq_loss(channel_max(x)); }, {{"x", x}});
  EXPECT_LT(rep.max_rel, 1e-5) << rep.worst;
}

TEST(Ops, Conv2dMatchesNaive) {
  Tensor x = rnd({2, 3, 5, 6}, 20);
  Tensor w = rnd({4, 3, 3, 2}, 21);
  Tensor b = rnd({4}, 22);
  int64_t sh = 1, sw = 2, ph = 1, pw = 0;
  Var out = conv2d(Var(x), Var(w), Var(b), sh, sw, ph, pw);
  int64_t oh = (5 + 2 * ph - 3) / sh + 1, ow = (6 + 2 * pw - 2) / sw + 1;
  ASSERT_EQ(out.shape(), (Shape{2, 4, oh, ow}));
  for (int64_t n = 0; n < 2; ++n)
    for (int64_t co = 0; co < 4; ++co)
      for (int64_t oi = 0; oi < oh; ++oi)
        for (int64_t oj = 0; oj < ow; ++oj) {
          double s = b[co];
          for (int64_t ci = 0; ci < 3; ++ci)
            for (int64_t ki = 0; ki < 3; ++ki)
              for (int64_t kj = 0; kj < 2; ++kj) {
                int64_t ii = oi * sh + ki - ph, jj = oj * sw + kj - pw;
                if (ii >= 0 && ii < 5 && jj >= 0 && jj < 6)
                  s += x.at(n, ci, ii, jj) * w.at(co, ci, ki, kj);
              }
          EXPECT_NEAR(out.value().at(n, co, oi, oj), s, 1e-12);
        }
}

TEST(Ops, Conv2dGrad) {
  Var x = leaf(rnd({2, 2, 4, 5}, 23));
  Var w = leaf(rnd({3, 2, 3, 3}, 24));
  Var b = leaf(rnd({3}, 25));
  auto rep = fd_check([&] { return sq_loss(conv2d(x, w, b, 1, 2, 1, 1)); },
                      {{"x", x}, {"w", w}, {"b", b}});
  EXPECT_LT(rep.max_rel, 1e-5) << rep.worst;
}

TEST(Ops, ConvTranspose2dMatchesNaive) {
  Tensor x = rnd({1, 2, 3, 4}, 26);
  Tensor w = rnd({2, 3, 1, 3}, 27);
  Tensor b = rnd({3}, 28);
  int64_t sh = 1, sw = 2, ph = 0, pw = 1;
  Var out = conv_transpose2d(Var(x), Var(w), Var(b), sh, sw, ph, pw);
  int64_t oh = (3 - 1) * sh + 1 - 2 * ph, ow = (4 - 1) * sw + 3 - 2 * pw;
  ASSERT_EQ(out.shape(), (Shape{1, 3, oh, ow}));
  Tensor ref = Tensor::zeros({1, 3, oh, ow});
  for (int64_t co = 0; co < 3; ++co)
    for (int64_t oi = 0; oi < oh; ++oi)
      for (int64_t oj = 0; oj < ow; ++oj) ref.at(0, co, oi, oj) = b[co];
  for (int64_t ci = 0; ci < 2; ++ci)
    for (int64_t ti = 0; ti < 3; ++ti)
      for (int64_t tj = 0; tj < 4; ++tj)
        for (int64_t co = 0; co < 3; ++co)
          for (int64_t ki = 0; ki < 1; ++ki)
            for (int64_t kj = 0; kj < 3; ++kj) {
              int64_t oi = ti * sh + ki - ph, oj = tj * sw + kj - pw;
              if (oi >= 0 && oi < oh && oj >= 0 && oj < ow)
                ref.at(0, co, oi, oj) += x.at(0, ci, ti, tj) * w.at(ci, co, ki, kj);
            }
  EXPECT_LT(max_abs_diff(out.value(), ref), 1e-12);
}

TEST(Ops, ConvTranspose2dGrad) {
  Var x = leaf(rnd({2, 3, 3, 4}, 29));
  Var w = leaf(rnd({3, 2, 1, 3}, 30));
  Var b = leaf(rnd({2}, 31));
  auto rep = fd_check(
      [&] { return sq_loss(conv_transpose2d(x, w, b, 1, 2, 0, 1)); },
      {{"x", x}, {"w", w}, {"b", b}});
  EXPECT_LT(rep.max_rel, 1e-5) << rep.worst;
}

TEST(Ops, DepthwiseConv1dGrad) {
  Var x = leaf(rnd({2, 3, 9}, 32));
  Var w = leaf(rnd({3, 3}, 33));
  Var b = leaf(rnd({3}, 34));
  auto rep = fd_check([&] { return sq_loss(depthwise_conv1d(x, w, b, 2)); },
                      {{"x", x}, {"w", w}, {"b", b}});
  EXPECT_LT(rep.max_rel, 1e-5) << rep.worst;
}

TEST(Ops, BatchNormGrad) {
  auto rm = std::make_shared<Tensor>(Tensor::zeros({3}));
  auto rv = std::make_shared<Tensor>(Tensor::full({3}, 1.0));
  Var x = leaf(rnd({2, 3, 2, 3}, 35));
  Var gamma = leaf(Tensor::full({3}, 1.2));
  Var beta = leaf(rnd({3}, 36));
  // Mix in a fixed random offset: the plain square of a normalized batch is
  // nearly x-independent, which starves the finite differences.
  Var off(rnd({2, 3, 2, 3}, 99));
  auto rep = fd_check(
      [&] {
        return sq_loss(add(
            batch_norm2d(x, gamma, beta, rm, rv, /*training=*/true), off));
      },
      {{"x", x}, {"gamma", gamma}, {"beta", beta}});
  EXPECT_LT(rep.max_rel, 1e-4) << rep.worst;

  *rm = rnd({3}, 37, 0.1);
  *rv = Tensor::full({3}, 0.9);
  rep = fd_check(
      [&] {
        return sq_loss(batch_norm2d(x, gamma, beta, rm, rv, /*training=*/false));
      },
      {{"x", x}, {"gamma", gamma}, {"beta", beta}});
  EXPECT_LT(rep.max_rel, 1e-5) << rep.worst;
}

TEST(Ops, PoolingAndUpsampleGrad) {
  Var x = leaf(rnd({2, 2, 4, 5}, 38));
  auto rep = fd_check([&] { return sq_loss(global_avg_pool(x)); }, {{"x", x}});
  EXPECT_LT(rep.max_rel, 1e-6) << rep.worst;
  rep = fd_check([&] { return sq_loss(global_max_pool(x)); }, {{"x", x}});
  EXPECT_LT(rep.max_rel, 1e-5) << rep.worst;
  rep = fd_check([&] { return sq_loss(adaptive_avg_pool2d(x, 2, 3)); }, {{"x", x}});
  EXPECT_LT(rep.max_rel, 1e-6) << rep.worst;
  rep = fd_check([&] { return sq_loss(upsample_nearest(x, 7, 9)); }, {{"x", x}});
  EXPECT_LT(rep.max_rel, 1e-6) << rep.worst;
}

TEST(Ops, ShapeOpsGrad) {
  Var a = leaf(rnd({2, 2, 3, 4}, 39));
  Var b = leaf(rnd({2, 1, 3, 4}, 40));
  auto rep = fd_check([&] { return sq_loss(concat_channels({a, b})); },
                      {{"a", a}, {"b", b}});
  EXPECT_LT(rep.max_rel, 1e-6) << rep.worst;

  rep = fd_check([&] { return sq_loss(pad2d(a, 1, 0, 2, 1)); }, {{"a", a}});
  EXPECT_LT(rep.max_rel, 1e-6) << rep.worst;

  rep = fd_check([&] { return sq_loss(crop2d(a, 1, 2, 0, 3)); }, {{"a", a}});
  EXPECT_LT(rep.max_rel, 1e-6) << rep.worst;

  rep = fd_check([&] { return sq_loss(permute(a, {2, 0, 3, 1})); }, {{"a", a}});
  EXPECT_LT(rep.max_rel, 1e-6) << rep.worst;

  Var m = leaf(rnd({3, 5}, 41));
  rep = fd_check([&] { return sq_loss(select_row(m, 1)); }, {{"m", m}});
  EXPECT_LT(rep.max_rel, 1e-6) << rep.worst;
}

TEST(Ops, PermuteValue) {
  Tensor a = rnd({2, 3, 4}, 42);
  Var out = permute(Var(a), {2, 0, 1});
  ASSERT_EQ(out.shape(), (Shape{4, 2, 3}));
  for (int64_t i = 0; i < 2; ++i)
    for (int64_t j = 0; j < 3; ++j)
      for (int64_t k = 0; k < 4; ++k)
        EXPECT_DOUBLE_EQ(out.value().at(k, i, j), a.at(i, j, k));
}

TEST(Ops, DrcExpandRiMatchesDsp) {
  Tensor x = rnd({1, 2, 3, 5}, 43);
  Var out = drc_expand_ri(Var(x), 0.5);
  // Same transform through the complex-domain implementation.
  ComplexSpectrogram spec(3, 5);
  for (int64_t i = 0; i < 15; ++i) spec.data[size_t(i)] = {x[i], x[15 + i]};
  ComplexSpectrogram ex = drc_expand(spec, 0.5);
  for (int64_t i = 0; i < 15; ++i) {
    EXPECT_NEAR(out.value()[i], ex.data[size_t(i)].real(), 1e-12);
    EXPECT_NEAR(out.value()[15 + i], ex.data[size_t(i)].imag(), 1e-12);
  }
}

TEST(Ops, DrcExpandRiGrad) {
  Var x = leaf(rnd({2, 2, 3, 4}, 44));
  for (double beta : {0.5, 0.8}) {
    auto rep = fd_check([&] { return sq_loss(drc_expand_ri(x, beta)); },
                        {{"x", x}});
    EXPECT_LT(rep.max_rel, 1e-5) << "beta=" << beta << " " << rep.worst;
  }
}

TEST(Ops, IstftRiMatchesDspAndGrad) {
  StftConfig cfg;
  cfg.window_ms = 4.0;  // 32 samples at 8 kHz
  cfg.hop_ms = 2.0;
  cfg.fft_size = 32;
  std::mt19937_64 rng(45);
  Waveform wave;
  wave.samples.resize(300);
  for (double& s : wave.samples)
    s = std::uniform_real_distribution<double>(-0.5, 0.5)(rng);
  ComplexSpectrogram spec = stft(wave, cfg);
  Tensor ri({1, 2, spec.frames, spec.bins});
  int64_t plane = spec.frames * spec.bins;
  for (int64_t i = 0; i < plane; ++i) {
    ri[i] = spec.data[size_t(i)].real();
    ri[plane + i] = spec.data[size_t(i)].imag();
  }
  Waveform rec = istft(spec, cfg, 8000);
  Var out = istft_ri(Var(ri), cfg, 8000, wave.size());
  for (int64_t i = 0; i < wave.size(); ++i)
    EXPECT_NEAR(out.value()[i], rec.samples[size_t(i)], 1e-12);

  // Small instance for the gradient check.
  Var spec_small = leaf(rnd({1, 2, 4, cfg.bins()}, 46, 0.3));
  auto rep = fd_check(
      [&] { return sq_loss(istft_ri(spec_small, cfg, 8000, 40)); },
      {{"spec", spec_small}});
  EXPECT_LT(rep.max_rel, 1e-6) << rep.worst;
}

TEST(Ops, LayersRegisterParams) {
  ParamSet ps;
  std::mt19937_64 rng(47);
  Conv2d conv(ps, "enc.conv", 2, 4, 3, 3, 1, 1, 1, 1, rng);
  BatchNorm2d bn(ps, "enc.bn", 4);
  PReLU act(ps, "enc.act", 4);
  EXPECT_EQ(ps.params().size(), 5u);  // weight, bias, gamma, beta, alpha
  EXPECT_EQ(ps.buffers().size(), 2u);
  EXPECT_EQ(ps.total_size(), 4 * 2 * 9 + 4 + 4 + 4 + 4);
  Var x(rnd({1, 2, 5, 5}, 48));
  Var y = act(bn.forward(conv(x), true));
  EXPECT_EQ(y.shape(), (Shape{1, 4, 5, 5}));
}
