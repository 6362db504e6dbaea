#include <catch2/catch_amalgamated.hpp>

#include "testutil.hpp"
#include "wgan/losses.hpp"

using namespace wgan;
using test::grad_check;

TEST_CASE("seg_loss oracle values", "[losses]") {
  SECTION("perfect one-hot prediction is ~0") {
    Tensor target = Tensor::zeros(Shape{1, 3, 2, 2});
    for (int p = 0; p < 4; ++p) target[4 + p] = 1.0;  // class 1 everywhere
    Value loss = losses::seg_loss(constant(target), target);
    CHECK(loss->value.item() >= 0.0);
    CHECK(loss->value.item() <= 1e-6);
  }
  SECTION("uniform prediction over 7 classes = ln 7") {
    Tensor pred(Shape{1, 7, 3, 3}, 1.0 / 7.0);
    Tensor target = Tensor::zeros(Shape{1, 7, 3, 3});
    Rng r(3);
    for (int p = 0; p < 9; ++p) target[static_cast<long>(r.below(7)) * 9 + p] = 1.0;
    Value loss = losses::seg_loss(constant(pred), target);
    CHECK(loss->value.item() == Catch::Approx(std::log(7.0)).margin(1e-5));
  }
  SECTION("one pixel, two classes, (0.5,0.5) = ln 2") {
    Tensor pred(Shape{1, 2, 1, 1}, 0.5);
    Tensor target = Tensor::zeros(Shape{1, 2, 1, 1});
    target[0] = 1.0;
    Value loss = losses::seg_loss(constant(pred), target);
    CHECK(loss->value.item() == Catch::Approx(std::log(2.0)).margin(1e-5));
  }
  SECTION("shape mismatch rejected") {
    CHECK_THROWS_AS(losses::seg_loss(constant(Tensor::ones(Shape{1, 2, 2, 2})),
                                     Tensor::ones(Shape{1, 3, 2, 2})),
                    ValidationError);
  }
}

TEST_CASE("adversarial loss oracles", "[losses]") {
  auto logits = [](Scalar v) { return constant(Tensor(Shape{1, 1, 2, 2}, v)); };

  SECTION("zero logits give 2 ln 2 for D and ln 2 for G") {
    CHECK(losses::adversarial_loss_d(logits(0.0), logits(0.0))->value.item() ==
          Catch::Approx(2.0 * std::log(2.0)).margin(1e-5));
    CHECK(losses::adversarial_loss_g(logits(0.0))->value.item() ==
          Catch::Approx(std::log(2.0)).margin(1e-5));
  }
  SECTION("confident discriminator drives D loss to 0") {
    CHECK(losses::adversarial_loss_d(logits(30.0), logits(-30.0))->value.item() < 1e-8);
  }
  SECTION("fooled discriminator drives G loss to 0") {
    CHECK(losses::adversarial_loss_g(logits(30.0))->value.item() < 1e-8);
  }
  SECTION("symmetric at zero under argument swap") {
    Value a = losses::adversarial_loss_d(logits(0.0), logits(0.0));
    Value b = losses::adversarial_loss_d(logits(-0.0), logits(0.0));
    CHECK(a->value.item() == Catch::Approx(b->value.item()));
  }
  SECTION("G loss decreases monotonically in each logit") {
    Scalar prev = std::numeric_limits<Scalar>::infinity();
    for (Scalar z : {-2.0, -1.0, 0.0, 1.0, 2.0}) {
      Scalar v = losses::adversarial_loss_g(logits(z))->value.item();
      CHECK(v < prev);
      prev = v;
    }
  }
  SECTION("non-finite logits raise a numeric error") {
    Tensor bad(Shape{1, 1, 1, 1}, std::numeric_limits<Scalar>::quiet_NaN());
    CHECK_THROWS_AS(losses::adversarial_loss_g(constant(bad)), NumericError);
    CHECK_THROWS_AS(losses::adversarial_loss_d(logits(0.0), constant(bad)), NumericError);
  }
}

TEST_CASE("cycle_l1 oracles", "[losses]") {
  Rng r(5);
  Tensor x = Tensor::rand(Shape{1, 3, 4, 4}, r, -1.0, 1.0);
  Tensor y = Tensor::rand(Shape{1, 3, 4, 4}, r, -1.0, 1.0);

  SECTION("identity reconstruction is zero") {
    CHECK(losses::cycle_l1(constant(x), constant(x), constant(y), constant(y))->value.item() ==
          0.0);
  }
  SECTION("uniform +0.1 shift gives 0.1") {
    Tensor xr = x;
    xr.array() += 0.1;
    CHECK(losses::cycle_l1(constant(x), constant(xr), constant(y), constant(y))->value.item() ==
          Catch::Approx(0.1).margin(1e-12));
  }
  SECTION("invariant under a shared spatial permutation") {
    Tensor xr = Tensor::rand(Shape{1, 3, 4, 4}, r, -1.0, 1.0);
    Tensor yr = Tensor::rand(Shape{1, 3, 4, 4}, r, -1.0, 1.0);
    Scalar base =
        losses::cycle_l1(constant(x), constant(xr), constant(y), constant(yr))->value.item();
    // reverse the pixel order of every tensor identically
    auto flip = [](const Tensor& t) {
      Tensor out = t;
      const long hw = 16;
      for (int c = 0; c < 3; ++c)
        for (long p = 0; p < hw; ++p) out[c * hw + p] = t[c * hw + (hw - 1 - p)];
      return out;
    };
    Scalar flipped = losses::cycle_l1(constant(flip(x)), constant(flip(xr)), constant(flip(y)),
                                      constant(flip(yr)))
                         ->value.item();
    CHECK(base == Catch::Approx(flipped).epsilon(1e-12));
  }
}

TEST_CASE("perceptual loss with a mock identity extractor", "[losses]") {
  IdentityPerceptual phi;
  Rng r(7);
  Tensor x = Tensor::rand(Shape{1, 3, 2, 2}, r, -1.0, 1.0);
  Tensor y = Tensor::rand(Shape{1, 3, 2, 2}, r, -1.0, 1.0);

  SECTION("perfect reconstruction is zero") {
    CHECK(losses::perceptual_loss(phi, constant(x), constant(x), constant(y), constant(y))
              ->value.item() == 0.0);
  }
  SECTION("matches the hand-computed pixel form on a 2x2 image") {
    Tensor xr = Tensor::rand(Shape{1, 3, 2, 2}, r, -1.0, 1.0);
    Tensor yr = Tensor::rand(Shape{1, 3, 2, 2}, r, -1.0, 1.0);
    Scalar expect = 0.0;
    for (long i = 0; i < 12; ++i)
      expect += (x[i] - xr[i]) * (x[i] - xr[i]) + (y[i] - yr[i]) * (y[i] - yr[i]);
    expect /= 4.0;  // 1/(H*W), channels summed
    Scalar got = losses::perceptual_loss(phi, constant(x), constant(xr), constant(y),
                                         constant(yr))
                     ->value.item();
    CHECK(got == Catch::Approx(expect).epsilon(1e-12));
    CHECK(got >= 0.0);
  }
}

TEST_CASE("frozen conv extractor is deterministic and frozen", "[losses]") {
  FrozenConvPerceptual phi(3, 4, /*seed=*/11);
  Rng r(9);
  Tensor x = Tensor::rand(Shape{1, 3, 16, 16}, r, -1.0, 1.0);
  std::vector<Value> a = phi.features(constant(x));
  std::vector<Value> b = phi.features(constant(x));
  REQUIRE(a.size() == b.size());
  REQUIRE(a.size() == 1);  // one mid-depth layer by default
  CHECK(tensors_equal(a[0]->value, b[0]->value));
  CHECK_FALSE(a[0]->requires_grad);  // weights are frozen

  // but gradients flow through to the image input
  Value leaf = parameter(x);
  Value feat = phi.features(leaf)[0];
  CHECK(feat->requires_grad);
}

TEST_CASE("cycle_total blending", "[losses]") {
  Value l1 = constant(Tensor::scalar(1.0));
  Value perc = constant(Tensor::scalar(2.0));
  SECTION("default lambda=0.8 gives 1.2") {
    CHECK(losses::cycle_total(l1, perc, 0.8)->value.item() ==
          Catch::Approx(1.2).margin(1e-9));
  }
  SECTION("endpoints") {
    CHECK(losses::cycle_total(l1, perc, 1.0)->value.item() == 1.0);
    CHECK(losses::cycle_total(l1, perc, 0.0)->value.item() == 2.0);
  }
  SECTION("lambda out of range rejected") {
    CHECK_THROWS_AS(losses::cycle_total(l1, perc, 1.5), ValidationError);
    CHECK_THROWS_AS(losses::cycle_total(l1, perc, -0.1), ValidationError);
  }
  SECTION("linear in both arguments") {
    Rng r(11);
    for (int i = 0; i < 10; ++i) {
      Scalar a = r.uniform(0.1, 3.0), v1 = r.uniform(), v2 = r.uniform(), lam = r.uniform();
      Scalar base = losses::cycle_total(constant(Tensor::scalar(v1)),
                                        constant(Tensor::scalar(v2)), lam)
                        ->value.item();
      Scalar scaled = losses::cycle_total(constant(Tensor::scalar(a * v1)),
                                          constant(Tensor::scalar(a * v2)), lam)
                          ->value.item();
      CHECK(scaled == Catch::Approx(a * base).epsilon(1e-12));
    }
  }
}

TEST_CASE("classification loss oracles", "[losses]") {
  SECTION("uniform logits give 2 ln 5") {
    Value z = constant(Tensor::zeros(Shape{1, 5}));
    CHECK(losses::classification_loss(z, 2, z, 4)->value.item() ==
          Catch::Approx(2.0 * std::log(5.0)).margin(1e-5));
  }
  SECTION("saturated logits give ~0") {
    Tensor t = Tensor::zeros(Shape{1, 5});
    t[3] = 60.0;
    Value z = constant(t);
    CHECK(losses::classification_loss(z, 3, z, 3)->value.item() < 1e-8);
  }
  SECTION("single-term hand value: logits (2,0,0,0,0), target 0") {
    Tensor t = Tensor::zeros(Shape{1, 5});
    t[0] = 2.0;
    Scalar expect = -std::log(std::exp(2.0) / (std::exp(2.0) + 4.0));
    CHECK(ops::cross_entropy_logits(constant(t), {0})->value.item() ==
          Catch::Approx(expect).margin(1e-12));
  }
  SECTION("class index out of range rejected") {
    Value z = constant(Tensor::zeros(Shape{1, 5}));
    CHECK_THROWS_AS(ops::cross_entropy_logits(z, {5}), ValidationError);
    CHECK_THROWS_AS(ops::cross_entropy_logits(z, {-1}), ValidationError);
  }
}

TEST_CASE("total generator loss weighting", "[losses]") {
  auto s = [](Scalar v) { return constant(Tensor::scalar(v)); };
  LossWeights w;  // unit defaults

  SECTION("unit weights, terms (1,1,1,1,0.5,0.5) -> 5.0") {
    Value total = losses::total_generator_loss(s(1), s(1), s(1), s(1), s(0.5), s(0.5), w);
    CHECK(total->value.item() == Catch::Approx(5.0).margin(1e-12));
  }
  SECTION("w_seg=0 removes the segmentation terms") {
    LossWeights w0 = w;
    w0.w_seg = 0.0;
    Value total = losses::total_generator_loss(s(1), s(1), s(1), s(1), s(9), s(9), w0);
    CHECK(total->value.item() == Catch::Approx(4.0).margin(1e-12));
  }
  SECTION("non-finite term is named") {
    CHECK_THROWS_WITH(
        losses::total_generator_loss(s(1), s(1), s(std::numeric_limits<Scalar>::infinity()),
                                     s(1), s(0), s(0), w),
        Catch::Matchers::ContainsSubstring("cycle"));
  }
  SECTION("invalid weights rejected") {
    LossWeights bad = w;
    bad.lambda_cycle_blend = 2.0;
    CHECK_THROWS_AS(losses::total_generator_loss(s(1), s(1), s(1), s(1), s(0), s(0), bad),
                    ValidationError);
  }
}

TEST_CASE("losses are nonnegative and finite on random inputs", "[losses][property]") {
  Rng r(13);
  for (int i = 0; i < 20; ++i) {
    Value logits = constant(Tensor::randn(Shape{1, 1, 3, 3}, r, 3.0));
    Value logits2 = constant(Tensor::randn(Shape{1, 1, 3, 3}, r, 3.0));
    CHECK(losses::adversarial_loss_d(logits, logits2)->value.item() >= 0.0);
    CHECK(losses::adversarial_loss_g(logits)->value.item() >= 0.0);

    Value pred = ops::softmax_channels(constant(Tensor::randn(Shape{1, 4, 3, 3}, r)));
    Tensor target = Tensor::zeros(Shape{1, 4, 3, 3});
    for (int p = 0; p < 9; ++p) target[static_cast<long>(r.below(4)) * 9 + p] = 1.0;
    Scalar seg = losses::seg_loss(pred, target)->value.item();
    CHECK(seg >= 0.0);
    CHECK(std::isfinite(seg));
  }
}

TEST_CASE("loss gradients match finite differences", "[losses][grad]") {
  Rng r(17);

  SECTION("seg_loss wrt predictions (through softmax)") {
    Tensor target = Tensor::zeros(Shape{1, 3, 4, 4});
    for (int p = 0; p < 16; ++p) target[static_cast<long>(r.below(3)) * 16 + p] = 1.0;
    auto res = grad_check(
        [&](const Value& z) {
          return losses::seg_loss(ops::softmax_channels(z), target);
        },
        Tensor::randn(Shape{1, 3, 4, 4}, r));
    CHECK(res.max_rel_err < 1e-3);
  }
  SECTION("adversarial_d wrt both logit maps") {
    Tensor fake = Tensor::randn(Shape{1, 1, 4, 4}, r);
    auto res = grad_check(
        [&](const Value& z) {
          return losses::adversarial_loss_d(z, constant(fake));
        },
        Tensor::randn(Shape{1, 1, 4, 4}, r));
    CHECK(res.max_rel_err < 1e-3);
    auto res2 = grad_check(
        [&](const Value& z) {
          return losses::adversarial_loss_d(constant(fake), z);
        },
        Tensor::randn(Shape{1, 1, 4, 4}, r));
    CHECK(res2.max_rel_err < 1e-3);
  }
  SECTION("adversarial_g wrt logits") {
    auto res = grad_check([](const Value& z) { return losses::adversarial_loss_g(z); },
                          Tensor::randn(Shape{1, 1, 4, 4}, r));
    CHECK(res.max_rel_err < 1e-3);
  }
  SECTION("cycle_l1 wrt reconstruction") {
    Tensor x = Tensor::rand(Shape{1, 3, 4, 4}, r, -1.0, 1.0);
    Tensor y = Tensor::rand(Shape{1, 3, 4, 4}, r, -1.0, 1.0);
    auto res = grad_check(
        [&](const Value& xr) {
          return losses::cycle_l1(constant(x), xr, constant(y), constant(y));
        },
        Tensor::rand(Shape{1, 3, 4, 4}, r, -1.0, 1.0));
    CHECK(res.max_rel_err < 1e-3);
  }
  SECTION("perceptual wrt reconstruction through a frozen conv extractor") {
    FrozenConvPerceptual phi(2, 4, 23);
    Tensor x = Tensor::rand(Shape{1, 3, 8, 8}, r, -1.0, 1.0);
    Tensor y = Tensor::rand(Shape{1, 3, 8, 8}, r, -1.0, 1.0);
    auto res = grad_check(
        [&](const Value& xr) {
          return losses::perceptual_loss(phi, constant(x), xr, constant(y), constant(y));
        },
        Tensor::rand(Shape{1, 3, 8, 8}, r, -1.0, 1.0), 1e-5, /*max_probes=*/48);
    CHECK(res.max_rel_err < 1e-3);
  }
  SECTION("classification wrt logits") {
    auto res = grad_check(
        [](const Value& z) {
          return losses::classification_loss(z, 1, constant(Tensor::zeros(Shape{1, 5})), 0);
        },
        Tensor::randn(Shape{1, 5}, r));
    CHECK(res.max_rel_err < 1e-3);
  }
}
