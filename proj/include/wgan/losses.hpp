#pragma once

#include <memory>
#include <string>
#include <vector>

#include "wgan/checkpoint.hpp"
#include "wgan/ops.hpp"

namespace wgan {

struct LossWeights {
  Scalar lambda_cycle_blend = 0.8;  // L1 vs perceptual mix inside the cycle term
  Scalar w_adv = 1.0;
  Scalar w_cycle = 1.0;
  Scalar w_class = 1.0;
  Scalar w_seg = 1.0;

  void validate() const {
    WGAN_CHECK(lambda_cycle_blend >= 0.0 && lambda_cycle_blend <= 1.0,
               "lambda_cycle_blend must be in [0,1], got ", lambda_cycle_blend);
    for (Scalar w : {w_adv, w_cycle, w_class, w_seg}) {
      WGAN_CHECK(std::isfinite(w) && w >= 0.0, "loss weights must be finite and >= 0");
    }
  }
};

// Frozen feature function used by the perceptual cycle term. Deterministic:
// the same image always yields the same features.
class PerceptualExtractor {
 public:
  virtual ~PerceptualExtractor() = default;
  virtual std::string name() const = 0;
  virtual std::vector<Value> features(const Value& image) = 0;
};

// phi = identity; turns the perceptual term into plain pixel MSE. Used in
// tests and as a dependency-free fallback.
class IdentityPerceptual final : public PerceptualExtractor {
 public:
  std::string name() const override { return "identity"; }
  std::vector<Value> features(const Value& image) override { return {image}; }
};

// Small frozen conv stack. Weights come from a seeded He-style init or from
// a TensorStore file (entries layer<i>.weight / layer<i>.bias), standing in
// for a pretrained backbone at desk scale.
class FrozenConvPerceptual final : public PerceptualExtractor {
 public:
  FrozenConvPerceptual(int n_layers, int base_channels, std::uint64_t seed,
                       std::vector<int> selected_layers = {})
      : selected_(std::move(selected_layers)) {
    Rng rng(seed);
    int cin = 3, cout = base_channels;
    for (int i = 0; i < n_layers; ++i) {
      Scalar std = std::sqrt(2.0 / (static_cast<Scalar>(cin) * 9.0));
      weights_.push_back(constant(Tensor::randn(Shape{cout, cin, 3, 3}, rng, std)));
      biases_.push_back(constant(Tensor::zeros(Shape{cout})));
      cin = cout;
      cout *= 2;
    }
    if (selected_.empty()) selected_ = {n_layers / 2};  // one mid-depth layer
    validate_selection();
  }

  static FrozenConvPerceptual from_file(const std::string& path,
                                        std::vector<int> selected_layers = {}) {
    FrozenConvPerceptual ex;
    TensorStore store = TensorStore::load(path);
    for (int i = 0;; ++i) {
      std::string key = "layer" + std::to_string(i) + ".weight";
      if (!store.has(key)) break;
      ex.weights_.push_back(constant(store.get(key)));
      ex.biases_.push_back(constant(store.get("layer" + std::to_string(i) + ".bias")));
    }
    WGAN_CHECK(!ex.weights_.empty(), "no layer<i>.weight entries in ", path);
    ex.selected_ = selected_layers.empty() ? std::vector<int>{static_cast<int>(ex.weights_.size()) / 2}
                                           : std::move(selected_layers);
    ex.validate_selection();
    return ex;
  }

  std::string name() const override {
    return "frozen_conv(" + std::to_string(weights_.size()) + " layers)";
  }

  std::vector<Value> features(const Value& image) override {
    std::vector<Value> out;
    Value h = image;
    for (size_t i = 0; i < weights_.size(); ++i) {
      h = ops::relu(ops::conv2d(h, weights_[i], biases_[i], 2, 1));
      if (std::find(selected_.begin(), selected_.end(), static_cast<int>(i)) != selected_.end())
        out.push_back(h);
    }
    return out;
  }

  void save(const std::string& path) const {
    TensorStore store;
    for (size_t i = 0; i < weights_.size(); ++i) {
      store.put("layer" + std::to_string(i) + ".weight", weights_[i]->value);
      store.put("layer" + std::to_string(i) + ".bias", biases_[i]->value);
    }
    store.save(path);
  }

 private:
  FrozenConvPerceptual() = default;
  void validate_selection() const {
    for (int s : selected_)
      WGAN_CHECK(s >= 0 && s < static_cast<int>(weights_.size()),
                 "selected perceptual layer ", s, " out of range");
  }

  std::vector<Value> weights_, biases_;
  std::vector<int> selected_;
};

namespace losses {

// cross entropy against a one-hot rasterized target, averaged over pixels
inline Value seg_loss(const Value& pred, const Tensor& target) {
  WGAN_CHECK(pred->value.shape() == target.shape(), "seg_loss shape mismatch: ",
             shape_str(pred->value.shape()), " vs ", shape_str(target.shape()));
  const long n_pixels = static_cast<long>(target.dim(0)) * target.dim(2) * target.dim(3);
  Value ce = ops::sum_all(mul(constant(target), ops::log_prob(pred, 1e-8)));
  return ops::mul_scalar(ce, -1.0 / static_cast<Scalar>(n_pixels));
}

// -log sig(real) - log(1 - sig(fake)), averaged over patches
inline Value adversarial_loss_d(const Value& d_real, const Value& d_fake) {
  WGAN_CHECK_NUMERIC(d_real->value.all_finite() && d_fake->value.all_finite(),
                     "adversarial_loss_d: non-finite logits");
  return ops::add(ops::mean_all(ops::softplus(ops::neg(d_real))),
                  ops::mean_all(ops::softplus(d_fake)));
}

// non-saturating generator objective: -log sig(fake)
inline Value adversarial_loss_g(const Value& d_fake) {
  WGAN_CHECK_NUMERIC(d_fake->value.all_finite(), "adversarial_loss_g: non-finite logits");
  return ops::mean_all(ops::softplus(ops::neg(d_fake)));
}

inline Value cycle_l1(const Value& x, const Value& x_rec, const Value& y, const Value& y_rec) {
  WGAN_CHECK(x->value.same_shape(x_rec->value) && y->value.same_shape(y_rec->value),
             "cycle_l1 shape mismatch");
  return ops::add(ops::mean_all(ops::abs_(sub(x_rec, x))),
                  ops::mean_all(ops::abs_(sub(y_rec, y))));
}

// feature-space reconstruction error, spatially normalized per layer
inline Value perceptual_loss(PerceptualExtractor& phi, const Value& x, const Value& x_rec,
                             const Value& y, const Value& y_rec) {
  std::vector<Value> fx = phi.features(x), fxr = phi.features(x_rec);
  std::vector<Value> fy = phi.features(y), fyr = phi.features(y_rec);
  WGAN_CHECK(fx.size() == fxr.size() && fy.size() == fyr.size() && !fx.empty(),
             "perceptual extractor returned inconsistent layer counts");
  Value total;
  for (size_t j = 0; j < fx.size(); ++j) {
    const Tensor& ref = fx[j]->value;
    const long n = ref.dim(0);
    const Scalar inv = 1.0 / static_cast<Scalar>(n * ref.dim(2) * ref.dim(3));
    Value term = ops::add(ops::sum_all(ops::square(sub(fx[j], fxr[j]))),
                          ops::sum_all(ops::square(sub(fy[j], fyr[j]))));
    term = ops::mul_scalar(term, inv);
    total = total ? ops::add(total, term) : term;
  }
  return total;
}

// lambda * L1 + (1 - lambda) * perceptual
inline Value cycle_total(const Value& l1, const Value& perc, Scalar lambda) {
  WGAN_CHECK(lambda >= 0.0 && lambda <= 1.0, "cycle blend lambda must be in [0,1], got ", lambda);
  return ops::add(ops::mul_scalar(l1, lambda), ops::mul_scalar(perc, 1.0 - lambda));
}

// pushes generated images toward the target domain's class under the
// discriminators' auxiliary heads
inline Value classification_loss(const Value& logits_gx, int target_y, const Value& logits_fy,
                                 int target_x) {
  const int n_gx = logits_gx->value.dim(0), n_fy = logits_fy->value.dim(0);
  return ops::add(
      ops::cross_entropy_logits(logits_gx, std::vector<int>(static_cast<size_t>(n_gx), target_y)),
      ops::cross_entropy_logits(logits_fy, std::vector<int>(static_cast<size_t>(n_fy), target_x)));
}

inline Value total_generator_loss(const Value& adv_g_xy, const Value& adv_g_yx,
                                  const Value& cycle, const Value& classify, const Value& seg_x,
                                  const Value& seg_y, const LossWeights& w) {
  w.validate();
  auto check = [](const Value& v, const char* term) {
    WGAN_CHECK_NUMERIC(std::isfinite(v->value.item()), "non-finite loss term: ", term);
  };
  check(adv_g_xy, "adv_g_xy");
  check(adv_g_yx, "adv_g_yx");
  check(cycle, "cycle");
  check(classify, "classify");
  check(seg_x, "seg_x");
  check(seg_y, "seg_y");
  Value total = ops::mul_scalar(ops::add(adv_g_xy, adv_g_yx), w.w_adv);
  total = ops::add(total, ops::mul_scalar(cycle, w.w_cycle));
  total = ops::add(total, ops::mul_scalar(classify, w.w_class));
  total = ops::add(total, ops::mul_scalar(ops::add(seg_x, seg_y), w.w_seg));
  return total;
}

}  // namespace losses
}  // namespace wgan
