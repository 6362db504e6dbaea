#pragma once

#include <vector>

#include "wgan/nn.hpp"

namespace wgan {

struct DiscriminatorConfig {
  int base_channels = 64;
  int n_layers = 4;   // stride-2 trunk blocks
  int n_classes = 5;  // weather classes
  nn::NormKind norm = nn::NormKind::instance;

  void validate() const {
    WGAN_CHECK(base_channels >= 1, "discriminator: base_channels must be >= 1");
    WGAN_CHECK(n_layers >= 1, "discriminator: n_layers must be >= 1");
    WGAN_CHECK(n_classes >= 2, "discriminator: n_classes must be >= 2");
  }
};

struct DiscriminatorOutput {
  Value realness;      // (N,1,h,w) per-patch logits
  Value class_logits;  // (N,n_classes)
};

// Patch-level real/fake critic with an auxiliary weather classifier head on
// the shared trunk. One instance per domain.
class Discriminator {
 public:
  Discriminator() = default;
  Discriminator(DiscriminatorConfig cfg, Rng& rng) : cfg_(cfg) {
    cfg_.validate();
    int cin = 3, cout = cfg_.base_channels;
    for (int i = 0; i < cfg_.n_layers; ++i) {
      convs_.emplace_back(cin, cout, 3, 2, 1, rng);
      if (i > 0) norms_.emplace_back(cout, cfg_.norm);  // first block runs un-normalized
      cin = cout;
      if (i + 1 < cfg_.n_layers) cout = std::min(cout * 2, cfg_.base_channels * 8);
    }
    patch_head_ = nn::Conv2d(cin, 1, 3, 1, 1, rng);
    class_head_ = nn::Linear(cin, cfg_.n_classes, rng);
  }

  const DiscriminatorConfig& config() const { return cfg_; }
  void set_training(bool on) { training_ = on; }

  DiscriminatorOutput forward(const Value& img) {
    Value h = trunk(img);
    return {patch_head_(h), class_head_(ops::global_avg_pool(h))};
  }

  Value discriminate(const Value& img) { return patch_head_(trunk(img)); }
  Value classify(const Value& img) { return class_head_(ops::global_avg_pool(trunk(img))); }

  nn::NamedParams parameters() const {
    nn::NamedParams out;
    for (size_t i = 0; i < convs_.size(); ++i) convs_[i].collect(out, "conv" + std::to_string(i));
    for (size_t i = 0; i < norms_.size(); ++i) norms_[i].collect(out, "norm" + std::to_string(i + 1));
    patch_head_.collect(out, "patch");
    class_head_.collect(out, "class");
    return out;
  }
  nn::NamedBuffers buffers() {
    nn::NamedBuffers out;
    for (size_t i = 0; i < norms_.size(); ++i)
      norms_[i].collect_buffers(out, "norm" + std::to_string(i + 1));
    return out;
  }

 private:
  Value trunk(const Value& img) {
    WGAN_CHECK(img->value.rank() == 4 && img->value.dim(1) == 3,
               "discriminator expects (N,3,H,W) input, got ", shape_str(img->value.shape()));
    Value h = ops::leaky_relu(convs_[0](img));
    for (size_t i = 1; i < convs_.size(); ++i)
      h = ops::leaky_relu(norms_[i - 1](convs_[i](h), training_));
    return h;
  }

  DiscriminatorConfig cfg_;
  std::vector<nn::Conv2d> convs_;
  std::vector<nn::Norm2d> norms_;
  nn::Conv2d patch_head_;
  nn::Linear class_head_;
  bool training_ = true;
};

}  // namespace wgan
