#pragma once

#include <cmath>
#include <string>

#include "wgan/checkpoint.hpp"
#include "wgan/nn.hpp"

namespace wgan {

// Adam with bias correction. Moments are keyed by parameter path so
// optimizer state survives checkpointing.
class Adam {
 public:
  Adam() = default;
  explicit Adam(nn::NamedParams params, Scalar beta1 = 0.5, Scalar beta2 = 0.999,
                Scalar eps = 1e-8)
      : params_(std::move(params)), beta1_(beta1), beta2_(beta2), eps_(eps) {
    for (const auto& [name, p] : params_) {
      m_.push_back(Tensor::zeros(p->value.shape()));
      v_.push_back(Tensor::zeros(p->value.shape()));
    }
  }

  void zero_grad() { nn::zero_grads(params_); }

  void step(Scalar lr) {
    ++t_;
    const Scalar bc1 = 1.0 - std::pow(beta1_, static_cast<Scalar>(t_));
    const Scalar bc2 = 1.0 - std::pow(beta2_, static_cast<Scalar>(t_));
    for (size_t i = 0; i < params_.size(); ++i) {
      Node& p = *params_[i].second;
      if (p.grad.numel() != p.value.numel()) continue;  // parameter unused this step
      auto g = p.grad.array();
      m_[i].array() = beta1_ * m_[i].array() + (1.0 - beta1_) * g;
      v_[i].array() = beta2_ * v_[i].array() + (1.0 - beta2_) * g.square();
      p.value.array() -=
          lr * (m_[i].array() / bc1) / ((v_[i].array() / bc2).sqrt() + eps_);
    }
  }

  const nn::NamedParams& params() const { return params_; }
  long step_count() const { return t_; }

  void save(TensorStore& store, const std::string& prefix) const {
    store.put_string(prefix + "/t", std::to_string(t_));
    for (size_t i = 0; i < params_.size(); ++i) {
      store.put(prefix + "/m/" + params_[i].first, m_[i]);
      store.put(prefix + "/v/" + params_[i].first, v_[i]);
    }
  }

  void load(const TensorStore& store, const std::string& prefix) {
    t_ = std::stol(store.get_string(prefix + "/t"));
    for (size_t i = 0; i < params_.size(); ++i) {
      m_[i] = store.get(prefix + "/m/" + params_[i].first);
      v_[i] = store.get(prefix + "/v/" + params_[i].first);
      WGAN_CHECK(m_[i].numel() == params_[i].second->value.numel(),
                 "optimizer state shape mismatch for ", params_[i].first);
    }
  }

 private:
  nn::NamedParams params_;
  std::vector<Tensor> m_, v_;
  long t_ = 0;
  Scalar beta1_ = 0.5, beta2_ = 0.999, eps_ = 1e-8;
};

}  // namespace wgan
