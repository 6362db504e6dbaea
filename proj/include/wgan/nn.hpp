#pragma once

#include <string>
#include <utility>
#include <vector>

#include "wgan/ops.hpp"

namespace wgan {
namespace nn {

// flattened parameter registry: path -> leaf node. Optimizers and
// checkpoints address parameters by these paths.
using NamedParams = std::vector<std::pair<std::string, Value>>;
using NamedBuffers = std::vector<std::pair<std::string, Tensor*>>;

enum class NormKind { instance, batch };

inline const char* norm_kind_name(NormKind k) {
  return k == NormKind::instance ? "instance" : "batch";
}
inline NormKind norm_kind_from_name(const std::string& s) {
  if (s == "instance") return NormKind::instance;
  if (s == "batch") return NormKind::batch;
  throw ValidationError("unknown norm kind '" + s + "' (expected instance|batch)");
}

struct Conv2d {
  Value weight, bias;
  int stride = 1, pad = 0;

  Conv2d() = default;
  Conv2d(int cin, int cout, int k, int stride_, int pad_, Rng& rng)
      : weight(parameter(Tensor::randn(Shape{cout, cin, k, k}, rng, 0.02))),
        bias(parameter(Tensor::zeros(Shape{cout}))),
        stride(stride_),
        pad(pad_) {}

  Value operator()(const Value& x) const { return ops::conv2d(x, weight, bias, stride, pad); }

  void collect(NamedParams& out, const std::string& prefix) const {
    out.emplace_back(prefix + ".weight", weight);
    out.emplace_back(prefix + ".bias", bias);
  }
};

struct ConvTranspose2d {
  Value weight, bias;
  int stride = 1, pad = 0, output_pad = 0;

  ConvTranspose2d() = default;
  ConvTranspose2d(int cin, int cout, int k, int stride_, int pad_, int output_pad_, Rng& rng)
      : weight(parameter(Tensor::randn(Shape{cin, cout, k, k}, rng, 0.02))),
        bias(parameter(Tensor::zeros(Shape{cout}))),
        stride(stride_),
        pad(pad_),
        output_pad(output_pad_) {}

  Value operator()(const Value& x) const {
    return ops::conv_transpose2d(x, weight, bias, stride, pad, output_pad);
  }

  void collect(NamedParams& out, const std::string& prefix) const {
    out.emplace_back(prefix + ".weight", weight);
    out.emplace_back(prefix + ".bias", bias);
  }
};

struct Linear {
  Value weight, bias;

  Linear() = default;
  Linear(int cin, int cout, Rng& rng)
      : weight(parameter(Tensor::randn(Shape{cout, cin}, rng, 0.02))),
        bias(parameter(Tensor::zeros(Shape{cout}))) {}

  Value operator()(const Value& x) const { return ops::linear(x, weight, bias); }

  void collect(NamedParams& out, const std::string& prefix) const {
    out.emplace_back(prefix + ".weight", weight);
    out.emplace_back(prefix + ".bias", bias);
  }
};

struct Norm2d {
  NormKind kind = NormKind::instance;
  Value gamma, beta;
  Tensor running_mean, running_var;  // batch kind only

  Norm2d() = default;
  Norm2d(int channels, NormKind kind_)
      : kind(kind_),
        gamma(parameter(Tensor::ones(Shape{channels}))),
        beta(parameter(Tensor::zeros(Shape{channels}))),
        running_mean(Tensor::zeros(Shape{channels})),
        running_var(Tensor::ones(Shape{channels})) {}

  Value operator()(const Value& x, bool training) {
    if (kind == NormKind::instance) return ops::instance_norm(x, gamma, beta);
    return ops::batch_norm(x, gamma, beta, running_mean, running_var, training);
  }

  void collect(NamedParams& out, const std::string& prefix) const {
    out.emplace_back(prefix + ".gamma", gamma);
    out.emplace_back(prefix + ".beta", beta);
  }
  void collect_buffers(NamedBuffers& out, const std::string& prefix) {
    if (kind == NormKind::batch) {
      out.emplace_back(prefix + ".running_mean", &running_mean);
      out.emplace_back(prefix + ".running_var", &running_var);
    }
  }
};

// conv + norm + ReLU
struct ConvBlock {
  Conv2d conv;
  Norm2d norm;

  ConvBlock() = default;
  ConvBlock(int cin, int cout, int k, int stride, int pad, NormKind nk, Rng& rng)
      : conv(cin, cout, k, stride, pad, rng), norm(cout, nk) {}

  Value operator()(const Value& x, bool training) {
    return ops::relu(norm(conv(x), training));
  }

  void collect(NamedParams& out, const std::string& prefix) const {
    conv.collect(out, prefix + ".conv");
    norm.collect(out, prefix + ".norm");
  }
  void collect_buffers(NamedBuffers& out, const std::string& prefix) {
    norm.collect_buffers(out, prefix + ".norm");
  }
};

// transposed conv + norm + ReLU
struct UpBlock {
  ConvTranspose2d conv;
  Norm2d norm;

  UpBlock() = default;
  UpBlock(int cin, int cout, NormKind nk, Rng& rng)
      : conv(cin, cout, 3, 2, 1, 1, rng), norm(cout, nk) {}

  Value operator()(const Value& x, bool training) {
    return ops::relu(norm(conv(x), training));
  }

  void collect(NamedParams& out, const std::string& prefix) const {
    conv.collect(out, prefix + ".conv");
    norm.collect(out, prefix + ".norm");
  }
  void collect_buffers(NamedBuffers& out, const std::string& prefix) {
    norm.collect_buffers(out, prefix + ".norm");
  }
};

// two 3x3 conv blocks with an identity skip
struct ResidualBlock {
  Conv2d conv1, conv2;
  Norm2d norm1, norm2;

  ResidualBlock() = default;
  ResidualBlock(int channels, NormKind nk, Rng& rng)
      : conv1(channels, channels, 3, 1, 1, rng),
        conv2(channels, channels, 3, 1, 1, rng),
        norm1(channels, nk),
        norm2(channels, nk) {}

  Value operator()(const Value& x, bool training) {
    Value h = ops::relu(norm1(conv1(x), training));
    h = norm2(conv2(h), training);
    return ops::add(x, h);
  }

  void collect(NamedParams& out, const std::string& prefix) const {
    conv1.collect(out, prefix + ".conv1");
    norm1.collect(out, prefix + ".norm1");
    conv2.collect(out, prefix + ".conv2");
    norm2.collect(out, prefix + ".norm2");
  }
  void collect_buffers(NamedBuffers& out, const std::string& prefix) {
    norm1.collect_buffers(out, prefix + ".norm1");
    norm2.collect_buffers(out, prefix + ".norm2");
  }
};

inline void zero_grads(const NamedParams& params) {
  for (const auto& [name, p] : params) p->zero_grad();
}

}  // namespace nn
}  // namespace wgan
