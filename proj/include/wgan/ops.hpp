#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "wgan/autodiff.hpp"

namespace wgan {
namespace ops {

using RowMat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using CMapMat = Eigen::Map<const RowMat>;
using MapArr = Eigen::Map<Eigen::ArrayXd>;
using CMapArr = Eigen::Map<const Eigen::ArrayXd>;

namespace detail {

inline void check_nchw(const Tensor& t, const char* what) {
  WGAN_CHECK(t.rank() == 4, what, " expects NCHW tensor, got shape ", shape_str(t.shape()));
}

// view of one (n,c) spatial plane of an NCHW tensor
inline MapArr plane(Tensor& t, int n, int c) {
  long hw = static_cast<long>(t.dim(2)) * t.dim(3);
  return MapArr(t.data() + (static_cast<long>(n) * t.dim(1) + c) * hw, hw);
}
inline CMapArr plane(const Tensor& t, int n, int c) {
  long hw = static_cast<long>(t.dim(2)) * t.dim(3);
  return CMapArr(t.data() + (static_cast<long>(n) * t.dim(1) + c) * hw, hw);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// elementwise arithmetic
// ---------------------------------------------------------------------------

inline Value add(const Value& a, const Value& b) {
  WGAN_CHECK(a->value.same_shape(b->value), "add shape mismatch: ",
             shape_str(a->value.shape()), " vs ", shape_str(b->value.shape()));
  Tensor out = a->value;
  out.array() += b->value.array();
  return make_node(std::move(out), {a, b}, [](Node& self) {
    for (int i = 0; i < 2; ++i)
      if (self.inputs[i]->requires_grad)
        self.inputs[i]->ensure_grad().array() += self.grad.array();
  });
}

inline Value sub(const Value& a, const Value& b) {
  WGAN_CHECK(a->value.same_shape(b->value), "sub shape mismatch: ",
             shape_str(a->value.shape()), " vs ", shape_str(b->value.shape()));
  Tensor out = a->value;
  out.array() -= b->value.array();
  return make_node(std::move(out), {a, b}, [](Node& self) {
    if (self.inputs[0]->requires_grad)
      self.inputs[0]->ensure_grad().array() += self.grad.array();
    if (self.inputs[1]->requires_grad)
      self.inputs[1]->ensure_grad().array() -= self.grad.array();
  });
}

// elementwise product; also accepts a single-channel left operand that is
// broadcast across the channels of the right operand (NCHW only)
inline Value mul(const Value& a, const Value& b) {
  if (a->value.same_shape(b->value)) {
    Tensor out = a->value;
    out.array() *= b->value.array();
    return make_node(std::move(out), {a, b}, [](Node& self) {
      if (self.inputs[0]->requires_grad)
        self.inputs[0]->ensure_grad().array() += self.grad.array() * self.inputs[1]->value.array();
      if (self.inputs[1]->requires_grad)
        self.inputs[1]->ensure_grad().array() += self.grad.array() * self.inputs[0]->value.array();
    });
  }
  detail::check_nchw(a->value, "mul");
  detail::check_nchw(b->value, "mul");
  WGAN_CHECK(a->value.dim(0) == b->value.dim(0) && a->value.dim(1) == 1 &&
                 a->value.dim(2) == b->value.dim(2) && a->value.dim(3) == b->value.dim(3),
             "mul broadcast expects (N,1,H,W) x (N,C,H,W), got ",
             shape_str(a->value.shape()), " x ", shape_str(b->value.shape()));
  const int N = b->value.dim(0), C = b->value.dim(1);
  Tensor out(b->value.shape());
  for (int n = 0; n < N; ++n)
    for (int c = 0; c < C; ++c)
      detail::plane(out, n, c) = detail::plane(a->value, n, 0) * detail::plane(b->value, n, c);
  return make_node(std::move(out), {a, b}, [N, C](Node& self) {
    const Tensor& av = self.inputs[0]->value;
    const Tensor& bv = self.inputs[1]->value;
    if (self.inputs[0]->requires_grad) {
      Tensor& ga = self.inputs[0]->ensure_grad();
      for (int n = 0; n < N; ++n)
        for (int c = 0; c < C; ++c)
          detail::plane(ga, n, 0) += detail::plane(self.grad, n, c) * detail::plane(bv, n, c);
    }
    if (self.inputs[1]->requires_grad) {
      Tensor& gb = self.inputs[1]->ensure_grad();
      for (int n = 0; n < N; ++n)
        for (int c = 0; c < C; ++c)
          detail::plane(gb, n, c) += detail::plane(self.grad, n, c) * detail::plane(av, n, 0);
    }
  });
}

inline Value mul_scalar(const Value& a, Scalar s) {
  Tensor out = a->value;
  out.array() *= s;
  return make_node(std::move(out), {a}, [s](Node& self) {
    if (self.inputs[0]->requires_grad)
      self.inputs[0]->ensure_grad().array() += s * self.grad.array();
  });
}

inline Value add_scalar(const Value& a, Scalar s) {
  Tensor out = a->value;
  out.array() += s;
  return make_node(std::move(out), {a}, [](Node& self) {
    if (self.inputs[0]->requires_grad)
      self.inputs[0]->ensure_grad().array() += self.grad.array();
  });
}

// s - a
inline Value rsub_scalar(const Value& a, Scalar s) {
  Tensor out = a->value;
  out.array() = s - out.array();
  return make_node(std::move(out), {a}, [](Node& self) {
    if (self.inputs[0]->requires_grad)
      self.inputs[0]->ensure_grad().array() -= self.grad.array();
  });
}

inline Value neg(const Value& a) { return mul_scalar(a, -1.0); }

// ---------------------------------------------------------------------------
// unary functions
// ---------------------------------------------------------------------------

inline Value abs_(const Value& a) {
  Tensor out = a->value;
  out.array() = out.array().abs();
  return make_node(std::move(out), {a}, [](Node& self) {
    if (!self.inputs[0]->requires_grad) return;
    self.inputs[0]->ensure_grad().array() +=
        self.grad.array() * self.inputs[0]->value.array().sign();
  });
}

inline Value square(const Value& a) {
  Tensor out = a->value;
  out.array() = out.array().square();
  return make_node(std::move(out), {a}, [](Node& self) {
    if (!self.inputs[0]->requires_grad) return;
    self.inputs[0]->ensure_grad().array() +=
        2.0 * self.grad.array() * self.inputs[0]->value.array();
  });
}

inline Value log_eps(const Value& a, Scalar eps = 1e-8) {
  Tensor out = a->value;
  out.array() = (out.array() + eps).log();
  return make_node(std::move(out), {a}, [eps](Node& self) {
    if (!self.inputs[0]->requires_grad) return;
    self.inputs[0]->ensure_grad().array() +=
        self.grad.array() / (self.inputs[0]->value.array() + eps);
  });
}

// log(min(x + eps, 1)): log-probability that is exactly 0 for x >= 1-eps,
// keeping cross entropies of probabilities nonnegative
inline Value log_prob(const Value& a, Scalar eps = 1e-8) {
  Tensor out = a->value;
  out.array() = (out.array() + eps).min(1.0).log();
  return make_node(std::move(out), {a}, [eps](Node& self) {
    if (!self.inputs[0]->requires_grad) return;
    const auto& x = self.inputs[0]->value.array();
    self.inputs[0]->ensure_grad().array() +=
        self.grad.array() * (x + eps < 1.0).cast<Scalar>() / (x + eps);
  });
}

inline Value tanh_(const Value& a) {
  Tensor out = a->value;
  out.array() = out.array().tanh();
  return make_node(std::move(out), {a}, [](Node& self) {
    if (!self.inputs[0]->requires_grad) return;
    self.inputs[0]->ensure_grad().array() +=
        self.grad.array() * (1.0 - self.value.array().square());
  });
}

inline Value sigmoid_(const Value& a) {
  Tensor out = a->value;
  out.array() = 0.5 * (0.5 * out.array()).tanh() + 0.5;  // stable logistic
  return make_node(std::move(out), {a}, [](Node& self) {
    if (!self.inputs[0]->requires_grad) return;
    self.inputs[0]->ensure_grad().array() +=
        self.grad.array() * self.value.array() * (1.0 - self.value.array());
  });
}

// log(1 + exp(x)), the stable building block of the adversarial losses
inline Value softplus(const Value& a) {
  Tensor out = a->value;
  out.array() = out.array().max(0.0) + (-out.array().abs()).exp().log1p();
  return make_node(std::move(out), {a}, [](Node& self) {
    if (!self.inputs[0]->requires_grad) return;
    const auto& x = self.inputs[0]->value.array();
    self.inputs[0]->ensure_grad().array() +=
        self.grad.array() * (0.5 * (0.5 * x).tanh() + 0.5);
  });
}

inline Value relu(const Value& a) {
  Tensor out = a->value;
  out.array() = out.array().max(0.0);
  return make_node(std::move(out), {a}, [](Node& self) {
    if (!self.inputs[0]->requires_grad) return;
    self.inputs[0]->ensure_grad().array() +=
        self.grad.array() * (self.inputs[0]->value.array() > 0.0).cast<Scalar>();
  });
}

inline Value leaky_relu(const Value& a, Scalar slope = 0.2) {
  Tensor out = a->value;
  out.array() = out.array().max(slope * out.array());
  return make_node(std::move(out), {a}, [slope](Node& self) {
    if (!self.inputs[0]->requires_grad) return;
    const auto& x = self.inputs[0]->value.array();
    self.inputs[0]->ensure_grad().array() +=
        self.grad.array() * ((x > 0.0).cast<Scalar>() + slope * (x <= 0.0).cast<Scalar>());
  });
}

inline Value clamp01(const Value& a) {
  Tensor out = a->value;
  out.array() = out.array().min(1.0).max(0.0);
  return make_node(std::move(out), {a}, [](Node& self) {
    if (!self.inputs[0]->requires_grad) return;
    const auto& x = self.inputs[0]->value.array();
    self.inputs[0]->ensure_grad().array() +=
        self.grad.array() * ((x > 0.0) && (x < 1.0)).cast<Scalar>();
  });
}

// ---------------------------------------------------------------------------
// reductions
// ---------------------------------------------------------------------------

inline Value sum_all(const Value& a) {
  Tensor out = Tensor::scalar(a->value.array().sum());
  return make_node(std::move(out), {a}, [](Node& self) {
    if (self.inputs[0]->requires_grad)
      self.inputs[0]->ensure_grad().array() += self.grad[0];
  });
}

inline Value mean_all(const Value& a) {
  const Scalar inv = 1.0 / static_cast<Scalar>(a->value.numel());
  Tensor out = Tensor::scalar(a->value.array().sum() * inv);
  return make_node(std::move(out), {a}, [inv](Node& self) {
    if (self.inputs[0]->requires_grad)
      self.inputs[0]->ensure_grad().array() += self.grad[0] * inv;
  });
}

// ---------------------------------------------------------------------------
// channel softmax / channel reduction
// ---------------------------------------------------------------------------

// per-pixel softmax across the channel dimension of an NCHW tensor
inline Value softmax_channels(const Value& a) {
  detail::check_nchw(a->value, "softmax_channels");
  const int N = a->value.dim(0), C = a->value.dim(1), H = a->value.dim(2), W = a->value.dim(3);
  const long hw = static_cast<long>(H) * W;
  Tensor out(a->value.shape());
  for (int n = 0; n < N; ++n) {
    for (long p = 0; p < hw; ++p) {
      Scalar mx = -std::numeric_limits<Scalar>::infinity();
      for (int c = 0; c < C; ++c) mx = std::max(mx, a->value[(n * C + c) * hw + p]);
      Scalar denom = 0.0;
      for (int c = 0; c < C; ++c) {
        Scalar e = std::exp(a->value[(n * C + c) * hw + p] - mx);
        out[(n * C + c) * hw + p] = e;
        denom += e;
      }
      for (int c = 0; c < C; ++c) out[(n * C + c) * hw + p] /= denom;
    }
  }
  return make_node(std::move(out), {a}, [N, C, hw](Node& self) {
    if (!self.inputs[0]->requires_grad) return;
    Tensor& gx = self.inputs[0]->ensure_grad();
    for (int n = 0; n < N; ++n) {
      for (long p = 0; p < hw; ++p) {
        Scalar dot = 0.0;
        for (int c = 0; c < C; ++c)
          dot += self.grad[(n * C + c) * hw + p] * self.value[(n * C + c) * hw + p];
        for (int c = 0; c < C; ++c) {
          const long i = (n * C + c) * hw + p;
          gx[i] += self.value[i] * (self.grad[i] - dot);
        }
      }
    }
  });
}

// weighted sum across channels: out(n,0,h,w) = sum_c weights[c] * x(n,c,h,w)
inline Value channel_weighted_sum(const Value& a, std::vector<Scalar> weights) {
  detail::check_nchw(a->value, "channel_weighted_sum");
  const int N = a->value.dim(0), C = a->value.dim(1), H = a->value.dim(2), W = a->value.dim(3);
  WGAN_CHECK(static_cast<int>(weights.size()) == C, "channel_weighted_sum needs ", C,
             " weights, got ", weights.size());
  Tensor out(Shape{N, 1, H, W});
  for (int n = 0; n < N; ++n) {
    auto acc = detail::plane(out, n, 0);
    for (int c = 0; c < C; ++c)
      if (weights[static_cast<size_t>(c)] != 0.0)
        acc += weights[static_cast<size_t>(c)] * detail::plane(a->value, n, c);
  }
  return make_node(std::move(out), {a}, [N, C, w = std::move(weights)](Node& self) {
    if (!self.inputs[0]->requires_grad) return;
    Tensor& gx = self.inputs[0]->ensure_grad();
    for (int n = 0; n < N; ++n)
      for (int c = 0; c < C; ++c)
        if (w[static_cast<size_t>(c)] != 0.0)
          detail::plane(gx, n, c) += w[static_cast<size_t>(c)] * detail::plane(self.grad, n, 0);
  });
}

// ---------------------------------------------------------------------------
// convolution (zero padding, square stride)
// ---------------------------------------------------------------------------

namespace detail {

inline int conv_out_size(int in, int k, int stride, int pad) {
  return (in + 2 * pad - k) / stride + 1;
}

// gathers kxk patches of one CHW sample into a (C*k*k) x (Ho*Wo) row-major buffer
inline void im2col(const Scalar* x, int C, int H, int W, int k, int stride, int pad,
                   int Ho, int Wo, Scalar* cols) {
  for (int c = 0; c < C; ++c) {
    for (int ki = 0; ki < k; ++ki) {
      for (int kj = 0; kj < k; ++kj) {
        Scalar* dst = cols + ((static_cast<long>(c) * k + ki) * k + kj) * (static_cast<long>(Ho) * Wo);
        for (int ho = 0; ho < Ho; ++ho) {
          const int hi = ho * stride - pad + ki;
          if (hi < 0 || hi >= H) {
            std::fill(dst, dst + Wo, 0.0);
            dst += Wo;
            continue;
          }
          const Scalar* src = x + (static_cast<long>(c) * H + hi) * W;
          for (int wo = 0; wo < Wo; ++wo) {
            const int wi = wo * stride - pad + kj;
            *dst++ = (wi >= 0 && wi < W) ? src[wi] : 0.0;
          }
        }
      }
    }
  }
}

// adjoint of im2col: scatter-adds the column buffer back into the CHW sample
inline void col2im(const Scalar* cols, int C, int H, int W, int k, int stride, int pad,
                   int Ho, int Wo, Scalar* x) {
  for (int c = 0; c < C; ++c) {
    for (int ki = 0; ki < k; ++ki) {
      for (int kj = 0; kj < k; ++kj) {
        const Scalar* src = cols + ((static_cast<long>(c) * k + ki) * k + kj) * (static_cast<long>(Ho) * Wo);
        for (int ho = 0; ho < Ho; ++ho) {
          const int hi = ho * stride - pad + ki;
          if (hi < 0 || hi >= H) {
            src += Wo;
            continue;
          }
          Scalar* dst = x + (static_cast<long>(c) * H + hi) * W;
          for (int wo = 0; wo < Wo; ++wo) {
            const int wi = wo * stride - pad + kj;
            if (wi >= 0 && wi < W) dst[wi] += src[wo];
          }
          src += Wo;
        }
      }
    }
  }
}

}  // namespace detail

// x: (N,Cin,H,W), w: (Cout,Cin,k,k), b: (Cout) -> (N,Cout,Ho,Wo)
inline Value conv2d(const Value& x, const Value& w, const Value& b, int stride, int pad) {
  detail::check_nchw(x->value, "conv2d input");
  detail::check_nchw(w->value, "conv2d weight");
  const int N = x->value.dim(0), Cin = x->value.dim(1), H = x->value.dim(2), W = x->value.dim(3);
  const int Cout = w->value.dim(0), k = w->value.dim(2);
  WGAN_CHECK(w->value.dim(1) == Cin, "conv2d: weight expects ", w->value.dim(1),
             " input channels, image has ", Cin);
  WGAN_CHECK(w->value.dim(3) == k, "conv2d: only square kernels supported");
  WGAN_CHECK(b->value.numel() == Cout, "conv2d: bias size mismatch");
  const int Ho = detail::conv_out_size(H, k, stride, pad);
  const int Wo = detail::conv_out_size(W, k, stride, pad);
  WGAN_CHECK(Ho >= 1 && Wo >= 1, "conv2d: input ", H, "x", W, " too small for kernel");

  const long patch = static_cast<long>(Cin) * k * k;
  const long cols_n = static_cast<long>(Ho) * Wo;
  Tensor out(Shape{N, Cout, Ho, Wo});
  std::vector<Scalar> cols(static_cast<size_t>(patch * cols_n));
  CMapMat wm(w->value.data(), Cout, patch);
  for (int n = 0; n < N; ++n) {
    detail::im2col(x->value.data() + static_cast<long>(n) * Cin * H * W, Cin, H, W, k, stride,
                   pad, Ho, Wo, cols.data());
    MapMat y(out.data() + static_cast<long>(n) * Cout * cols_n, Cout, cols_n);
    y.noalias() = wm * CMapMat(cols.data(), patch, cols_n);
    for (int c = 0; c < Cout; ++c) y.row(c).array() += b->value[c];
  }

  auto backward = [N, Cin, H, W, Cout, k, stride, pad, Ho, Wo, patch, cols_n](Node& self) {
    const Value& x_in = self.inputs[0];
    const Value& w_in = self.inputs[1];
    const Value& b_in = self.inputs[2];
    std::vector<Scalar> cols(static_cast<size_t>(patch * cols_n));
    CMapMat wm(w_in->value.data(), Cout, patch);
    for (int n = 0; n < N; ++n) {
      CMapMat gy(self.grad.data() + static_cast<long>(n) * Cout * cols_n, Cout, cols_n);
      if (w_in->requires_grad || b_in->requires_grad) {
        if (w_in->requires_grad) {
          detail::im2col(x_in->value.data() + static_cast<long>(n) * Cin * H * W, Cin, H, W, k,
                         stride, pad, Ho, Wo, cols.data());
          MapMat gw(w_in->ensure_grad().data(), Cout, patch);
          gw.noalias() += gy * CMapMat(cols.data(), patch, cols_n).transpose();
        }
        if (b_in->requires_grad) {
          Tensor& gb = b_in->ensure_grad();
          for (int c = 0; c < Cout; ++c) gb[c] += gy.row(c).sum();
        }
      }
      if (x_in->requires_grad) {
        MapMat gcols(cols.data(), patch, cols_n);
        gcols.noalias() = wm.transpose() * gy;
        detail::col2im(cols.data(), Cin, H, W, k, stride, pad, Ho, Wo,
                       x_in->ensure_grad().data() + static_cast<long>(n) * Cin * H * W);
      }
    }
  };
  return make_node(std::move(out), {x, w, b}, std::move(backward));
}

// x: (N,Cin,H,W), w: (Cin,Cout,k,k), b: (Cout) -> (N,Cout,(H-1)*s-2p+k+op,...).
// output_pad grows the bottom/right edge so stride-2 blocks exactly double
// even input sizes.
inline Value conv_transpose2d(const Value& x, const Value& w, const Value& b, int stride,
                              int pad, int output_pad = 0) {
  detail::check_nchw(x->value, "conv_transpose2d input");
  detail::check_nchw(w->value, "conv_transpose2d weight");
  const int N = x->value.dim(0), Cin = x->value.dim(1), H = x->value.dim(2), W = x->value.dim(3);
  const int Cout = w->value.dim(1), k = w->value.dim(2);
  WGAN_CHECK(w->value.dim(0) == Cin, "conv_transpose2d: weight expects ", w->value.dim(0),
             " input channels, image has ", Cin);
  WGAN_CHECK(b->value.numel() == Cout, "conv_transpose2d: bias size mismatch");
  WGAN_CHECK(output_pad >= 0 && output_pad < stride,
             "conv_transpose2d: output_pad must be in [0, stride)");
  const int Ho = (H - 1) * stride - 2 * pad + k + output_pad;
  const int Wo = (W - 1) * stride - 2 * pad + k + output_pad;
  WGAN_CHECK(Ho >= 1 && Wo >= 1, "conv_transpose2d: degenerate output size");

  const long patch = static_cast<long>(Cout) * k * k;
  const long in_n = static_cast<long>(H) * W;
  Tensor out(Shape{N, Cout, Ho, Wo});
  std::vector<Scalar> cols(static_cast<size_t>(patch * in_n));
  CMapMat wm(w->value.data(), Cin, patch);
  for (int n = 0; n < N; ++n) {
    CMapMat xm(x->value.data() + static_cast<long>(n) * Cin * in_n, Cin, in_n);
    MapMat cm(cols.data(), patch, in_n);
    cm.noalias() = wm.transpose() * xm;
    Scalar* o = out.data() + static_cast<long>(n) * Cout * Ho * Wo;
    detail::col2im(cols.data(), Cout, Ho, Wo, k, stride, pad, H, W, o);
    for (int c = 0; c < Cout; ++c) {
      MapArr oc(o + static_cast<long>(c) * Ho * Wo, static_cast<long>(Ho) * Wo);
      oc += b->value[c];
    }
  }

  auto backward = [N, Cin, H, W, Cout, k, stride, pad, Ho, Wo, patch, in_n](Node& self) {
    const Value& x_in = self.inputs[0];
    const Value& w_in = self.inputs[1];
    const Value& b_in = self.inputs[2];
    std::vector<Scalar> cols(static_cast<size_t>(patch * in_n));
    CMapMat wm(w_in->value.data(), Cin, patch);
    for (int n = 0; n < N; ++n) {
      const Scalar* go = self.grad.data() + static_cast<long>(n) * Cout * Ho * Wo;
      detail::im2col(go, Cout, Ho, Wo, k, stride, pad, H, W, cols.data());
      CMapMat cm(cols.data(), patch, in_n);
      if (x_in->requires_grad) {
        MapMat gx(x_in->ensure_grad().data() + static_cast<long>(n) * Cin * in_n, Cin, in_n);
        gx.noalias() += wm * cm;
      }
      if (w_in->requires_grad) {
        CMapMat xm(x_in->value.data() + static_cast<long>(n) * Cin * in_n, Cin, in_n);
        MapMat gw(w_in->ensure_grad().data(), Cin, patch);
        gw.noalias() += xm * cm.transpose();
      }
      if (b_in->requires_grad) {
        Tensor& gb = b_in->ensure_grad();
        for (int c = 0; c < Cout; ++c) {
          CMapArr oc(go + static_cast<long>(c) * Ho * Wo, static_cast<long>(Ho) * Wo);
          gb[c] += oc.sum();
        }
      }
    }
  };
  return make_node(std::move(out), {x, w, b}, std::move(backward));
}

// ---------------------------------------------------------------------------
// normalization
// ---------------------------------------------------------------------------

// normalizes each (n,c) plane to zero mean / unit variance, then applies the
// per-channel affine transform
inline Value instance_norm(const Value& x, const Value& gamma, const Value& beta,
                           Scalar eps = 1e-5) {
  detail::check_nchw(x->value, "instance_norm");
  const int N = x->value.dim(0), C = x->value.dim(1);
  const long m = static_cast<long>(x->value.dim(2)) * x->value.dim(3);
  WGAN_CHECK(gamma->value.numel() == C && beta->value.numel() == C,
             "instance_norm: affine param size mismatch");
  Tensor out(x->value.shape());
  for (int n = 0; n < N; ++n) {
    for (int c = 0; c < C; ++c) {
      auto xs = detail::plane(x->value, n, c);
      Scalar mu = xs.mean();
      Scalar var = (xs - mu).square().sum() / static_cast<Scalar>(m);
      Scalar inv = 1.0 / std::sqrt(var + eps);
      detail::plane(out, n, c) = gamma->value[c] * ((xs - mu) * inv) + beta->value[c];
    }
  }
  auto backward = [N, C, m, eps](Node& self) {
    const Value& x_in = self.inputs[0];
    const Value& g_in = self.inputs[1];
    const Value& b_in = self.inputs[2];
    const Scalar inv_m = 1.0 / static_cast<Scalar>(m);
    for (int n = 0; n < N; ++n) {
      for (int c = 0; c < C; ++c) {
        auto xs = detail::plane(x_in->value, n, c);
        auto gy = detail::plane(self.grad, n, c);
        Scalar mu = xs.mean();
        Scalar var = (xs - mu).square().sum() * inv_m;
        Scalar inv = 1.0 / std::sqrt(var + eps);
        Eigen::ArrayXd xhat = (xs - mu) * inv;
        Scalar sum_gy = gy.sum();
        Scalar sum_gy_xhat = (gy * xhat).sum();
        if (x_in->requires_grad) {
          detail::plane(x_in->ensure_grad(), n, c) +=
              (g_in->value[c] * inv) * (gy - inv_m * sum_gy - xhat * (inv_m * sum_gy_xhat));
        }
        if (g_in->requires_grad) g_in->ensure_grad()[c] += sum_gy_xhat;
        if (b_in->requires_grad) b_in->ensure_grad()[c] += sum_gy;
      }
    }
  };
  return make_node(std::move(out), {x, gamma, beta}, std::move(backward));
}

// batch-statistics variant: moments over (N,H,W) per channel. running_* are
// module-owned buffers updated in training mode and used in eval mode.
inline Value batch_norm(const Value& x, const Value& gamma, const Value& beta,
                        Tensor& running_mean, Tensor& running_var, bool training,
                        Scalar momentum = 0.1, Scalar eps = 1e-5) {
  detail::check_nchw(x->value, "batch_norm");
  const int N = x->value.dim(0), C = x->value.dim(1);
  const long hw = static_cast<long>(x->value.dim(2)) * x->value.dim(3);
  const long m = static_cast<long>(N) * hw;
  WGAN_CHECK(gamma->value.numel() == C && beta->value.numel() == C,
             "batch_norm: affine param size mismatch");

  std::vector<Scalar> mu(C), var(C);
  if (training) {
    for (int c = 0; c < C; ++c) {
      Scalar s = 0.0, s2 = 0.0;
      for (int n = 0; n < N; ++n) {
        auto xs = detail::plane(x->value, n, c);
        s += xs.sum();
        s2 += xs.square().sum();
      }
      mu[c] = s / static_cast<Scalar>(m);
      var[c] = s2 / static_cast<Scalar>(m) - mu[c] * mu[c];
      running_mean[c] = (1.0 - momentum) * running_mean[c] + momentum * mu[c];
      running_var[c] = (1.0 - momentum) * running_var[c] + momentum * var[c];
    }
  } else {
    for (int c = 0; c < C; ++c) {
      mu[c] = running_mean[c];
      var[c] = running_var[c];
    }
  }

  Tensor out(x->value.shape());
  for (int n = 0; n < N; ++n)
    for (int c = 0; c < C; ++c) {
      Scalar inv = 1.0 / std::sqrt(var[c] + eps);
      detail::plane(out, n, c) =
          gamma->value[c] * ((detail::plane(x->value, n, c) - mu[c]) * inv) + beta->value[c];
    }

  auto backward = [N, C, hw, m, eps, training, mu, var](Node& self) {
    const Value& x_in = self.inputs[0];
    const Value& g_in = self.inputs[1];
    const Value& b_in = self.inputs[2];
    const Scalar inv_m = 1.0 / static_cast<Scalar>(m);
    for (int c = 0; c < C; ++c) {
      Scalar inv = 1.0 / std::sqrt(var[static_cast<size_t>(c)] + eps);
      Scalar sum_gy = 0.0, sum_gy_xhat = 0.0;
      for (int n = 0; n < N; ++n) {
        auto gy = detail::plane(self.grad, n, c);
        auto xs = detail::plane(x_in->value, n, c);
        sum_gy += gy.sum();
        sum_gy_xhat += (gy * ((xs - mu[static_cast<size_t>(c)]) * inv)).sum();
      }
      if (x_in->requires_grad) {
        for (int n = 0; n < N; ++n) {
          auto gy = detail::plane(self.grad, n, c);
          auto xs = detail::plane(x_in->value, n, c);
          Eigen::ArrayXd xhat = (xs - mu[static_cast<size_t>(c)]) * inv;
          if (training) {
            detail::plane(x_in->ensure_grad(), n, c) +=
                (g_in->value[c] * inv) * (gy - inv_m * sum_gy - xhat * (inv_m * sum_gy_xhat));
          } else {
            detail::plane(x_in->ensure_grad(), n, c) += g_in->value[c] * inv * gy;
          }
        }
      }
      if (g_in->requires_grad) g_in->ensure_grad()[c] += sum_gy_xhat;
      if (b_in->requires_grad) b_in->ensure_grad()[c] += sum_gy;
    }
  };
  return make_node(std::move(out), {x, gamma, beta}, std::move(backward));
}

// ---------------------------------------------------------------------------
// pooling / dense
// ---------------------------------------------------------------------------

inline Value global_avg_pool(const Value& x) {
  detail::check_nchw(x->value, "global_avg_pool");
  const int N = x->value.dim(0), C = x->value.dim(1);
  const long hw = static_cast<long>(x->value.dim(2)) * x->value.dim(3);
  Tensor out(Shape{N, C});
  for (int n = 0; n < N; ++n)
    for (int c = 0; c < C; ++c) out[n * C + c] = detail::plane(x->value, n, c).mean();
  return make_node(std::move(out), {x}, [N, C, hw](Node& self) {
    if (!self.inputs[0]->requires_grad) return;
    Tensor& gx = self.inputs[0]->ensure_grad();
    const Scalar inv = 1.0 / static_cast<Scalar>(hw);
    for (int n = 0; n < N; ++n)
      for (int c = 0; c < C; ++c)
        detail::plane(gx, n, c) += self.grad[n * C + c] * inv;
  });
}

// x: (N,Cin), w: (Cout,Cin), b: (Cout) -> (N,Cout)
inline Value linear(const Value& x, const Value& w, const Value& b) {
  WGAN_CHECK(x->value.rank() == 2, "linear expects rank-2 input");
  const int N = x->value.dim(0), Cin = x->value.dim(1), Cout = w->value.dim(0);
  WGAN_CHECK(w->value.rank() == 2 && w->value.dim(1) == Cin, "linear: weight shape mismatch");
  WGAN_CHECK(b->value.numel() == Cout, "linear: bias size mismatch");
  Tensor out(Shape{N, Cout});
  CMapMat xm(x->value.data(), N, Cin), wm(w->value.data(), Cout, Cin);
  MapMat ym(out.data(), N, Cout);
  ym.noalias() = xm * wm.transpose();
  for (int c = 0; c < Cout; ++c) ym.col(c).array() += b->value[c];
  return make_node(std::move(out), {x, w, b}, [N, Cin, Cout](Node& self) {
    CMapMat gy(self.grad.data(), N, Cout);
    if (self.inputs[0]->requires_grad) {
      CMapMat wm(self.inputs[1]->value.data(), Cout, Cin);
      MapMat gx(self.inputs[0]->ensure_grad().data(), N, Cin);
      gx.noalias() += gy * wm;
    }
    if (self.inputs[1]->requires_grad) {
      CMapMat xm(self.inputs[0]->value.data(), N, Cin);
      MapMat gw(self.inputs[1]->ensure_grad().data(), Cout, Cin);
      gw.noalias() += gy.transpose() * xm;
    }
    if (self.inputs[2]->requires_grad) {
      Tensor& gb = self.inputs[2]->ensure_grad();
      for (int c = 0; c < Cout; ++c) gb[c] += gy.col(c).sum();
    }
  });
}

// mean over the batch of -log softmax(logits)[target]
inline Value cross_entropy_logits(const Value& logits, std::vector<int> targets) {
  WGAN_CHECK(logits->value.rank() == 2, "cross_entropy_logits expects rank-2 logits");
  const int N = logits->value.dim(0), C = logits->value.dim(1);
  WGAN_CHECK(static_cast<int>(targets.size()) == N, "cross_entropy_logits: target count mismatch");
  for (int t : targets) WGAN_CHECK(t >= 0 && t < C, "class index ", t, " out of range [0,", C, ")");
  Scalar total = 0.0;
  for (int n = 0; n < N; ++n) {
    CMapArr z(logits->value.data() + static_cast<long>(n) * C, C);
    Scalar mx = z.maxCoeff();
    Scalar lse = mx + std::log((z - mx).exp().sum());
    total += lse - z[targets[static_cast<size_t>(n)]];
  }
  Tensor out = Tensor::scalar(total / static_cast<Scalar>(N));
  return make_node(std::move(out), {logits}, [N, C, t = std::move(targets)](Node& self) {
    if (!self.inputs[0]->requires_grad) return;
    Tensor& gx = self.inputs[0]->ensure_grad();
    const Scalar g = self.grad[0] / static_cast<Scalar>(N);
    for (int n = 0; n < N; ++n) {
      CMapArr z(self.inputs[0]->value.data() + static_cast<long>(n) * C, C);
      MapArr gz(gx.data() + static_cast<long>(n) * C, C);
      Scalar mx = z.maxCoeff();
      Eigen::ArrayXd e = (z - mx).exp();
      gz += g * (e / e.sum());
      gz[t[static_cast<size_t>(n)]] -= g;
    }
  });
}

}  // namespace ops

// the arithmetic workhorses read better unqualified
using ops::add;
using ops::mul;
using ops::mul_scalar;
using ops::sub;

}  // namespace wgan
