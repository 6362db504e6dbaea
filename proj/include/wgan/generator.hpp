#pragma once

#include <vector>

#include "wgan/nn.hpp"

namespace wgan {

// Which generator branches feed the translation map. Mirrors the ablation
// study: attention_only drops the segmentation branch, segmentation_only
// drops attention, init_only forces T to all ones.
enum class AblationMode { full, attention_only, segmentation_only, init_only };

inline const char* ablation_mode_name(AblationMode m) {
  switch (m) {
    case AblationMode::full: return "full";
    case AblationMode::attention_only: return "attention_only";
    case AblationMode::segmentation_only: return "segmentation_only";
    case AblationMode::init_only: return "init_only";
  }
  return "full";
}

inline AblationMode ablation_mode_from_name(const std::string& s) {
  if (s == "full") return AblationMode::full;
  if (s == "attention_only") return AblationMode::attention_only;
  if (s == "segmentation_only") return AblationMode::segmentation_only;
  if (s == "init_only") return AblationMode::init_only;
  throw ValidationError("unknown ablation mode '" + s +
                        "' (expected full|attention_only|segmentation_only|init_only)");
}

struct GeneratorConfig {
  int base_channels = 64;
  int n_residual_blocks = 6;
  int n_down = 3;  // conv blocks in the encoder: one stride-1 stem + (n_down-1) stride-2
  int n_s = 7;     // cue classes including background (channel 0)
  std::vector<int> relevant_cues;  // cue channels blended into T for this direction
  nn::NormKind norm = nn::NormKind::instance;
  bool shared_encoder = true;
  AblationMode ablation = AblationMode::full;

  void validate() const {
    WGAN_CHECK(n_down >= 1, "generator: n_down must be >= 1");
    WGAN_CHECK(n_residual_blocks >= 1, "generator: n_residual_blocks must be >= 1");
    WGAN_CHECK(base_channels >= 1, "generator: base_channels must be >= 1");
    WGAN_CHECK(n_s >= 2, "generator: n_s must include background plus at least one cue");
    WGAN_CHECK(!relevant_cues.empty(), "generator: relevant_cues must not be empty");
    for (int c : relevant_cues) {
      WGAN_CHECK(c >= 1 && c < n_s, "generator: relevant cue ", c,
                 " out of range [1,", n_s, ") (0 is background)");
    }
  }
};

// branch outputs of one generator pass; att/seg stay null under ablation
struct GeneratorOutput {
  Value g_init;  // (N,3,H,W) in [-1,1]
  Value att;     // (N,1,H,W) in [0,1]
  Value seg;     // (N,n_s,H,W) per-pixel distribution
  Value t;       // (N,1,H,W) in [0,1]
  Value g;       // (N,3,H,W) composed result
};

// T(x): attention gated by the summed probability mass of the cue classes
// that matter for the chosen domain pair, clamped to [0,1]
inline Value translation_map(const Value& att, const Value& seg,
                             const std::vector<int>& relevant_cues, int n_s) {
  WGAN_CHECK(!relevant_cues.empty(), "translation_map: relevant_cues must not be empty");
  WGAN_CHECK(seg->value.dim(1) == n_s, "translation_map: seg has ", seg->value.dim(1),
             " channels, expected ", n_s);
  std::vector<Scalar> weights(static_cast<size_t>(n_s), 0.0);
  for (int c : relevant_cues) {
    WGAN_CHECK(c >= 1 && c < n_s, "translation_map: cue ", c, " out of range [1,", n_s, ")");
    weights[static_cast<size_t>(c)] = 1.0;
  }
  Value cue_mass = ops::clamp01(ops::channel_weighted_sum(seg, std::move(weights)));
  return mul(att, cue_mass);
}

// G(x) = alpha*T (.) G_init(x) + (1 - alpha*T) (.) x
inline Value compose(const Value& x, const Value& g_init, const Value& t, Scalar alpha) {
  WGAN_CHECK(alpha >= 0.0 && alpha <= 1.0, "compose: alpha must be in [0,1], got ", alpha);
  Value at = mul_scalar(t, alpha);
  return ops::add(mul(at, g_init), mul(ops::rsub_scalar(at, 1.0), x));
}

namespace detail {

// stem + stride-2 pyramid + residual trunk
struct GenEncoder {
  nn::ConvBlock stem;
  std::vector<nn::ConvBlock> down;
  std::vector<nn::ResidualBlock> trunk;

  GenEncoder() = default;
  GenEncoder(const GeneratorConfig& cfg, Rng& rng) {
    stem = nn::ConvBlock(3, cfg.base_channels, 7, 1, 3, cfg.norm, rng);
    int ch = cfg.base_channels;
    for (int i = 1; i < cfg.n_down; ++i) {
      down.emplace_back(ch, ch * 2, 3, 2, 1, cfg.norm, rng);
      ch *= 2;
    }
    for (int i = 0; i < cfg.n_residual_blocks; ++i) trunk.emplace_back(ch, cfg.norm, rng);
  }

  Value operator()(const Value& x, bool training) {
    Value h = stem(x, training);
    for (auto& blk : down) h = blk(h, training);
    for (auto& blk : trunk) h = blk(h, training);
    return h;
  }

  void collect(nn::NamedParams& out, const std::string& prefix) const {
    stem.collect(out, prefix + ".stem");
    for (size_t i = 0; i < down.size(); ++i) down[i].collect(out, prefix + ".down" + std::to_string(i));
    for (size_t i = 0; i < trunk.size(); ++i) trunk[i].collect(out, prefix + ".res" + std::to_string(i));
  }
  void collect_buffers(nn::NamedBuffers& out, const std::string& prefix) {
    stem.collect_buffers(out, prefix + ".stem");
    for (size_t i = 0; i < down.size(); ++i) down[i].collect_buffers(out, prefix + ".down" + std::to_string(i));
    for (size_t i = 0; i < trunk.size(); ++i) trunk[i].collect_buffers(out, prefix + ".res" + std::to_string(i));
  }
};

// mirrored upsampling path ending in a 7x7 projection; the caller applies
// the branch's output activation
struct GenHead {
  std::vector<nn::UpBlock> up;
  nn::Conv2d proj;

  GenHead() = default;
  GenHead(const GeneratorConfig& cfg, int out_channels, Rng& rng) {
    int ch = cfg.base_channels << (cfg.n_down - 1);
    for (int i = 1; i < cfg.n_down; ++i) {
      up.emplace_back(ch, ch / 2, cfg.norm, rng);
      ch /= 2;
    }
    proj = nn::Conv2d(ch, out_channels, 7, 1, 3, rng);
  }

  Value operator()(const Value& h, bool training) {
    Value v = h;
    for (auto& blk : up) v = blk(v, training);
    return proj(v);
  }

  void collect(nn::NamedParams& out, const std::string& prefix) const {
    for (size_t i = 0; i < up.size(); ++i) up[i].collect(out, prefix + ".up" + std::to_string(i));
    proj.collect(out, prefix + ".proj");
  }
  void collect_buffers(nn::NamedBuffers& out, const std::string& prefix) {
    for (size_t i = 0; i < up.size(); ++i) up[i].collect_buffers(out, prefix + ".up" + std::to_string(i));
  }
};

}  // namespace detail

// Three-branch translation generator. The branches share one encoder by
// default; shared_encoder=false builds a private encoder per branch.
class Generator {
 public:
  Generator() = default;
  Generator(GeneratorConfig cfg, Rng& rng) : cfg_(std::move(cfg)) {
    cfg_.validate();
    encoders_.emplace_back(cfg_, rng);
    if (!cfg_.shared_encoder) {
      encoders_.emplace_back(cfg_, rng);
      encoders_.emplace_back(cfg_, rng);
    }
    init_head_ = detail::GenHead(cfg_, 3, rng);
    att_head_ = detail::GenHead(cfg_, 1, rng);
    seg_head_ = detail::GenHead(cfg_, cfg_.n_s, rng);
  }

  const GeneratorConfig& config() const { return cfg_; }
  void set_training(bool on) { training_ = on; }

  Value init_translation(const Value& x) {
    check_input(x);
    return ops::tanh_(init_head_(encode(0, x), training_));
  }
  Value attention_map(const Value& x) {
    check_input(x);
    return ops::sigmoid_(att_head_(encode(1, x), training_));
  }
  Value segment_cues(const Value& x) {
    check_input(x);
    return ops::softmax_channels(seg_head_(encode(2, x), training_));
  }

  GeneratorOutput generate(const Value& x, Scalar alpha) {
    check_input(x);
    WGAN_CHECK(alpha >= 0.0 && alpha <= 1.0, "generate: alpha must be in [0,1], got ", alpha);
    GeneratorOutput out;
    const bool need_att = cfg_.ablation == AblationMode::full ||
                          cfg_.ablation == AblationMode::attention_only;
    const bool need_seg = cfg_.ablation == AblationMode::full ||
                          cfg_.ablation == AblationMode::segmentation_only;

    Value h0 = encode(0, x);
    out.g_init = ops::tanh_(init_head_(h0, training_));
    if (need_att) {
      Value h = cfg_.shared_encoder ? h0 : encode(1, x);
      out.att = ops::sigmoid_(att_head_(h, training_));
    }
    if (need_seg) {
      Value h = cfg_.shared_encoder ? h0 : encode(2, x);
      out.seg = ops::softmax_channels(seg_head_(h, training_));
    }

    switch (cfg_.ablation) {
      case AblationMode::full:
        out.t = translation_map(out.att, out.seg, cfg_.relevant_cues, cfg_.n_s);
        break;
      case AblationMode::attention_only:
        out.t = out.att;
        break;
      case AblationMode::segmentation_only: {
        std::vector<Scalar> w(static_cast<size_t>(cfg_.n_s), 0.0);
        for (int c : cfg_.relevant_cues) w[static_cast<size_t>(c)] = 1.0;
        out.t = ops::clamp01(ops::channel_weighted_sum(out.seg, std::move(w)));
        break;
      }
      case AblationMode::init_only:
        out.t = constant(Tensor::ones(Shape{x->value.dim(0), 1, x->value.dim(2), x->value.dim(3)}));
        break;
    }
    out.g = compose(x, out.g_init, out.t, alpha);
    return out;
  }

  GeneratorOutput generate(const Tensor& x, Scalar alpha) {
    return generate(constant(x), alpha);
  }

  nn::NamedParams parameters() const {
    nn::NamedParams out;
    for (size_t i = 0; i < encoders_.size(); ++i)
      encoders_[i].collect(out, encoders_.size() == 1 ? "enc" : "enc" + std::to_string(i));
    init_head_.collect(out, "init");
    att_head_.collect(out, "att");
    seg_head_.collect(out, "seg");
    return out;
  }
  nn::NamedBuffers buffers() {
    nn::NamedBuffers out;
    for (size_t i = 0; i < encoders_.size(); ++i)
      encoders_[i].collect_buffers(out, encoders_.size() == 1 ? "enc" : "enc" + std::to_string(i));
    init_head_.collect_buffers(out, "init");
    att_head_.collect_buffers(out, "att");
    seg_head_.collect_buffers(out, "seg");
    return out;
  }

 private:
  Value encode(int branch, const Value& x) {
    detail::GenEncoder& enc = cfg_.shared_encoder
                                  ? encoders_[0]
                                  : encoders_[static_cast<size_t>(branch)];
    return enc(x, training_);
  }

  void check_input(const Value& x) const {
    WGAN_CHECK(x->value.rank() == 4 && x->value.dim(1) == 3,
               "generator expects (N,3,H,W) input, got ", shape_str(x->value.shape()));
    const int div = 1 << (cfg_.n_down - 1);
    WGAN_CHECK(x->value.dim(2) % div == 0 && x->value.dim(3) % div == 0,
               "generator: input ", x->value.dim(2), "x", x->value.dim(3),
               " must be divisible by ", div);
  }

  GeneratorConfig cfg_;
  std::vector<detail::GenEncoder> encoders_;
  detail::GenHead init_head_, att_head_, seg_head_;
  bool training_ = true;
};

}  // namespace wgan
