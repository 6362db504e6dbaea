#pragma once

#include <chrono>
#include <cstdio>
#include <fstream>
#include <memory>
#include <optional>
#include <ostream>

#include "wgan/adam.hpp"
#include "wgan/dataset.hpp"
#include "wgan/discriminator.hpp"
#include "wgan/generator.hpp"
#include "wgan/losses.hpp"

namespace wgan {

struct PerceptualConfig {
  std::string kind = "frozen_conv";  // identity | frozen_conv
  int layers = 3;
  int base_channels = 16;
  std::uint64_t seed = 99;
  std::string weights;  // optional TensorStore path overriding the seeded init
};

struct DataConfig {
  std::string root;
  std::string manifest;
};

struct TrainConfig {
  WeatherClass domain_x = WeatherClass::sunny;
  WeatherClass domain_y = WeatherClass::cloudy;
  int total_iterations = 2000;
  int decay_start = 1000;
  Scalar lr0 = 2e-4;
  int batch_size = 1;
  std::uint64_t seed = 0;
  int image_h = 300, image_w = 300;
  int checkpoint_every = 500;
  int log_every = 1;
  AblationMode ablation = AblationMode::full;

  LossWeights loss;
  GeneratorConfig gen;  // relevant_cues resolved from relevant_cue_names at build time
  std::vector<std::string> relevant_cue_names;  // empty = every non-background cue
  DiscriminatorConfig disc;
  PerceptualConfig perceptual;
  DataConfig data;

  void validate() const {
    WGAN_CHECK(domain_x != domain_y, "train: domain_x and domain_y must differ");
    WGAN_CHECK(total_iterations >= 1, "train: total_iterations must be >= 1");
    WGAN_CHECK(decay_start >= 0 && decay_start < total_iterations,
               "train: decay_start must be in [0, total_iterations)");
    WGAN_CHECK(lr0 > 0.0, "train: lr0 must be > 0");
    WGAN_CHECK(batch_size >= 1, "train: batch_size must be >= 1");
    WGAN_CHECK(image_h >= 1 && image_w >= 1, "train: bad image size");
    WGAN_CHECK(checkpoint_every >= 0, "train: checkpoint_every must be >= 0");
    WGAN_CHECK(log_every >= 1, "train: log_every must be >= 1");
    loss.validate();
  }

  std::string to_ini() const;
  static TrainConfig from_ini_text(const std::string& text);
  static TrainConfig from_file(const std::filesystem::path& path);
};

// piecewise-linear decay: constant lr0 until decay_start, then linear to
// exactly zero at total_iterations
inline Scalar lr_schedule(int iteration, const TrainConfig& cfg) {
  WGAN_CHECK(iteration >= 0 && iteration <= cfg.total_iterations, "lr_schedule: iteration ",
             iteration, " outside [0,", cfg.total_iterations, "]");
  if (iteration <= cfg.decay_start) return cfg.lr0;
  const Scalar remain = static_cast<Scalar>(cfg.total_iterations - cfg.decay_start);
  return cfg.lr0 * (1.0 - static_cast<Scalar>(iteration - cfg.decay_start) / remain);
}

struct StepReport {
  int iteration = 0;
  Scalar lr = 0.0;
  std::vector<std::pair<std::string, Scalar>> terms;
  double wall_ms = 0.0;

  Scalar term(const std::string& name) const {
    for (const auto& [k, v] : terms)
      if (k == name) return v;
    throw ValidationError("no loss term '" + name + "' in step report");
  }
  bool has_term(const std::string& name) const {
    for (const auto& [k, v] : terms)
      if (k == name) return true;
    return false;
  }

  // wall time deliberately excluded: log lines are reproducible given a seed
  std::string to_log_line() const {
    char buf[64];
    std::string out = "iter=" + std::to_string(iteration);
    std::snprintf(buf, sizeof(buf), " lr=%.10g", lr);
    out += buf;
    for (const auto& [k, v] : terms) {
      std::snprintf(buf, sizeof(buf), " %s=%.10g", k.c_str(), v);
      out += buf;
    }
    return out;
  }
};

inline std::unique_ptr<PerceptualExtractor> make_perceptual(const PerceptualConfig& cfg) {
  if (cfg.kind == "identity") return std::make_unique<IdentityPerceptual>();
  if (cfg.kind == "frozen_conv") {
    if (!cfg.weights.empty())
      return std::make_unique<FrozenConvPerceptual>(
          FrozenConvPerceptual::from_file(cfg.weights));
    return std::make_unique<FrozenConvPerceptual>(cfg.layers, cfg.base_channels, cfg.seed);
  }
  throw ValidationError("unknown perceptual extractor kind '" + cfg.kind + "'");
}

// Owns both generators, both discriminators and their optimizers; runs the
// alternating minimax schedule: one discriminator update on detached fakes,
// then one joint generator update on the full objective.
class Trainer {
 public:
  Trainer(TrainConfig cfg, const DatasetIndex& data) : cfg_(std::move(cfg)), data_(&data) {
    cfg_.validate();
    rng_ = Rng(cfg_.seed);
    build_models();
  }

  // resume with the schedule recorded in the checkpoint
  static Trainer resume_from(const std::filesystem::path& ckpt_path, const DatasetIndex& data) {
    TensorStore store = TensorStore::load(ckpt_path);
    Trainer t(TrainConfig::from_ini_text(store.get_string("config")), data);
    t.load_state(store);
    return t;
  }

  // resume checkpoint state under an explicitly supplied config; shapes must
  // match the checkpoint's architecture
  static Trainer resume_from(const std::filesystem::path& ckpt_path, const DatasetIndex& data,
                             TrainConfig cfg) {
    TensorStore store = TensorStore::load(ckpt_path);
    Trainer t(std::move(cfg), data);
    t.load_state(store);
    return t;
  }

  const TrainConfig& config() const { return cfg_; }
  int iteration() const { return iteration_; }
  Generator& g() { return *g_; }
  Generator& f() { return *f_; }
  Discriminator& dx() { return *dx_; }
  Discriminator& dy() { return *dy_; }
  PerceptualExtractor& perceptual() { return *phi_; }

  StepReport step() {
    Batch batch = sample_unpaired_batch(*data_, cfg_.domain_x, cfg_.domain_y, cfg_.batch_size,
                                        mix_seed(cfg_.seed, static_cast<std::uint64_t>(iteration_)),
                                        cfg_.image_h, cfg_.image_w);
    return run_step(batch, /*update_d=*/true, /*update_g=*/true);
  }

  // one optimization step on a prepared batch; the update flags let tests
  // freeze either side
  StepReport run_step(const Batch& batch, bool update_d, bool update_g) {
    const auto t0 = std::chrono::steady_clock::now();
    WGAN_CHECK(batch.x_class == cfg_.domain_x && batch.y_class == cfg_.domain_y,
               "batch domains do not match the training config");
    StepReport rep;
    rep.iteration = iteration_ + 1;
    rep.lr = lr_schedule(iteration_, cfg_);

    const int x_cls = static_cast<int>(cfg_.domain_x);
    const int y_cls = static_cast<int>(cfg_.domain_y);
    Value x = constant(batch.x_images);
    Value y = constant(batch.y_images);

    GeneratorOutput g_out = g_->generate(x, 1.0);  // X -> Y
    GeneratorOutput f_out = f_->generate(y, 1.0);  // Y -> X

    if (update_d) {
      adam_d_.zero_grad();
      Value fake_y = detach(g_out.g);
      Value fake_x = detach(f_out.g);
      DiscriminatorOutput dy_real = dy_->forward(y);
      DiscriminatorOutput dx_real = dx_->forward(x);
      Value adv = add(losses::adversarial_loss_d(dy_real.realness, dy_->discriminate(fake_y)),
                      losses::adversarial_loss_d(dx_real.realness, dx_->discriminate(fake_x)));
      // classifier heads are grounded on real labeled images of both
      // domains; a head that only ever saw its own domain would collapse to
      // a constant prediction
      const std::vector<int> xl(static_cast<size_t>(cfg_.batch_size), x_cls);
      const std::vector<int> yl(static_cast<size_t>(cfg_.batch_size), y_cls);
      Value cls = add(add(ops::cross_entropy_logits(dy_real.class_logits, yl),
                          ops::cross_entropy_logits(dy_->classify(x), xl)),
                      add(ops::cross_entropy_logits(dx_real.class_logits, xl),
                          ops::cross_entropy_logits(dx_->classify(y), yl)));
      Value d_total = add(mul_scalar(adv, cfg_.loss.w_adv), mul_scalar(cls, cfg_.loss.w_class));
      WGAN_CHECK_NUMERIC(std::isfinite(d_total->value.item()), "non-finite loss term: d_total");
      backward(d_total);
      adam_d_.step(rep.lr);
      rep.terms.emplace_back("d_adv", adv->value.item());
      rep.terms.emplace_back("d_class", cls->value.item());
    }

    if (update_g) {
      adam_g_.zero_grad();
      DiscriminatorOutput dy_fake = dy_->forward(g_out.g);
      DiscriminatorOutput dx_fake = dx_->forward(f_out.g);
      Value adv_g_xy = losses::adversarial_loss_g(dy_fake.realness);
      Value adv_g_yx = losses::adversarial_loss_g(dx_fake.realness);

      GeneratorOutput rec_x = f_->generate(g_out.g, 1.0);  // F(G(x))
      GeneratorOutput rec_y = g_->generate(f_out.g, 1.0);  // G(F(y))
      Value l1 = losses::cycle_l1(x, rec_x.g, y, rec_y.g);
      const bool want_perc = cfg_.loss.lambda_cycle_blend < 1.0;
      Value perc = want_perc ? losses::perceptual_loss(*phi_, x, rec_x.g, y, rec_y.g)
                             : constant(Tensor::scalar(0.0));
      Value cycle = losses::cycle_total(l1, perc, cfg_.loss.lambda_cycle_blend);

      Value classify = losses::classification_loss(dy_fake.class_logits, y_cls,
                                                   dx_fake.class_logits, x_cls);

      const bool has_seg = static_cast<bool>(g_out.seg);
      Value seg_x = has_seg ? losses::seg_loss(g_out.seg, batch.x_seg_targets)
                            : constant(Tensor::scalar(0.0));
      Value seg_y = has_seg ? losses::seg_loss(f_out.seg, batch.y_seg_targets)
                            : constant(Tensor::scalar(0.0));

      Value total = losses::total_generator_loss(adv_g_xy, adv_g_yx, cycle, classify, seg_x,
                                                 seg_y, cfg_.loss);
      backward(total);
      adam_g_.step(rep.lr);

      rep.terms.emplace_back("g_adv_xy", adv_g_xy->value.item());
      rep.terms.emplace_back("g_adv_yx", adv_g_yx->value.item());
      rep.terms.emplace_back("cycle_l1", l1->value.item());
      if (want_perc) rep.terms.emplace_back("cycle_perc", perc->value.item());
      rep.terms.emplace_back("cycle", cycle->value.item());
      rep.terms.emplace_back("class", classify->value.item());
      if (has_seg) {
        rep.terms.emplace_back("seg_x", seg_x->value.item());
        rep.terms.emplace_back("seg_y", seg_y->value.item());
      }
      rep.terms.emplace_back("g_total", total->value.item());
    }

    ++iteration_;
    rep.wall_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    return rep;
  }

  // full schedule with periodic checkpoints and line logs
  void run(std::ostream* log, const std::filesystem::path& ckpt_dir) {
    std::filesystem::create_directories(ckpt_dir);
    while (iteration_ < cfg_.total_iterations) {
      StepReport rep = step();
      if (log && (rep.iteration % cfg_.log_every == 0 || rep.iteration == cfg_.total_iterations))
        *log << rep.to_log_line() << '\n';
      if (cfg_.checkpoint_every > 0 && rep.iteration % cfg_.checkpoint_every == 0 &&
          rep.iteration < cfg_.total_iterations) {
        save_checkpoint(ckpt_dir / checkpoint_name(rep.iteration));
        save_checkpoint(ckpt_dir / "latest.ckpt");
      }
    }
    save_checkpoint(ckpt_dir / checkpoint_name(iteration_));
    save_checkpoint(ckpt_dir / "latest.ckpt");
  }

  static std::string checkpoint_name(int iteration) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "ckpt_%06d.ckpt", iteration);
    return buf;
  }

  void save_checkpoint(const std::filesystem::path& path) const {
    TensorStore store;
    store.put_string("config", cfg_.to_ini());
    store.put_string("iteration", std::to_string(iteration_));
    store.put_string("rng", rng_.serialize());
    // resolved generator facts so translate can rebuild G/F without the dataset
    store.put_string("gen/n_s", std::to_string(g_->config().n_s));
    {
      std::string cues;
      for (size_t i = 0; i < g_->config().relevant_cues.size(); ++i)
        cues += (i ? "," : "") + std::to_string(g_->config().relevant_cues[i]);
      store.put_string("gen/relevant_cues", cues);
    }
    auto dump = [&store](const nn::NamedParams& params, const std::string& prefix) {
      for (const auto& [name, p] : params) store.put(prefix + name, p->value);
    };
    dump(g_->parameters(), "model/G/");
    dump(f_->parameters(), "model/F/");
    dump(dx_->parameters(), "model/DX/");
    dump(dy_->parameters(), "model/DY/");
    auto dump_buffers = [&store](nn::NamedBuffers buffers, const std::string& prefix) {
      for (const auto& [name, t] : buffers) store.put(prefix + name, *t);
    };
    dump_buffers(g_->buffers(), "buffers/G/");
    dump_buffers(f_->buffers(), "buffers/F/");
    dump_buffers(dx_->buffers(), "buffers/DX/");
    dump_buffers(dy_->buffers(), "buffers/DY/");
    adam_g_.save(store, "opt/G");
    adam_d_.save(store, "opt/D");
    store.save(path);
  }

  void load_state(const TensorStore& store) {
    iteration_ = std::stoi(store.get_string("iteration"));
    rng_.deserialize(store.get_string("rng"));
    auto fill = [&store](const nn::NamedParams& params, const std::string& prefix) {
      for (const auto& [name, p] : params) {
        const Tensor& t = store.get(prefix + name);
        WGAN_CHECK(t.numel() == p->value.numel(), "checkpoint shape mismatch for ", prefix, name);
        p->value = t.reshaped(p->value.shape());
      }
    };
    fill(g_->parameters(), "model/G/");
    fill(f_->parameters(), "model/F/");
    fill(dx_->parameters(), "model/DX/");
    fill(dy_->parameters(), "model/DY/");
    auto fill_buffers = [&store](nn::NamedBuffers buffers, const std::string& prefix) {
      for (auto& [name, t] : buffers) *t = store.get(prefix + name).reshaped(t->shape());
    };
    fill_buffers(g_->buffers(), "buffers/G/");
    fill_buffers(f_->buffers(), "buffers/F/");
    fill_buffers(dx_->buffers(), "buffers/DX/");
    fill_buffers(dy_->buffers(), "buffers/DY/");
    adam_g_.load(store, "opt/G");
    adam_d_.load(store, "opt/D");
  }

 private:
  void build_models() {
    GeneratorConfig gcfg = cfg_.gen;
    gcfg.n_s = data_->n_s();
    gcfg.ablation = cfg_.ablation;
    gcfg.relevant_cues.clear();
    if (cfg_.relevant_cue_names.empty()) {
      for (int c = 1; c < gcfg.n_s; ++c) gcfg.relevant_cues.push_back(c);
    } else {
      for (const std::string& name : cfg_.relevant_cue_names)
        gcfg.relevant_cues.push_back(data_->cue_index(name));
    }
    DiscriminatorConfig dcfg = cfg_.disc;
    dcfg.n_classes = kNumWeatherClasses;

    Rng rg(mix_seed(cfg_.seed, 1));
    Rng rf(mix_seed(cfg_.seed, 2));
    Rng rdx(mix_seed(cfg_.seed, 3));
    Rng rdy(mix_seed(cfg_.seed, 4));
    g_ = std::make_unique<Generator>(gcfg, rg);
    f_ = std::make_unique<Generator>(gcfg, rf);
    dx_ = std::make_unique<Discriminator>(dcfg, rdx);
    dy_ = std::make_unique<Discriminator>(dcfg, rdy);
    phi_ = make_perceptual(cfg_.perceptual);

    nn::NamedParams gen_params;
    for (const auto& [name, p] : g_->parameters()) gen_params.emplace_back("G/" + name, p);
    for (const auto& [name, p] : f_->parameters()) gen_params.emplace_back("F/" + name, p);
    nn::NamedParams disc_params;
    for (const auto& [name, p] : dx_->parameters()) disc_params.emplace_back("DX/" + name, p);
    for (const auto& [name, p] : dy_->parameters()) disc_params.emplace_back("DY/" + name, p);
    adam_g_ = Adam(std::move(gen_params));
    adam_d_ = Adam(std::move(disc_params));
  }

  TrainConfig cfg_;
  const DatasetIndex* data_;
  Rng rng_;
  std::unique_ptr<Generator> g_, f_;
  std::unique_ptr<Discriminator> dx_, dy_;
  std::unique_ptr<PerceptualExtractor> phi_;
  Adam adam_g_, adam_d_;
  int iteration_ = 0;
};

// Rebuilds one generator (G: X->Y, F: Y->X) from a checkpoint alone, for
// translation without the training dataset present.
inline Generator load_generator(const TensorStore& store, const std::string& which,
                                TrainConfig* out_cfg = nullptr) {
  WGAN_CHECK(which == "G" || which == "F", "load_generator: expected G or F, got ", which);
  TrainConfig cfg = TrainConfig::from_ini_text(store.get_string("config"));
  GeneratorConfig gcfg = cfg.gen;
  gcfg.ablation = cfg.ablation;
  gcfg.n_s = std::stoi(store.get_string("gen/n_s"));
  gcfg.relevant_cues.clear();
  {
    std::istringstream ss(store.get_string("gen/relevant_cues"));
    std::string item;
    while (std::getline(ss, item, ','))
      if (!item.empty()) gcfg.relevant_cues.push_back(std::stoi(item));
  }
  Rng rng(0);  // every parameter is overwritten below
  Generator gen(gcfg, rng);
  for (const auto& [name, p] : gen.parameters()) {
    const Tensor& t = store.get("model/" + which + "/" + name);
    WGAN_CHECK(t.numel() == p->value.numel(), "checkpoint shape mismatch for ", name);
    p->value = t.reshaped(p->value.shape());
  }
  for (auto& [name, t] : gen.buffers()) *t = store.get("buffers/" + which + "/" + name);
  gen.set_training(false);
  if (out_cfg) *out_cfg = cfg;
  return gen;
}

}  // namespace wgan

#include "wgan/training_config_io.hpp"
