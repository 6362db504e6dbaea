// weathergan: multi-domain weather translation pipeline.
// Subcommands: prepare, train, translate, evaluate, ablate.
// Exit codes: 0 success, 1 usage error, 2 runtime failure.

#include <CLI11.hpp>

#include <iostream>

#include "wgan/metrics.hpp"
#include "wgan/training.hpp"

namespace fs = std::filesystem;
using namespace wgan;

namespace {

void write_text_atomic(const fs::path& path, const std::string& text) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream os(tmp, std::ios::trunc);
    if (!os) throw LoadError("cannot write: " + path.string());
    os << text;
  }
  fs::rename(tmp, path);
}

// ---------------------------------------------------------------------------
// prepare: scan root/<class>/... and emit a manifest skeleton for annotation
// ---------------------------------------------------------------------------
int cmd_prepare(const std::string& root_str, const std::string& manifest_out,
                const std::string& cues) {
  fs::path root(root_str);
  if (!fs::is_directory(root)) throw LoadError("root is not a directory: " + root.string());

  std::ostringstream manifest;
  manifest << "#cues: " << cues << "\n";
  int total = 0;
  for (int c = 0; c < kNumWeatherClasses; ++c) {
    const char* cls = weather_class_name(static_cast<WeatherClass>(c));
    fs::path class_dir = root / cls;
    if (!fs::is_directory(class_dir)) continue;
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(class_dir))
      if (entry.is_regular_file() && metrics::has_image_extension(entry.path()))
        files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files)
      manifest << cls << "/" << f.filename().string() << '\t' << cls << "\t\n";
    std::cout << cls << ": " << files.size() << " images\n";
    total += static_cast<int>(files.size());
  }
  if (total == 0) throw LoadError("no images found under " + root.string());
  write_text_atomic(manifest_out, manifest.str());
  std::cout << "wrote " << manifest_out << " (" << total
            << " records; cue boxes left empty for annotation)\n";
  return 0;
}

// ---------------------------------------------------------------------------
// train / ablate
// ---------------------------------------------------------------------------
int run_training(const std::string& config_path, const std::string& resume,
                 const std::string& out_dir, const std::string& ablation_override) {
  if (!fs::exists(config_path))
    throw ValidationError("config file not found: " + config_path);
  TrainConfig cfg = TrainConfig::from_file(config_path);
  if (!ablation_override.empty()) cfg.ablation = ablation_mode_from_name(ablation_override);
  cfg.validate();
  WGAN_CHECK(!cfg.data.root.empty() && !cfg.data.manifest.empty(),
             "config must set [data] root and manifest");

  DatasetIndex data = DatasetIndex::load(cfg.data.root, cfg.data.manifest);
  fs::create_directories(out_dir);

  std::unique_ptr<Trainer> trainer;
  if (resume.empty()) {
    trainer = std::make_unique<Trainer>(cfg, data);
  } else {
    // --config defines the run; the checkpoint supplies parameters,
    // optimizer moments, rng state and the resume iteration
    trainer = std::make_unique<Trainer>(Trainer::resume_from(resume, data, cfg));
  }

  const char* composition = "";
  switch (trainer->config().ablation) {
    case AblationMode::full: composition = "att*clamp(sum_relevant_seg)"; break;
    case AblationMode::attention_only: composition = "att"; break;
    case AblationMode::segmentation_only: composition = "clamp(sum_relevant_seg)"; break;
    case AblationMode::init_only: composition = "ones"; break;
  }
  std::string header = std::string("# ablation=") +
                       ablation_mode_name(trainer->config().ablation) +
                       " t_composition=" + composition;
  std::cerr << header << '\n';

  std::ofstream log_file(fs::path(out_dir) / "train_log.txt",
                         resume.empty() ? std::ios::trunc : std::ios::app);
  log_file << header << '\n';

  // line log to both stderr and the log file
  struct Tee : std::streambuf {
    std::streambuf *a = nullptr, *b = nullptr;
    int overflow(int c) override {
      if (c != EOF) {
        a->sputc(static_cast<char>(c));
        b->sputc(static_cast<char>(c));
      }
      return c;
    }
  } tee;
  tee.a = std::cerr.rdbuf();
  tee.b = log_file.rdbuf();
  std::ostream log(&tee);

  trainer->run(&log, out_dir);
  std::cout << "finished at iteration " << trainer->iteration() << "; checkpoints in "
            << out_dir << '\n';
  return 0;
}

// ---------------------------------------------------------------------------
// translate
// ---------------------------------------------------------------------------
int cmd_translate(const std::string& checkpoint, const std::string& input,
                  const std::string& alpha_list, const std::string& out_dir,
                  bool dump_intermediates, bool grid, const std::string& direction) {
  std::vector<Scalar> alphas;
  {
    std::istringstream ss(alpha_list);
    std::string item;
    while (std::getline(ss, item, ',')) {
      if (item.empty()) continue;
      Scalar a = 0.0;
      try {
        a = std::stod(item);
      } catch (const std::exception&) {
        throw ValidationError("bad alpha value '" + item + "'");
      }
      WGAN_CHECK(a >= 0.0 && a <= 1.0, "alpha must be in [0,1], got ", a);
      alphas.push_back(a);
    }
  }
  if (alphas.empty()) throw ValidationError("no alpha values given");
  WGAN_CHECK(direction == "xy" || direction == "yx", "--direction must be xy or yx");

  TensorStore store = TensorStore::load(checkpoint);
  TrainConfig cfg;
  Generator gen = load_generator(store, direction == "xy" ? "G" : "F", &cfg);

  std::vector<fs::path> inputs;
  if (fs::is_directory(input)) {
    inputs = metrics::list_images(input);
    WGAN_CHECK(!inputs.empty(), "no images in ", input);
  } else {
    WGAN_CHECK(fs::exists(input), "input not found: ", input);
    inputs.push_back(input);
  }
  fs::create_directories(out_dir);

  for (const auto& path : inputs) {
    Tensor img = preprocess_image(load_image(path), cfg.image_h, cfg.image_w);
    Value x = constant(img.reshaped(Shape{1, 3, cfg.image_h, cfg.image_w}));
    std::string stem = path.stem().string();

    std::vector<Tensor> sweep;
    for (Scalar a : alphas) {
      GeneratorOutput out = gen.generate(x, a);
      Tensor composed = out.g->value.reshaped(Shape{3, cfg.image_h, cfg.image_w});
      char name[128];
      std::snprintf(name, sizeof(name), "%s_a%.2f.png", stem.c_str(), a);
      save_image(composed, fs::path(out_dir) / name);
      if (grid) sweep.push_back(composed);
    }

    if (dump_intermediates) {
      GeneratorOutput out = gen.generate(x, 1.0);
      save_image(img, fs::path(out_dir) / (stem + "_input.png"));
      save_image(out.g_init->value.reshaped(Shape{3, cfg.image_h, cfg.image_w}),
                 fs::path(out_dir) / (stem + "_ginit.png"));
      Tensor att = out.att ? out.att->value.reshaped(Shape{cfg.image_h, cfg.image_w})
                           : Tensor::zeros(Shape{cfg.image_h, cfg.image_w});
      save_map(att, fs::path(out_dir) / (stem + "_att.png"));
      save_map(out.t->value.reshaped(Shape{cfg.image_h, cfg.image_w}),
               fs::path(out_dir) / (stem + "_t.png"));
      const int n_s = gen.config().n_s;
      for (int c = 0; c < n_s; ++c) {
        Tensor plane(Shape{cfg.image_h, cfg.image_w});
        if (out.seg) {
          const long hw = static_cast<long>(cfg.image_h) * cfg.image_w;
          std::copy(out.seg->value.data() + c * hw, out.seg->value.data() + (c + 1) * hw,
                    plane.data());
        }
        save_map(plane, fs::path(out_dir) / (stem + "_seg" + std::to_string(c) + ".png"));
      }
    }

    if (grid && sweep.size() > 1) {
      // Fig. 8 style strip: intensity increases left to right
      const int H = cfg.image_h, W = cfg.image_w;
      const long stride = static_cast<long>(W) * static_cast<long>(sweep.size());
      Tensor strip(Shape{3, H, W * static_cast<int>(sweep.size())});
      for (size_t i = 0; i < sweep.size(); ++i)
        for (int c = 0; c < 3; ++c)
          for (int y = 0; y < H; ++y)
            for (int x2 = 0; x2 < W; ++x2)
              strip[(static_cast<long>(c) * H + y) * stride + static_cast<long>(i) * W + x2] =
                  sweep[i][(static_cast<long>(c) * H + y) * W + x2];
      save_image(strip, fs::path(out_dir) / (stem + "_sweep.png"));
    }
  }
  std::cout << "translated " << inputs.size() << " image(s) x " << alphas.size()
            << " intensity value(s) into " << out_dir << '\n';
  return 0;
}

// ---------------------------------------------------------------------------
// evaluate
// ---------------------------------------------------------------------------
int cmd_evaluate(const std::string& real_dir, const std::string& fake_dir,
                 const std::string& extractor_kind, const std::string& extractor_weights,
                 int grid, int image_size, int subset_size, int n_subsets, std::uint64_t seed,
                 const std::string& report_out) {
  std::unique_ptr<EmbeddingExtractor> extractor;
  if (extractor_kind == "pixel") {
    extractor = std::make_unique<PooledPixelEmbedding>(grid);
  } else if (extractor_kind == "identity") {
    extractor = std::make_unique<IdentityEmbedding>();
  } else if (extractor_kind == "conv") {
    extractor = extractor_weights.empty()
                    ? std::make_unique<FrozenConvEmbedding>(3, 16, /*seed=*/1234)
                    : std::make_unique<FrozenConvEmbedding>(extractor_weights);
  } else {
    throw ValidationError("unknown extractor '" + extractor_kind +
                          "' (expected pixel|conv|identity)");
  }

  metrics::EvalPairConfig cfg;
  cfg.image_h = cfg.image_w = image_size;
  cfg.subset_size = subset_size;
  cfg.n_subsets = n_subsets;
  cfg.seed = seed;

  metrics::MetricReport rep = metrics::evaluate_pair(real_dir, fake_dir, *extractor, cfg);
  for (const auto& w : rep.warnings) std::cerr << "warning: " << w << '\n';
  std::string text = rep.to_text();
  std::cout << text;
  write_text_atomic(report_out, text);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"weathergan: multi-domain weather translation with attention and cue segmentation"};
  app.require_subcommand(1);

  // prepare
  auto* prepare = app.add_subcommand("prepare", "scan a class-per-directory tree into a manifest");
  std::string prep_root, prep_out;
  std::string prep_cues = "background,sky,cloud,fog,rain-streak,snow-cover,wet-ground";
  prepare->add_option("--root", prep_root, "corpus root containing <class>/ directories")
      ->required();
  prepare->add_option("--manifest-out", prep_out, "manifest path to write")->required();
  prepare->add_option("--cues", prep_cues, "cue vocabulary (background first)");

  // train
  auto* train = app.add_subcommand("train", "train a domain pair from a config file");
  std::string train_config, train_resume, train_out = "runs/default";
  train->add_option("--config", train_config, "training config file")->required();
  train->add_option("--resume", train_resume, "checkpoint to resume from");
  train->add_option("--out", train_out, "output directory for checkpoints and logs");

  // translate
  auto* translate = app.add_subcommand("translate", "apply a trained generator to images");
  std::string tr_ckpt, tr_input, tr_alpha = "0,0.25,0.5,0.75,1.0", tr_out = "translated";
  std::string tr_direction = "xy";
  bool tr_dump = false, tr_grid = false;
  translate->add_option("--checkpoint", tr_ckpt, "trained checkpoint")->required();
  translate->add_option("--input", tr_input, "image file or directory")->required();
  translate->add_option("--alpha", tr_alpha, "comma-separated intensity values in [0,1]");
  translate->add_option("--out", tr_out, "output directory");
  translate->add_option("--direction", tr_direction, "xy (G) or yx (F)");
  translate->add_flag("--dump-intermediates", tr_dump,
                      "also write g_init, attention, T and per-class cue maps");
  translate->add_flag("--grid", tr_grid, "write a horizontal intensity sweep strip");

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "FID/KID between two image directories");
  std::string ev_real, ev_fake, ev_kind = "pixel", ev_weights, ev_out = "metrics_report.txt";
  int ev_grid = 8, ev_size = 300, ev_subset = 100, ev_nsub = 100;
  std::uint64_t ev_seed = 0;
  evaluate->add_option("--real-dir", ev_real, "directory of real images")->required();
  evaluate->add_option("--fake-dir", ev_fake, "directory of generated images")->required();
  evaluate->add_option("--extractor", ev_kind, "embedding: pixel|conv|identity");
  evaluate->add_option("--extractor-weights", ev_weights, "TensorStore weights for conv extractor");
  evaluate->add_option("--grid", ev_grid, "pooling grid for the pixel extractor");
  evaluate->add_option("--image-size", ev_size, "preprocessing size");
  evaluate->add_option("--subset-size", ev_subset, "KID subset size");
  evaluate->add_option("--n-subsets", ev_nsub, "KID subset count");
  evaluate->add_option("--seed", ev_seed, "KID subset seed");
  evaluate->add_option("--out", ev_out, "report file path");

  // ablate
  auto* ablate = app.add_subcommand("ablate", "train with a branch configuration ablated");
  std::string ab_config, ab_mode, ab_out = "runs/ablation", ab_resume;
  ablate->add_option("--config", ab_config, "training config file")->required();
  ablate->add_option("--mode", ab_mode, "full|attention_only|segmentation_only|init_only")
      ->required();
  ablate->add_option("--resume", ab_resume, "checkpoint to resume from");
  ablate->add_option("--out", ab_out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (prepare->parsed()) return cmd_prepare(prep_root, prep_out, prep_cues);
    if (train->parsed()) return run_training(train_config, train_resume, train_out, "");
    if (translate->parsed())
      return cmd_translate(tr_ckpt, tr_input, tr_alpha, tr_out, tr_dump, tr_grid, tr_direction);
    if (evaluate->parsed())
      return cmd_evaluate(ev_real, ev_fake, ev_kind, ev_weights, ev_grid, ev_size, ev_subset,
                          ev_nsub, ev_seed, ev_out);
    if (ablate->parsed()) return run_training(ab_config, ab_resume, ab_out, ab_mode);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
