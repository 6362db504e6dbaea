#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <filesystem>
#include <memory>
#include <numeric>
#include <string>
#include <vector>

#include "wgan/image_io.hpp"
#include "wgan/losses.hpp"

namespace wgan {

// n x d matrix of image embeddings, one row per image
using FeatureMatrix = Eigen::MatrixXd;

// Frozen embedding network handle. The reference protocol uses pooled
// Inception features (d=2048); at desk scale the built-in extractors below
// stand in behind the same interface.
class EmbeddingExtractor {
 public:
  virtual ~EmbeddingExtractor() = default;
  virtual std::string name() const = 0;
  virtual Eigen::VectorXd embed(const Tensor& chw_image) const = 0;
};

// rows are the flattened pixels; test mock
class IdentityEmbedding final : public EmbeddingExtractor {
 public:
  std::string name() const override { return "identity"; }
  Eigen::VectorXd embed(const Tensor& img) const override {
    return Eigen::Map<const Eigen::VectorXd>(img.data(), img.numel());
  }
};

// channel-wise average pooling onto a grid x grid raster
class PooledPixelEmbedding final : public EmbeddingExtractor {
 public:
  explicit PooledPixelEmbedding(int grid = 8) : grid_(grid) {
    WGAN_CHECK(grid >= 1, "PooledPixelEmbedding: grid must be >= 1");
  }

  std::string name() const override { return "pooled_pixel(grid=" + std::to_string(grid_) + ")"; }

  Eigen::VectorXd embed(const Tensor& img) const override {
    WGAN_CHECK(img.rank() == 3, "embed expects (C,H,W), got ", shape_str(img.shape()));
    const int C = img.dim(0), H = img.dim(1), W = img.dim(2);
    WGAN_CHECK(H >= grid_ && W >= grid_, "image ", H, "x", W, " smaller than pooling grid");
    Eigen::VectorXd out(static_cast<long>(C) * grid_ * grid_);
    for (int c = 0; c < C; ++c)
      for (int gy = 0; gy < grid_; ++gy)
        for (int gx = 0; gx < grid_; ++gx) {
          const int y0 = gy * H / grid_, y1 = (gy + 1) * H / grid_;
          const int x0 = gx * W / grid_, x1 = (gx + 1) * W / grid_;
          Scalar acc = 0.0;
          for (int y = y0; y < y1; ++y)
            for (int x = x0; x < x1; ++x)
              acc += img[(static_cast<long>(c) * H + y) * W + x];
          out[(static_cast<long>(c) * grid_ + gy) * grid_ + gx] =
              acc / static_cast<Scalar>((y1 - y0) * (x1 - x0));
        }
    return out;
  }

 private:
  int grid_;
};

// frozen random (or file-loaded) conv stack, globally pooled
class FrozenConvEmbedding final : public EmbeddingExtractor {
 public:
  FrozenConvEmbedding(int n_layers, int base_channels, std::uint64_t seed)
      : phi_(std::make_shared<FrozenConvPerceptual>(n_layers, base_channels, seed,
                                                    std::vector<int>{n_layers - 1})) {}
  explicit FrozenConvEmbedding(const std::string& weights_path)
      : phi_(std::make_shared<FrozenConvPerceptual>(
            FrozenConvPerceptual::from_file(weights_path))) {}

  std::string name() const override { return "frozen_conv_pooled"; }

  Eigen::VectorXd embed(const Tensor& img) const override {
    WGAN_CHECK(img.rank() == 3 && img.dim(0) == 3, "embed expects (3,H,W)");
    Value v = constant(img.reshaped(Shape{1, img.dim(0), img.dim(1), img.dim(2)}));
    std::vector<Value> feats = phi_->features(v);
    Value pooled = ops::global_avg_pool(feats.back());
    return Eigen::Map<const Eigen::VectorXd>(pooled->value.data(), pooled->value.numel());
  }

 private:
  std::shared_ptr<FrozenConvPerceptual> phi_;
};

namespace metrics {

inline FeatureMatrix extract_features(const std::vector<Tensor>& images,
                                      const EmbeddingExtractor& extractor) {
  WGAN_CHECK(images.size() >= 2, "extract_features: need at least 2 images, got ",
             images.size());
  Eigen::VectorXd first = extractor.embed(images[0]);
  FeatureMatrix out(static_cast<long>(images.size()), first.size());
  out.row(0) = first;
  for (size_t i = 1; i < images.size(); ++i) {
    Eigen::VectorXd row = extractor.embed(images[i]);
    WGAN_CHECK(row.size() == first.size(), "inconsistent embedding dims");
    out.row(static_cast<long>(i)) = row;
  }
  return out;
}

// Symmetric PSD square root by eigendecomposition; eigenvalues below zero
// (numerical noise) are clipped before the square root.
inline Eigen::MatrixXd matrix_sqrt_psd(const Eigen::MatrixXd& m,
                                       Scalar* clipped_mass = nullptr) {
  WGAN_CHECK(m.rows() == m.cols(), "matrix_sqrt_psd: matrix must be square");
  const Scalar scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  const Scalar asym = (m - m.transpose()).cwiseAbs().maxCoeff();
  WGAN_CHECK(asym <= 1e-6 * scale, "matrix_sqrt_psd: input asymmetric beyond tolerance (",
             asym, ")");
  Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
  WGAN_CHECK(es.info() == Eigen::Success, "matrix_sqrt_psd: eigendecomposition failed");
  Eigen::VectorXd lam = es.eigenvalues();
  Scalar clipped = 0.0;
  for (long i = 0; i < lam.size(); ++i) {
    if (lam[i] < 0.0) {
      clipped += -lam[i];
      lam[i] = 0.0;
    }
  }
  if (clipped_mass) *clipped_mass = clipped;
  return es.eigenvectors() * lam.cwiseSqrt().asDiagonal() * es.eigenvectors().transpose();
}

struct FidInfo {
  Scalar trace_sqrt = 0.0;
  Scalar mean_sq = 0.0;
  Scalar clipped_eigen_mass = 0.0;  // negative spectrum removed from the cross term
  std::vector<std::string> warnings;
};

inline Eigen::MatrixXd covariance_unbiased(const FeatureMatrix& x) {
  Eigen::RowVectorXd mu = x.colwise().mean();
  Eigen::MatrixXd centered = x.rowwise() - mu;
  return centered.transpose() * centered / static_cast<Scalar>(x.rows() - 1);
}

// Frechet distance between Gaussian fits:
//   |mu_r - mu_f|^2 + tr(Sr + Sf - 2 (Sr Sf)^{1/2})
// The cross square root is taken through the symmetric equivalent
// sqrt(sqrt(Sr) Sf sqrt(Sr)), so only PSD roots are ever needed.
inline Scalar fid(const FeatureMatrix& real, const FeatureMatrix& fake,
                  FidInfo* info = nullptr) {
  WGAN_CHECK(real.cols() == fake.cols(), "fid: embedding dims differ (", real.cols(), " vs ",
             fake.cols(), ")");
  WGAN_CHECK(real.rows() >= 2 && fake.rows() >= 2, "fid: need at least 2 samples per set");

  Eigen::RowVectorXd mu_r = real.colwise().mean();
  Eigen::RowVectorXd mu_f = fake.colwise().mean();
  Eigen::MatrixXd cov_r = covariance_unbiased(real);
  Eigen::MatrixXd cov_f = covariance_unbiased(fake);

  Eigen::MatrixXd sqrt_r = matrix_sqrt_psd(cov_r);
  Eigen::MatrixXd cross = sqrt_r * cov_f * sqrt_r;
  Scalar clipped = 0.0;
  Eigen::MatrixXd cross_sqrt = matrix_sqrt_psd(0.5 * (cross + cross.transpose()), &clipped);

  const Scalar mean_sq = (mu_r - mu_f).squaredNorm();
  const Scalar trace_sqrt = cross_sqrt.trace();
  Scalar d = mean_sq + cov_r.trace() + cov_f.trace() - 2.0 * trace_sqrt;
  if (info) {
    info->trace_sqrt = trace_sqrt;
    info->mean_sq = mean_sq;
    info->clipped_eigen_mass = clipped;
    if (clipped > 1e-8 * std::max(1.0, cross.cwiseAbs().maxCoeff()))
      info->warnings.push_back("covariance cross product had negative spectrum; clipped");
    if (d < 0.0) info->warnings.push_back("negative FID clipped to 0");
  }
  return std::max(d, 0.0);
}

// cubic polynomial kernel k(a,b) = (a.b/d + 1)^3 on rows of x and y
inline Eigen::MatrixXd polynomial_kernel(const FeatureMatrix& x, const FeatureMatrix& y) {
  const Scalar inv_d = 1.0 / static_cast<Scalar>(x.cols());
  Eigen::MatrixXd k = (x * y.transpose() * inv_d).array() + 1.0;
  return k.array().cube();
}

// Unbiased MMD^2: diagonal terms excluded from the within-set sums. For
// equally sized sets the U-statistic form drops the cross diagonal as well,
// so identical samples estimate exactly zero.
inline Scalar mmd2_unbiased(const FeatureMatrix& x, const FeatureMatrix& y) {
  const long m = x.rows(), n = y.rows();
  WGAN_CHECK(m >= 2 && n >= 2, "mmd2_unbiased: need at least 2 samples per set");
  Eigen::MatrixXd kxx = polynomial_kernel(x, x);
  Eigen::MatrixXd kyy = polynomial_kernel(y, y);
  Eigen::MatrixXd kxy = polynomial_kernel(x, y);
  const Scalar sum_xx = kxx.sum() - kxx.trace();
  const Scalar sum_yy = kyy.sum() - kyy.trace();
  const Scalar within = sum_xx / static_cast<Scalar>(m * (m - 1)) +
                        sum_yy / static_cast<Scalar>(n * (n - 1));
  if (m == n)
    return within - 2.0 * (kxy.sum() - kxy.trace()) / static_cast<Scalar>(m * (m - 1));
  return within - 2.0 * kxy.mean();
}

struct KidResult {
  Scalar mean = 0.0;
  Scalar std = 0.0;
};

namespace detail {
// A full-set "subset" keeps natural order: row i of each set stays paired
// with row i, so identical sets estimate exactly zero under the U-statistic.
inline std::vector<long> sample_without_replacement(long n, long k, Rng& rng) {
  std::vector<long> idx(static_cast<size_t>(n));
  std::iota(idx.begin(), idx.end(), 0L);
  if (k == n) return idx;
  for (long i = 0; i < k; ++i) {
    long j = i + static_cast<long>(rng.below(static_cast<std::uint64_t>(n - i)));
    std::swap(idx[static_cast<size_t>(i)], idx[static_cast<size_t>(j)]);
  }
  idx.resize(static_cast<size_t>(k));
  return idx;
}
}  // namespace detail

// mean and (population) std of the unbiased MMD^2 over random subsets
inline KidResult kid(const FeatureMatrix& real, const FeatureMatrix& fake, int subset_size,
                     int n_subsets, std::uint64_t seed) {
  WGAN_CHECK(real.cols() == fake.cols(), "kid: embedding dims differ");
  WGAN_CHECK(subset_size >= 2, "kid: subset_size must be >= 2");
  WGAN_CHECK(n_subsets >= 1, "kid: n_subsets must be >= 1");
  WGAN_CHECK(subset_size <= real.rows() && subset_size <= fake.rows(),
             "kid: subset_size ", subset_size, " exceeds set sizes (", real.rows(), ",",
             fake.rows(), ")");

  std::vector<Scalar> estimates;
  estimates.reserve(static_cast<size_t>(n_subsets));
  for (int s = 0; s < n_subsets; ++s) {
    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(s)));
    auto ir = detail::sample_without_replacement(real.rows(), subset_size, rng);
    auto jf = detail::sample_without_replacement(fake.rows(), subset_size, rng);
    FeatureMatrix xr(subset_size, real.cols()), xf(subset_size, fake.cols());
    for (int i = 0; i < subset_size; ++i) {
      xr.row(i) = real.row(ir[static_cast<size_t>(i)]);
      xf.row(i) = fake.row(jf[static_cast<size_t>(i)]);
    }
    estimates.push_back(mmd2_unbiased(xr, xf));
  }
  KidResult res;
  for (Scalar v : estimates) res.mean += v;
  res.mean /= static_cast<Scalar>(estimates.size());
  Scalar var = 0.0;
  for (Scalar v : estimates) var += (v - res.mean) * (v - res.mean);
  var /= static_cast<Scalar>(estimates.size());
  res.std = std::sqrt(std::max(var, 0.0));
  return res;
}

struct EvalPairConfig {
  int image_h = 300, image_w = 300;
  int subset_size = 100;
  int n_subsets = 100;
  std::uint64_t seed = 0;
};

struct MetricReport {
  Scalar fid = 0.0;
  Scalar kid_mean = 0.0;
  Scalar kid_std = 0.0;
  int n_real = 0, n_fake = 0;
  int skipped_real = 0, skipped_fake = 0;
  std::string extractor;
  int subset_size = 0, n_subsets = 0;
  std::uint64_t seed = 0;
  int image_h = 0, image_w = 0;
  std::vector<std::string> warnings;

  std::string to_text() const {
    char buf[64];
    std::ostringstream os;
    auto put = [&](const char* key, Scalar v) {
      std::snprintf(buf, sizeof(buf), "%s=%.17g\n", key, v);
      os << buf;
    };
    put("fid", fid);
    put("kid_mean", kid_mean);
    put("kid_std", kid_std);
    os << "n_real=" << n_real << "\nn_fake=" << n_fake << "\n";
    os << "skipped_real=" << skipped_real << "\nskipped_fake=" << skipped_fake << "\n";
    os << "extractor=" << extractor << "\n";
    os << "subset_size=" << subset_size << "\nn_subsets=" << n_subsets << "\n";
    os << "seed=" << seed << "\n";
    os << "image_size=" << image_h << "x" << image_w << "\n";
    return os.str();
  }

  static MetricReport parse_text(const std::string& text) {
    MetricReport rep;
    std::istringstream is(text);
    std::string line;
    while (std::getline(is, line)) {
      size_t eq = line.find('=');
      if (eq == std::string::npos) continue;
      std::string key = line.substr(0, eq), val = line.substr(eq + 1);
      if (key == "fid") rep.fid = std::stod(val);
      else if (key == "kid_mean") rep.kid_mean = std::stod(val);
      else if (key == "kid_std") rep.kid_std = std::stod(val);
      else if (key == "n_real") rep.n_real = std::stoi(val);
      else if (key == "n_fake") rep.n_fake = std::stoi(val);
      else if (key == "skipped_real") rep.skipped_real = std::stoi(val);
      else if (key == "skipped_fake") rep.skipped_fake = std::stoi(val);
      else if (key == "extractor") rep.extractor = val;
      else if (key == "subset_size") rep.subset_size = std::stoi(val);
      else if (key == "n_subsets") rep.n_subsets = std::stoi(val);
      else if (key == "seed") rep.seed = std::stoull(val);
      else if (key == "image_size") {
        size_t x = val.find('x');
        if (x != std::string::npos) {
          rep.image_h = std::stoi(val.substr(0, x));
          rep.image_w = std::stoi(val.substr(x + 1));
        }
      }
    }
    return rep;
  }
};

inline bool has_image_extension(const std::filesystem::path& p) {
  static const char* exts[] = {".png", ".jpg", ".jpeg", ".bmp", ".ppm", ".tif", ".tiff", ".webp"};
  std::string e = p.extension().string();
  std::transform(e.begin(), e.end(), e.begin(), [](unsigned char c) { return std::tolower(c); });
  for (const char* x : exts)
    if (e == x) return true;
  return false;
}

inline std::vector<std::filesystem::path> list_images(const std::filesystem::path& dir) {
  WGAN_CHECK(std::filesystem::is_directory(dir), "not a directory: ", dir.string());
  std::vector<std::filesystem::path> out;
  for (const auto& entry : std::filesystem::directory_iterator(dir))
    if (entry.is_regular_file() && has_image_extension(entry.path())) out.push_back(entry.path());
  std::sort(out.begin(), out.end());
  return out;
}

// directory pair -> preprocessed tensors -> embeddings -> FID + KID report
inline MetricReport evaluate_pair(const std::filesystem::path& real_dir,
                                  const std::filesystem::path& fake_dir,
                                  const EmbeddingExtractor& extractor,
                                  const EvalPairConfig& cfg = {}) {
  MetricReport rep;
  rep.extractor = extractor.name();
  rep.n_subsets = cfg.n_subsets;
  rep.seed = cfg.seed;
  rep.image_h = cfg.image_h;
  rep.image_w = cfg.image_w;

  auto load_dir = [&](const std::filesystem::path& dir, int& skipped) {
    std::vector<Tensor> images;
    for (const auto& path : list_images(dir)) {
      try {
        images.push_back(preprocess_image(load_image(path), cfg.image_h, cfg.image_w));
      } catch (const Error& e) {
        ++skipped;
        rep.warnings.push_back("skipped " + path.string() + ": " + e.what());
      }
    }
    return images;
  };
  std::vector<Tensor> real_images = load_dir(real_dir, rep.skipped_real);
  std::vector<Tensor> fake_images = load_dir(fake_dir, rep.skipped_fake);
  WGAN_CHECK(real_images.size() >= 2, "need at least 2 readable images in ", real_dir.string());
  WGAN_CHECK(fake_images.size() >= 2, "need at least 2 readable images in ", fake_dir.string());
  rep.n_real = static_cast<int>(real_images.size());
  rep.n_fake = static_cast<int>(fake_images.size());

  FeatureMatrix fr = extract_features(real_images, extractor);
  FeatureMatrix ff = extract_features(fake_images, extractor);

  FidInfo info;
  rep.fid = fid(fr, ff, &info);
  for (auto& w : info.warnings) rep.warnings.push_back(w);

  rep.subset_size = std::min<long>({cfg.subset_size, fr.rows(), ff.rows()});
  KidResult k = kid(fr, ff, rep.subset_size, cfg.n_subsets, cfg.seed);
  rep.kid_mean = k.mean;
  rep.kid_std = k.std;
  return rep;
}

}  // namespace metrics
}  // namespace wgan
