#pragma once

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include <filesystem>
#include <string>
#include <vector>

#include "wgan/tensor.hpp"

namespace wgan {

// decoded 8-bit image, HWC, RGB channel order
struct RawImage {
  int height = 0;
  int width = 0;
  int channels = 0;
  std::vector<std::uint8_t> pixels;

  std::uint8_t at(int y, int x, int c) const {
    return pixels[static_cast<size_t>((static_cast<long>(y) * width + x) * channels + c)];
  }
};

inline RawImage load_image(const std::filesystem::path& path) {
  cv::Mat mat = cv::imread(path.string(), cv::IMREAD_UNCHANGED);
  if (mat.empty()) throw LoadError("cannot decode image: " + path.string());
  RawImage img;
  img.height = mat.rows;
  img.width = mat.cols;
  img.channels = mat.channels();
  WGAN_CHECK(mat.depth() == CV_8U, "unsupported bit depth in ", path.string());
  if (img.channels == 3)
    cv::cvtColor(mat, mat, cv::COLOR_BGR2RGB);
  else if (img.channels == 4)
    cv::cvtColor(mat, mat, cv::COLOR_BGRA2RGBA);
  img.pixels.assign(mat.data, mat.data + static_cast<size_t>(mat.total()) * img.channels);
  return img;
}

// 8-bit RGB -> (3,H,W) tensor in [-1,1]: bilinear resize to the target size,
// then v' = v/127.5 - 1. Resize to the same size is an exact pass-through.
// Grayscale input is replicated to 3 channels, alpha is dropped; both leave
// a note in `warnings` instead of failing.
inline Tensor preprocess_image(const RawImage& raw, int target_h, int target_w,
                               std::vector<std::string>* warnings = nullptr) {
  WGAN_CHECK(raw.height >= 1 && raw.width >= 1, "preprocess_image: empty input");
  WGAN_CHECK(target_h >= 1 && target_w >= 1, "preprocess_image: bad target size");
  WGAN_CHECK(raw.channels == 1 || raw.channels == 3 || raw.channels == 4,
             "preprocess_image: unsupported channel count ", raw.channels);
  if (raw.channels != 3 && warnings) {
    warnings->push_back(raw.channels == 1 ? "grayscale input replicated to RGB"
                                          : "alpha channel dropped");
  }

  cv::Mat rgb(raw.height, raw.width, CV_64FC3);
  for (int y = 0; y < raw.height; ++y) {
    for (int x = 0; x < raw.width; ++x) {
      cv::Vec3d& px = rgb.at<cv::Vec3d>(y, x);
      for (int c = 0; c < 3; ++c) {
        const int src_c = raw.channels == 1 ? 0 : c;
        px[c] = static_cast<Scalar>(raw.at(y, x, src_c));
      }
    }
  }
  if (raw.height != target_h || raw.width != target_w)
    cv::resize(rgb, rgb, cv::Size(target_w, target_h), 0.0, 0.0, cv::INTER_LINEAR);

  Tensor out(Shape{3, target_h, target_w});
  for (int y = 0; y < target_h; ++y)
    for (int x = 0; x < target_w; ++x) {
      const cv::Vec3d& px = rgb.at<cv::Vec3d>(y, x);
      for (int c = 0; c < 3; ++c)
        out[(static_cast<long>(c) * target_h + y) * target_w + x] = px[c] / 127.5 - 1.0;
    }
  return out;
}

namespace detail {
inline void imwrite_atomic(const cv::Mat& mat, const std::filesystem::path& path) {
  std::filesystem::path tmp = path;
  tmp += ".tmp" + path.extension().string();
  if (!cv::imwrite(tmp.string(), mat))
    throw LoadError("cannot write image: " + path.string());
  std::filesystem::rename(tmp, path);
}
}  // namespace detail

// (3,H,W) in [-1,1] -> 8-bit file via v' = round((v+1)*127.5), clamped
inline void save_image(const Tensor& chw, const std::filesystem::path& path) {
  WGAN_CHECK(chw.rank() == 3 && chw.dim(0) == 3, "save_image expects (3,H,W), got ",
             shape_str(chw.shape()));
  const int H = chw.dim(1), W = chw.dim(2);
  cv::Mat mat(H, W, CV_8UC3);
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; ++x) {
      cv::Vec3b& px = mat.at<cv::Vec3b>(y, x);
      for (int c = 0; c < 3; ++c) {
        Scalar v = std::lround((chw[(static_cast<long>(c) * H + y) * W + x] + 1.0) * 127.5);
        px[2 - c] = static_cast<std::uint8_t>(std::clamp<Scalar>(v, 0.0, 255.0));  // RGB -> BGR
      }
    }
  detail::imwrite_atomic(mat, path);
}

// (H,W) or (1,H,W) map in [0,1] -> 8-bit grayscale, linear scale to [0,255]
inline void save_map(const Tensor& map, const std::filesystem::path& path) {
  WGAN_CHECK(map.rank() == 2 || (map.rank() == 3 && map.dim(0) == 1),
             "save_map expects (H,W) or (1,H,W), got ", shape_str(map.shape()));
  const int H = map.dim(map.rank() - 2), W = map.dim(map.rank() - 1);
  cv::Mat mat(H, W, CV_8UC1);
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; ++x) {
      Scalar v = std::lround(map[static_cast<long>(y) * W + x] * 255.0);
      mat.at<std::uint8_t>(y, x) = static_cast<std::uint8_t>(std::clamp<Scalar>(v, 0.0, 255.0));
    }
  detail::imwrite_atomic(mat, path);
}

}  // namespace wgan
