#pragma once

#include <array>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "wgan/image_io.hpp"

namespace wgan {

// the five translation domains, stable codes 0-4
enum class WeatherClass : int { sunny = 0, cloudy = 1, foggy = 2, rainy = 3, snowy = 4 };

constexpr int kNumWeatherClasses = 5;

inline const char* weather_class_name(WeatherClass c) {
  switch (c) {
    case WeatherClass::sunny: return "sunny";
    case WeatherClass::cloudy: return "cloudy";
    case WeatherClass::foggy: return "foggy";
    case WeatherClass::rainy: return "rainy";
    case WeatherClass::snowy: return "snowy";
  }
  return "?";
}

inline WeatherClass weather_class_from_name(const std::string& s) {
  for (int i = 0; i < kNumWeatherClasses; ++i)
    if (s == weather_class_name(static_cast<WeatherClass>(i))) return static_cast<WeatherClass>(i);
  throw ValidationError("unknown weather class '" + s +
                        "' (expected sunny|cloudy|foggy|rainy|snowy)");
}

// axis-aligned cue annotation in source-image pixel space, [x0,x1) x [y0,y1)
struct CueBox {
  int cue_class = 0;
  int x0 = 0, y0 = 0, x1 = 0, y1 = 0;

  void validate(int width, int height, int n_s) const {
    WGAN_CHECK(cue_class >= 0 && cue_class < n_s, "cue class ", cue_class,
               " out of range [0,", n_s, ")");
    WGAN_CHECK(0 <= x0 && x0 < x1 && x1 <= width, "cue box x-range [", x0, ",", x1,
               ") outside image width ", width);
    WGAN_CHECK(0 <= y0 && y0 < y1 && y1 <= height, "cue box y-range [", y0, ",", y1,
               ") outside image height ", height);
  }
};

struct DatasetRecord {
  std::filesystem::path image_path;  // absolute
  WeatherClass weather = WeatherClass::sunny;
  std::vector<CueBox> boxes;
};

// Immutable index over a manifest. The manifest is UTF-8 text: a header line
//   #cues: background,sky,cloud,...
// followed by one record per line:
//   <relative_image_path>\t<class_name>\t<cue>:<x0>,<y0>,<x1>,<y1>;...
// with zero or more box groups in the third field. Cue class 0 must be the
// background.
class DatasetIndex {
 public:
  static DatasetIndex load(const std::filesystem::path& root,
                           const std::filesystem::path& manifest) {
    std::ifstream is(manifest);
    if (!is) throw LoadError("cannot open manifest: " + manifest.string());

    DatasetIndex index;
    std::string line;
    int line_no = 0;
    while (std::getline(is, line)) {
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      if (line[0] == '#') {
        parse_header(index, line, line_no);
        continue;
      }
      if (index.cue_names_.empty())
        throw ParseError("manifest line " + std::to_string(line_no) +
                         ": record before #cues: header");
      parse_record(index, root, line, line_no);
    }
    if (index.records_.empty())
      throw ValidationError("manifest has no records: " + manifest.string());
    return index;
  }

  const std::vector<DatasetRecord>& records() const { return records_; }
  const std::vector<std::string>& cue_names() const { return cue_names_; }
  int n_s() const { return static_cast<int>(cue_names_.size()); }

  const std::vector<size_t>& class_records(WeatherClass c) const {
    return by_class_[static_cast<size_t>(c)];
  }
  int class_count(WeatherClass c) const {
    return static_cast<int>(by_class_[static_cast<size_t>(c)].size());
  }

  int cue_index(const std::string& name) const {
    for (size_t i = 0; i < cue_names_.size(); ++i)
      if (cue_names_[i] == name) return static_cast<int>(i);
    throw ValidationError("unknown cue class '" + name + "'");
  }

 private:
  static void parse_header(DatasetIndex& index, const std::string& line, int line_no) {
    const std::string tag = "#cues:";
    if (line.rfind(tag, 0) != 0) return;  // other comment lines are ignored
    std::string rest = line.substr(tag.size());
    std::string name;
    std::istringstream ss(rest);
    while (std::getline(ss, name, ',')) {
      // trim spaces
      size_t b = name.find_first_not_of(" \t");
      size_t e = name.find_last_not_of(" \t");
      if (b == std::string::npos)
        throw ParseError("manifest line " + std::to_string(line_no) + ": empty cue name");
      index.cue_names_.push_back(name.substr(b, e - b + 1));
    }
    if (index.cue_names_.empty() || index.cue_names_[0] != "background")
      throw ParseError("manifest line " + std::to_string(line_no) +
                       ": cue vocabulary must start with 'background'");
  }

  static void parse_record(DatasetIndex& index, const std::filesystem::path& root,
                           const std::string& line, int line_no) {
    auto fail = [line_no](const std::string& msg) {
      throw ParseError("manifest line " + std::to_string(line_no) + ": " + msg);
    };
    std::vector<std::string> fields;
    size_t start = 0;
    while (true) {
      size_t tab = line.find('\t', start);
      fields.push_back(line.substr(start, tab == std::string::npos ? tab : tab - start));
      if (tab == std::string::npos) break;
      start = tab + 1;
    }
    if (fields.size() < 2 || fields.size() > 3) fail("expected 2 or 3 tab-separated fields");
    if (fields[0].empty()) fail("empty image path");

    DatasetRecord rec;
    rec.image_path = root / fields[0];
    rec.weather = weather_class_from_name(fields[1]);  // ValidationError on unknown
    if (fields.size() == 3 && !fields[2].empty()) {
      std::istringstream groups(fields[2]);
      std::string group;
      while (std::getline(groups, group, ';')) {
        if (group.empty()) continue;
        CueBox box;
        char colon = 0, c1 = 0, c2 = 0, c3 = 0;
        std::istringstream gs(group);
        if (!(gs >> box.cue_class >> colon >> box.x0 >> c1 >> box.y0 >> c2 >> box.x1 >> c3 >>
              box.y1) ||
            colon != ':' || c1 != ',' || c2 != ',' || c3 != ',')
          fail("malformed cue box '" + group + "' (expected cue:x0,y0,x1,y1)");
        if (box.cue_class < 0 || box.cue_class >= index.n_s())
          fail("cue class " + std::to_string(box.cue_class) + " outside vocabulary of size " +
               std::to_string(index.n_s()));
        rec.boxes.push_back(box);
      }
    }
    if (!std::filesystem::exists(rec.image_path))
      throw LoadError("manifest line " + std::to_string(line_no) +
                      ": image not found: " + rec.image_path.string());
    index.by_class_[static_cast<size_t>(rec.weather)].push_back(index.records_.size());
    index.records_.push_back(std::move(rec));
  }

  std::vector<DatasetRecord> records_;
  std::array<std::vector<size_t>, kNumWeatherClasses> by_class_;
  std::vector<std::string> cue_names_;
};

namespace detail {
// nearest-integer scaling of a source-space interval onto the target grid,
// kept non-empty and in bounds
inline std::pair<int, int> scale_span(int a, int b, int source, int target) {
  const Scalar s = static_cast<Scalar>(target) / static_cast<Scalar>(source);
  int at = static_cast<int>(std::lround(a * s));
  int bt = static_cast<int>(std::lround(b * s));
  at = std::clamp(at, 0, target - 1);
  bt = std::clamp(bt, 1, target);
  if (bt <= at) bt = at + 1;
  return {at, bt};
}
}  // namespace detail

// Paints boxes onto a class grid (later boxes win overlaps), background
// elsewhere, then one-hot encodes: (n_s, target_h, target_w).
inline Tensor rasterize_cues(const std::vector<CueBox>& boxes, int source_h, int source_w,
                             int target_h, int target_w, int n_s) {
  WGAN_CHECK(n_s >= 1, "rasterize_cues: n_s must be >= 1");
  WGAN_CHECK(source_h >= 1 && source_w >= 1 && target_h >= 1 && target_w >= 1,
             "rasterize_cues: bad sizes");
  for (const CueBox& b : boxes) b.validate(source_w, source_h, n_s);

  std::vector<int> cls(static_cast<size_t>(target_h) * target_w, 0);
  for (const CueBox& b : boxes) {
    auto [x0, x1] = detail::scale_span(b.x0, b.x1, source_w, target_w);
    auto [y0, y1] = detail::scale_span(b.y0, b.y1, source_h, target_h);
    for (int y = y0; y < y1; ++y)
      for (int x = x0; x < x1; ++x) cls[static_cast<size_t>(y) * target_w + x] = b.cue_class;
  }

  Tensor out(Shape{n_s, target_h, target_w});
  const long hw = static_cast<long>(target_h) * target_w;
  for (long p = 0; p < hw; ++p) out[static_cast<long>(cls[static_cast<size_t>(p)]) * hw + p] = 1.0;
  return out;
}

// unpaired two-domain minibatch
struct Batch {
  Tensor x_images, y_images;            // (N,3,H,W)
  Tensor x_seg_targets, y_seg_targets;  // (N,n_s,H,W)
  WeatherClass x_class = WeatherClass::sunny;
  WeatherClass y_class = WeatherClass::cloudy;
};

// Samples uniformly with replacement within each domain, independently.
// Deterministic in `seed`, so prefetching workers can draw their own batches.
inline Batch sample_unpaired_batch(const DatasetIndex& index, WeatherClass domain_x,
                                   WeatherClass domain_y, int batch_size, std::uint64_t seed,
                                   int image_h, int image_w) {
  WGAN_CHECK(domain_x != domain_y, "sample_unpaired_batch: domains must differ");
  WGAN_CHECK(batch_size >= 1, "sample_unpaired_batch: batch_size must be >= 1");
  for (WeatherClass d : {domain_x, domain_y})
    WGAN_CHECK(index.class_count(d) > 0, "no images for domain '", weather_class_name(d), "'");

  Batch batch;
  batch.x_class = domain_x;
  batch.y_class = domain_y;
  batch.x_images = Tensor(Shape{batch_size, 3, image_h, image_w});
  batch.y_images = Tensor(Shape{batch_size, 3, image_h, image_w});
  batch.x_seg_targets = Tensor(Shape{batch_size, index.n_s(), image_h, image_w});
  batch.y_seg_targets = Tensor(Shape{batch_size, index.n_s(), image_h, image_w});

  Rng rng(mix_seed(seed, 0x57474eULL));
  auto fill = [&](WeatherClass domain, Tensor& images, Tensor& targets) {
    const auto& pool = index.class_records(domain);
    const long img_n = 3L * image_h * image_w;
    const long seg_n = static_cast<long>(index.n_s()) * image_h * image_w;
    for (int i = 0; i < batch_size; ++i) {
      const DatasetRecord& rec = index.records()[pool[rng.below(pool.size())]];
      RawImage raw = load_image(rec.image_path);
      Tensor img = preprocess_image(raw, image_h, image_w);
      std::copy(img.data(), img.data() + img_n, images.data() + i * img_n);
      Tensor seg = rasterize_cues(rec.boxes, raw.height, raw.width, image_h, image_w, index.n_s());
      std::copy(seg.data(), seg.data() + seg_n, targets.data() + i * seg_n);
    }
  };
  fill(domain_x, batch.x_images, batch.x_seg_targets);
  fill(domain_y, batch.y_images, batch.y_seg_targets);
  return batch;
}

}  // namespace wgan
