#pragma once

#include <cstdio>
#include <string>
#include <vector>

#include "wgan/training.hpp"

namespace wgan {
namespace detail_config {

struct Entry {
  std::string section, key, value;
  int line = 0;
};

inline std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

inline std::vector<Entry> parse_ini(const std::string& text) {
  std::vector<Entry> entries;
  std::istringstream is(text);
  std::string line, section;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::string t = trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    if (t.front() == '[') {
      if (t.back() != ']')
        throw ParseError("config line " + std::to_string(line_no) + ": unterminated section");
      section = trim(t.substr(1, t.size() - 2));
      continue;
    }
    size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw ParseError("config line " + std::to_string(line_no) + ": expected key = value");
    entries.push_back({section, trim(t.substr(0, eq)), trim(t.substr(eq + 1)), line_no});
  }
  return entries;
}

inline long to_long(const Entry& e) {
  try {
    size_t pos = 0;
    long v = std::stol(e.value, &pos);
    if (pos != e.value.size()) throw std::invalid_argument("");
    return v;
  } catch (const std::exception&) {
    throw ParseError("config key [" + e.section + "] " + e.key + ": '" + e.value +
                     "' is not an integer");
  }
}

inline std::uint64_t to_u64(const Entry& e) {
  try {
    size_t pos = 0;
    std::uint64_t v = std::stoull(e.value, &pos);
    if (pos != e.value.size()) throw std::invalid_argument("");
    return v;
  } catch (const std::exception&) {
    throw ParseError("config key [" + e.section + "] " + e.key + ": '" + e.value +
                     "' is not an unsigned integer");
  }
}

inline Scalar to_scalar(const Entry& e) {
  try {
    size_t pos = 0;
    Scalar v = std::stod(e.value, &pos);
    if (pos != e.value.size()) throw std::invalid_argument("");
    return v;
  } catch (const std::exception&) {
    throw ParseError("config key [" + e.section + "] " + e.key + ": '" + e.value +
                     "' is not a number");
  }
}

inline bool to_bool(const Entry& e) {
  if (e.value == "true") return true;
  if (e.value == "false") return false;
  throw ParseError("config key [" + e.section + "] " + e.key + ": expected true|false");
}

inline std::vector<std::string> to_name_list(const Entry& e) {
  std::vector<std::string> out;
  std::istringstream ss(e.value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

inline std::string fmt_scalar(Scalar v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace detail_config

inline std::string TrainConfig::to_ini() const {
  using detail_config::fmt_scalar;
  std::ostringstream os;
  os << "[train]\n";
  os << "domain_x = " << weather_class_name(domain_x) << '\n';
  os << "domain_y = " << weather_class_name(domain_y) << '\n';
  os << "total_iterations = " << total_iterations << '\n';
  os << "decay_start = " << decay_start << '\n';
  os << "lr0 = " << fmt_scalar(lr0) << '\n';
  os << "batch_size = " << batch_size << '\n';
  os << "seed = " << seed << '\n';
  os << "image_h = " << image_h << '\n';
  os << "image_w = " << image_w << '\n';
  os << "checkpoint_every = " << checkpoint_every << '\n';
  os << "log_every = " << log_every << '\n';
  os << "ablation = " << ablation_mode_name(ablation) << '\n';
  os << "\n[loss]\n";
  os << "lambda_cycle_blend = " << fmt_scalar(loss.lambda_cycle_blend) << '\n';
  os << "w_adv = " << fmt_scalar(loss.w_adv) << '\n';
  os << "w_cycle = " << fmt_scalar(loss.w_cycle) << '\n';
  os << "w_class = " << fmt_scalar(loss.w_class) << '\n';
  os << "w_seg = " << fmt_scalar(loss.w_seg) << '\n';
  os << "\n[generator]\n";
  os << "base_channels = " << gen.base_channels << '\n';
  os << "n_residual_blocks = " << gen.n_residual_blocks << '\n';
  os << "n_down = " << gen.n_down << '\n';
  os << "norm = " << nn::norm_kind_name(gen.norm) << '\n';
  os << "shared_encoder = " << (gen.shared_encoder ? "true" : "false") << '\n';
  os << "relevant_cues = ";
  for (size_t i = 0; i < relevant_cue_names.size(); ++i)
    os << (i ? "," : "") << relevant_cue_names[i];
  os << '\n';
  os << "\n[discriminator]\n";
  os << "base_channels = " << disc.base_channels << '\n';
  os << "n_layers = " << disc.n_layers << '\n';
  os << "norm = " << nn::norm_kind_name(disc.norm) << '\n';
  os << "\n[perceptual]\n";
  os << "kind = " << perceptual.kind << '\n';
  os << "layers = " << perceptual.layers << '\n';
  os << "base_channels = " << perceptual.base_channels << '\n';
  os << "seed = " << perceptual.seed << '\n';
  os << "weights = " << perceptual.weights << '\n';
  os << "\n[data]\n";
  os << "root = " << data.root << '\n';
  os << "manifest = " << data.manifest << '\n';
  return os.str();
}

inline TrainConfig TrainConfig::from_ini_text(const std::string& text) {
  using namespace detail_config;
  TrainConfig cfg;
  for (const Entry& e : parse_ini(text)) {
    const std::string id = "[" + e.section + "] " + e.key;
    if (e.section == "train") {
      if (e.key == "domain_x") cfg.domain_x = weather_class_from_name(e.value);
      else if (e.key == "domain_y") cfg.domain_y = weather_class_from_name(e.value);
      else if (e.key == "total_iterations") cfg.total_iterations = static_cast<int>(to_long(e));
      else if (e.key == "decay_start") cfg.decay_start = static_cast<int>(to_long(e));
      else if (e.key == "lr0") cfg.lr0 = to_scalar(e);
      else if (e.key == "batch_size") cfg.batch_size = static_cast<int>(to_long(e));
      else if (e.key == "seed") cfg.seed = to_u64(e);
      else if (e.key == "image_h") cfg.image_h = static_cast<int>(to_long(e));
      else if (e.key == "image_w") cfg.image_w = static_cast<int>(to_long(e));
      else if (e.key == "checkpoint_every") cfg.checkpoint_every = static_cast<int>(to_long(e));
      else if (e.key == "log_every") cfg.log_every = static_cast<int>(to_long(e));
      else if (e.key == "ablation") cfg.ablation = ablation_mode_from_name(e.value);
      else throw ValidationError("unknown config key: " + id);
    } else if (e.section == "loss") {
      if (e.key == "lambda_cycle_blend") cfg.loss.lambda_cycle_blend = to_scalar(e);
      else if (e.key == "w_adv") cfg.loss.w_adv = to_scalar(e);
      else if (e.key == "w_cycle") cfg.loss.w_cycle = to_scalar(e);
      else if (e.key == "w_class") cfg.loss.w_class = to_scalar(e);
      else if (e.key == "w_seg") cfg.loss.w_seg = to_scalar(e);
      else throw ValidationError("unknown config key: " + id);
    } else if (e.section == "generator") {
      if (e.key == "base_channels") cfg.gen.base_channels = static_cast<int>(to_long(e));
      else if (e.key == "n_residual_blocks") cfg.gen.n_residual_blocks = static_cast<int>(to_long(e));
      else if (e.key == "n_down") cfg.gen.n_down = static_cast<int>(to_long(e));
      else if (e.key == "norm") cfg.gen.norm = nn::norm_kind_from_name(e.value);
      else if (e.key == "shared_encoder") cfg.gen.shared_encoder = to_bool(e);
      else if (e.key == "relevant_cues") cfg.relevant_cue_names = to_name_list(e);
      else throw ValidationError("unknown config key: " + id);
    } else if (e.section == "discriminator") {
      if (e.key == "base_channels") cfg.disc.base_channels = static_cast<int>(to_long(e));
      else if (e.key == "n_layers") cfg.disc.n_layers = static_cast<int>(to_long(e));
      else if (e.key == "norm") cfg.disc.norm = nn::norm_kind_from_name(e.value);
      else throw ValidationError("unknown config key: " + id);
    } else if (e.section == "perceptual") {
      if (e.key == "kind") cfg.perceptual.kind = e.value;
      else if (e.key == "layers") cfg.perceptual.layers = static_cast<int>(to_long(e));
      else if (e.key == "base_channels") cfg.perceptual.base_channels = static_cast<int>(to_long(e));
      else if (e.key == "seed") cfg.perceptual.seed = to_u64(e);
      else if (e.key == "weights") cfg.perceptual.weights = e.value;
      else throw ValidationError("unknown config key: " + id);
    } else if (e.section == "data") {
      if (e.key == "root") cfg.data.root = e.value;
      else if (e.key == "manifest") cfg.data.manifest = e.value;
      else throw ValidationError("unknown config key: " + id);
    } else {
      throw ValidationError("unknown config section: [" + e.section + "]");
    }
  }
  return cfg;
}

inline TrainConfig TrainConfig::from_file(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw LoadError("cannot open config file: " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return from_ini_text(ss.str());
}

}  // namespace wgan
