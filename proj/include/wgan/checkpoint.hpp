#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>

#include "wgan/tensor.hpp"

namespace wgan {

// Single-file container of named tensors and strings, used for model
// checkpoints and extractor weights. Payloads are raw little-endian f64 so
// save/load round-trips bit-exactly.
class TensorStore {
 public:
  static constexpr const char* kMagic = "WGAN-CKPT v1";

  void put(const std::string& name, Tensor t) { tensors_[name] = std::move(t); }
  void put_string(const std::string& name, std::string s) { strings_[name] = std::move(s); }

  bool has(const std::string& name) const { return tensors_.count(name) != 0; }
  bool has_string(const std::string& name) const { return strings_.count(name) != 0; }

  const Tensor& get(const std::string& name) const {
    auto it = tensors_.find(name);
    if (it == tensors_.end()) throw LoadError("checkpoint entry not found: " + name);
    return it->second;
  }
  const std::string& get_string(const std::string& name) const {
    auto it = strings_.find(name);
    if (it == strings_.end()) throw LoadError("checkpoint string entry not found: " + name);
    return it->second;
  }

  const std::map<std::string, Tensor>& tensors() const { return tensors_; }
  const std::map<std::string, std::string>& strings() const { return strings_; }

  // write-temp-then-rename so an interrupted save never leaves a partial
  // file at the final path
  void save(const std::filesystem::path& path) const {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
      std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
      if (!os) throw LoadError("cannot open for writing: " + tmp.string());
      os << kMagic << '\n';
      for (const auto& [name, t] : tensors_) {
        write_u8(os, 0);
        write_str(os, name);
        write_u32(os, static_cast<std::uint32_t>(t.rank()));
        for (int i = 0; i < t.rank(); ++i) write_u32(os, static_cast<std::uint32_t>(t.dim(i)));
        os.write(reinterpret_cast<const char*>(t.data()),
                 static_cast<std::streamsize>(t.numel() * sizeof(Scalar)));
      }
      for (const auto& [name, s] : strings_) {
        write_u8(os, 1);
        write_str(os, name);
        write_u64(os, s.size());
        os.write(s.data(), static_cast<std::streamsize>(s.size()));
      }
      if (!os) throw LoadError("write failed: " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
  }

  static TensorStore load(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw LoadError("cannot open checkpoint: " + path.string());
    std::string magic;
    std::getline(is, magic);
    if (magic != kMagic)
      throw LoadError("bad checkpoint header in " + path.string() + ": '" + magic + "'");
    TensorStore store;
    while (true) {
      int kind = is.get();
      if (kind == EOF) break;
      std::string name = read_str(is);
      if (kind == 0) {
        std::uint32_t rank = read_u32(is);
        Shape shape(rank);
        for (auto& d : shape) d = static_cast<int>(read_u32(is));
        Tensor t(shape);
        is.read(reinterpret_cast<char*>(t.data()),
                static_cast<std::streamsize>(t.numel() * sizeof(Scalar)));
        if (!is) throw LoadError("truncated tensor entry '" + name + "' in " + path.string());
        store.tensors_[name] = std::move(t);
      } else if (kind == 1) {
        std::uint64_t len = read_u64(is);
        std::string s(len, '\0');
        is.read(s.data(), static_cast<std::streamsize>(len));
        if (!is) throw LoadError("truncated string entry '" + name + "' in " + path.string());
        store.strings_[name] = std::move(s);
      } else {
        throw LoadError("unknown entry kind in " + path.string());
      }
    }
    return store;
  }

 private:
  static void write_u8(std::ostream& os, std::uint8_t v) {
    os.put(static_cast<char>(v));
  }
  static void write_u32(std::ostream& os, std::uint32_t v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(v));
  }
  static void write_u64(std::ostream& os, std::uint64_t v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(v));
  }
  static void write_str(std::ostream& os, const std::string& s) {
    write_u32(os, static_cast<std::uint32_t>(s.size()));
    os.write(s.data(), static_cast<std::streamsize>(s.size()));
  }
  static std::uint32_t read_u32(std::istream& is) {
    std::uint32_t v = 0;
    is.read(reinterpret_cast<char*>(&v), sizeof(v));
    if (!is) throw LoadError("truncated checkpoint");
    return v;
  }
  static std::uint64_t read_u64(std::istream& is) {
    std::uint64_t v = 0;
    is.read(reinterpret_cast<char*>(&v), sizeof(v));
    if (!is) throw LoadError("truncated checkpoint");
    return v;
  }
  static std::string read_str(std::istream& is) {
    std::uint32_t len = read_u32(is);
    std::string s(len, '\0');
    is.read(s.data(), static_cast<std::streamsize>(len));
    if (!is) throw LoadError("truncated checkpoint");
    return s;
  }

  std::map<std::string, Tensor> tensors_;
  std::map<std::string, std::string> strings_;
};

}  // namespace wgan
