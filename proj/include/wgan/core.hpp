#pragma once

#include <cstdint>
#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>

namespace wgan {

using Scalar = double;

// error hierarchy: CLI maps ValidationError/ParseError to exit 1,
// everything else to exit 2.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ValidationError : Error {
  using Error::Error;
};
struct ParseError : Error {
  using Error::Error;
};
struct LoadError : Error {
  using Error::Error;
};
struct NumericError : Error {
  using Error::Error;
};

namespace detail {
template <typename... Args>
inline std::string concat(Args&&... args) {
  std::ostringstream oss;
  (oss << ... << args);
  return oss.str();
}
}  // namespace detail

#define WGAN_CHECK(cond, ...)                                             \
  do {                                                                    \
    if (!(cond)) throw ::wgan::ValidationError(::wgan::detail::concat(__VA_ARGS__)); \
  } while (0)

#define WGAN_CHECK_NUMERIC(cond, ...)                                     \
  do {                                                                    \
    if (!(cond)) throw ::wgan::NumericError(::wgan::detail::concat(__VA_ARGS__)); \
  } while (0)

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// combines a base seed with a stream id (e.g. iteration number) so that
// independent draws stay reproducible under resume and prefetch.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  return splitmix64(seed ^ splitmix64(stream));
}

// mt19937_64 wrapper with hand-rolled transforms; std::*_distribution is
// implementation-defined, which would break bit-level reproducibility of
// checkpoints moved between standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // uniform in [0,1)
  Scalar uniform() {
    return static_cast<Scalar>(next_u64() >> 11) * 0x1.0p-53;
  }

  Scalar uniform(Scalar lo, Scalar hi) { return lo + (hi - lo) * uniform(); }

  // Box-Muller without caching the second value, so the state is exactly
  // the engine state.
  Scalar normal(Scalar mean = 0.0, Scalar stddev = 1.0) {
    Scalar u1 = uniform();
    Scalar u2 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    Scalar r = std::sqrt(-2.0 * std::log(u1));
    return mean + stddev * r * std::cos(2.0 * M_PI * u2);
  }

  // uniform integer in [0, n)
  std::uint64_t below(std::uint64_t n) {
    // rejection sampling keeps the draw unbiased
    std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() / n * n;
    std::uint64_t v = next_u64();
    while (v >= limit) v = next_u64();
    return v % n;
  }

  std::string serialize() const {
    std::ostringstream oss;
    oss << engine_;
    return oss.str();
  }

  void deserialize(const std::string& s) {
    std::istringstream iss(s);
    iss >> engine_;
    if (!iss) throw LoadError("invalid rng state string");
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace wgan
