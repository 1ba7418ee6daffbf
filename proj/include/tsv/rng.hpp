#pragma once

// Counter-based random streams.
//
// Draw i of stream (seed, k) depends only on (seed, k, i): each sample gets
// its own small generator whose starting state is a hash of the triple, so
// Monte Carlo loops can be split across any number of workers without
// changing a single draw.

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>

namespace tsv {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Generator for the draws belonging to one sample.
class SampleRng {
 public:
  explicit SampleRng(std::uint64_t state) noexcept : state_(state) {}

  std::uint64_t next() noexcept {
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Uniform on [0, 1), 53-bit resolution.
  double uniform() noexcept { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// Uniform on (0, 1].
  double uniformPositive() noexcept { return static_cast<double>((next() >> 11) + 1) * 0x1.0p-53; }

  /// Standard complex Gaussian: independent N(0,1) real and imaginary parts.
  std::complex<double> complexNormal() noexcept {
    const double r = std::sqrt(-2.0 * std::log(uniformPositive()));
    const double t = 2.0 * std::numbers::pi * uniform();
    return {r * std::cos(t), r * std::sin(t)};
  }

  double normal() noexcept { return complexNormal().real(); }

 private:
  std::uint64_t state_;
};

class RngStream {
 public:
  constexpr RngStream(std::uint64_t seed, std::uint64_t stream) noexcept : seed_(seed), stream_(stream) {}

  SampleRng sample(std::uint64_t index) const noexcept {
    std::uint64_t h = splitmix64(seed_);
    h = splitmix64(h ^ splitmix64(stream_ + 0x632be59bd9b4e019ULL));
    h = splitmix64(h ^ splitmix64(index + 0x8cb92ba72f3d8dd7ULL));
    return SampleRng(h);
  }

  constexpr std::uint64_t seed() const noexcept { return seed_; }
  constexpr std::uint64_t stream() const noexcept { return stream_; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
};

}  // namespace tsv
