#pragma once

#include <cstdint>
#include <cmath>
#include <string_view>

namespace randfront {

// SplitMix64 finalizer. Bijective on 64-bit words, good avalanche.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Derives an independent stream seed from (base, component name, index).
// Every random quantity in the project is keyed through this, so a run is a
// pure function of its base seed.
inline std::uint64_t derive_seed(std::uint64_t base, std::string_view component,
                                 std::uint64_t index = 0) {
  std::uint64_t h = mix64(base ^ 0x53706c69744d6978ULL);
  for (unsigned char c : component) h = mix64(h ^ c);
  return mix64(h ^ mix64(index));
}

// Counter-based generator: draw i of stream (seed, stream) is mix64(key + i),
// independent of call history. All distributions are hand-rolled so results
// are identical across platforms and standard libraries.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t stream)
      : key_(mix64(seed ^ mix64(stream ^ 0xa0761d6478bd642fULL))) {}

  std::uint64_t next_u64() { return mix64(key_ + ++ctr_); }

  // Uniform in [0,1) with 53-bit resolution.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform in (0,1); safe as a log/denominator argument.
  double uniform_pos() {
    double u;
    do { u = uniform(); } while (u <= 0.0);
    return u;
  }

  double exponential(double rate) { return -std::log(uniform_pos()) / rate; }

  // Box-Muller pair, one value cached.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = uniform_pos();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  // Knuth's product method; intended for small means (cell occupation counts).
  int poisson(double mean) {
    const double limit = std::exp(-mean);
    int k = 0;
    double p = 1.0;
    do {
      ++k;
      p *= uniform();
    } while (p > limit);
    return k - 1;
  }

 private:
  std::uint64_t key_;
  std::uint64_t ctr_ = 0;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace randfront
