#pragma once

#include <cstdint>
#include <functional>
#include <random>

namespace pdopf {

// Source of uniform draws in [0, 1). Samplers take this so tests can
// substitute deterministic stubs.
using UniformSource = std::function<double()>;

// SplitMix64 finalizer; used to derive independent stream seeds.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Seed of stream `stream` under master seed `seed`.
constexpr std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t stream) {
  return splitmix64(splitmix64(seed) ^ splitmix64(stream + 0x632be59bd9b4e019ULL));
}

// mt19937_64 (bit-exact across standard libraries) with a pinned
// double conversion: top 53 bits scaled by 2^-53.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  UniformSource source() {
    return [this] { return uniform(); };
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace pdopf
