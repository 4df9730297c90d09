#pragma once

#include <cstdint>
#include <random>

namespace qnd {

// SplitMix64 step, used to whiten seeds.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Stream seed for trajectory `idx`: a pure function of (seed, idx), so
// ensembles reproduce bit-exactly no matter how work is scheduled.
inline std::uint64_t derive_stream_seed(std::uint64_t seed, std::uint64_t idx) {
  std::uint64_t s = seed + 0x9e3779b97f4a7c15ULL * (idx + 1);
  return splitmix64(s);
}

// Deterministic uniform stream. mt19937_64 output is fully specified by the
// standard and doubles are built from the raw bits, so the sequence is
// identical across platforms (stdlib distributions are not).
class RngStream {
 public:
  explicit RngStream(std::uint64_t stream_seed) : gen_(stream_seed) {}

  // Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  std::uint64_t bits() { return gen_(); }

 private:
  std::mt19937_64 gen_;
};

}  // namespace qnd
