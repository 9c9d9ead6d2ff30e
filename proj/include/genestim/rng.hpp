#pragma once

#include <cstdint>
#include <random>

namespace genestim::rng {

// splitmix64 finalizer
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Counter-based sub-stream key: the same (seed, stream, block) always maps to
// the same generator state, independent of the order blocks are visited in.
constexpr std::uint64_t substream_key(std::uint64_t seed, std::uint64_t stream,
                                      std::uint64_t block) {
  return mix64(mix64(mix64(seed) ^ stream) ^ (block * 0xd1b54a32d192ed03ULL));
}

inline std::mt19937_64 make_engine(std::uint64_t seed, std::uint64_t stream,
                                   std::uint64_t block) {
  std::uint64_t key = substream_key(seed, stream, block);
  std::seed_seq seq{static_cast<std::uint32_t>(key), static_cast<std::uint32_t>(key >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(block)};
  return std::mt19937_64(seq);
}

// Stable stream identifiers from short labels (FNV-1a).
constexpr std::uint64_t stream_id(const char* label) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const char* p = label; *p; ++p) {
    h ^= static_cast<unsigned char>(*p);
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline double standard_normal(std::mt19937_64& gen) {
  std::normal_distribution<double> dist(0.0, 1.0);
  return dist(gen);
}

// Student t with 3 degrees of freedom, unit scale: Z / sqrt(chi2_3 / 3).
inline double student_t3(std::mt19937_64& gen) {
  double z = standard_normal(gen);
  double chi2 = 0.0;
  for (int i = 0; i < 3; ++i) {
    double u = standard_normal(gen);
    chi2 += u * u;
  }
  return z / std::sqrt(chi2 / 3.0);
}

}  // namespace genestim::rng
