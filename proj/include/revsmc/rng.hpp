#pragma once

#include <cmath>
#include <cstdint>

namespace revsmc {

// Counter-based generator: the state advances by a fixed odd increment and
// every output is a full 64-bit mix of the counter (splitmix64). Streams with
// distinct initial counters are effectively independent, which lets us hand
// one stream to each particle slot and keep runs bit-identical under any
// parallel schedule.
class SplitMix64 {
 public:
  SplitMix64() : state_(0) {}
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // uniform in [0, 1)
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double a, double b) { return a + (b - a) * uniform01(); }

  // uniform integer in [0, n); multiply-high avoids modulo bias
  std::uint64_t uniform_int(std::uint64_t n) {
    return static_cast<std::uint64_t>(
        (static_cast<__uint128_t>(next_u64()) * static_cast<__uint128_t>(n)) >> 64);
  }

  // Box-Muller; one variate per pair of uniforms, no cached spare so that
  // copies of a stream stay in lockstep
  double normal(double mean, double sd) {
    double u1 = 1.0 - uniform01();  // (0, 1]
    double u2 = uniform01();
    double r = std::sqrt(-2.0 * std::log(u1));
    return mean + sd * r * std::cos(6.283185307179586476925286766559 * u2);
  }

  double exponential(double rate) { return -std::log(1.0 - uniform01()) / rate; }

  std::uint64_t state() const { return state_; }

 private:
  std::uint64_t state_;
};

// Derives a stream seed from up to three 64-bit labels. Used to key the
// per-particle, resampling and replicate streams off one master seed.
inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b, std::uint64_t c = 0) {
  SplitMix64 g(a);
  std::uint64_t s = g.next_u64() ^ b;
  SplitMix64 h(s);
  return h.next_u64() ^ (c * 0x9e3779b97f4a7c15ULL);
}

inline std::uint64_t particle_stream_seed(std::uint64_t master, int slot) {
  return mix_seed(master, 0x706172746963ULL, static_cast<std::uint64_t>(slot) + 1);
}

inline std::uint64_t resample_stream_seed(std::uint64_t master) {
  return mix_seed(master, 0x726573616d70ULL);
}

inline std::uint64_t fnv1a64(const char* s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (; *s; ++s) h = (h ^ static_cast<unsigned char>(*s)) * 1099511628211ULL;
  return h;
}

}  // namespace revsmc
