#pragma once

#include <cmath>
#include <cstdint>

namespace dppcond {

// Counter-based generator: every draw is a hash of (key, counter), so streams
// keyed by (master seed, stream index) are reproducible independently of
// thread count or draw interleaving across streams.
class CounterRng {
 public:
  CounterRng(uint64_t master_seed, uint64_t stream)
      : key_(mix(mix(master_seed + GOLDEN) ^ mix(stream * MULT + GOLDEN))) {}

  uint64_t next_u64() { return mix(key_ + ++ctr_ * MULT); }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  bool bernoulli(double p) { return uniform() < p; }

  // Uniform integer in [0, n).
  int below(int n) {
    return static_cast<int>(next_u64() % static_cast<uint64_t>(n));
  }

  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    have_spare_ = true;
    return u * f;
  }

 private:
  static constexpr uint64_t GOLDEN = 0x9e3779b97f4a7c15ull;
  static constexpr uint64_t MULT = 0xda942042e4dd58b5ull;

  static uint64_t mix(uint64_t z) {
    z ^= z >> 30;
    z *= 0xbf58476d1ce4e5b9ull;
    z ^= z >> 27;
    z *= 0x94d049bb133111ebull;
    z ^= z >> 31;
    return z;
  }

  uint64_t key_;
  uint64_t ctr_ = 0;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

// Stable stream id from a label and indices, for deriving per-instance rngs.
inline uint64_t stream_id(const char* label, uint64_t a = 0, uint64_t b = 0,
                          uint64_t c = 0) {
  uint64_t h = 1469598103934665603ull;
  for (const char* p = label; *p; ++p) {
    h ^= static_cast<uint64_t>(*p);
    h *= 1099511628211ull;
  }
  auto fold = [&h](uint64_t x) {
    h ^= x + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
  };
  fold(a);
  fold(b);
  fold(c);
  return h;
}

}  // namespace dppcond
