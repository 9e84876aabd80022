#pragma once

#include <cmath>
#include <cstdint>

namespace gazekit {

// Deterministic PRNG built on splitmix64 (Steele, Lea & Flood 2014).
// Every random quantity in the project flows from a single 64-bit seed
// through named substreams, so a run is reproducible end to end:
//
//   Rng root(seed);
//   Rng init = root.stream(0);     // parameter initialization
//   Rng shuffle = root.stream(1);  // minibatch order
//
// stream(k) reseeds a child generator without disturbing the parent.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // Child generator for substream `id`; independent of future draws on *this.
  Rng stream(std::uint64_t id) const {
    Rng probe(state_ ^ (0xD1B54A32D192ED03ULL * (id + 1)));
    return Rng(probe.next_u64());
  }

  // Uniform in [0, 1).
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal via Box-Muller; one value per call, deterministic.
  double normal() {
    double u1 = uniform();
    double u2 = uniform();
    if (u1 < 1e-300) u1 = 1e-300;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
  }

  double normal(double mean, double sd) { return mean + sd * normal(); }

  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) { return next_u64() % n; }

 private:
  std::uint64_t state_;
};

}  // namespace gazekit
