#ifndef SPARSINK_RNG_HPP_
#define SPARSINK_RNG_HPP_

#include <cstdint>

namespace sparsink {

// splitmix64 finalizer (Steele, Lea, Flood 2014). Used both as a hash for
// deriving substream seeds and as the step function of CounterRng.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  return splitmix64(seed ^ splitmix64(stream + 0x632be59bd9b4e019ULL));
}

// Counter-based generator: output t of stream (seed, stream) depends only on
// (seed, stream, t), so independent substreams (e.g. one per matrix row or
// per replication) can be drawn in any order with identical results.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t stream = 0)
      : state_(mix_seed(seed, stream)) {}

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t x = state_;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  }

  // Uniform in [0, 1) with 53 random bits.
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Marsaglia polar method would need rejection loops; plain Box-Muller keeps
  // the draw count per call fixed, which the substream layout relies on.
  double next_normal();

 private:
  std::uint64_t state_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace sparsink

#endif  // SPARSINK_RNG_HPP_
