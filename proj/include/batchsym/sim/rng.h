#pragma once

#include <cstdint>
#include <limits>
#include <string_view>

namespace batchsym::sim {

// Counter-based generator: output i is a SplitMix64 finalizer applied to
// key + i * golden. Independent substreams come from hashing a stream name
// into the key, so adding a stream never perturbs another.
class CounterRng {
 public:
  using result_type = uint64_t;

  CounterRng(uint64_t seed, std::string_view stream)
      : key_(Mix(seed ^ Fnv1a(stream))) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }
  result_type operator()() { return Mix(key_ + (++counter_) * kGolden); }

  uint64_t counter() const { return counter_; }

  static constexpr uint64_t Mix(uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  static constexpr uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

  static constexpr uint64_t Fnv1a(std::string_view s) {
    uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : s) {
      h ^= static_cast<unsigned char>(c);
      h *= 0x100000001b3ULL;
    }
    return h;
  }

  uint64_t key_;
  uint64_t counter_ = 0;
};

}  // namespace batchsym::sim
