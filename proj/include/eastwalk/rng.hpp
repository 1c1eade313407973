#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

// Counter-based random streams.  Every random quantity in the library is a
// pure function of (master seed, purpose tag, stream id, counter), so any
// replica or per-site event stream can be regenerated independently of
// scheduling order or worker count.

namespace eastwalk {

constexpr uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

// splitmix64 output function (Vigna).  Statistically solid as a keyed
// counter generator: draw(i) = finalize(key + i*golden).
inline uint64_t sm64_finalize(uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline uint64_t counter_draw(uint64_t key, uint64_t index) {
  return sm64_finalize(key + kGolden * index);
}

// Two finalizer rounds to decorrelate derived keys from arithmetic
// relations among (a, b).
inline uint64_t derive_key(uint64_t a, uint64_t b) {
  return sm64_finalize(sm64_finalize(a + kGolden * (b + 1)) + 0x632be59bd9b4e019ULL);
}

// FNV-1a, used to turn purpose tags ("velocity", "profile", ...) into key salt.
inline uint64_t hash_tag(std::string_view tag) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : tag) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline uint64_t replica_seed(uint64_t master, std::string_view tag, uint64_t replica) {
  return derive_key(derive_key(master, hash_tag(tag)), replica);
}

inline double to_unit_half_open(uint64_t x) {  // [0,1)
  return static_cast<double>(x >> 11) * 0x1.0p-53;
}

inline double to_unit_open_closed(uint64_t x) {  // (0,1]
  return (static_cast<double>(x >> 11) + 1.0) * 0x1.0p-53;
}

// Sequential stream view over a key: draw i-th value, caller keeps the counter.
struct CounterStream {
  uint64_t key = 0;
  uint64_t ctr = 0;

  uint64_t next_u64() { return counter_draw(key, ctr++); }
  double next_unit() { return to_unit_half_open(next_u64()); }        // [0,1)
  double next_exp() { return -std::log(to_unit_open_closed(next_u64())); }
  bool next_bernoulli(double p) { return next_unit() < p; }
};

}  // namespace eastwalk
