#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace eqa {

// All randomness flows from one master seed. Sub-streams are addressed by a
// path of integer/string labels; each label is folded into the parent seed with
// the SplitMix64 finalizer, and the resulting 64-bit value seeds a
// std::mt19937_64 engine. Both algorithms are fully specified, so streams are
// bit-identical across platforms. Distributions are implemented here rather
// than taken from <random>, whose distribution algorithms are
// implementation-defined.

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t hash_label(std::string_view label) {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (unsigned char ch : label) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

struct StreamLabel {
  std::uint64_t value;
  StreamLabel(std::uint64_t v) : value(v) {}  // NOLINT
  StreamLabel(int v) : value(static_cast<std::uint64_t>(static_cast<std::int64_t>(v))) {}  // NOLINT
  StreamLabel(std::string_view s) : value(hash_label(s)) {}  // NOLINT
  StreamLabel(const char* s) : value(hash_label(s)) {}  // NOLINT
  StreamLabel(const std::string& s) : value(hash_label(s)) {}  // NOLINT
};

inline std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<StreamLabel> path) {
  std::uint64_t s = splitmix64(seed);
  for (const auto& label : path) s = splitmix64(s ^ splitmix64(label.value + 0x632be59bd9b4e019ULL));
  return s;
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  Rng(std::uint64_t seed, std::initializer_list<StreamLabel> path) : engine_(derive_seed(seed, path)) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform integer in [0, n). Rejection sampling, no modulo bias.
  std::uint64_t uniform_index(std::uint64_t n) {
    if (n <= 1) return 0;
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t r;
    do {
      r = engine_();
    } while (r >= limit);
    return r % n;
  }

  int uniform_int(int lo, int hi) {  // inclusive bounds
    return lo + static_cast<int>(uniform_index(static_cast<std::uint64_t>(hi - lo) + 1));
  }

  // Uniform double in [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  bool bernoulli(double p) { return uniform01() < p; }

  // Index drawn proportionally to non-negative weights.
  std::size_t categorical(const std::vector<double>& weights) {
    double total = 0.0;
    for (double w : weights) total += w;
    double r = uniform01() * total;
    for (std::size_t i = 0; i < weights.size(); ++i) {
      if (r < weights[i]) return i;
      r -= weights[i];
    }
    return weights.size() - 1;
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {  // Fisher-Yates
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = uniform_index(i);
      using std::swap;
      swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace eqa
