#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <string_view>

namespace swdrso {

// Philox4x32-10 (Salmon et al., SC'11). Pure function of (key, counter), so
// every stream is reproducible bit-for-bit on any platform.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key);

// 64-bit FNV-1a, used to turn stream labels into keys.
std::uint64_t fnv1a64(std::string_view text, std::uint64_t basis = 0xcbf29ce484222325ULL);

// A labelled child stream of a master seed. Streams with different labels or
// indices are independent; the same (seed, label, indices) always yields the
// same sequence.
class RandomStream {
 public:
  RandomStream(std::uint64_t seed, std::string_view label,
               std::initializer_list<std::uint64_t> indices = {});

  std::uint64_t next_u64();
  // Uniform on [0, 1) with 53 bits of resolution.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // Standard normal via Box-Muller.
  double normal();
  // Uniform integer in [0, n). n must be positive.
  std::size_t below(std::size_t n);

  template <typename It>
  void shuffle(It first, It last) {
    const auto n = static_cast<std::size_t>(last - first);
    for (std::size_t i = n; i > 1; --i) {
      const std::size_t j = below(i);
      std::swap(first[static_cast<std::ptrdiff_t>(i - 1)],
                first[static_cast<std::ptrdiff_t>(j)]);
    }
  }

 private:
  std::array<std::uint32_t, 2> key_{};
  std::uint64_t counter_ = 0;
  std::array<std::uint32_t, 4> block_{};
  int used_ = 4;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace swdrso
