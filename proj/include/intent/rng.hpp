#pragma once

#include <array>
#include <cstddef>
#include <cstdint>

namespace intent {

// xoshiro256** (Blackman & Vigna) with its state expanded from a 64-bit seed
// by splitmix64. Both algorithms are fully specified by their reference
// implementations, so a seed reproduces the same stream on any platform.
class Rng {
  public:
    explicit Rng(std::uint64_t seed = 0);

    std::uint64_t next_u64();

    // Uniform in [0, 1) from the top 53 bits.
    double uniform();

    // Uniform integer in [0, n). n must be positive.
    std::uint64_t below(std::uint64_t n);

    std::uint64_t seed() const { return seed_; }

  private:
    std::uint64_t seed_;
    std::array<std::uint64_t, 4> state_{};
};

// splitmix64 finalizer; used to derive independent sub-seeds.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

} // namespace intent
