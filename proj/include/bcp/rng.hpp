#pragma once

#include <array>
#include <cstdint>
#include <string>

namespace bcp {

// xoshiro256** with splitmix64 seeding. Streams derived from a master seed
// are independent enough for Monte-Carlo trials and fully reproducible.
class Rng {
  public:
    Rng() : Rng(0) {}
    explicit Rng(std::uint64_t seed);

    static const char* algorithm() { return "xoshiro256**"; }

    std::uint64_t next();

    // Unbiased integer in [0, bound). bound >= 1.
    std::uint64_t below(std::uint64_t bound);

    // Uniform double in [0, 1).
    double uniform();

    bool coin() { return next() >> 63; }

    // Independent generator for trial `index` under this generator's seed.
    Rng stream(std::uint64_t index) const;

    std::uint64_t seed() const { return seed_; }

    using result_type = std::uint64_t;
    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return ~0ull; }
    result_type operator()() { return next(); }

  private:
    std::uint64_t seed_ = 0;
    std::array<std::uint64_t, 4> s_{};
};

} // namespace bcp
