#pragma once

// Counter-based uniform draws: the value depends only on (key, counter), so
// trajectories can be generated in any order or on any thread and still
// reproduce bit for bit.

#include <cstdint>

namespace sphoton {

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Key of stream `index` split off from a parent key.
constexpr std::uint64_t derive_key(std::uint64_t parent, std::uint64_t index) noexcept {
    return splitmix64(splitmix64(parent) ^ splitmix64(index + 0x632be59bd9b4e019ULL));
}

class CounterRng {
  public:
    explicit constexpr CounterRng(std::uint64_t key) noexcept : key_(splitmix64(key)) {}

    constexpr std::uint64_t bits(std::uint64_t counter) const noexcept {
        return splitmix64(key_ ^ splitmix64(counter));
    }
    /// Uniform on [0, 1) with 53 random bits.
    constexpr double uniform(std::uint64_t counter) const noexcept {
        return static_cast<double>(bits(counter) >> 11) * 0x1.0p-53;
    }
    constexpr std::uint64_t key() const noexcept { return key_; }

  private:
    std::uint64_t key_;
};

} // namespace sphoton
