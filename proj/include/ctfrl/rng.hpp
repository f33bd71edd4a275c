#ifndef CTFRL_RNG_HPP
#define CTFRL_RNG_HPP

#include <array>
#include <cstdint>
#include <limits>

namespace ctfrl {

// SplitMix64 finalizer; used to derive seeds and to expand them into state.
constexpr std::uint64_t splitmix64(std::uint64_t& x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// xoshiro256** generator with platform-independent integer and real draws.
///
/// The standard library distributions are implementation-defined, so every
/// draw the simulations depend on goes through the members below instead.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit constexpr Rng(std::uint64_t seed = 0) noexcept {
    for (auto& word : state_) word = splitmix64(seed);
  }

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }

  constexpr result_type operator()() noexcept {
    const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  /// Uniform integer in [0, bound). Lemire's multiply-and-reject method.
  constexpr std::uint64_t below(std::uint64_t bound) noexcept {
    if (bound <= 1) return 0;
    unsigned __int128 m = static_cast<unsigned __int128>((*this)()) * bound;
    auto low = static_cast<std::uint64_t>(m);
    if (low < bound) {
      const std::uint64_t threshold = (0 - bound) % bound;
      while (low < threshold) {
        m = static_cast<unsigned __int128>((*this)()) * bound;
        low = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

  /// Uniform integer in [lo, hi] inclusive.
  constexpr std::uint64_t between(std::uint64_t lo, std::uint64_t hi) noexcept {
    return lo + below(hi - lo + 1);
  }

  /// Uniform real in [0, 1) with 53 random bits.
  constexpr double uniform01() noexcept {
    return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
  }

  constexpr bool bernoulli(double p) noexcept { return uniform01() < p; }

  friend constexpr bool operator==(const Rng&, const Rng&) = default;

 private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
    return (x << k) | (x >> (64 - k));
  }

  std::array<std::uint64_t, 4> state_{};
};

/// Independent sub-streams derived from one (run, episode) pair.
enum class Stream : std::uint64_t {
  environment = 0,
  agent = 1,
  demonstration = 2,
};

/// Deterministic stream for one episode of one run.
constexpr Rng make_rng(std::uint64_t master_seed, std::uint64_t run_index,
                       std::uint64_t episode_index,
                       Stream stream = Stream::environment) noexcept {
  std::uint64_t h = master_seed;
  std::uint64_t seed = splitmix64(h);
  h = seed ^ (run_index * 0xD1B54A32D192ED03ULL);
  seed = splitmix64(h);
  h = seed ^ (episode_index * 0x8CB92BA72F3D8DD7ULL);
  seed = splitmix64(h);
  h = seed ^ (static_cast<std::uint64_t>(stream) * 0xABC98388FB8FAC03ULL);
  return Rng(splitmix64(h));
}

}  // namespace ctfrl

#endif  // CTFRL_RNG_HPP
