#ifndef CTFRL_CORE_HPP
#define CTFRL_CORE_HPP

#include <compare>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ctfrl/rng.hpp"

namespace ctfrl {

inline constexpr double kStepReward = -1.0;
inline constexpr double kCaptureReward = 100.0;
inline constexpr std::size_t kDefaultStepCap = 1000;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ActionId {
  std::size_t index = 0;

  friend constexpr auto operator<=>(const ActionId&, const ActionId&) = default;
};

/// Canonical byte encoding of an agent-visible observation.
///
/// Each environment documents its own layout; equality is byte equality and
/// ordering is lexicographic over the bytes.
class StateKey {
 public:
  StateKey() = default;
  explicit StateKey(std::string bytes) : bytes_(std::move(bytes)) {}

  static StateKey from_bytes(std::initializer_list<std::uint8_t> bytes) {
    std::string s;
    s.reserve(bytes.size());
    for (auto b : bytes) s.push_back(static_cast<char>(b));
    return StateKey(std::move(s));
  }

  const std::string& bytes() const noexcept { return bytes_; }
  std::size_t size() const noexcept { return bytes_.size(); }
  std::uint8_t operator[](std::size_t i) const {
    return static_cast<std::uint8_t>(bytes_.at(i));
  }

  friend bool operator==(const StateKey&, const StateKey&) = default;
  friend std::strong_ordering operator<=>(const StateKey& a, const StateKey& b) {
    return a.bytes_.compare(b.bytes_) <=> 0;
  }

 private:
  std::string bytes_;
};

struct StepOutcome {
  StateKey observation;
  double reward = 0.0;
  bool done = false;
  // Set together with done when the step cap ended the episode.
  bool truncated = false;

  bool captured() const noexcept { return done && !truncated; }
};

struct Transition {
  StateKey state;
  ActionId action;
  double reward = 0.0;
  StateKey next_state;
  bool done = false;
  bool truncated = false;

  friend bool operator==(const Transition&, const Transition&) = default;
};

struct Trajectory {
  // Action count of the environment that produced the transitions.
  std::size_t action_count = 0;
  std::vector<Transition> transitions;

  bool empty() const noexcept { return transitions.empty(); }
  std::size_t size() const noexcept { return transitions.size(); }
  bool captured() const noexcept {
    return !transitions.empty() && transitions.back().done &&
           !transitions.back().truncated;
  }

  friend bool operator==(const Trajectory&, const Trajectory&) = default;
};

/// Undiscounted sum of rewards.
inline double episode_return(const Trajectory& trajectory) {
  if (trajectory.empty()) throw Error("empty trajectory");
  double total = 0.0;
  for (const auto& t : trajectory.transitions) total += t.reward;
  return total;
}

template <class E>
concept Environment = requires(E env, const E cenv, Rng rng, ActionId a) {
  { cenv.action_count() } -> std::convertible_to<std::size_t>;
  { cenv.episode_step_cap() } -> std::convertible_to<std::size_t>;
  { env.reset(rng) } -> std::same_as<StateKey>;
  { env.step(a) } -> std::same_as<StepOutcome>;
  { cenv.observation() } -> std::same_as<StateKey>;
};

/// Shared episode bookkeeping for the CTF environments.
///
/// Derived classes provide `action_count()`, `observation()`,
/// `on_reset(Rng&)` and `apply(ActionId, Rng&) -> bool` (true on capture).
/// This base owns the episode RNG, validates actions, charges rewards and
/// enforces the step cap.
template <class Derived>
class EpisodicEnv {
 public:
  explicit EpisodicEnv(std::size_t step_cap) : step_cap_(step_cap) {
    if (step_cap_ == 0) throw Error("episode step cap must be positive");
  }

  std::size_t episode_step_cap() const noexcept { return step_cap_; }
  std::size_t steps_taken() const noexcept { return steps_; }
  bool finished() const noexcept { return finished_; }

  StateKey reset(Rng rng) {
    rng_ = rng;
    begin_episode();
    self().on_reset(rng_);
    return self().observation();
  }

  StepOutcome step(ActionId action) {
    if (!started_) throw Error("episode not started");
    if (finished_) throw Error("episode finished");
    if (action.index >= self().action_count()) throw Error("invalid action");
    const bool captured = self().apply(action, rng_);
    ++steps_;
    StepOutcome out{self().observation(), captured ? kCaptureReward : kStepReward,
                    captured, false};
    if (!captured && steps_ >= step_cap_) {
      out.done = true;
      out.truncated = true;
    }
    finished_ = out.done;
    return out;
  }

 protected:
  // For hand-built hidden configurations in tests and tools.
  void begin_episode(Rng rng) {
    rng_ = rng;
    begin_episode();
  }

 private:
  void begin_episode() {
    steps_ = 0;
    started_ = true;
    finished_ = false;
  }

  Derived& self() { return static_cast<Derived&>(*this); }
  const Derived& self() const { return static_cast<const Derived&>(*this); }

  std::size_t step_cap_;
  std::size_t steps_ = 0;
  bool started_ = false;
  bool finished_ = false;
  Rng rng_;
};

}  // namespace ctfrl

template <>
struct std::hash<ctfrl::StateKey> {
  std::size_t operator()(const ctfrl::StateKey& key) const noexcept {
    return std::hash<std::string>{}(key.bytes());
  }
};

#endif  // CTFRL_CORE_HPP
