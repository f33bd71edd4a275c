#ifndef CTFRL_AGENT_HPP
#define CTFRL_AGENT_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "ctfrl/core.hpp"
#include "ctfrl/qtable.hpp"
#include "ctfrl/rng.hpp"

namespace ctfrl {

struct AgentConfig {
  double alpha = 0.1;
  double gamma = 0.9;
  double epsilon = 0.3;
  double init_scale = 1e-3;
  // Replay passes over the demonstration set when priming.
  std::size_t demo_passes = 1;

  void validate() const {
    if (!(alpha > 0.0) || !std::isfinite(alpha)) throw Error("alpha must be positive");
    if (!(gamma >= 0.0 && gamma < 1.0)) throw Error("gamma must be in [0, 1)");
    if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw Error("epsilon must be in [0, 1]");
    if (!(init_scale >= 0.0) || !std::isfinite(init_scale))
      throw Error("init_scale must be non-negative");
  }

  /// Interval every stored value stays inside: rewards are -1 per step and
  /// +100 on capture, so values never drop below -1/(1-gamma) nor exceed
  /// the capture reward plus the initial noise.
  std::pair<double, double> value_bounds() const {
    return {kStepReward / (1.0 - gamma), kCaptureReward + init_scale};
  }

  friend bool operator==(const AgentConfig&, const AgentConfig&) = default;
};

/// One-step Q-learning update:
///   Q(s,a) += alpha * (r + gamma * max_x Q(s',x) - Q(s,a))
/// with the bootstrap term dropped when `terminal` (flag captured). Both
/// states are materialized on first sight, s before s'.
inline void q_update(QTable& table, const StateKey& state, ActionId action, double reward,
                     const StateKey& next_state, bool terminal, const AgentConfig& cfg,
                     Rng& rng) {
  if (!std::isfinite(reward)) throw Error("reward must be finite");
  if (action.index >= table.action_count()) throw Error("invalid action");
  table.materialize(state, rng);
  double bootstrap = 0.0;
  if (!terminal) {
    const auto next = table.materialize(next_state, rng);
    bootstrap = *std::max_element(next.begin(), next.end());
  } else {
    table.materialize(next_state, rng);
  }
  double& q = table.materialize(state, rng)[action.index];
  q += cfg.alpha * (reward + cfg.gamma * bootstrap - q);
}

/// Index of the largest value; ties broken uniformly at random.
inline ActionId argmax_random_tie(std::span<const double> values, Rng& rng) {
  const double best = *std::max_element(values.begin(), values.end());
  std::size_t ties = 0;
  for (double v : values) ties += (v == best);
  std::size_t pick = rng.below(ties);
  for (std::size_t a = 0; a < values.size(); ++a) {
    if (values[a] == best && pick-- == 0) return {a};
  }
  return {0};
}

/// Epsilon-greedy selection. Unseen states act on a freshly drawn row that
/// is not stored.
inline ActionId select_action(const QTable& table, const StateKey& state, const AgentConfig& cfg,
                              Rng& rng, bool greedy) {
  if (!greedy && rng.uniform01() < cfg.epsilon) return {rng.below(table.action_count())};
  if (const auto row = table.find(state)) return argmax_random_tie(*row, rng);
  const auto fresh = table.fresh_row(rng);
  return argmax_random_tie(fresh, rng);
}

/// Replays every demonstration transition through q_update, in order,
/// `cfg.demo_passes` times.
inline void prime_from_demonstrations(QTable& table, std::span<const Trajectory> demos,
                                      const AgentConfig& cfg, Rng& rng) {
  for (const auto& demo : demos) {
    if (demo.action_count != table.action_count())
      throw Error("action count mismatch between demonstrations and agent");
  }
  for (std::size_t pass = 0; pass < cfg.demo_passes; ++pass) {
    for (const auto& demo : demos) {
      for (const auto& t : demo.transitions) {
        q_update(table, t.state, t.action, t.reward, t.next_state, t.done && !t.truncated, cfg,
                 rng);
      }
    }
  }
}

/// Tabular Q-learning agent: a lazily built table plus its hyperparameters
/// and random stream.
class QAgent {
 public:
  QAgent(std::size_t action_count, AgentConfig cfg)
      : cfg_((cfg.validate(), cfg)), table_(action_count, cfg.init_scale) {}

  const AgentConfig& config() const noexcept { return cfg_; }
  const QTable& table() const noexcept { return table_; }
  QTable& table() noexcept { return table_; }
  std::size_t action_count() const noexcept { return table_.action_count(); }

  void reseed(Rng rng) noexcept { rng_ = rng; }
  Rng& rng() noexcept { return rng_; }

  void visit(const StateKey& state) { table_.materialize(state, rng_); }

  ActionId act(const StateKey& state, bool greedy) {
    return select_action(table_, state, cfg_, rng_, greedy);
  }

  void learn(const Transition& t) {
    q_update(table_, t.state, t.action, t.reward, t.next_state, t.done && !t.truncated, cfg_,
             rng_);
  }

  void prime(std::span<const Trajectory> demos) {
    prime_from_demonstrations(table_, demos, cfg_, rng_);
  }

  /// Greedy action with lowest-index tie-breaking; nullopt for unseen states.
  std::optional<ActionId> greedy_action(const StateKey& state) const {
    const auto row = table_.find(state);
    if (!row) return std::nullopt;
    return ActionId{static_cast<std::size_t>(
        std::max_element(row->begin(), row->end()) - row->begin())};
  }

 private:
  AgentConfig cfg_;
  QTable table_;
  Rng rng_;
};

}  // namespace ctfrl

#endif  // CTFRL_AGENT_HPP
