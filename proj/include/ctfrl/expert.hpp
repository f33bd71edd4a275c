#ifndef CTFRL_EXPERT_HPP
#define CTFRL_EXPERT_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <vector>

#include "ctfrl/core.hpp"
#include "ctfrl/env/portscan.hpp"
#include "ctfrl/env/server.hpp"
#include "ctfrl/env/web.hpp"

namespace ctfrl {

// ---------------------------------------------------------------------------
// Scripted experts
// ---------------------------------------------------------------------------

namespace detail {

template <class Env, class Decide>
Trajectory scripted_rollout(Env& env, Rng& rng, double noise, bool stationary, Decide&& decide) {
  if (env.steps_taken() != 0 || env.finished()) throw Error("expert needs a freshly reset env");
  Trajectory trajectory;
  trajectory.action_count = env.action_count();
  StateKey state = env.observation();
  std::optional<Transition> last;
  for (;;) {
    ActionId action = decide(last);
    if (noise > 0.0 && rng.bernoulli(noise)) action = {rng.below(env.action_count())};
    const StepOutcome out = env.step(action);
    last = Transition{state, action, out.reward, out.observation, out.done, out.truncated};
    trajectory.transitions.push_back(*last);
    state = out.observation;
    if (out.done) break;
  }
  if (stationary && !trajectory.captured())
    throw Error("expert truncated on a stationary environment");
  return trajectory;
}

}  // namespace detail

/// Scan, then exploit the reported port; rescan after a failed exploit.
inline Trajectory expert_rollout(PortScanEnv& env, Rng& rng, double noise = 0.0) {
  return detail::scripted_rollout(
      env, rng, noise, env.config().detect_prob == 0.0,
      [&](const std::optional<Transition>& last) {
        const auto& obs = env.observed();
        const bool failed_exploit = last && last->action != PortScanEnv::scan();
        if (obs.reported && !failed_exploit) return PortScanEnv::exploit(*obs.reported);
        return PortScanEnv::scan();
      });
}

/// Scan, grab banners in port order until the vulnerable service shows up,
/// then exploit it (deep-probing first when the parameter is unknown).
inline ActionId server_expert_action(const ServerEnv& env) {
  const auto& obs = env.observed();
  if (!obs.scanned()) return env.scan_ports();
  for (std::size_t p = 0; p < obs.ports.size(); ++p) {
    const auto& port = obs.ports[p];
    switch (port.banner) {
      case Banner::not_done:
        return env.banner_grab(p);
      case Banner::no_vuln:
        continue;
      case Banner::simple:
        return env.exploit_simple(p);
      case Banner::param_known:
        return env.exploit_param(p, port.param);
      case Banner::param_unknown:
        if (port.probe == Probe::param_revealed) return env.exploit_param(p, port.param);
        return env.deep_probe(p);
    }
  }
  return env.scan_ports();
}

inline Trajectory expert_rollout(ServerEnv& env, Rng& rng, double noise = 0.0) {
  return detail::scripted_rollout(env, rng, noise, true, [&](const std::optional<Transition>&) {
    return server_expert_action(env);
  });
}

/// Crawl, then sweep the files: analyze, look for hidden files, move on;
/// exploit as soon as a parameter is found.
inline ActionId web_expert_action(const AggregatedObservation& obs) {
  if (!obs.site_crawled) return WebEnv::kCrawl;
  if (obs.param_found_here) return WebEnv::exploit(*obs.param_found_here);
  if (!obs.analyzed_here) return WebEnv::kAnalyze;
  if (!obs.focus_hidden && !obs.hidden_checked_here) return WebEnv::kFindHidden;
  return WebEnv::kNextFile;
}

inline Trajectory expert_rollout(WebEnv& env, Rng& rng, double noise = 0.0) {
  return detail::scripted_rollout(env, rng, noise, true, [&](const std::optional<Transition>&) {
    return web_expert_action(env.observed());
  });
}

// ---------------------------------------------------------------------------
// Explicit MDP oracle
// ---------------------------------------------------------------------------

struct MdpOutcome {
  std::size_t next = 0;
  double probability = 0.0;
  double reward = 0.0;
  bool terminal = false;
};

/// Enumerated MDP; outcomes(s, a) lists the possible results of taking a in s.
class ExplicitMDP {
 public:
  ExplicitMDP(std::size_t n_states, std::size_t n_actions, std::size_t start_state = 0)
      : n_states_(n_states), n_actions_(n_actions), start_(start_state),
        outcomes_(n_states * n_actions) {
    if (n_states == 0 || n_actions == 0) throw Error("MDP needs states and actions");
    if (start_state >= n_states) throw Error("start state out of range");
  }

  std::size_t state_count() const noexcept { return n_states_; }
  std::size_t action_count() const noexcept { return n_actions_; }
  std::size_t start_state() const noexcept { return start_; }

  const std::vector<MdpOutcome>& outcomes(std::size_t s, std::size_t a) const {
    return outcomes_.at(s * n_actions_ + a);
  }

  void add(std::size_t s, std::size_t a, MdpOutcome outcome) {
    if (outcome.next >= n_states_) throw Error("outcome state out of range");
    if (outcome.probability <= 0.0) return;
    outcomes_.at(s * n_actions_ + a).push_back(outcome);
  }

  /// Probability of reaching a non-terminal `next` (or terminating when
  /// `terminal`), summed over outcomes.
  double probability(std::size_t s, std::size_t a, std::size_t next, bool terminal = false) const {
    double p = 0.0;
    for (const auto& o : outcomes(s, a))
      if (o.terminal == terminal && (terminal || o.next == next)) p += o.probability;
    return p;
  }

  void validate(double tol = 1e-9) const {
    for (std::size_t s = 0; s < n_states_; ++s) {
      for (std::size_t a = 0; a < n_actions_; ++a) {
        double total = 0.0;
        for (const auto& o : outcomes(s, a)) total += o.probability;
        if (std::abs(total - 1.0) > tol) throw Error("transition probabilities do not sum to 1");
      }
    }
  }

 private:
  std::size_t n_states_;
  std::size_t n_actions_;
  std::size_t start_;
  std::vector<std::vector<MdpOutcome>> outcomes_;
};

/// Observation-level port-scan MDP. State 0 is ignorance, state k + 1 means
/// "port k reported"; actions follow PortScanEnv. The hidden flag position
/// is marginalized: uniform in ignorance, and after a report it sits on the
/// reported port with probability 1 - p, otherwise uniformly elsewhere.
inline ExplicitMDP build_explicit_mdp(const PortScanConfig& cfg) {
  cfg.validate();
  const std::size_t n = cfg.n_ports;
  if (n > 16) throw Error("port-scan MDP enumeration is limited to 16 ports");
  const double p = cfg.detect_prob;
  ExplicitMDP mdp(n + 1, n + 1, 0);
  const double uniform = 1.0 / static_cast<double>(n);
  for (std::size_t k = 0; k < n; ++k) mdp.add(0, 0, {k + 1, uniform, kStepReward, false});
  for (std::size_t j = 0; j < n; ++j) {
    mdp.add(0, j + 1, {0, uniform, kCaptureReward, true});
    mdp.add(0, j + 1, {0, 1.0 - uniform, kStepReward, false});
  }
  const double elsewhere = p / static_cast<double>(n - 1);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t s = k + 1;
    for (std::size_t j = 0; j < n; ++j)
      mdp.add(s, 0, {j + 1, j == k ? 1.0 - p : elsewhere, kStepReward, false});
    for (std::size_t j = 0; j < n; ++j) {
      const double hit = j == k ? 1.0 - p : elsewhere;
      mdp.add(s, j + 1, {s, hit, kCaptureReward, true});
      mdp.add(s, j + 1, {s, 1.0 - hit, kStepReward, false});
    }
  }
  mdp.validate();
  return mdp;
}

struct ValueIterationResult {
  std::vector<double> values;
  std::vector<ActionId> policy;
  std::vector<std::vector<double>> q;
  std::size_t iterations = 0;
};

/// Bellman optimality iteration until the largest value change is below
/// `tol`. gamma = 1 is allowed for episodic problems where an optimal policy
/// terminates; the iteration cap catches the cases where it does not.
/// Policy ties resolve to the lowest action index.
inline ValueIterationResult value_iteration(const ExplicitMDP& mdp, double gamma, double tol,
                                            std::size_t max_iterations = 1'000'000) {
  if (!(tol > 0.0)) throw Error("tolerance must be positive");
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw Error("gamma must be in [0, 1]");
  const std::size_t ns = mdp.state_count();
  const std::size_t na = mdp.action_count();
  ValueIterationResult result;
  result.values.assign(ns, 0.0);
  result.q.assign(ns, std::vector<double>(na, 0.0));

  const auto backup = [&](std::size_t s, std::size_t a, const std::vector<double>& v) {
    double total = 0.0;
    for (const auto& o : mdp.outcomes(s, a))
      total += o.probability * (o.reward + (o.terminal ? 0.0 : gamma * v[o.next]));
    return total;
  };

  bool converged = false;
  for (std::size_t it = 0; it < max_iterations; ++it) {
    std::vector<double> next(ns);
    double delta = 0.0;
    for (std::size_t s = 0; s < ns; ++s) {
      double best = -std::numeric_limits<double>::infinity();
      for (std::size_t a = 0; a < na; ++a) best = std::max(best, backup(s, a, result.values));
      next[s] = best;
      delta = std::max(delta, std::abs(best - result.values[s]));
    }
    result.values = std::move(next);
    result.iterations = it + 1;
    if (delta < tol) {
      converged = true;
      break;
    }
  }
  if (!converged) throw Error("value iteration did not converge");

  result.policy.resize(ns);
  for (std::size_t s = 0; s < ns; ++s) {
    std::size_t best_a = 0;
    for (std::size_t a = 0; a < na; ++a) {
      result.q[s][a] = backup(s, a, result.values);
      if (result.q[s][a] > result.q[s][best_a]) best_a = a;
    }
    result.policy[s] = {best_a};
  }
  return result;
}

/// Stochastic policy as per-state action probabilities.
using PolicyTable = std::vector<std::vector<double>>;

inline PolicyTable uniform_policy(const ExplicitMDP& mdp) {
  return PolicyTable(mdp.state_count(),
                     std::vector<double>(mdp.action_count(),
                                         1.0 / static_cast<double>(mdp.action_count())));
}

inline PolicyTable deterministic_policy(const ExplicitMDP& mdp,
                                        const std::vector<ActionId>& actions) {
  PolicyTable table(mdp.state_count(), std::vector<double>(mdp.action_count(), 0.0));
  for (std::size_t s = 0; s < mdp.state_count(); ++s) table[s].at(actions.at(s).index) = 1.0;
  return table;
}

/// Expected per-step reward accumulation of a fixed policy, i.e. the policy's
/// value. With `count_steps` every step is worth 1, giving the expected
/// number of steps to termination.
inline std::vector<double> evaluate_policy(const ExplicitMDP& mdp, const PolicyTable& policy,
                                           double gamma, double tol, bool count_steps = false,
                                           std::size_t max_iterations = 10'000'000) {
  if (policy.size() != mdp.state_count()) throw Error("policy size does not match MDP");
  const std::size_t ns = mdp.state_count();
  std::vector<double> v(ns, 0.0);
  for (std::size_t it = 0; it < max_iterations; ++it) {
    double delta = 0.0;
    std::vector<double> next(ns, 0.0);
    for (std::size_t s = 0; s < ns; ++s) {
      for (std::size_t a = 0; a < mdp.action_count(); ++a) {
        const double pa = policy[s].at(a);
        if (pa == 0.0) continue;
        for (const auto& o : mdp.outcomes(s, a)) {
          const double r = count_steps ? 1.0 : o.reward;
          next[s] += pa * o.probability * (r + (o.terminal ? 0.0 : gamma * v[o.next]));
        }
      }
      delta = std::max(delta, std::abs(next[s] - v[s]));
    }
    v = std::move(next);
    if (delta < tol) return v;
  }
  throw Error("policy evaluation did not converge");
}

}  // namespace ctfrl

#endif  // CTFRL_EXPERT_HPP
