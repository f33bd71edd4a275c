#ifndef CTFRL_HARNESS_RUNNER_HPP
#define CTFRL_HARNESS_RUNNER_HPP

#include <algorithm>
#include <atomic>
#include <chrono>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "ctfrl/agent.hpp"
#include "ctfrl/core.hpp"
#include "ctfrl/expert.hpp"
#include "ctfrl/harness/config.hpp"
#include "ctfrl/harness/metrics.hpp"
#include "ctfrl/harness/records.hpp"

namespace ctfrl {

using AnyEnv = std::variant<PortScanEnv, ServerEnv, WebEnv>;

inline AnyEnv make_env(const EnvConfig& cfg) {
  return std::visit([](const auto& c) -> AnyEnv {
    using T = std::decay_t<decltype(c)>;
    if constexpr (std::is_same_v<T, PortScanConfig>) return PortScanEnv(c);
    else if constexpr (std::is_same_v<T, ServerConfig>) return ServerEnv(c);
    else return WebEnv(c);
  }, cfg);
}

inline std::size_t action_count(const AnyEnv& env) {
  return std::visit([](const auto& e) { return e.action_count(); }, env);
}

struct EpisodeResult {
  Trajectory trajectory;
  EpisodeRecord record;
};

/// Plays one episode: reset with `env_rng`, then select/step until the
/// episode ends, learning from each transition when `learn` is set.
template <Environment Env>
EpisodeResult run_episode(Env& env, QAgent& agent, Rng env_rng, bool learn, bool greedy,
                          std::size_t episode_index = 0) {
  EpisodeResult result;
  result.trajectory.action_count = env.action_count();
  StateKey state = env.reset(env_rng);
  for (;;) {
    if (learn) agent.visit(state);
    const ActionId action = agent.act(state, greedy);
    StepOutcome out = env.step(action);
    Transition t{std::move(state), action, out.reward, out.observation, out.done, out.truncated};
    if (learn) agent.learn(t);
    result.trajectory.transitions.push_back(std::move(t));
    state = std::move(out.observation);
    if (out.done) break;
  }
  const auto& last = result.trajectory.transitions.back();
  result.record = {episode_index, result.trajectory.size(), episode_return(result.trajectory),
                   last.done && !last.truncated, agent.table().size()};
  return result;
}

inline EpisodeResult run_episode(AnyEnv& env, QAgent& agent, Rng env_rng, bool learn,
                                 bool greedy, std::size_t episode_index = 0) {
  return std::visit(
      [&](auto& e) { return run_episode(e, agent, env_rng, learn, greedy, episode_index); }, env);
}

/// Scripted-expert demonstrations on fresh episodes of `env`.
inline std::vector<Trajectory> generate_demonstrations(AnyEnv& env, std::size_t count,
                                                       std::uint64_t master_seed,
                                                       std::size_t run_index, double noise) {
  std::vector<Trajectory> demos;
  demos.reserve(count);
  for (std::size_t d = 0; d < count; ++d) {
    std::visit(
        [&](auto& e) {
          Rng rng = make_rng(master_seed, run_index, d, Stream::demonstration);
          e.reset(rng);
          demos.push_back(expert_rollout(e, rng, noise));
        },
        env);
  }
  return demos;
}

/// One repetition: optional priming, training episodes, greedy evaluation.
inline RunLog run_single(const ExperimentConfig& cfg, std::size_t run_index) {
  const auto started = std::chrono::steady_clock::now();
  RunLog log;
  log.run_index = run_index;
  log.config = cfg;
  AnyEnv env = make_env(cfg.env);
  QAgent agent(action_count(env), cfg.agent);

  if (cfg.demos && cfg.demos->count > 0) {
    std::vector<Trajectory> demos;
    if (cfg.demos->source) {
      demos = read_demonstrations(*cfg.demos->source);
      if (demos.size() < cfg.demos->count)
        throw Error("demonstration file holds fewer than demos.count trajectories");
      demos.resize(cfg.demos->count);
    } else {
      demos = generate_demonstrations(env, cfg.demos->count, cfg.master_seed, run_index,
                                      cfg.demos->noise);
    }
    agent.reseed(make_rng(cfg.master_seed, run_index, ~std::uint64_t{0}, Stream::agent));
    agent.prime(demos);
  }

  const auto* portscan = std::get_if<PortScanConfig>(&cfg.env);
  const std::size_t total = cfg.episodes + cfg.eval_episodes;
  log.records.reserve(total);
  for (std::size_t ep = 0; ep < total; ++ep) {
    const bool training = ep < cfg.episodes;
    agent.reseed(make_rng(cfg.master_seed, run_index, ep, Stream::agent));
    auto result = run_episode(env, agent, make_rng(cfg.master_seed, run_index, ep), training,
                              !training, ep);
    log.records.push_back(result.record);
    if (training && portscan && cfg.diag_every > 0 && (ep + 1) % cfg.diag_every == 0)
      log.diag.push_back({ep + 1, diag_ratio(agent.table(), portscan->n_ports)});
  }
  log.table = std::move(agent.table());
  log.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return log;
}

struct RunOptions {
  // Directory receiving config.json, run_<i>.csv, run_<i>.qtable, summary.json.
  std::optional<std::filesystem::path> out_dir;
  std::size_t workers = 1;
  // Drop each run's table from memory once persisted (or immediately when
  // there is no output directory).
  bool keep_tables = true;
};

namespace detail {

inline void ensure_writable_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir))
    throw Error("output directory " + dir.string() + " cannot be created");
  const auto probe = dir / ".write_probe";
  {
    std::ofstream out(probe);
    if (!out) throw Error("output directory " + dir.string() + " is not writable");
  }
  std::filesystem::remove(probe, ec);
}

inline void write_json(const nlohmann::json& j, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

}  // namespace detail

/// Runs all repetitions, up to `workers` at a time, each with its own env,
/// agent and random streams. Results are ordered by run index.
inline std::vector<RunLog> run_experiment(const ExperimentConfig& cfg, const RunOptions& opts = {}) {
  cfg.validate();
  if (opts.out_dir) {
    detail::ensure_writable_dir(*opts.out_dir);
    detail::write_json(to_json(cfg), *opts.out_dir / "config.json");
  }

  std::vector<RunLog> logs(cfg.repetitions);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  const auto worker = [&] {
    for (std::size_t i = next++; i < cfg.repetitions; i = next++) {
      try {
        RunLog log = run_single(cfg, i);
        if (opts.out_dir) {
          const auto stem = *opts.out_dir / ("run_" + std::to_string(i));
          write_run_csv(log.records, stem.string() + ".csv");
          log.table_path = stem.string() + ".qtable";
          save_table(log.table, log.table_path);
        }
        if (!opts.keep_tables) log.table = QTable(log.table.action_count(), 0.0);
        logs[i] = std::move(log);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = cfg.repetitions;
      }
    }
  };
  const std::size_t n_workers = std::clamp<std::size_t>(opts.workers, 1, cfg.repetitions);
  if (n_workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);

  if (opts.out_dir) {
    auto summary = to_json(summarize(logs));
    nlohmann::json walls = nlohmann::json::array();
    for (const auto& l : logs) walls.push_back(l.wall_seconds);
    summary["wall_seconds"] = walls;
    detail::write_json(summary, *opts.out_dir / "summary.json");
  }
  return logs;
}

}  // namespace ctfrl

#endif  // CTFRL_HARNESS_RUNNER_HPP
