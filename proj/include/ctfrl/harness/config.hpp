#ifndef CTFRL_HARNESS_CONFIG_HPP
#define CTFRL_HARNESS_CONFIG_HPP

#include <cstdint>
#include <fstream>
#include <initializer_list>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>

#include <json.hpp>

#include "ctfrl/agent.hpp"
#include "ctfrl/core.hpp"
#include "ctfrl/env/portscan.hpp"
#include "ctfrl/env/server.hpp"
#include "ctfrl/env/web.hpp"

namespace ctfrl {

using EnvConfig = std::variant<PortScanConfig, ServerConfig, WebConfig>;

struct DemoConfig {
  std::size_t count = 0;
  // NDJSON demonstrations to read; generated by the scripted expert when absent.
  std::optional<std::string> source;
  // Probability that the expert takes a uniformly random action instead.
  double noise = 0.0;

  friend bool operator==(const DemoConfig&, const DemoConfig&) = default;
};

struct ExperimentConfig {
  EnvConfig env = PortScanConfig{};
  AgentConfig agent;
  std::size_t episodes = 1000;
  std::size_t repetitions = 1;
  std::uint64_t master_seed = 0;
  std::optional<DemoConfig> demos;
  // Greedy (epsilon = 0), non-learning episodes after training.
  std::size_t eval_episodes = 0;
  // Diagonal-ratio sampling period for port-scan runs; 0 disables it.
  std::size_t diag_every = 50;

  void validate() const {
    std::visit([](const auto& e) { e.validate(); }, env);
    agent.validate();
    if (episodes == 0) throw Error("episodes must be positive");
    if (repetitions == 0) throw Error("repetitions must be at least 1");
    if (demos && !(demos->noise >= 0.0 && demos->noise <= 1.0))
      throw Error("demo noise must be in [0, 1]");
  }

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

inline std::string_view env_kind(const EnvConfig& env) {
  switch (env.index()) {
    case 0: return "portscan";
    case 1: return "server";
    default: return "web";
  }
}

namespace detail {

using nlohmann::json;

inline void reject_unknown_keys(const json& j, std::initializer_list<std::string_view> allowed,
                                std::string_view where) {
  if (!j.is_object()) throw Error(std::string(where) + " must be a JSON object");
  for (const auto& item : j.items()) {
    bool known = false;
    for (auto k : allowed) known = known || item.key() == k;
    if (!known) throw Error("unknown key \"" + item.key() + "\" in " + std::string(where));
  }
}

template <class T>
void read_field(const json& j, std::string_view key, T& out, std::string_view where) {
  const auto it = j.find(std::string(key));
  if (it == j.end()) return;
  try {
    if constexpr (std::is_same_v<T, double>) {
      if (!it->is_number()) throw Error("expected a number");
    } else if constexpr (std::is_integral_v<T>) {
      if (!it->is_number_unsigned() && !(it->is_number_integer() && it->get<std::int64_t>() >= 0))
        throw Error("expected a non-negative integer");
    }
    out = it->get<T>();
  } catch (const std::exception& e) {
    throw Error(std::string(where) + "." + std::string(key) + ": " + e.what());
  }
}

}  // namespace detail

inline nlohmann::json to_json(const EnvConfig& env) {
  nlohmann::json j;
  j["kind"] = env_kind(env);
  std::visit(
      [&](const auto& e) {
        using T = std::decay_t<decltype(e)>;
        if constexpr (std::is_same_v<T, PortScanConfig>) {
          j["n_ports"] = e.n_ports;
          j["detect_prob"] = e.detect_prob;
        } else if constexpr (std::is_same_v<T, ServerConfig>) {
          j["n_ports"] = e.n_ports;
          j["n_services"] = e.n_services;
          j["n_params"] = e.n_params;
        } else {
          j["n_visible_min"] = e.n_visible_min;
          j["n_visible_max"] = e.n_visible_max;
          j["n_hidden_min"] = e.n_hidden_min;
          j["n_hidden_max"] = e.n_hidden_max;
          j["n_params"] = e.n_params;
        }
        j["step_cap"] = e.step_cap;
      },
      env);
  return j;
}

inline nlohmann::json to_json(const ExperimentConfig& cfg) {
  nlohmann::json j;
  j["env"] = to_json(cfg.env);
  j["agent"] = {{"alpha", cfg.agent.alpha},
                {"gamma", cfg.agent.gamma},
                {"epsilon", cfg.agent.epsilon},
                {"init_scale", cfg.agent.init_scale},
                {"demo_passes", cfg.agent.demo_passes}};
  j["episodes"] = cfg.episodes;
  j["repetitions"] = cfg.repetitions;
  j["master_seed"] = cfg.master_seed;
  if (cfg.demos) {
    nlohmann::json d = {{"count", cfg.demos->count}, {"noise", cfg.demos->noise}};
    if (cfg.demos->source) d["source"] = *cfg.demos->source;
    j["demos"] = d;
  }
  j["eval_episodes"] = cfg.eval_episodes;
  j["diag_every"] = cfg.diag_every;
  return j;
}

inline EnvConfig env_config_from_json(const nlohmann::json& j) {
  using detail::read_field;
  if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string())
    throw Error("env.kind is required");
  const auto kind = j["kind"].get<std::string>();
  if (kind == "portscan") {
    detail::reject_unknown_keys(j, {"kind", "n_ports", "detect_prob", "step_cap"}, "env");
    PortScanConfig c;
    read_field(j, "n_ports", c.n_ports, "env");
    read_field(j, "detect_prob", c.detect_prob, "env");
    read_field(j, "step_cap", c.step_cap, "env");
    return c;
  }
  if (kind == "server") {
    detail::reject_unknown_keys(j, {"kind", "n_ports", "n_services", "n_params", "step_cap"},
                                "env");
    ServerConfig c;
    read_field(j, "n_ports", c.n_ports, "env");
    read_field(j, "n_services", c.n_services, "env");
    read_field(j, "n_params", c.n_params, "env");
    read_field(j, "step_cap", c.step_cap, "env");
    return c;
  }
  if (kind == "web") {
    detail::reject_unknown_keys(j,
                                {"kind", "n_visible_min", "n_visible_max", "n_hidden_min",
                                 "n_hidden_max", "n_params", "step_cap"},
                                "env");
    WebConfig c;
    read_field(j, "n_visible_min", c.n_visible_min, "env");
    read_field(j, "n_visible_max", c.n_visible_max, "env");
    read_field(j, "n_hidden_min", c.n_hidden_min, "env");
    read_field(j, "n_hidden_max", c.n_hidden_max, "env");
    read_field(j, "n_params", c.n_params, "env");
    read_field(j, "step_cap", c.step_cap, "env");
    return c;
  }
  throw Error("unknown env.kind \"" + kind + "\"");
}

/// Parses and validates an experiment config. Unknown keys are errors at
/// every level; omitted fields keep their defaults.
inline ExperimentConfig config_from_json(const nlohmann::json& j) {
  using detail::read_field;
  detail::reject_unknown_keys(j,
                              {"env", "agent", "episodes", "repetitions", "master_seed", "demos",
                               "eval_episodes", "diag_every"},
                              "config");
  ExperimentConfig cfg;
  if (!j.contains("env")) throw Error("config.env is required");
  cfg.env = env_config_from_json(j["env"]);
  if (j.contains("agent")) {
    const auto& a = j["agent"];
    detail::reject_unknown_keys(a, {"alpha", "gamma", "epsilon", "init_scale", "demo_passes"},
                                "agent");
    read_field(a, "alpha", cfg.agent.alpha, "agent");
    read_field(a, "gamma", cfg.agent.gamma, "agent");
    read_field(a, "epsilon", cfg.agent.epsilon, "agent");
    read_field(a, "init_scale", cfg.agent.init_scale, "agent");
    read_field(a, "demo_passes", cfg.agent.demo_passes, "agent");
  }
  read_field(j, "episodes", cfg.episodes, "config");
  read_field(j, "repetitions", cfg.repetitions, "config");
  read_field(j, "master_seed", cfg.master_seed, "config");
  read_field(j, "eval_episodes", cfg.eval_episodes, "config");
  read_field(j, "diag_every", cfg.diag_every, "config");
  if (j.contains("demos") && !j["demos"].is_null()) {
    const auto& d = j["demos"];
    detail::reject_unknown_keys(d, {"count", "source", "noise"}, "demos");
    DemoConfig demos;
    read_field(d, "count", demos.count, "demos");
    read_field(d, "noise", demos.noise, "demos");
    if (d.contains("source") && !d["source"].is_null()) {
      if (!d["source"].is_string()) throw Error("demos.source must be a string");
      demos.source = d["source"].get<std::string>();
    }
    cfg.demos = demos;
  }
  cfg.validate();
  return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error("config " + path + ": " + e.what());
  }
  return config_from_json(j);
}

}  // namespace ctfrl

#endif  // CTFRL_HARNESS_CONFIG_HPP
