#ifndef CTFRL_ENV_SERVER_HPP
#define CTFRL_ENV_SERVER_HPP

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ctfrl/core.hpp"

namespace ctfrl {

struct ServerConfig {
  std::size_t n_ports = 4;
  std::size_t n_services = 5;
  std::size_t n_params = 4;
  std::size_t step_cap = kDefaultStepCap;

  void validate() const {
    if (n_ports < 1 || n_ports > 255) throw Error("n_ports must be in [1, 255]");
    if (n_services < 1 || n_services > 254) throw Error("n_services must be in [1, 254]");
    if (n_params < 1 || n_params > 250) throw Error("n_params must be in [1, 250]");
    if (step_cap == 0) throw Error("step_cap must be positive");
  }

  friend bool operator==(const ServerConfig&, const ServerConfig&) = default;
};

enum class VulnKind : std::uint8_t { simple = 0, param_known = 1, param_unknown = 2 };

struct VulnSpec {
  std::size_t port = 0;
  VulnKind kind = VulnKind::simple;
  std::optional<std::size_t> param;  // present iff kind != simple

  friend bool operator==(const VulnSpec&, const VulnSpec&) = default;
};

enum class Banner : std::uint8_t {
  not_done = 0,
  no_vuln = 1,
  simple = 2,
  param_unknown = 3,
  param_known = 4,  // carries the disclosed parameter
};

enum class Probe : std::uint8_t {
  not_done = 0,
  nothing_found = 1,
  param_revealed = 2,  // carries the revealed parameter
};

struct PortKnowledge {
  std::optional<std::size_t> service;  // revealed by scan_ports
  Banner banner = Banner::not_done;
  Probe probe = Probe::not_done;
  std::size_t param = 0;  // meaningful for param_known banners and param_revealed probes
  bool simple_tried = false;
  std::vector<bool> params_tried;  // one flag per parameter

  friend bool operator==(const PortKnowledge&, const PortKnowledge&) = default;
};

/// Bytes used by one port in a server StateKey.
inline std::size_t server_port_key_width(const ServerConfig& cfg) noexcept {
  return 3 + (cfg.n_params + 1 + 7) / 8;
}

/// Per-port knowledge, encoded as a fixed-width record per port in port order:
///   byte 0: 0 = service hidden, s + 1 = service s revealed
///   byte 1: banner 0 not done, 1 no vuln, 2 simple, 3 param unknown,
///           4 + m param known with parameter m
///   byte 2: probe 0 not done, 1 nothing found, 2 + m parameter m revealed
///   bytes 3..: little-endian bitmask of exploits already attempted on the
///              port; bit 0 is exploit_simple, bit 1 + m is exploit_param(m)
struct ServerObservation {
  std::vector<PortKnowledge> ports;

  StateKey encode() const {
    std::string bytes;
    for (const auto& p : ports) {
      bytes.push_back(static_cast<char>(p.service ? *p.service + 1 : 0));
      std::size_t banner = static_cast<std::size_t>(p.banner);
      if (p.banner == Banner::param_known) banner += p.param;
      bytes.push_back(static_cast<char>(banner));
      std::size_t probe = static_cast<std::size_t>(p.probe);
      if (p.probe == Probe::param_revealed) probe += p.param;
      bytes.push_back(static_cast<char>(probe));
      const std::size_t bits = p.params_tried.size() + 1;
      for (std::size_t base = 0; base < bits; base += 8) {
        std::uint8_t mask = 0;
        for (std::size_t b = 0; b < 8 && base + b < bits; ++b) {
          const std::size_t bit = base + b;
          const bool tried = bit == 0 ? p.simple_tried : bool(p.params_tried[bit - 1]);
          if (tried) mask |= static_cast<std::uint8_t>(1U << b);
        }
        bytes.push_back(static_cast<char>(mask));
      }
    }
    return StateKey(std::move(bytes));
  }

  static ServerObservation decode(const StateKey& key, const ServerConfig& cfg) {
    const std::size_t width = server_port_key_width(cfg);
    if (key.size() != cfg.n_ports * width) throw Error("server state key has wrong length");
    ServerObservation obs;
    obs.ports.resize(cfg.n_ports);
    for (std::size_t i = 0; i < cfg.n_ports; ++i) {
      auto& p = obs.ports[i];
      const std::size_t at = width * i;
      const std::size_t service = key[at];
      const std::size_t banner = key[at + 1];
      const std::size_t probe = key[at + 2];
      if (service > cfg.n_services) throw Error("server state key: bad service byte");
      if (service > 0) p.service = service - 1;
      if (banner >= 4 + cfg.n_params || probe >= 2 + cfg.n_params)
        throw Error("server state key: bad banner/probe byte");
      if (banner >= 4) {
        p.banner = Banner::param_known;
        p.param = banner - 4;
      } else {
        p.banner = static_cast<Banner>(banner);
      }
      if (probe >= 2) {
        p.probe = Probe::param_revealed;
        p.param = probe - 2;
      } else {
        p.probe = static_cast<Probe>(probe);
      }
      p.params_tried.assign(cfg.n_params, false);
      for (std::size_t bit = 0; bit < 8 * (width - 3); ++bit) {
        const bool set = (key[at + 3 + bit / 8] >> (bit % 8)) & 1U;
        if (!set) continue;
        if (bit > cfg.n_params) throw Error("server state key: bad exploit mask");
        if (bit == 0) p.simple_tried = true;
        else p.params_tried[bit - 1] = true;
      }
    }
    return obs;
  }

  bool scanned() const noexcept { return !ports.empty() && ports.front().service.has_value(); }

  friend bool operator==(const ServerObservation&, const ServerObservation&) = default;
};

/// Upper bound on distinct observations: every per-port field combined
/// independently, ((V + 1)(M + 4)(M + 2) 2^(M + 1))^N.
inline double server_state_space_bound(const ServerConfig& cfg) {
  const double per_port = static_cast<double>(cfg.n_services + 1) *
                          static_cast<double>(cfg.n_params + 4) *
                          static_cast<double>(cfg.n_params + 2) *
                          std::pow(2.0, static_cast<double>(cfg.n_params + 1));
  return std::pow(per_port, static_cast<double>(cfg.n_ports));
}

/// A server with N ports each running one of V services; one service carries
/// a simple, known-parametrized or unknown-parametrized vulnerability.
///
/// Action layout (1 + 3N + N*M actions):
///   0                          scan_ports
///   1 + p                      banner_grab(p)
///   1 + N + p                  deep_probe(p)
///   1 + 2N + p                 exploit_simple(p)
///   1 + 3N + p*M + m           exploit_param(p, m)
class ServerEnv : public EpisodicEnv<ServerEnv> {
 public:
  enum class ActionType { scan_ports, banner_grab, deep_probe, exploit_simple, exploit_param };

  struct DecodedAction {
    ActionType type;
    std::size_t port = 0;
    std::size_t param = 0;
  };

  explicit ServerEnv(ServerConfig config)
      : EpisodicEnv(config.step_cap), config_((config.validate(), config)) {
    services_.resize(config_.n_ports);
    clear_knowledge();
  }

  const ServerConfig& config() const noexcept { return config_; }
  std::size_t action_count() const noexcept {
    return 1 + 3 * config_.n_ports + config_.n_ports * config_.n_params;
  }

  ActionId scan_ports() const noexcept { return {0}; }
  ActionId banner_grab(std::size_t port) const noexcept { return {1 + port}; }
  ActionId deep_probe(std::size_t port) const noexcept { return {1 + config_.n_ports + port}; }
  ActionId exploit_simple(std::size_t port) const noexcept {
    return {1 + 2 * config_.n_ports + port};
  }
  ActionId exploit_param(std::size_t port, std::size_t param) const noexcept {
    return {1 + 3 * config_.n_ports + port * config_.n_params + param};
  }

  DecodedAction decode(ActionId action) const {
    const std::size_t n = config_.n_ports;
    std::size_t i = action.index;
    if (i >= action_count()) throw Error("invalid action");
    if (i == 0) return {ActionType::scan_ports};
    i -= 1;
    if (i < n) return {ActionType::banner_grab, i};
    i -= n;
    if (i < n) return {ActionType::deep_probe, i};
    i -= n;
    if (i < n) return {ActionType::exploit_simple, i};
    i -= n;
    return {ActionType::exploit_param, i / config_.n_params, i % config_.n_params};
  }

  StateKey observation() const { return knowledge_.encode(); }
  const ServerObservation& observed() const noexcept { return knowledge_; }
  const VulnSpec& vulnerability() const noexcept { return vuln_; }
  const std::vector<std::size_t>& services() const noexcept { return services_; }

  /// Starts an episode with a hand-chosen hidden configuration.
  StateKey reset_with(VulnSpec vuln, std::vector<std::size_t> services, Rng rng = Rng{}) {
    if (vuln.port >= config_.n_ports) throw Error("vulnerable port out of range");
    if ((vuln.kind == VulnKind::simple) == vuln.param.has_value())
      throw Error("param must be present exactly for parametrized vulnerabilities");
    if (vuln.param && *vuln.param >= config_.n_params) throw Error("param out of range");
    if (services.size() != config_.n_ports) throw Error("one service per port required");
    for (auto s : services)
      if (s >= config_.n_services) throw Error("service id out of range");
    begin_episode(rng);
    vuln_ = vuln;
    services_ = std::move(services);
    clear_knowledge();
    return observation();
  }

 private:
  friend class EpisodicEnv<ServerEnv>;

  void clear_knowledge() {
    PortKnowledge blank;
    blank.params_tried.assign(config_.n_params, false);
    knowledge_.ports.assign(config_.n_ports, blank);
  }

  void on_reset(Rng& rng) {
    vuln_.port = rng.below(config_.n_ports);
    for (auto& s : services_) s = rng.below(config_.n_services);
    vuln_.kind = static_cast<VulnKind>(rng.below(3));
    vuln_.param.reset();
    if (vuln_.kind != VulnKind::simple) vuln_.param = rng.below(config_.n_params);
    clear_knowledge();
  }

  bool apply(ActionId action, Rng&) {
    const auto act = decode(action);
    auto& port = knowledge_.ports[act.port];
    const bool vulnerable = act.port == vuln_.port;
    switch (act.type) {
      case ActionType::scan_ports:
        for (std::size_t p = 0; p < config_.n_ports; ++p)
          knowledge_.ports[p].service = services_[p];
        return false;
      case ActionType::banner_grab:
        if (!port.service || port.banner != Banner::not_done) return false;
        if (!vulnerable) {
          port.banner = Banner::no_vuln;
        } else if (vuln_.kind == VulnKind::simple) {
          port.banner = Banner::simple;
        } else if (vuln_.kind == VulnKind::param_known) {
          port.banner = Banner::param_known;
          port.param = *vuln_.param;
        } else {
          port.banner = Banner::param_unknown;
        }
        return false;
      case ActionType::deep_probe:
        if (port.probe != Probe::not_done) return false;
        if (vulnerable && vuln_.kind == VulnKind::param_unknown) {
          port.probe = Probe::param_revealed;
          port.param = *vuln_.param;
        } else {
          port.probe = Probe::nothing_found;
        }
        return false;
      case ActionType::exploit_simple:
        port.simple_tried = true;
        return vulnerable && vuln_.kind == VulnKind::simple;
      case ActionType::exploit_param:
        port.params_tried[act.param] = true;
        return vulnerable && vuln_.kind != VulnKind::simple && *vuln_.param == act.param;
    }
    return false;
  }

  ServerConfig config_;
  VulnSpec vuln_;
  std::vector<std::size_t> services_;
  ServerObservation knowledge_;
};

}  // namespace ctfrl

#endif  // CTFRL_ENV_SERVER_HPP
