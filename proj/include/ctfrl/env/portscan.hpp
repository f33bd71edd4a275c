#ifndef CTFRL_ENV_PORTSCAN_HPP
#define CTFRL_ENV_PORTSCAN_HPP

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>

#include "ctfrl/core.hpp"

namespace ctfrl {

struct PortScanConfig {
  std::size_t n_ports = 64;
  double detect_prob = 0.0;
  std::size_t step_cap = kDefaultStepCap;

  void validate() const {
    if (n_ports < 2 || n_ports > 254) throw Error("n_ports must be in [2, 254]");
    if (!(detect_prob >= 0.0 && detect_prob <= 1.0))
      throw Error("detect_prob must be in [0, 1]");
    if (step_cap == 0) throw Error("step_cap must be positive");
  }

  friend bool operator==(const PortScanConfig&, const PortScanConfig&) = default;
};

/// What the agent knows: nothing, or the port the last scan reported.
///
/// StateKey layout (one byte): 0 = ignorance, k + 1 = "port k reported".
struct PortScanObservation {
  std::optional<std::size_t> reported;

  StateKey encode() const {
    const auto byte = static_cast<std::uint8_t>(reported ? *reported + 1 : 0);
    return StateKey::from_bytes({byte});
  }

  static PortScanObservation decode(const StateKey& key, std::size_t n_ports) {
    if (key.size() != 1) throw Error("port-scan state key must be one byte");
    const std::size_t byte = key[0];
    if (byte > n_ports) throw Error("port-scan state key out of range");
    if (byte == 0) return {};
    return {byte - 1};
  }

  // Row index in the (N+1)x(N+1) value matrix.
  std::size_t row() const noexcept { return reported ? *reported + 1 : 0; }

  friend bool operator==(const PortScanObservation&, const PortScanObservation&) = default;
};

/// N ports, one of which hides the flag.
///
/// Action 0 scans; action k in [1, N] exploits port k - 1. With detection
/// probability p a scan is noticed after its response is delivered and the
/// flag moves to one of the other N - 1 ports.
class PortScanEnv : public EpisodicEnv<PortScanEnv> {
 public:
  static constexpr std::size_t kScan = 0;

  explicit PortScanEnv(PortScanConfig config)
      : EpisodicEnv(config.step_cap), config_((config.validate(), config)) {}

  const PortScanConfig& config() const noexcept { return config_; }
  std::size_t action_count() const noexcept { return config_.n_ports + 1; }
  std::size_t flag_port() const noexcept { return flag_; }

  static constexpr ActionId scan() noexcept { return {kScan}; }
  static constexpr ActionId exploit(std::size_t port) noexcept { return {port + 1}; }

  StateKey observation() const { return observation_.encode(); }
  const PortScanObservation& observed() const noexcept { return observation_; }

  /// Starts an episode with the flag behind `port`.
  StateKey reset_with_flag(std::size_t port, Rng rng) {
    if (port >= config_.n_ports) throw Error("flag port out of range");
    begin_episode(rng);
    flag_ = port;
    observation_ = {};
    return observation();
  }

 private:
  friend class EpisodicEnv<PortScanEnv>;

  void on_reset(Rng& rng) {
    flag_ = rng.below(config_.n_ports);
    observation_ = {};
  }

  bool apply(ActionId action, Rng& rng) {
    if (action.index == kScan) {
      observation_.reported = flag_;
      if (config_.detect_prob > 0.0 && rng.bernoulli(config_.detect_prob)) {
        std::size_t target = rng.below(config_.n_ports - 1);
        if (target >= flag_) ++target;
        flag_ = target;
      }
      return false;
    }
    return action.index - 1 == flag_;
  }

  PortScanConfig config_;
  std::size_t flag_ = 0;
  PortScanObservation observation_;
};

}  // namespace ctfrl

#endif  // CTFRL_ENV_PORTSCAN_HPP
