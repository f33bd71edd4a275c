#ifndef CTFRL_ENV_WEB_HPP
#define CTFRL_ENV_WEB_HPP

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "ctfrl/core.hpp"

namespace ctfrl {

struct WebConfig {
  std::size_t n_visible_min = 2;
  std::size_t n_visible_max = 4;
  std::size_t n_hidden_min = 0;
  std::size_t n_hidden_max = 2;
  std::size_t n_params = 4;
  std::size_t step_cap = kDefaultStepCap;

  void validate() const {
    if (n_visible_min < 1 || n_visible_min > n_visible_max)
      throw Error("visible file range must satisfy 1 <= min <= max");
    if (n_hidden_min > n_hidden_max) throw Error("hidden file range must satisfy min <= max");
    if (n_visible_max + n_hidden_max > 64) throw Error("at most 64 files per site");
    if (n_params < 1 || n_params > 8) throw Error("n_params must be in [1, 8]");
    if (step_cap == 0) throw Error("step_cap must be positive");
  }

  friend bool operator==(const WebConfig&, const WebConfig&) = default;
};

/// Visible files 0..n_visible-1 are linked from the index (and to each other);
/// hidden file j has id n_visible + j and hangs off visible file
/// hidden_parent[j]. hidden_parent is sorted so hidden ids follow parent order.
struct SiteGraph {
  std::size_t n_visible = 2;
  std::vector<std::size_t> hidden_parent;
  std::size_t vuln_file = 0;
  std::size_t vuln_param = 0;

  std::size_t n_hidden() const noexcept { return hidden_parent.size(); }
  std::size_t n_files() const noexcept { return n_visible + hidden_parent.size(); }
  bool is_hidden(std::size_t file) const noexcept { return file >= n_visible; }

  friend bool operator==(const SiteGraph&, const SiteGraph&) = default;
};

/// Observation of the focused file only; carries no file identity.
///
/// StateKey layout (one byte):
///   bit 0 site_crawled, bit 1 focus is hidden, bit 2 hidden_checked_here,
///   bit 3 analyzed_here, bit 4 param_found_here,
///   bits 5-7 the found parameter index (zero unless bit 4 is set).
struct AggregatedObservation {
  bool site_crawled = false;
  bool focus_hidden = false;
  bool hidden_checked_here = false;
  bool analyzed_here = false;
  std::optional<std::size_t> param_found_here;

  StateKey encode() const {
    std::uint8_t byte = 0;
    if (site_crawled) byte |= 1U << 0;
    if (focus_hidden) byte |= 1U << 1;
    if (hidden_checked_here) byte |= 1U << 2;
    if (analyzed_here) byte |= 1U << 3;
    if (param_found_here) {
      byte |= 1U << 4;
      byte |= static_cast<std::uint8_t>(*param_found_here << 5);
    }
    return StateKey::from_bytes({byte});
  }

  static AggregatedObservation decode(const StateKey& key) {
    if (key.size() != 1) throw Error("web state key must be one byte");
    const std::uint8_t byte = key[0];
    AggregatedObservation obs;
    obs.site_crawled = byte & (1U << 0);
    obs.focus_hidden = byte & (1U << 1);
    obs.hidden_checked_here = byte & (1U << 2);
    obs.analyzed_here = byte & (1U << 3);
    if (byte & (1U << 4)) {
      obs.param_found_here = static_cast<std::size_t>(byte >> 5);
    } else if ((byte >> 5) != 0) {
      throw Error("web state key: parameter bits set without a found parameter");
    }
    if (obs.param_found_here && !obs.analyzed_here)
      throw Error("web state key: parameter found on an unanalyzed file");
    return obs;
  }

  friend bool operator==(const AggregatedObservation&, const AggregatedObservation&) = default;
};

/// A website of visible and hidden files; one file holds a parametrized
/// vulnerability. The agent starts on the index page and interacts with one
/// focused file at a time.
///
/// Actions: 0 crawl_index, 1 find_hidden_here, 2 analyze_here, 3 next_file,
/// 4 + m exploit_here(m).
class WebEnv : public EpisodicEnv<WebEnv> {
 public:
  static constexpr ActionId kCrawl{0};
  static constexpr ActionId kFindHidden{1};
  static constexpr ActionId kAnalyze{2};
  static constexpr ActionId kNextFile{3};
  static constexpr ActionId exploit(std::size_t param) noexcept { return {4 + param}; }

  explicit WebEnv(WebConfig config)
      : EpisodicEnv(config.step_cap), config_((config.validate(), config)) {}

  const WebConfig& config() const noexcept { return config_; }
  std::size_t action_count() const noexcept { return 4 + config_.n_params; }

  const SiteGraph& site() const noexcept { return site_; }
  bool focus_on_index() const noexcept { return focus_ == index_node(); }
  std::size_t focus() const noexcept { return focus_; }
  bool hidden_reachable(std::size_t hidden_index) const {
    return discovered_.at(hidden_index);
  }

  AggregatedObservation observed() const {
    AggregatedObservation obs;
    obs.site_crawled = crawled_;
    obs.focus_hidden = !focus_on_index() && site_.is_hidden(focus_);
    obs.hidden_checked_here = hidden_checked_[focus_];
    obs.analyzed_here = analyzed_[focus_];
    if (analyzed_[focus_] && focus_ == site_.vuln_file) obs.param_found_here = site_.vuln_param;
    return obs;
  }
  StateKey observation() const { return observed().encode(); }

  /// Starts an episode on a hand-built site.
  StateKey reset_with(SiteGraph site, Rng rng = Rng{}) {
    if (site.n_visible < 1) throw Error("site needs a visible file");
    if (!std::is_sorted(site.hidden_parent.begin(), site.hidden_parent.end()))
      throw Error("hidden_parent must be sorted");
    for (auto p : site.hidden_parent)
      if (p >= site.n_visible) throw Error("hidden parent must be a visible file");
    if (site.vuln_file >= site.n_files()) throw Error("vulnerable file out of range");
    if (site.vuln_param >= config_.n_params) throw Error("vulnerable param out of range");
    begin_episode(rng);
    site_ = std::move(site);
    clear_progress();
    return observation();
  }

 private:
  friend class EpisodicEnv<WebEnv>;

  std::size_t index_node() const noexcept { return site_.n_files(); }

  void clear_progress() {
    crawled_ = false;
    discovered_.assign(site_.n_hidden(), false);
    hidden_checked_.assign(site_.n_files() + 1, false);
    analyzed_.assign(site_.n_files() + 1, false);
    focus_ = index_node();
  }

  void on_reset(Rng& rng) {
    site_.n_visible = rng.between(config_.n_visible_min, config_.n_visible_max);
    const std::size_t n_hidden = rng.between(config_.n_hidden_min, config_.n_hidden_max);
    site_.hidden_parent.resize(n_hidden);
    for (auto& p : site_.hidden_parent) p = rng.below(site_.n_visible);
    std::sort(site_.hidden_parent.begin(), site_.hidden_parent.end());
    site_.vuln_file = rng.below(site_.n_files());
    site_.vuln_param = rng.below(config_.n_params);
    clear_progress();
  }

  // Reachable files in traversal order: visible files, then discovered hidden ones.
  std::vector<std::size_t> traversal() const {
    std::vector<std::size_t> order;
    if (!crawled_) return order;
    for (std::size_t f = 0; f < site_.n_visible; ++f) order.push_back(f);
    for (std::size_t j = 0; j < site_.n_hidden(); ++j)
      if (discovered_[j]) order.push_back(site_.n_visible + j);
    return order;
  }

  bool apply(ActionId action, Rng&) {
    switch (action.index) {
      case 0:  // crawl_index
        if (!crawled_) {
          crawled_ = true;
          focus_ = 0;
        }
        return false;
      case 1:  // find_hidden_here
        hidden_checked_[focus_] = true;
        if (!focus_on_index() && !site_.is_hidden(focus_)) {
          for (std::size_t j = 0; j < site_.n_hidden(); ++j)
            if (site_.hidden_parent[j] == focus_) discovered_[j] = true;
        }
        return false;
      case 2:  // analyze_here
        analyzed_[focus_] = true;
        return false;
      case 3: {  // next_file
        const auto order = traversal();
        if (order.empty()) return false;
        const auto it = std::find(order.begin(), order.end(), focus_);
        if (it == order.end() || std::next(it) == order.end()) {
          focus_ = order.front();
        } else {
          focus_ = *std::next(it);
        }
        return false;
      }
      default:
        return focus_ == site_.vuln_file && action.index - 4 == site_.vuln_param;
    }
  }

  WebConfig config_;
  SiteGraph site_;
  bool crawled_ = false;
  std::vector<bool> discovered_;
  std::vector<bool> hidden_checked_;
  std::vector<bool> analyzed_;
  std::size_t focus_ = 0;
};

}  // namespace ctfrl

#endif  // CTFRL_ENV_WEB_HPP
