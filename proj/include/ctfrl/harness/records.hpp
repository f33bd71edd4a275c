#ifndef CTFRL_HARNESS_RECORDS_HPP
#define CTFRL_HARNESS_RECORDS_HPP

#include <charconv>
#include <cstddef>
#include <fstream>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "ctfrl/base64.hpp"
#include "ctfrl/core.hpp"
#include "ctfrl/harness/config.hpp"
#include "ctfrl/qtable.hpp"

namespace ctfrl {

struct EpisodeRecord {
  std::size_t episode = 0;
  std::size_t steps = 0;
  double ret = 0.0;  // undiscounted return
  bool captured = false;
  std::size_t q_size = 0;

  friend bool operator==(const EpisodeRecord&, const EpisodeRecord&) = default;
};

struct DiagSample {
  std::size_t episode = 0;  // training episodes completed when sampled
  double ratio = 0.0;

  friend bool operator==(const DiagSample&, const DiagSample&) = default;
};

/// Everything one repetition produced. Training episodes come first, then
/// the greedy evaluation episodes.
struct RunLog {
  std::size_t run_index = 0;
  ExperimentConfig config;
  std::vector<EpisodeRecord> records;
  std::vector<DiagSample> diag;
  QTable table;
  std::string table_path;
  double wall_seconds = 0.0;

  std::span<const EpisodeRecord> training() const {
    return std::span(records).first(std::min(records.size(), config.episodes));
  }
  std::span<const EpisodeRecord> evaluation() const {
    return std::span(records).subspan(std::min(records.size(), config.episodes));
  }

  /// Equality of everything the run computed; wall-clock time and file
  /// locations are excluded.
  bool same_results(const RunLog& other) const {
    return run_index == other.run_index && config == other.config &&
           records == other.records && diag == other.diag && table == other.table;
  }
};

inline std::string format_number(double v) {
  char buf[64];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc{}) throw Error("number formatting failed");
  return std::string(buf, end);
}

inline constexpr std::string_view kRunCsvHeader = "episode,steps,return,captured,q_size";

inline void write_run_csv(std::span<const EpisodeRecord> records, std::ostream& out) {
  out << kRunCsvHeader << '\n';
  for (const auto& r : records) {
    out << r.episode << ',' << r.steps << ',' << format_number(r.ret) << ','
        << (r.captured ? 1 : 0) << ',' << r.q_size << '\n';
  }
}

inline void write_run_csv(std::span<const EpisodeRecord> records, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path + " for writing");
  write_run_csv(records, out);
}

// ---------------------------------------------------------------------------
// Demonstrations: one JSON object per transition, grouped by "demo".
// ---------------------------------------------------------------------------

inline void write_demonstrations(std::span<const Trajectory> demos, std::ostream& out) {
  for (std::size_t d = 0; d < demos.size(); ++d) {
    for (std::size_t i = 0; i < demos[d].transitions.size(); ++i) {
      const auto& t = demos[d].transitions[i];
      nlohmann::json j = {{"demo", d},
                          {"step", i},
                          {"action_count", demos[d].action_count},
                          {"state", base64::encode(t.state.bytes())},
                          {"action", t.action.index},
                          {"reward", t.reward},
                          {"next_state", base64::encode(t.next_state.bytes())},
                          {"done", t.done},
                          {"truncated", t.truncated}};
      out << j.dump() << '\n';
    }
  }
}

inline std::vector<Trajectory> read_demonstrations(std::istream& in) {
  std::vector<Trajectory> demos;
  std::string line;
  std::size_t record = 0;
  std::size_t current = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto fail = [&](const std::string& why) {
      return Error("malformed demonstration record " + std::to_string(record) + ": " + why);
    };
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
      detail::reject_unknown_keys(j,
                                  {"demo", "step", "action_count", "state", "action", "reward",
                                   "next_state", "done", "truncated"},
                                  "demonstration");
      const auto demo = j.at("demo").get<std::size_t>();
      const auto state = base64::decode(j.at("state").get<std::string>());
      const auto next = base64::decode(j.at("next_state").get<std::string>());
      if (!state || !next) throw fail("state is not valid base64");
      if (demos.empty() || demo != current) {
        if (!demos.empty() && demo != current + 1) throw fail("demo indices must be consecutive");
        if (demos.empty() && demo != 0) throw fail("demo indices must start at 0");
        demos.emplace_back();
        demos.back().action_count = j.at("action_count").get<std::size_t>();
        current = demo;
      }
      auto& traj = demos.back();
      if (j.at("step").get<std::size_t>() != traj.transitions.size())
        throw fail("step indices must be consecutive");
      if (j.at("action_count").get<std::size_t>() != traj.action_count)
        throw fail("action_count changes within a demonstration");
      Transition t{StateKey(*state), ActionId{j.at("action").get<std::size_t>()},
                   j.at("reward").get<double>(), StateKey(*next), j.at("done").get<bool>(),
                   j.at("truncated").get<bool>()};
      if (!traj.transitions.empty() && traj.transitions.back().next_state != t.state)
        throw fail("transition does not chain from the previous one");
      if (!traj.transitions.empty() && traj.transitions.back().done)
        throw fail("transition after the episode ended");
      traj.transitions.push_back(std::move(t));
    } catch (const Error&) {
      throw;
    } catch (const std::exception& e) {
      throw fail(e.what());
    }
    ++record;
  }
  return demos;
}

inline std::vector<Trajectory> read_demonstrations(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open demonstrations " + path);
  return read_demonstrations(in);
}

}  // namespace ctfrl

#endif  // CTFRL_HARNESS_RECORDS_HPP
