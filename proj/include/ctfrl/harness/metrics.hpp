#ifndef CTFRL_HARNESS_METRICS_HPP
#define CTFRL_HARNESS_METRICS_HPP

#include <algorithm>
#include <cstddef>
#include <span>
#include <vector>

#include <json.hpp>

#include "ctfrl/env/portscan.hpp"
#include "ctfrl/harness/records.hpp"
#include "ctfrl/qtable.hpp"

namespace ctfrl {

/// (N+1)x(N+1) port-scan value matrix; rows for unseen states are zero.
inline std::vector<std::vector<double>> portscan_matrix(const QTable& table, std::size_t n_ports) {
  if (table.action_count() != n_ports + 1 && !table.empty())
    throw Error("table does not have the port-scan action layout");
  std::vector<std::vector<double>> m(n_ports + 1, std::vector<double>(n_ports + 1, 0.0));
  for (std::size_t row = 0; row <= n_ports; ++row) {
    PortScanObservation obs;
    if (row > 0) obs.reported = row - 1;
    if (const auto values = table.find(obs.encode()))
      std::copy(values->begin(), values->end(), m[row].begin());
  }
  return m;
}

/// Fraction of the matrix mass on the diagonal. Entries are shifted by the
/// global minimum first when any is negative; a zero-mass matrix counts as
/// uniform, giving 1/(N+1).
inline double diag_ratio(const QTable& table, std::size_t n_ports) {
  const auto m = portscan_matrix(table, n_ports);
  double lo = 0.0;
  for (const auto& row : m) lo = std::min(lo, *std::min_element(row.begin(), row.end()));
  double diag = 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    for (std::size_t j = 0; j < m.size(); ++j) {
      const double v = m[i][j] - lo;
      total += v;
      if (i == j) diag += v;
    }
  }
  if (total == 0.0) return 1.0 / static_cast<double>(m.size());
  return diag / total;
}

struct SeriesStats {
  std::vector<double> mean;
  std::vector<double> min;
  std::vector<double> max;
};

struct Summary {
  std::size_t repetitions = 0;
  std::size_t episodes = 0;  // records per run, training plus evaluation
  SeriesStats steps;
  SeriesStats ret;
  SeriesStats q_size;
  std::vector<std::size_t> diag_episodes;
  SeriesStats diag_ratio;
};

namespace detail {

template <class Get>
SeriesStats series(std::span<const RunLog> logs, std::size_t length, Get get) {
  SeriesStats s;
  s.mean.resize(length);
  s.min.resize(length);
  s.max.resize(length);
  for (std::size_t i = 0; i < length; ++i) {
    double total = 0.0;
    double lo = get(logs[0], i);
    double hi = lo;
    for (const auto& log : logs) {
      const double v = get(log, i);
      total += v;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    s.mean[i] = total / static_cast<double>(logs.size());
    s.min[i] = lo;
    s.max[i] = hi;
  }
  return s;
}

inline nlohmann::json to_json(const SeriesStats& s) {
  return {{"mean", s.mean}, {"min", s.min}, {"max", s.max}};
}

}  // namespace detail

/// Per-episode mean/min/max across repetitions.
inline Summary summarize(std::span<const RunLog> logs) {
  if (logs.empty()) throw Error("nothing to summarize");
  Summary s;
  s.repetitions = logs.size();
  s.episodes = logs[0].records.size();
  for (const auto& log : logs) {
    if (log.records.size() != s.episodes) throw Error("runs have different episode counts");
    if (log.diag.size() != logs[0].diag.size()) throw Error("runs have different diag samples");
  }
  s.steps = detail::series(logs, s.episodes, [](const RunLog& l, std::size_t i) {
    return static_cast<double>(l.records[i].steps);
  });
  s.ret = detail::series(logs, s.episodes,
                         [](const RunLog& l, std::size_t i) { return l.records[i].ret; });
  s.q_size = detail::series(logs, s.episodes, [](const RunLog& l, std::size_t i) {
    return static_cast<double>(l.records[i].q_size);
  });
  for (const auto& d : logs[0].diag) s.diag_episodes.push_back(d.episode);
  s.diag_ratio = detail::series(logs, logs[0].diag.size(),
                                [](const RunLog& l, std::size_t i) { return l.diag[i].ratio; });
  return s;
}

inline nlohmann::json to_json(const Summary& s) {
  nlohmann::json j;
  j["repetitions"] = s.repetitions;
  j["episodes"] = s.episodes;
  j["steps"] = detail::to_json(s.steps);
  j["return"] = detail::to_json(s.ret);
  j["q_size"] = detail::to_json(s.q_size);
  if (!s.diag_episodes.empty()) {
    j["diag_ratio"] = detail::to_json(s.diag_ratio);
    j["diag_ratio"]["episode"] = s.diag_episodes;
    j["diag_ratio"]["note"] =
        "entries shifted by the global minimum before the ratio when any is negative";
  }
  return j;
}

/// Mean of `get(record)` over records [first, last).
template <class Get>
double mean_over(std::span<const EpisodeRecord> records, std::size_t first, std::size_t last,
                 Get get) {
  last = std::min(last, records.size());
  if (first >= last) throw Error("empty episode window");
  double total = 0.0;
  for (std::size_t i = first; i < last; ++i) total += get(records[i]);
  return total / static_cast<double>(last - first);
}

}  // namespace ctfrl

#endif  // CTFRL_HARNESS_METRICS_HPP
