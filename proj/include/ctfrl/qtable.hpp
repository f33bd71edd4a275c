#ifndef CTFRL_QTABLE_HPP
#define CTFRL_QTABLE_HPP

#include <algorithm>
#include <cstddef>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <json.hpp>

#include "ctfrl/base64.hpp"
#include "ctfrl/core.hpp"
#include "ctfrl/rng.hpp"

namespace ctfrl {

/// Lazily populated action-value table.
///
/// Rows are stored contiguously; a row exists only once its state has been
/// materialized. Spans returned by the accessors are invalidated by the next
/// materialization.
class QTable {
 public:
  QTable() = default;
  QTable(std::size_t action_count, double init_scale)
      : action_count_(action_count), init_scale_(init_scale) {
    if (action_count_ == 0) throw Error("action count must be positive");
    if (!(init_scale_ >= 0.0)) throw Error("init_scale must be non-negative");
  }

  std::size_t action_count() const noexcept { return action_count_; }
  double init_scale() const noexcept { return init_scale_; }
  std::size_t size() const noexcept { return rows_.size(); }
  bool empty() const noexcept { return rows_.empty(); }
  bool contains(const StateKey& key) const { return rows_.contains(key); }

  std::optional<std::span<const double>> find(const StateKey& key) const {
    const auto it = rows_.find(key);
    if (it == rows_.end()) return std::nullopt;
    return row_at(it->second);
  }

  /// Row for `key`, drawing fresh values uniform in [0, init_scale] from
  /// `rng` the first time the key is seen.
  std::span<double> materialize(const StateKey& key, Rng& rng) {
    const auto [it, inserted] = rows_.try_emplace(key, rows_.size());
    if (inserted) {
      for (std::size_t a = 0; a < action_count_; ++a)
        values_.push_back(fresh_value(rng));
    }
    return row_at(it->second);
  }

  /// The values an unmaterialized key would receive; does not store them.
  std::vector<double> fresh_row(Rng& rng) const {
    std::vector<double> row(action_count_);
    for (auto& v : row) v = fresh_value(rng);
    return row;
  }

  /// Inserts or replaces a row verbatim.
  void set_row(const StateKey& key, std::span<const double> values) {
    if (values.size() != action_count_) throw Error("row length does not match action count");
    const auto [it, inserted] = rows_.try_emplace(key, rows_.size());
    if (inserted) values_.resize(values_.size() + action_count_);
    std::copy(values.begin(), values.end(), values_.begin() + it->second * action_count_);
  }

  /// Keys in lexicographic byte order.
  std::vector<StateKey> sorted_keys() const {
    std::vector<StateKey> keys;
    keys.reserve(rows_.size());
    for (const auto& [k, _] : rows_) keys.push_back(k);
    std::sort(keys.begin(), keys.end());
    return keys;
  }

  std::pair<double, double> value_range() const {
    if (values_.empty()) return {0.0, 0.0};
    const auto [lo, hi] = std::minmax_element(values_.begin(), values_.end());
    return {*lo, *hi};
  }

  /// Same action count and the same rows with identical values.
  friend bool operator==(const QTable& a, const QTable& b) {
    if (a.action_count_ != b.action_count_ || a.rows_.size() != b.rows_.size()) return false;
    for (const auto& [key, index] : a.rows_) {
      const auto other = b.find(key);
      if (!other) return false;
      const auto mine = a.row_at(index);
      if (!std::equal(mine.begin(), mine.end(), other->begin())) return false;
    }
    return true;
  }

 private:
  double fresh_value(Rng& rng) const { return init_scale_ * rng.uniform01(); }

  std::span<double> row_at(std::size_t index) {
    return {values_.data() + index * action_count_, action_count_};
  }
  std::span<const double> row_at(std::size_t index) const {
    return {values_.data() + index * action_count_, action_count_};
  }

  std::size_t action_count_ = 1;
  double init_scale_ = 0.0;
  std::unordered_map<StateKey, std::size_t> rows_;
  std::vector<double> values_;
};

/// One JSON object per line: {"state": <base64 key>, "values": [...]},
/// states in lexicographic byte order.
inline void save_table(const QTable& table, std::ostream& out) {
  for (const auto& key : table.sorted_keys()) {
    const auto row = *table.find(key);
    nlohmann::json record;
    record["state"] = base64::encode(key.bytes());
    record["values"] = std::vector<double>(row.begin(), row.end());
    out << record.dump() << '\n';
  }
}

inline void save_table(const QTable& table, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path + " for writing");
  save_table(table, out);
  if (!out) throw Error("failed writing " + path);
}

/// Parses the line format written by save_table. Blank lines are skipped.
/// Errors name the 0-based record index. A non-zero `action_count` is
/// enforced on every row and sizes the table when the input is empty.
inline QTable load_table(std::istream& in, std::size_t action_count = 0,
                         double init_scale = 0.0) {
  std::optional<QTable> table;
  if (action_count > 0) table.emplace(action_count, init_scale);
  std::string line;
  std::size_t record = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto fail = [&](const std::string& why) {
      return Error("malformed table record " + std::to_string(record) + ": " + why);
    };
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw fail(e.what());
    }
    if (!j.is_object() || j.size() != 2 || !j.contains("state") || !j.contains("values"))
      throw fail("expected exactly the keys \"state\" and \"values\"");
    if (!j["state"].is_string()) throw fail("state must be a string");
    const auto bytes = base64::decode(j["state"].get<std::string>());
    if (!bytes) throw fail("state is not valid base64");
    if (!j["values"].is_array() || j["values"].empty()) throw fail("values must be a non-empty array");
    std::vector<double> values;
    values.reserve(j["values"].size());
    for (const auto& v : j["values"]) {
      if (!v.is_number()) throw fail("values must be numbers");
      values.push_back(v.get<double>());
    }
    if (!table) table.emplace(values.size(), init_scale);
    if (values.size() != table->action_count()) throw fail("row length does not match the action count");
    StateKey key(*bytes);
    if (table->contains(key)) throw fail("duplicate state");
    table->set_row(key, values);
    ++record;
  }
  if (in.bad()) throw Error("read error while loading table");
  return table ? std::move(*table) : QTable{};
}

inline QTable load_table(const std::string& path, std::size_t action_count = 0,
                         double init_scale = 0.0) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  return load_table(in, action_count, init_scale);
}

}  // namespace ctfrl

#endif  // CTFRL_QTABLE_HPP
