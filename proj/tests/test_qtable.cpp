#include <gtest/gtest.h>

#include <cstring>
#include <sstream>

#include "ctfrl/base64.hpp"
#include "ctfrl/qtable.hpp"

namespace ctfrl {
namespace {

TEST(Base64, KnownVectors) {
  EXPECT_EQ(base64::encode(""), "");
  EXPECT_EQ(base64::encode("f"), "Zg==");
  EXPECT_EQ(base64::encode("fo"), "Zm8=");
  EXPECT_EQ(base64::encode("foo"), "Zm9v");
  EXPECT_EQ(base64::encode("foobar"), "Zm9vYmFy");
  EXPECT_EQ(base64::encode(std::string("\0\xff", 2)), "AP8=");
  EXPECT_EQ(base64::decode("Zm9vYmE="), "fooba");
  EXPECT_EQ(base64::decode("AP8="), std::string("\0\xff", 2));
}

TEST(Base64, RejectsMalformedInput) {
  EXPECT_FALSE(base64::decode("Zm9"));
  EXPECT_FALSE(base64::decode("Zm9v!"));
  EXPECT_FALSE(base64::decode("Z==="));
  EXPECT_FALSE(base64::decode("Zm=v"));
}

TEST(Base64, RoundTripsEveryByte) {
  std::string all;
  for (int b = 0; b < 256; ++b) all.push_back(static_cast<char>(b));
  for (std::size_t len = 0; len <= all.size(); len += 37)
    EXPECT_EQ(base64::decode(base64::encode(all.substr(0, len))), all.substr(0, len));
}

TEST(QTable, MaterializeDrawsInitialValuesOnce) {
  QTable table(5, 1e-3);
  Rng rng(3);
  const auto key = StateKey::from_bytes({7});
  EXPECT_FALSE(table.find(key));
  const auto row = table.materialize(key, rng);
  ASSERT_EQ(row.size(), 5u);
  const std::vector<double> first(row.begin(), row.end());
  for (double v : first) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1e-3);
  }
  const auto again = table.materialize(key, rng);
  EXPECT_EQ(std::vector<double>(again.begin(), again.end()), first);
  EXPECT_EQ(table.size(), 1u);
}

TEST(QTable, FreshRowDoesNotStore) {
  QTable table(3, 1.0);
  Rng rng(1);
  EXPECT_EQ(table.fresh_row(rng).size(), 3u);
  EXPECT_EQ(table.size(), 0u);
}

TEST(QTable, ZeroInitScaleGivesZeroRows) {
  QTable table(4, 0.0);
  Rng rng(1);
  for (double v : table.materialize(StateKey::from_bytes({1}), rng)) EXPECT_EQ(v, 0.0);
}

QTable sample_table(std::size_t rows, std::size_t actions) {
  QTable table(actions, 1.0);
  Rng rng(42);
  for (std::size_t i = 0; i < rows; ++i) {
    std::string bytes(sizeof i, '\0');
    std::memcpy(bytes.data(), &i, sizeof i);
    auto row = table.materialize(StateKey(bytes), rng);
    row[i % actions] = -123.456789012345678 * static_cast<double>(i) / 7.0;
  }
  return table;
}

TEST(QTablePersistence, RoundTripIsLossless) {
  const auto table = sample_table(500, 7);
  std::stringstream buffer;
  save_table(table, buffer);
  const auto loaded = load_table(buffer);
  EXPECT_EQ(loaded, table);
  EXPECT_EQ(loaded.action_count(), 7u);
}

TEST(QTablePersistence, OutputIsSortedAndStable) {
  const auto table = sample_table(50, 3);
  std::stringstream a, b;
  save_table(table, a);
  save_table(load_table(a), b);
  EXPECT_EQ(a.str(), b.str());
  std::istringstream lines(a.str());
  std::string line, previous;
  while (std::getline(lines, line)) {
    const auto key = *base64::decode(nlohmann::json::parse(line)["state"].get<std::string>());
    if (!previous.empty()) EXPECT_LT(StateKey(previous), StateKey(key));
    previous = key;
  }
}

TEST(QTablePersistence, HundredThousandEntries) {
  const auto table = sample_table(100000, 4);
  std::stringstream buffer;
  save_table(table, buffer);
  EXPECT_EQ(load_table(buffer), table);
}

TEST(QTablePersistence, EmptyTable) {
  std::stringstream buffer;
  save_table(QTable(6, 0.0), buffer);
  EXPECT_TRUE(buffer.str().empty());
  const auto plain = load_table(buffer);
  EXPECT_EQ(plain.size(), 0u);
  std::stringstream again;
  const auto hinted = load_table(again, 6);
  EXPECT_EQ(hinted.action_count(), 6u);
  EXPECT_EQ(hinted, QTable(6, 0.0));
}

std::string load_error(const std::string& text, std::size_t action_count = 0) {
  std::istringstream in(text);
  try {
    load_table(in, action_count);
  } catch (const Error& e) {
    return e.what();
  }
  return "";
}

TEST(QTablePersistence, MalformedRecordsNameTheirIndex) {
  const std::string good = R"({"state":"AA==","values":[1,2]})" "\n";
  const std::string good2 = R"({"state":"AQ==","values":[3,4]})" "\n";
  EXPECT_EQ(load_error(good + good2 + "not json\n").rfind("malformed table record 2: ", 0), 0u);
  EXPECT_EQ(load_error(good + R"({"state":"AQ==","values":[1]})" "\n"),
            "malformed table record 1: row length does not match the action count");
  EXPECT_EQ(load_error(good + good), "malformed table record 1: duplicate state");
  EXPECT_EQ(load_error(R"({"state":"A","values":[1,2]})" "\n"),
            "malformed table record 0: state is not valid base64");
  EXPECT_EQ(load_error(R"({"state":"AA==","values":["x"]})" "\n"),
            "malformed table record 0: values must be numbers");
  EXPECT_EQ(load_error(R"({"state":"AA==","values":[1,2],"extra":0})" "\n"),
            "malformed table record 0: expected exactly the keys \"state\" and \"values\"");
  EXPECT_EQ(load_error(good, 3),
            "malformed table record 0: row length does not match the action count");
}

TEST(QTablePersistence, MissingFileIsAnError) {
  EXPECT_THROW(load_table(std::string("/nonexistent/dir/table.qtable")), Error);
}

}  // namespace
}  // namespace ctfrl
