#include <gtest/gtest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "ctfrl/ctfrl.hpp"

namespace ctfrl {
namespace {

namespace fs = std::filesystem;

fs::path scratch_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("ctfrl_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ExperimentConfig small_portscan(std::size_t episodes = 200, std::size_t reps = 2) {
  ExperimentConfig cfg;
  cfg.env = PortScanConfig{8, 0.0};
  cfg.agent.epsilon = 0.1;
  cfg.episodes = episodes;
  cfg.repetitions = reps;
  cfg.master_seed = 77;
  cfg.eval_episodes = 10;
  cfg.diag_every = 50;
  return cfg;
}

TEST(Config, JsonRoundTrip) {
  ExperimentConfig cfg;
  cfg.env = ServerConfig{3, 2, 5, 500};
  cfg.agent.alpha = 0.25;
  cfg.agent.demo_passes = 3;
  cfg.episodes = 42;
  cfg.repetitions = 3;
  cfg.master_seed = 0xFFFF'FFFF'FFFF'FFF0ULL;
  cfg.demos = DemoConfig{100, std::string("demos.ndjson"), 0.05};
  cfg.eval_episodes = 7;
  EXPECT_EQ(config_from_json(to_json(cfg)), cfg);

  ExperimentConfig web;
  web.env = WebConfig{};
  EXPECT_EQ(config_from_json(to_json(web)), web);
  EXPECT_EQ(env_kind(web.env), "web");
}

TEST(Config, UnknownKeysAreRejected) {
  auto j = to_json(small_portscan());
  j["extra"] = 1;
  EXPECT_THROW(config_from_json(j), Error);
  j = to_json(small_portscan());
  j["agent"]["lambda"] = 0.5;
  EXPECT_THROW(config_from_json(j), Error);
  j = to_json(small_portscan());
  j["env"]["n_services"] = 5;
  EXPECT_THROW(config_from_json(j), Error);
  j = to_json(small_portscan());
  j["env"]["kind"] = "maze";
  EXPECT_THROW(config_from_json(j), Error);
}

TEST(Config, ShippedProfilesLoad) {
  std::size_t found = 0;
  for (const auto& entry : fs::directory_iterator(CTFRL_CONFIG_DIR)) {
    if (entry.path().extension() != ".json") continue;
    SCOPED_TRACE(entry.path().string());
    const auto cfg = load_config(entry.path().string());
    EXPECT_NO_THROW(cfg.validate());
    ++found;
  }
  EXPECT_GE(found, 5u);
}

TEST(RunEpisode, WithoutLearningTheTableIsUntouched) {
  QAgent agent(9, AgentConfig{});
  PortScanEnv env({8, 0.0});
  for (std::size_t ep = 0; ep < 20; ++ep) run_episode(env, agent, make_rng(1, 0, ep), true, false);
  std::stringstream before, after;
  save_table(agent.table(), before);
  for (std::size_t ep = 0; ep < 20; ++ep) run_episode(env, agent, make_rng(2, 0, ep), false, true);
  for (std::size_t ep = 0; ep < 20; ++ep) run_episode(env, agent, make_rng(3, 0, ep), false, false);
  save_table(agent.table(), after);
  EXPECT_EQ(before.str(), after.str());
}

TEST(RunEpisode, RandomAgentMatchesUniformPolicyHittingTime) {
  const PortScanConfig env_cfg{4, 0.0};
  const auto mdp = build_explicit_mdp(env_cfg);
  const double expected = evaluate_policy(mdp, uniform_policy(mdp), 1.0, 1e-12, true)[0];
  AgentConfig cfg;
  cfg.epsilon = 1.0;
  QAgent agent(5, cfg);
  PortScanEnv env(env_cfg);
  double steps = 0.0;
  for (std::size_t ep = 0; ep < 1000; ++ep) {
    agent.reseed(make_rng(5, 0, ep, Stream::agent));
    steps += run_episode(env, agent, make_rng(5, 0, ep), false, false).record.steps;
  }
  EXPECT_NEAR(steps / 1000.0, expected, 0.15 * expected);
}

TEST(RunEpisode, RecordsAreConsistent) {
  const auto log = run_single(small_portscan(), 0);
  std::size_t previous_size = 0;
  for (const auto& r : log.records) {
    if (r.captured) ASSERT_EQ(r.ret, 101.0 - static_cast<double>(r.steps));
    ASSERT_GE(r.q_size, previous_size);
    previous_size = r.q_size;
  }
  EXPECT_EQ(log.records.size(), 210u);
  EXPECT_EQ(log.training().size(), 200u);
  EXPECT_EQ(log.evaluation().size(), 10u);
  EXPECT_EQ(log.diag.size(), 4u);
  EXPECT_EQ(log.diag.back().episode, 200u);
}

TEST(RunEpisode, TruncatedEpisodeIsNotCaptured) {
  ExperimentConfig cfg = small_portscan(5, 1);
  cfg.env = PortScanConfig{8, 0.0, 1};
  const auto log = run_single(cfg, 0);
  for (const auto& r : log.records) {
    EXPECT_EQ(r.steps, 1u);
    if (!r.captured) EXPECT_EQ(r.ret, -1.0);
  }
}

TEST(RunExperiment, IdenticalConfigsGiveIdenticalOutputs) {
  const auto cfg = small_portscan();
  const auto a_dir = scratch_dir("det_a");
  const auto b_dir = scratch_dir("det_b");
  const auto a = run_experiment(cfg, {a_dir, 1});
  const auto b = run_experiment(cfg, {b_dir, 2});
  ASSERT_EQ(a.size(), 2u);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_TRUE(a[i].same_results(b[i]));
    for (const auto* ext : {".csv", ".qtable"}) {
      const auto name = "run_" + std::to_string(i) + ext;
      EXPECT_EQ(slurp(a_dir / name), slurp(b_dir / name)) << name;
    }
  }
  EXPECT_EQ(slurp(a_dir / "config.json"), slurp(b_dir / "config.json"));
  EXPECT_FALSE(a[0].same_results(a[1]));
}

TEST(RunExperiment, ServerAndWebRunsAreDeterministicToo) {
  for (EnvConfig env : {EnvConfig{ServerConfig{}}, EnvConfig{WebConfig{}}}) {
    ExperimentConfig cfg;
    cfg.env = env;
    cfg.episodes = 300;
    cfg.repetitions = 2;
    cfg.master_seed = 3;
    cfg.demos = DemoConfig{20};
    const auto a = run_experiment(cfg);
    const auto b = run_experiment(cfg, {std::nullopt, 2});
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_TRUE(a[i].same_results(b[i]));
  }
}

TEST(RunExperiment, OutputLayout) {
  const auto dir = scratch_dir("layout");
  const auto logs = run_experiment(small_portscan(), {dir, 1});
  for (const auto* name : {"config.json", "run_0.csv", "run_1.csv", "run_0.qtable",
                           "run_1.qtable", "summary.json"})
    EXPECT_TRUE(fs::exists(dir / name)) << name;
  EXPECT_EQ(load_config((dir / "config.json").string()), small_portscan());
  const auto csv = slurp(dir / "run_0.csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "episode,steps,return,captured,q_size");
  EXPECT_EQ(load_table((dir / "run_1.qtable").string()), logs[1].table);
  const auto summary = nlohmann::json::parse(slurp(dir / "summary.json"));
  EXPECT_EQ(summary["repetitions"], 2);
  EXPECT_EQ(summary["episodes"], 210);
  EXPECT_EQ(summary["return"]["mean"].size(), 210u);
  EXPECT_EQ(summary["diag_ratio"]["episode"].size(), 4u);
}

TEST(RunExperiment, UnwritableOutputFailsBeforeRunning) {
  const auto dir = scratch_dir("blocked");
  const auto file = dir / "not_a_dir";
  std::ofstream(file) << "x";
  try {
    run_experiment(small_portscan(), {file / "out", 1});
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("output directory"), std::string::npos);
  }
  EXPECT_FALSE(fs::exists(file / "out"));
}

TEST(RunExperiment, PrimingFromAFileMatchesGeneratedDemos) {
  ExperimentConfig cfg;
  cfg.env = ServerConfig{};
  cfg.episodes = 20;
  cfg.master_seed = 9;
  cfg.demos = DemoConfig{30};
  const auto generated = run_single(cfg, 0);

  AnyEnv env = make_env(cfg.env);
  const auto demos = generate_demonstrations(env, 30, cfg.master_seed, 0, 0.0);
  const auto path = scratch_dir("demos") / "demos.ndjson";
  {
    std::ofstream out(path);
    write_demonstrations(demos, out);
  }
  cfg.demos->source = path.string();
  const auto loaded = run_single(cfg, 0);
  EXPECT_EQ(loaded.records, generated.records);
  EXPECT_EQ(loaded.table, generated.table);

  cfg.demos->count = 31;
  EXPECT_THROW(run_single(cfg, 0), Error);
}

TEST(Demonstrations, RoundTripAndValidation) {
  AnyEnv env = make_env(WebConfig{});
  const auto demos = generate_demonstrations(env, 5, 1, 0, 0.1);
  std::stringstream buffer;
  write_demonstrations(demos, buffer);
  const auto back = read_demonstrations(buffer);
  ASSERT_EQ(back.size(), demos.size());
  for (std::size_t d = 0; d < demos.size(); ++d) {
    ASSERT_EQ(back[d].transitions.size(), demos[d].transitions.size());
    for (std::size_t i = 0; i < demos[d].transitions.size(); ++i) {
      const auto& x = demos[d].transitions[i];
      const auto& y = back[d].transitions[i];
      EXPECT_EQ(x.state, y.state);
      EXPECT_EQ(x.action, y.action);
      EXPECT_EQ(x.reward, y.reward);
      EXPECT_EQ(x.next_state, y.next_state);
      EXPECT_EQ(x.done, y.done);
    }
  }
  std::istringstream broken(
      R"({"demo":0,"step":1,"action_count":8,"state":"AA==","action":0,"reward":-1,"next_state":"AQ==","done":false,"truncated":false})");
  EXPECT_THROW(read_demonstrations(broken), Error);
}

TEST(DiagRatio, IdentityAndUniformTables) {
  QTable identity(3, 0.0);
  for (std::uint8_t s = 0; s < 3; ++s) {
    std::vector<double> row(3, 0.0);
    row[s] = 1.0;
    identity.set_row(StateKey::from_bytes({s}), row);
  }
  EXPECT_DOUBLE_EQ(diag_ratio(identity, 2), 1.0);

  QTable uniform(65, 0.0);
  for (std::uint8_t s = 0; s <= 64; ++s)
    uniform.set_row(StateKey::from_bytes({s}), std::vector<double>(65, 4.0));
  EXPECT_NEAR(diag_ratio(uniform, 64), 1.0 / 65.0, 1e-15);
  EXPECT_NEAR(diag_ratio(QTable(65, 0.0), 64), 1.0 / 65.0, 1e-15);
}

TEST(DiagRatio, NegativeEntriesAreShifted) {
  QTable table(3, 0.0);
  table.set_row(StateKey::from_bytes({0}), std::vector<double>{1.0, -1.0, -1.0});
  table.set_row(StateKey::from_bytes({1}), std::vector<double>{-1.0, 1.0, -1.0});
  table.set_row(StateKey::from_bytes({2}), std::vector<double>{-1.0, -1.0, -1.0});
  // Shifted by +1: diagonal 2 + 2 + 0 over total 4.
  EXPECT_DOUBLE_EQ(diag_ratio(table, 2), 1.0);
  table.set_row(StateKey::from_bytes({2}), std::vector<double>{-1.0, 0.0, -1.0});
  EXPECT_DOUBLE_EQ(diag_ratio(table, 2), 4.0 / 5.0);
}

RunLog log_with_returns(std::initializer_list<double> returns) {
  RunLog log;
  log.config.episodes = returns.size();
  std::size_t i = 0;
  for (double r : returns) log.records.push_back({i++, 1, r, false, i});
  return log;
}

TEST(Summarize, MeanMinMaxAcrossRuns) {
  const std::vector<RunLog> logs{log_with_returns({10, 0}), log_with_returns({20, 4})};
  const auto s = summarize(logs);
  EXPECT_EQ(s.repetitions, 2u);
  EXPECT_EQ(s.ret.mean, (std::vector<double>{15, 2}));
  EXPECT_EQ(s.ret.min, (std::vector<double>{10, 0}));
  EXPECT_EQ(s.ret.max, (std::vector<double>{20, 4}));
}

TEST(Summarize, SingleLogIsItself) {
  const std::vector<RunLog> logs{log_with_returns({3, -1, 7})};
  const auto s = summarize(logs);
  EXPECT_EQ(s.ret.mean, (std::vector<double>{3, -1, 7}));
  EXPECT_EQ(s.q_size.mean, (std::vector<double>{1, 2, 3}));
}

TEST(Summarize, RejectsEmptyAndMismatchedInput) {
  EXPECT_THROW(summarize(std::vector<RunLog>{}), Error);
  const std::vector<RunLog> logs{log_with_returns({1, 2}), log_with_returns({1})};
  EXPECT_THROW(summarize(logs), Error);
}

TEST(Csv, NumbersAreFormattedShortest) {
  std::stringstream out;
  const std::vector<EpisodeRecord> records{{0, 2, 99.0, true, 3}, {1, 1000, -1000.0, false, 65}};
  write_run_csv(records, out);
  EXPECT_EQ(out.str(), "episode,steps,return,captured,q_size\n0,2,99,1,3\n1,1000,-1000,0,65\n");
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(CTFRL_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  return std::system(cmd.c_str());
}

TEST(Cli, RunEvalDemoOracle) {
  const auto dir = scratch_dir("cli");
  const auto config = dir / "config.json";
  {
    auto cfg = small_portscan(100, 1);
    std::ofstream(config) << to_json(cfg).dump(2);
  }
  ASSERT_EQ(run_cli("run --config " + config.string() + " --out " + (dir / "out").string()), 0);
  EXPECT_TRUE(fs::exists(dir / "out" / "summary.json"));
  ASSERT_EQ(run_cli("eval --qtable " + (dir / "out" / "run_0.qtable").string() + " --config " +
                    config.string() + " --episodes 5 --csv " + (dir / "eval.csv").string()),
            0);
  EXPECT_TRUE(fs::exists(dir / "eval.csv"));
  ASSERT_EQ(run_cli("demo --config " + config.string() + " --count 4 --out " +
                    (dir / "demos.ndjson").string()),
            0);
  std::ifstream demos(dir / "demos.ndjson");
  EXPECT_EQ(read_demonstrations(demos).size(), 4u);
  EXPECT_EQ(run_cli("oracle --config " + config.string()), 0);
  EXPECT_NE(run_cli("run --config " + (dir / "missing.json").string()), 0);
  EXPECT_NE(run_cli("bogus"), 0);
}

}  // namespace
}  // namespace ctfrl
